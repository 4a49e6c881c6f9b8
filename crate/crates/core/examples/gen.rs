fn main() {
    use qpdist::channel::*;
    use qpdist::io::ChannelFile;
    let pairs = [
        (
            "replace_pi4.json",
            make_replace_channel(std::f64::consts::FRAC_PI_4).unwrap(),
        ),
        (
            "replace_pi6.json",
            make_replace_channel(std::f64::consts::FRAC_PI_6).unwrap(),
        ),
        (
            "rotation_pi12.json",
            make_rotation_channel(std::f64::consts::PI / 12.0).unwrap(),
        ),
        ("identity.json", identity_channel(2)),
        ("z.json", pauli_z_channel()),
    ];
    for (name, ch) in pairs {
        std::fs::write(
            format!("/tmp/qp/{name}"),
            ChannelFile::from_channel(&ch).to_json(),
        )
        .unwrap();
    }
}
