//! End-to-end command tests: outputs, exit codes, file handling.

use qpdist::channel::{
    identity_channel, make_replace_channel, make_rotation_channel, pauli_z_channel, KrausChannel,
};
use qpdist::io::ChannelFile;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::process::Output;
use tempfile::TempDir;

fn write_channel(dir: &Path, name: &str, channel: &KrausChannel) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, ChannelFile::from_channel(channel).to_json()).unwrap();
    path
}

fn qpdist(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_qpdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn validate_accepts_valid_channel() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&["validate", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("completeness_residual: 0.000000000e0"));
    assert!(text.contains("valid: true"));
}

#[test]
fn validate_rejects_wrong_shape_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    // 3x2 matrix in a dim-2 document
    std::fs::write(
        &path,
        r#"{"dim": 2, "kraus": [[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]],[[0.0,0.0],[0.0,0.0]]]]}"#,
    )
    .unwrap();
    let out = qpdist(&["validate", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn validate_reports_scaled_kraus_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let mut file = ChannelFile::from_channel(&pauli_z_channel());
    file.kraus[0] *= num_complex::Complex64::new(0.9, 0.0);
    let path = dir.path().join("scaled.json");
    std::fs::write(&path, file.to_json()).unwrap();
    let out = qpdist(&["validate", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let text = stdout_str(&out);
    // residual 1 - 0.81 = 0.19
    assert!(
        text.contains("completeness_residual: 1.900000000e-1"),
        "{text}"
    );
    assert!(text.contains("valid: false"));
}

#[test]
fn report_prints_exact_2d_count() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&["report", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("N_exact_2d = 2"), "{text}");
    assert!(text.contains("N_lower = 2"));
    assert!(text.contains("N_upper = 2"));
}

#[test]
fn report_identity_not_distinguishable() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "id.json", &identity_channel(2));
    let out = qpdist(&["report", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_str(&out).contains("not sequentially distinguishable"));
}

#[test]
fn report_z_with_ea_flag() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "z.json", &pauli_z_channel());
    let out = qpdist(&["report", path.to_str().unwrap(), "--ea"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("N_ea_lower = 1"), "{text}");
    let ea_line = text
        .lines()
        .find(|l| l.starts_with("ea_f1 = "))
        .expect("ea_f1 line");
    let value: f64 = ea_line
        .trim_start_matches("ea_f1 = ")
        .trim()
        .parse()
        .unwrap();
    assert!(value.abs() < 1e-6);
}

#[test]
fn report_json_round_trips_bytes() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&["report", path.to_str().unwrap(), "--json", "--ea"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut rendered = serde_json::to_string_pretty(&value).unwrap();
    rendered.push('\n');
    assert_eq!(text, rendered);
}

#[test]
fn protocol_writes_plan_with_round_count() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace6.json",
        &make_replace_channel(FRAC_PI_6).unwrap(),
    );
    let plan_path = dir.path().join("plan.json");
    let out = qpdist(&[
        "protocol",
        path.to_str().unwrap(),
        "--trace",
        plan_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_str(&out).contains("rounds: 3"));
    let text = std::fs::read_to_string(&plan_path).unwrap();
    let plan = qpdist::io::parse_plan(&text).unwrap();
    assert_eq!(plan.claimed_queries, 3);
    // bit-identical round trip through the serializer
    assert_eq!(qpdist::io::plan_to_json(&plan), text);
}

#[test]
fn protocol_prints_overlap_schedule() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace4.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&["protocol", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert!(
        stdout_str(&out).contains("overlap schedule: 0.7071, 0.0000"),
        "{}",
        stdout_str(&out)
    );
}

#[test]
fn protocol_rejects_identity_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "id.json", &identity_channel(2));
    let out = qpdist(&["protocol", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn simulate_channel_is_perfect() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace4.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&[
        "simulate",
        path.to_str().unwrap(),
        "--shots",
        "10000",
        "--seed",
        "7",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("wrong_guesses: 0"));
    assert!(text.contains("empirical_error: 0.000000000e0"));
}

#[test]
fn simulate_plan_file_directly() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "z.json", &pauli_z_channel());
    let plan_path = dir.path().join("z.plan.json");
    let out = qpdist(&[
        "protocol",
        path.to_str().unwrap(),
        "--trace",
        plan_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let out = qpdist(&["simulate", plan_path.to_str().unwrap(), "--shots", "100"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_str(&out).contains("wrong_guesses: 0"));
}

#[test]
fn simulate_zero_shots_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "z.json", &pauli_z_channel());
    let out = qpdist(&["simulate", path.to_str().unwrap(), "--shots", "0"]);
    assert_eq!(exit_code(&out), 64);
}

#[test]
fn simulate_json_round_trips_bytes() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(dir.path(), "z.json", &pauli_z_channel());
    let out = qpdist(&[
        "simulate",
        path.to_str().unwrap(),
        "--shots",
        "50",
        "--json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut rendered = serde_json::to_string_pretty(&value).unwrap();
    rendered.push('\n');
    assert_eq!(text, rendered);
}

#[test]
fn verify_lemma2_passes_on_replace() {
    let dir = TempDir::new().unwrap();
    let path = write_channel(
        dir.path(),
        "replace4.json",
        &make_replace_channel(FRAC_PI_4).unwrap(),
    );
    let out = qpdist(&["verify", "--mode", "lemma2", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.starts_with("alpha,bound,achieved,violated"));
    assert_eq!(text.lines().count(), 21); // header + 20 grid rows
    assert!(!text.contains("true"));
}

#[test]
fn verify_thm4_rotation_pair_passes() {
    let dir = TempDir::new().unwrap();
    let rot = make_rotation_channel(std::f64::consts::PI / 12.0).unwrap();
    let path = write_channel(dir.path(), "rot.json", &rot);
    let out = qpdist(&[
        "verify",
        "--mode",
        "thm4",
        path.to_str().unwrap(),
        path.to_str().unwrap(),
        "--samples",
        "100",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("q,bound,min_sampled,violated"));
    assert!(!text.contains(",true"));
}

#[test]
fn verify_thm4_unknown_family_exits_1() {
    let dir = TempDir::new().unwrap();
    let mut file = ChannelFile::from_channel(&make_replace_channel(FRAC_PI_4).unwrap());
    file.name = None;
    let path = dir.path().join("unnamed.json");
    std::fs::write(&path, file.to_json()).unwrap();
    let id = write_channel(dir.path(), "id.json", &identity_channel(2));
    let out = qpdist(&[
        "verify",
        "--mode",
        "thm4",
        path.to_str().unwrap(),
        id.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("analytic theta"));
}

#[test]
fn verify_thm4_theta_override_accepted() {
    let dir = TempDir::new().unwrap();
    let mut file = ChannelFile::from_channel(&make_replace_channel(FRAC_PI_4).unwrap());
    file.name = None;
    let path = dir.path().join("unnamed.json");
    std::fs::write(&path, file.to_json()).unwrap();
    let id = write_channel(dir.path(), "id.json", &identity_channel(2));
    let out = qpdist(&[
        "verify",
        "--mode",
        "thm4",
        path.to_str().unwrap(),
        id.to_str().unwrap(),
        "--theta0",
        "0.7853981633974483",
        "--samples",
        "50",
        "--q",
        "0,0.5,1",
    ]);
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_file_is_parse_failure() {
    let out = qpdist(&["report", "/nonexistent/channel.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = qpdist(&["report", "--frobnicate"]);
    assert_eq!(exit_code(&out), 64);
}
