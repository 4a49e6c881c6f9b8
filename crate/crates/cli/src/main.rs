//! Command-line surface: channel validation, distinguishability reports,
//! protocol synthesis, Monte Carlo simulation, and bound verification.
//!
//! Exit codes: 0 success, 1 domain failure, 2 parse failure, 3 numeric
//! failure, 64 usage.

use clap::{Parser, Subcommand, ValueEnum};
use qpdist::bounds::{self, DistinguishabilityReport};
use qpdist::channel::validate_channel;
use qpdist::fidelity;
use qpdist::io::{self, format_sig10};
use qpdist::protocol::{self, ProtocolPlan};
use qpdist::simulator;
use qpdist::{Error as CoreError, KrausChannel, OptimizerConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_DOMAIN: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "qpdist",
    version,
    about = "Perfect distinguishability between quantum operations and the identity"
)]
struct Cli {
    /// Worker threads for multi-start searches and sampling
    /// (default: available parallelism; results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accept channel files whose completeness residual exceeds 1e-6.
    #[arg(long, global = true)]
    allow_invalid: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a channel file: completeness residual and Choi positivity.
    Validate { path: PathBuf },
    /// Fidelities, theta, alpha0, and every applicable query-count bound.
    Report {
        path: PathBuf,
        /// Also compute the entanglement-assisted quantities.
        #[arg(long)]
        ea: bool,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Machine-readable output mirroring the report fields.
        #[arg(long)]
        json: bool,
    },
    /// Synthesize an adaptive discrimination protocol and write the plan.
    Protocol {
        path: PathBuf,
        /// Output path for the serialized plan
        /// (default: the channel path with extension `.plan.json`).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a Monte Carlo discrimination experiment on a plan file (or
    /// synthesize one from a channel file first).
    Simulate {
        path: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long)]
        json: bool,
    },
    /// Verify the constructive Lemma-2 bound or the Theorem-4 lower bound.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyMode::Lemma2)]
        mode: VerifyMode,
        /// One channel file (lemma2) or two (thm4).
        paths: Vec<PathBuf>,
        /// q grid: `start:end:step` or a comma-separated list.
        #[arg(long, default_value = "0:1:0.1")]
        q: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Analytic theta for the first channel (overrides the family tag).
        #[arg(long)]
        theta0: Option<f64>,
        /// Analytic theta for the second channel (overrides the family tag).
        #[arg(long)]
        theta1: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMode {
    Lemma2,
    Thm4,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Parse(_) => EXIT_PARSE,
            CoreError::Shape(_)
            | CoreError::DimensionMismatch(_)
            | CoreError::InvalidChannel { .. }
            | CoreError::NotUnitary { .. }
            | CoreError::Domain(_)
            | CoreError::UndefinedAlpha0 { .. }
            | CoreError::DegenerateGeometry(_)
            | CoreError::InfeasibleTransform { .. }
            | CoreError::NotDistinguishable { .. } => EXIT_DOMAIN,
            CoreError::OptimizerStall { .. }
            | CoreError::Synthesis(_)
            | CoreError::NumericalStall(_)
            | CoreError::Numerical(_) => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_channel(path: &Path, allow_invalid: bool) -> Result<KrausChannel, Failure> {
    let text = read_file(path)?;
    let file = io::parse_channel_file(&text, allow_invalid)?;
    Ok(file.into_channel()?)
}

fn optimizer_config(starts: usize, seed: u64) -> Result<OptimizerConfig, Failure> {
    if starts == 0 {
        return Err(Failure::usage("--starts must be at least 1"));
    }
    Ok(OptimizerConfig {
        starts,
        seed,
        ..OptimizerConfig::default()
    })
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Validate { path } => cmd_validate(path),
        Command::Report {
            path,
            ea,
            starts,
            seed,
            json,
        } => cmd_report(path, cli.allow_invalid, *ea, *starts, *seed, *json),
        Command::Protocol {
            path,
            trace,
            starts,
            seed,
        } => cmd_protocol(path, cli.allow_invalid, trace.as_deref(), *starts, *seed),
        Command::Simulate {
            path,
            shots,
            seed,
            starts,
            json,
        } => cmd_simulate(path, cli.allow_invalid, *shots, *seed, *starts, *json),
        Command::Verify {
            mode,
            paths,
            q,
            samples,
            seed,
            starts,
            theta0,
            theta1,
        } => cmd_verify(
            *mode,
            paths,
            cli.allow_invalid,
            q,
            *samples,
            *seed,
            *starts,
            *theta0,
            *theta1,
        ),
    }
}

fn cmd_validate(path: &Path) -> Result<u8, Failure> {
    let text = read_file(path)?;
    let file = io::parse_channel_file(&text, true)?;
    let validity = validate_channel(&file.kraus)?;
    println!("dim: {}", file.dim);
    if let Some(name) = &file.name {
        println!("name: {name}");
    }
    println!("kraus_operators: {}", file.kraus.len());
    println!(
        "completeness_residual: {}",
        format_sig10(validity.completeness_residual)
    );
    println!(
        "choi_min_eigenvalue: {}",
        format_sig10(validity.choi_min_eigenvalue)
    );
    println!("valid: {}", validity.is_valid);
    Ok(if validity.is_valid { 0 } else { EXIT_DOMAIN })
}

fn render_report_human(report: &DistinguishabilityReport) {
    println!("f1 = {}", format_sig10(report.f1));
    println!("theta = {}", format_sig10(report.theta));
    if report.distinguishable {
        println!("distinguishable: true");
    } else {
        println!("not sequentially distinguishable");
    }
    if let Some(c) = report.cos_alpha0 {
        println!("cos_alpha0 = {}", format_sig10(c));
    }
    if let Some(n) = report.nmin_exact_2d {
        println!("N_exact_2d = {n}");
    }
    if let Some(n) = report.nmin_lower {
        println!("N_lower = {n}");
    }
    if let Some(n) = report.nmin_upper {
        println!("N_upper = {n}");
    }
    if let Some(f) = report.ea_f1 {
        println!("ea_f1 = {}", format_sig10(f));
    }
    if let Some(n) = report.ea_nmin_lower {
        println!("N_ea_lower = {n}");
    }
    if let Some(n) = report.ea_nmin_upper {
        println!("N_ea_upper = {n}");
    }
}

fn cmd_report(
    path: &Path,
    allow_invalid: bool,
    ea: bool,
    starts: usize,
    seed: u64,
    json: bool,
) -> Result<u8, Failure> {
    let channel = load_channel(path, allow_invalid)?;
    let config = optimizer_config(starts, seed)?;
    let report = bounds::build_report(&channel, &config, ea)?;
    if json {
        print!("{}", io::to_canonical_json(&report));
    } else {
        if let Some(name) = channel.name() {
            println!(
                "channel: {name} (dim {}, {} Kraus operators)",
                channel.dim(),
                channel.kraus().len()
            );
        }
        render_report_human(&report);
    }
    Ok(0)
}

fn synthesize_plan(
    channel: &KrausChannel,
    config: &OptimizerConfig,
) -> Result<ProtocolPlan, Failure> {
    let f1 = fidelity::f1_identity(channel, config)?;
    if f1.value >= 1.0 - fidelity::DISTINGUISHABLE_TOL {
        return Err(Failure::from(CoreError::NotDistinguishable {
            f1: f1.value,
        }));
    }
    if channel.dim() == 2 {
        Ok(protocol::plan_2d(channel, &f1, config)?)
    } else {
        let a0 = fidelity::alpha0(channel, &f1, config)?;
        Ok(protocol::plan_general(channel, &f1, &a0, config)?)
    }
}

fn overlap_schedule(plan: &ProtocolPlan) -> String {
    plan.rounds
        .iter()
        .map(|r| format!("{:.4}", r.predicted_overlap_after))
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_protocol(
    path: &Path,
    allow_invalid: bool,
    trace: Option<&Path>,
    starts: usize,
    seed: u64,
) -> Result<u8, Failure> {
    let channel = load_channel(path, allow_invalid)?;
    let config = optimizer_config(starts, seed)?;
    let plan = synthesize_plan(&channel, &config)?;
    let out_path = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.with_extension("plan.json"));
    std::fs::write(&out_path, io::plan_to_json(&plan)).map_err(|e| Failure {
        code: EXIT_NUMERIC,
        message: format!("writing {}: {e}", out_path.display()),
    })?;
    println!("rounds: {}", plan.claimed_queries);
    println!("overlap schedule: {}", overlap_schedule(&plan));
    println!("plan written to {}", out_path.display());
    Ok(0)
}

fn cmd_simulate(
    path: &Path,
    allow_invalid: bool,
    shots: u64,
    seed: u64,
    starts: usize,
    json: bool,
) -> Result<u8, Failure> {
    if shots == 0 {
        return Err(Failure::usage("--shots must be at least 1"));
    }
    let text = read_file(path)?;
    let looks_like_plan = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .map(|v| v.get("rounds").is_some())
        .unwrap_or(false);
    let plan = if looks_like_plan {
        io::parse_plan(&text)?
    } else {
        let channel = io::parse_channel_file(&text, allow_invalid)?.into_channel()?;
        let config = optimizer_config(starts, seed)?;
        synthesize_plan(&channel, &config)?
    };
    let report = simulator::monte_carlo(&plan, shots, seed)?;
    if json {
        print!("{}", io::to_canonical_json(&report));
    } else {
        println!("shots: {}", report.shots);
        println!("wrong_guesses: {}", report.wrong_guesses);
        println!("empirical_error: {}", format_sig10(report.empirical_error));
        println!(
            "max_terminal_leak: {}",
            format_sig10(report.max_terminal_leak)
        );
    }
    Ok(if report.empirical_error == 0.0 {
        0
    } else {
        EXIT_DOMAIN
    })
}

/// Analytic `theta = arccos(F̃₁)` for the tagged channel families.
fn analytic_theta(channel: &KrausChannel) -> Option<f64> {
    let name = channel.name()?;
    if name == "identity" {
        return Some(0.0);
    }
    if name == "pauli_z" {
        return Some(std::f64::consts::FRAC_PI_2);
    }
    if let Some(angle) = name.strip_prefix("rotation:") {
        let theta: f64 = angle.parse().ok()?;
        if theta <= std::f64::consts::FRAC_PI_2 + 1e-9 {
            return Some(theta.min(std::f64::consts::FRAC_PI_2));
        }
        return None;
    }
    if let Some(angle) = name.strip_prefix("replace:") {
        return angle.parse().ok();
    }
    None
}

fn parse_q_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parse_one = |s: &str| -> Result<f64, Failure> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Failure::usage(format!("bad q value '{s}'")))
    };
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Failure::usage("q grid spec must be start:end:step"));
        }
        let (start, end, step) = (
            parse_one(parts[0])?,
            parse_one(parts[1])?,
            parse_one(parts[2])?,
        );
        if step <= 0.0 || end < start {
            return Err(Failure::usage(
                "q grid spec must have positive step and end >= start",
            ));
        }
        let mut grid = Vec::new();
        let mut k = 0usize;
        loop {
            let q = start + step * k as f64;
            if q > end + 1e-12 {
                break;
            }
            grid.push(q.min(1.0));
            k += 1;
        }
        grid
    } else {
        spec.split(',').map(parse_one).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(Failure::usage("empty q grid"));
    }
    for &q in &grid {
        if !(0.0..=1.0).contains(&q) {
            return Err(Failure::usage(format!("q = {q} outside [0, 1]")));
        }
    }
    Ok(grid)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    mode: VerifyMode,
    paths: &[PathBuf],
    allow_invalid: bool,
    q_spec: &str,
    samples: usize,
    seed: u64,
    starts: usize,
    theta0: Option<f64>,
    theta1: Option<f64>,
) -> Result<u8, Failure> {
    match mode {
        VerifyMode::Lemma2 => {
            let [path] = paths else {
                return Err(Failure::usage("lemma2 mode takes exactly one channel file"));
            };
            let channel = load_channel(path, allow_invalid)?;
            let config = optimizer_config(starts, seed)?;
            let f1 = fidelity::f1_identity(&channel, &config)?;
            let a0 = fidelity::alpha0(&channel, &f1, &config)?;
            let grid: Vec<f64> = (0..20).map(|i| a0.alpha0 * i as f64 / 19.0).collect();
            let rows = simulator::verify_lemma2(&channel, &f1, &a0, &grid)?;
            print!("{}", io::lemma2_csv(&rows));
            Ok(if rows.iter().any(|r| r.violated) {
                EXIT_DOMAIN
            } else {
                0
            })
        }
        VerifyMode::Thm4 => {
            let [path0, path1] = paths else {
                return Err(Failure::usage("thm4 mode takes exactly two channel files"));
            };
            let ch0 = load_channel(path0, allow_invalid)?;
            let ch1 = load_channel(path1, allow_invalid)?;
            let t0 = theta0.or_else(|| analytic_theta(&ch0)).ok_or_else(|| {
                Failure::domain(
                    "no analytic theta for the first channel: numerically computed theta values \
                     are lower estimates and would spuriously strengthen the bound; tag the \
                     channel name as rotation:<angle> / replace:<angle> or pass --theta0",
                )
            })?;
            let t1 = theta1.or_else(|| analytic_theta(&ch1)).ok_or_else(|| {
                Failure::domain(
                    "no analytic theta for the second channel: pass --theta1 or use a tagged \
                     family (rotation:<angle>, replace:<angle>, identity, pauli_z)",
                )
            })?;
            if samples == 0 {
                return Err(Failure::usage("--samples must be at least 1"));
            }
            let grid = parse_q_grid(q_spec)?;
            let rows = simulator::verify_thm4(&ch0, &ch1, t0, t1, &grid, samples, seed)?;
            print!("{}", io::thm4_csv(&rows));
            Ok(if rows.iter().any(|r| r.violated) {
                EXIT_DOMAIN
            } else {
                0
            })
        }
    }
}
