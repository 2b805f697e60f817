//! Command-line front end for error pre-compensation.
//!
//! Subcommands:
//! - `solve`: run the analytic procedure on a channel/target pair.
//! - `maxfid`: maximize output fidelity over input states by SDP.
//! - `montecarlo`: sample random targets and report reachability statistics.
//! - `qecc-compare`: emit the code-comparison fidelity curves and crossovers.
//!
//! Exit codes: 0 = solved/computed, 2 = provably infeasible,
//! 1 = usage, parse, or solver-indeterminate errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use qepc_core::channels::{DensityMatrix, Ensemble, KrausChannel};
use qepc_core::experiments::{
    self, monte_carlo, qecc_comparison, write_monte_carlo_json, write_qecc_csv, write_qecc_json,
    DEFAULT_THRESHOLDS,
};
use qepc_core::numcore::{CMatrix, CVector, DEFAULT_RTOL};
use qepc_core::precomp::{self, InfeasibleReason, PrecompResult};
use qepc_core::sdp;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "qepc",
    about = "Error pre-compensation for noisy quantum channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytically solve E(rho_in) = rho_t via the transfer matrix.
    Solve(SolveArgs),
    /// Maximize the output fidelity against the target over input states.
    Maxfid(MaxfidArgs),
    /// Random-target statistics for a fixed channel.
    Montecarlo(MontecarloArgs),
    /// Fidelity curves of pre-compensation vs quantum error-correcting codes.
    QeccCompare(QeccArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Channel JSON: {"dim": d, "kraus": [[[[re, im], ...], ...], ...]}
    #[arg(long)]
    channel: PathBuf,
    /// Target state JSON: {"dim": d, "matrix": [[[re, im], ...], ...]}
    #[arg(long)]
    target: PathBuf,
    /// Treat the channel as acting on subsystem B of an A(x)B target with
    /// this dimension for A.
    #[arg(long)]
    bipartite: Option<usize>,
    /// Relative singular-value cutoff for transfer-matrix rank decisions.
    #[arg(long, default_value_t = DEFAULT_RTOL)]
    tol: f64,
    /// Write the result JSON here (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaxfidArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MontecarloArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Number of random targets.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Target ensemble: hilbert-schmidt, bloch-ball-uniform, or haar-pure.
    #[arg(long, default_value = "hilbert-schmidt")]
    ensemble: Ensemble,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QeccArgs {
    /// Comma-separated code list: shor, five.
    #[arg(long, default_value = "shor,five", value_delimiter = ',')]
    codes: Vec<String>,
    /// Error-probability grid as start:end:step.
    #[arg(long, default_value = "0:1:0.01")]
    pgrid: String,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Curve file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    // QEPC_THREADS caps internal parallelism; 0 or unset means automatic.
    if let Ok(v) = std::env::var("QEPC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/usage text; route errors to exit 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::from(EXIT_OK)
            };
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Maxfid(args) => cmd_maxfid(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::QeccCompare(args) => cmd_qecc_compare(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {what} file {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid {what} in {}: {e}", path.display()))
}

fn write_output(value: &Value, out: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())
            })
            .collect(),
    )
}

fn vector_json(v: &CVector) -> Value {
    Value::Array((0..v.len()).map(|i| complex_json(v[i])).collect())
}

fn cmd_solve(args: SolveArgs) -> Result<u8, String> {
    let channel: KrausChannel = read_json(&args.channel, "channel")?;
    let target: DensityMatrix = read_json(&args.target, "target state")?;
    if !(args.tol > 0.0 && args.tol < 1.0) {
        return Err(format!("--tol must be in (0, 1), got {}", args.tol));
    }

    let result = match args.bipartite {
        Some(dim_a) => precomp::solve_exact_bipartite(&channel, dim_a, &target, args.tol),
        None => precomp::solve_exact(&channel, &target, args.tol),
    }
    .map_err(|e| e.to_string())?;

    let feasible = result.is_feasible();
    let payload = match &result {
        PrecompResult::Unique { rho_in, residual } => json!({
            "case": result.case_tag(),
            "feasible": true,
            "rho_in": rho_in,
            "residual": residual,
        }),
        PrecompResult::Family {
            particular,
            kernel_basis,
            psd_member,
        } => json!({
            "case": result.case_tag(),
            "feasible": feasible,
            "family": {
                "particular": matrix_json(particular),
                "kernel_dim": kernel_basis.len(),
                "kernel_basis": kernel_basis.iter().map(vector_json).collect::<Vec<_>>(),
            },
            "rho_in": psd_member,
        }),
        PrecompResult::Infeasible {
            reason,
            certificate,
        } => json!({
            "case": result.case_tag(),
            "feasible": false,
            "certificate": {
                "reason": match reason {
                    InfeasibleReason::NotInRange => "not-in-range",
                    InfeasibleReason::CandidateNotPsd => "candidate-not-psd",
                },
                "value": certificate,
            },
        }),
    };
    write_output(&payload, args.out.as_deref())?;
    Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_maxfid(args: MaxfidArgs) -> Result<u8, String> {
    let channel: KrausChannel = read_json(&args.channel, "channel")?;
    let target: DensityMatrix = read_json(&args.target, "target state")?;
    let out = sdp::max_fidelity(&channel, &target).map_err(|e| e.to_string())?;
    let payload = json!({
        "fidelity": out.fidelity,
        "rho_in": out.rho_in,
    });
    write_output(&payload, args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_montecarlo(args: MontecarloArgs) -> Result<u8, String> {
    let channel: KrausChannel = read_json(&args.channel, "channel")?;
    if args.samples == 0 {
        return Err("--samples must be at least 1".into());
    }
    let report = monte_carlo(
        &channel,
        args.samples,
        args.ensemble,
        args.seed,
        &DEFAULT_THRESHOLDS,
    )
    .map_err(|e| e.to_string())?;
    write_monte_carlo_json(&report, &args.out).map_err(|e| e.to_string())?;
    let above: Vec<String> = report
        .fraction_above
        .iter()
        .map(|t| format!("fraction>{}={:.5}", t.threshold, t.fraction))
        .collect();
    println!(
        "samples={} ensemble={} seed={} fraction_perfect={:.5} {}",
        report.samples,
        report.ensemble.name(),
        report.seed,
        report.fraction_perfect,
        above.join(" ")
    );
    Ok(EXIT_OK)
}

fn parse_pgrid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--pgrid expects start:end:step, got {spec:?}"));
    }
    let start: f64 = parts[0].parse().map_err(|_| "bad pgrid start".to_string())?;
    let end: f64 = parts[1].parse().map_err(|_| "bad pgrid end".to_string())?;
    let step: f64 = parts[2].parse().map_err(|_| "bad pgrid step".to_string())?;
    if !(step > 0.0) || end < start {
        return Err("pgrid requires step > 0 and end >= start".into());
    }
    let n = ((end - start) / step).round() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

fn cmd_qecc_compare(args: QeccArgs) -> Result<u8, String> {
    let grid = parse_pgrid(&args.pgrid)?;
    let cmp = qecc_comparison(&args.codes, &grid).map_err(|e| e.to_string())?;
    match args.format.as_str() {
        "csv" => write_qecc_csv(&cmp, &args.out).map_err(|e| e.to_string())?,
        "json" => write_qecc_json(&cmp, &args.out).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown format {other:?}; expected csv or json")),
    }
    for curve in &cmp.codes {
        match curve.crossover_p {
            Some(p) => println!(
                "crossover qepc/{}: p = {:.6} (pre-compensation wins for larger p)",
                curve.code, p
            ),
            None => println!("crossover qepc/{}: none in (0.001, 0.5)", curve.code),
        }
    }
    Ok(EXIT_OK)
}
