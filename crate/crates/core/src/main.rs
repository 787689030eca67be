// NaN must fail these guards, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use hktflow::cone::CSubReport;
use hktflow::diagnostics::{
    check_harnack_monotone, check_max_principle, fit_decay, track_apriori, verify_elliptic, AprioriReport,
    DiagnosticsRecord, EllipticReport, MonotoneReport,
};
use hktflow::flow::{normalize, outcome, step, FlowError, FlowProblem, FlowState};
use hktflow::io::{
    load_checkpoint, parse_raw, read_history, save_checkpoint, validate, write_atomic, write_history, write_json,
    Checkpoint, DataConfig, ExperimentConfig, OutputConfig,
};
use hktflow::oracle;

/// Largest multiplicative gap `verify` accepts.
const GAP_TOL: f64 = 1e-3;
/// `verify` accepts residuals up to this multiple of `tol_osc`.
const RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Parser)]
#[command(name = "hktflow", version, about = "Parabolic fully non-linear flows on flat quaternionic tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue when the subsolution test fails.
        #[arg(long)]
        force: bool,
    },
    /// Continue a run from a checkpoint.
    Resume {
        config: PathBuf,
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check how well a checkpointed state solves the elliptic equation.
    Verify { config: PathBuf, checkpoint: PathBuf },
    /// Decay fit and monotonicity checks on a history CSV.
    Diag {
        history: PathBuf,
        /// Oscillation tolerance of the run (sets the fit window floor).
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Shift B in ψ = ∂ₜφ + B; defaults to 1 + |min ∂ₜφ| at the first record.
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<f64>,
    },
    /// Brute-force cross-checks of the linear algebra and operators.
    Oracle {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write h manufactured from the config's `phi_star` as CSV.
    Manufacture {
        config: PathBuf,
        /// Destination file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::config(format!("{}: {e}", path.display()))
    }
}

fn flow_failure(e: FlowError) -> Failure {
    match e {
        FlowError::Breakdown { .. } => Failure { code: 3, message: e.to_string() },
        other => Failure::config(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("HKTFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::usage(format!("HKTFLOW_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run { config, out, force } => {
            let cfg = load(&config, force)?;
            let problem = cfg.problem().map_err(flow_failure)?;
            let state = FlowState::initial(&problem).map_err(flow_failure)?;
            drive(&cfg, &problem, state, &output_config(&cfg, out))
        }
        Command::Resume { config, checkpoint, out } => {
            let cfg = load(&config, false)?;
            let problem = cfg.problem().map_err(flow_failure)?;
            let ck = load_checkpoint(&checkpoint).map_err(|e| Failure::io(&checkpoint, e))?;
            let phi = ck.field(&cfg.grid).map_err(|e| Failure::io(&checkpoint, e))?;
            let mut state = FlowState::at(&problem, phi, ck.t, ck.step).map_err(flow_failure)?;
            let output = output_config(&cfg, out);
            let previous = output.history_path();
            if previous.exists() {
                let old = read_history(&previous).map_err(|e| Failure::io(&previous, e))?;
                let mut kept: Vec<DiagnosticsRecord> = old.into_iter().filter(|r| r.step <= ck.step).collect();
                if kept.last().is_some_and(|r| r.step == ck.step) {
                    state.history.clear();
                }
                kept.append(&mut state.history);
                state.history = kept;
            }
            drive(&cfg, &problem, state, &output)
        }
        Command::Verify { config, checkpoint } => verify(&config, &checkpoint),
        Command::Diag { history, tol, shift } => diag(&history, tol, shift),
        Command::Oracle { samples, seed } => {
            if samples == 0 {
                return Err(Failure::usage("--samples must be positive"));
            }
            let reports = oracle::run_all(samples, seed);
            for r in &reports {
                println!(
                    "{} {:<40} samples {:>6}  max error {:.3e}  tolerance {:.1e}{}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.samples,
                    r.max_error,
                    r.tolerance,
                    r.note.as_ref().map(|n| format!("  ({n})")).unwrap_or_default()
                );
            }
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 5 })
        }
        Command::Manufacture { config, out } => manufacture(&config, out.as_deref()),
    }
}

fn load(path: &Path, force: bool) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut raw = parse_raw(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    raw.force |= force;
    let cfg = validate(raw).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn output_config(cfg: &ExperimentConfig, dir: Option<PathBuf>) -> OutputConfig {
    let mut out = cfg.output().clone();
    if let Some(dir) = dir {
        out.dir = dir;
    }
    out
}

#[derive(Serialize)]
struct RunReport {
    converged: bool,
    breakdown: Option<String>,
    steps: u64,
    t: f64,
    theta: f64,
    b: Option<f64>,
    residual: Option<f64>,
    min_margin: f64,
    elliptic: Option<EllipticReport>,
    decay: serde_json::Value,
    max_principle: MonotoneReport,
    harnack: serde_json::Value,
    apriori: AprioriReport,
    subsolution: Option<CSubReport>,
    warnings: Vec<String>,
}

fn save_state(output: &OutputConfig, state: &FlowState) -> Result<(), Failure> {
    let path = output.checkpoint_path();
    save_checkpoint(&path, &Checkpoint::from_field(&state.phi, state.t, state.step))
        .map_err(|e| Failure::io(&path, e))?;
    let path = output.history_path();
    write_history(&path, &state.history).map_err(|e| Failure::io(&path, e))
}

fn drive(cfg: &ExperimentConfig, problem: &FlowProblem, mut state: FlowState, output: &OutputConfig) -> Result<u8, Failure> {
    let settings = problem.settings();
    let every = cfg.raw.checkpoint_every;
    let mut breakdown = None;
    while !state.converged(settings.tol_osc) && state.step < settings.max_steps {
        if let Err(e) = step(problem, &mut state) {
            match e {
                FlowError::Breakdown { .. } => {
                    breakdown = Some(e.to_string());
                    break;
                }
                other => return Err(flow_failure(other)),
            }
        }
        if every > 0 && state.step.is_multiple_of(every) {
            save_state(output, &state)?;
        }
    }
    save_state(output, &state)?;

    let history = state.history.clone();
    let shift = state.harnack_shift;
    let (theta, min_margin, steps, t) = (state.theta(), state.min_margin, state.step, state.t);
    let summary = if breakdown.is_none() {
        Some(outcome(problem, state).map_err(flow_failure)?)
    } else {
        None
    };
    let elliptic = match &summary {
        Some(s) => Some(verify_elliptic(&s.phi_tilde, problem).map_err(flow_failure)?),
        None => None,
    };
    let converged = summary.as_ref().is_some_and(|s| s.converged);
    let report = RunReport {
        converged,
        breakdown: breakdown.clone(),
        steps,
        t,
        theta,
        b: summary.as_ref().map(|s| s.b),
        residual: summary.as_ref().map(|s| s.residual),
        min_margin,
        elliptic,
        decay: either(fit_decay(&history, settings.tol_osc)),
        max_principle: check_max_principle(&history),
        harnack: either(check_harnack_monotone(&history, shift)),
        apriori: track_apriori(&history),
        subsolution: cfg.csub.clone(),
        warnings: cfg.warnings.clone(),
    };
    let path = output.report_path();
    write_json(&path, &report).map_err(|e| Failure::io(&path, e))?;

    println!(
        "steps {steps}  t {t:.6}  theta {theta:.3e}  b {}  residual {}",
        fmt_opt(report.b),
        fmt_opt(report.residual)
    );
    if let Some(msg) = breakdown {
        eprintln!("error: {msg}");
        return Ok(3);
    }
    if !converged {
        eprintln!(
            "not converged: theta {theta:.3e} after {steps} steps (tol_osc {:e})",
            settings.tol_osc
        );
        return Ok(4);
    }
    Ok(0)
}

/// The report itself, or `{"error": message}`.
fn either<T: Serialize, E: std::fmt::Display>(r: Result<T, E>) -> serde_json::Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("plain data"),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

#[derive(Serialize)]
struct VerifyReport {
    step: u64,
    t: f64,
    #[serde(flatten)]
    elliptic: EllipticReport,
    residual_tolerance: f64,
    gap_tolerance: f64,
    passed: bool,
}

fn verify(config: &Path, checkpoint: &Path) -> Result<u8, Failure> {
    let cfg = load(config, false)?;
    let problem = cfg.problem().map_err(flow_failure)?;
    let ck = load_checkpoint(checkpoint).map_err(|e| Failure::io(checkpoint, e))?;
    let phi = ck.field(&cfg.grid).map_err(|e| Failure::io(checkpoint, e))?;
    let residual_tolerance = RESIDUAL_FACTOR * problem.settings().tol_osc;
    let elliptic = match verify_elliptic(&normalize(&phi), &problem) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verification failed: {e}");
            return Ok(5);
        }
    };
    let passed = elliptic.residual <= residual_tolerance
        && elliptic.min_margin > 0.0
        && elliptic.multiplicative_gap.is_none_or(|g| g < GAP_TOL);
    let report = VerifyReport {
        step: ck.step,
        t: ck.t,
        elliptic,
        residual_tolerance,
        gap_tolerance: GAP_TOL,
        passed,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
    Ok(if passed { 0 } else { 5 })
}

#[derive(Serialize)]
struct DiagReport {
    records: usize,
    decay: serde_json::Value,
    max_principle: MonotoneReport,
    harnack: serde_json::Value,
    apriori: AprioriReport,
    passed: bool,
}

fn diag(history: &Path, tol: f64, shift: Option<f64>) -> Result<u8, Failure> {
    if !(tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let records = read_history(history).map_err(|e| Failure::io(history, e))?;
    let shift = shift.unwrap_or_else(|| 1.0 + records.first().map_or(0.0, |r| r.rhs_min.abs()));
    let decay = fit_decay(&records, tol);
    let max_principle = check_max_principle(&records);
    let harnack = check_harnack_monotone(&records, shift);
    let apriori = track_apriori(&records);
    let passed = max_principle.passed
        && harnack.as_ref().is_ok_and(|h| h.passed)
        && apriori.passed
        && decay.as_ref().map_or(true, |d| d.delta_hat > 0.0);
    let report = DiagReport {
        records: records.len(),
        decay: either(decay),
        max_principle,
        harnack: either(harnack),
        apriori,
        passed,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
    Ok(if passed { 0 } else { 5 })
}

fn manufacture(config: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let cfg = load(config, false)?;
    if !matches!(cfg.raw.h, DataConfig::Manufactured { .. }) {
        return Err(Failure::config(format!(
            "{}: h: manufacture needs mode \"manufactured\" with phi_star",
            config.display()
        )));
    }
    let grid = &cfg.grid;
    let mut text = String::new();
    for c in grid.active() {
        let _ = write!(text, "{c},");
    }
    text.push_str("h\n");
    let mut x = vec![0.0; grid.active().len()];
    for (idx, v) in cfg.h.values().iter().enumerate() {
        grid.point(idx, &mut x);
        for xi in &x {
            let _ = write!(text, "{xi:e},");
        }
        let _ = writeln!(text, "{v:e}");
    }
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(|e| Failure::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(0)
}
