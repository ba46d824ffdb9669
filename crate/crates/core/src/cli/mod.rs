//! Configuration-driven experiment runner.
//!
//! Subcommands `simulate | check | analyze`. Exit codes: 0 ok, 1 I/O
//! failure, 2 configuration or input error, 3 assumption failure, 4 numeric
//! blow-up. `TSADAPT_OUT_DIR` redirects relative output paths.

pub mod config;
pub mod metrics;
pub mod simulate;
pub mod trace;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    cb_hat, check_assumptions, default_frequency_grid, detectability_check, first_certified_point,
    lemma44_certificate, positive_real_diagnostic, MinimumPhase, StabilityReport,
};
use crate::Error;
use config::{parse_policy_flag, Overrides, Scenario, ScenarioConfig};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "TSADAPT_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tsadapt", version, about = "Adaptive high-gain output feedback on time scales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its CSV trace.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// siso-bound | mimo-bound | ilchmann-townley | fixed:<mu>
        #[arg(long)]
        policy: Option<String>,
    },
    /// Audit the assumptions and certificates of a scenario.
    Check {
        config: PathBuf,
        /// Graininess values for the detectability test.
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        /// Key-value report path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Analyze a trace written by `simulate`.
    Analyze {
        trace: PathBuf,
        /// Key-value report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of a subcommand, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Assumption(String),
    BlowUp(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Assumption(_) => EXIT_ASSUMPTION,
            CliError::BlowUp(_) => EXIT_BLOW_UP,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Assumption(m)
            | CliError::BlowUp(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::AssumptionFailure(m) => CliError::Assumption(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Explicit path, else configured path, else `default`; relative results
/// are placed under `TSADAPT_OUT_DIR` when it is set.
fn resolve_output(explicit: Option<&Path>, configured: Option<&str>, default: &str) -> PathBuf {
    let p = explicit
        .map(Path::to_path_buf)
        .or_else(|| configured.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default));
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p,
    }
}

fn create_file(path: &Path) -> Result<fs::File, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::File::create(path).map_err(|e| io_err(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.build(overrides).map_err(CliError::from)
}

fn write_kv(out: &mut dyn Write, kv: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in kv {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

/// Runs the closed loop and writes the trace; prints a key-value summary.
pub fn cmd_simulate(
    config: &Path,
    overrides: &Overrides,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let scenario = load_scenario(config, overrides)?;
    let audit = check_assumptions(&scenario.plant, scenario.tolerances.zero_tol)?;
    if !audit.a2_holds() {
        return Err(CliError::Assumption(format!(
            "(CB)^T + CB is not positive definite (lambda_min = {})",
            audit.cb_lambda_min
        )));
    }
    match audit.minimum_phase {
        MinimumPhase::NonMinimumPhase => {
            return Err(CliError::Assumption(
                "plant has a transmission zero with positive real part".into(),
            ))
        }
        MinimumPhase::Marginal => {
            let _ =
                writeln!(stderr, "warning: plant has a transmission zero on the imaginary axis");
        }
        MinimumPhase::Strict => {}
    }

    let sim = simulate::simulate(&scenario)?;
    let path = resolve_output(out, scenario.trace.as_deref(), &format!("{}.csv", stem(config)));
    let file = create_file(&path)?;
    trace::write_trace(
        std::io::BufWriter::new(file),
        scenario.plant.m(),
        scenario.plant.n(),
        &sim.records,
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(t) = sim.blow_up {
        return Err(CliError::BlowUp(format!(
            "state norm exceeded {} at t = {t}; partial trace written to {}",
            scenario.tolerances.blowup,
            path.display()
        )));
    }

    let m = metrics::trace_metrics(&sim.records)?;
    let mut kv = vec![("trace".to_string(), path.display().to_string())];
    kv.extend(m.to_key_values());
    if let Some(eps1) = scenario.eps1 {
        let freqs = default_frequency_grid();
        let samples = sim.records.iter().filter(|r| r.mu > 0.0).map(|r| (r.t, r.k, r.mu));
        match first_certified_point(&scenario.plant, eps1, samples, &freqs)? {
            Some(c) => {
                kv.push(("certified.t".into(), format!("{}", c.t)));
                kv.push(("certified.k".into(), format!("{}", c.k)));
                kv.push(("certified.eps2".into(), format!("{}", c.eps2)));
            }
            None => kv.push(("certified".into(), "none".into())),
        }
    }
    write_kv(stdout, &kv).map_err(|e| CliError::Io(e.to_string()))
}

/// Builds the stability report for a scenario.
pub fn check_report(scenario: &Scenario) -> crate::Result<StabilityReport> {
    let tol = &scenario.tolerances;
    let plant = &scenario.plant;
    let mut report = StabilityReport {
        assumptions: Some(check_assumptions(plant, tol.zero_tol)?),
        ..Default::default()
    };
    for &mu in &scenario.check.mu {
        report.detectability.push(detectability_check(plant.a(), mu, tol.detectability_tol)?);
    }
    for &k in &scenario.check.k {
        for &mu in &scenario.check.mu {
            let cert = lemma44_certificate(&cb_hat(plant, mu)?, k, mu)?;
            report.certificates.push((k, mu, cert));
        }
    }
    let freqs = default_frequency_grid();
    for &k in &scenario.check.k_star {
        report.positive_real.push(positive_real_diagnostic(plant, k, &freqs, tol.pr_tol)?);
    }
    Ok(report)
}

/// Prints the text report and writes the key-value report.
pub fn cmd_check(
    config: &Path,
    overrides: &Overrides,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let scenario = load_scenario(config, overrides)?;
    let report = check_report(&scenario)?;
    let path =
        resolve_output(out, scenario.report.as_deref(), &format!("{}.check.txt", stem(config)));
    let mut file = create_file(&path)?;
    write_kv(&mut file, &report.to_key_values()).map_err(|e| io_err(&path, e))?;
    stdout.write_all(report.to_text().as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    if report.hard_failure() {
        return Err(CliError::Assumption("hard assumption failure".into()));
    }
    Ok(())
}

/// Validates a trace and prints its key-value analysis.
pub fn cmd_analyze(
    trace_path: &Path,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let file = fs::File::open(trace_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", trace_path.display())))?;
    let t = trace::read_trace(std::io::BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", trace_path.display())))?;
    let m = metrics::trace_metrics(&t.records)?;
    let kv = m.to_key_values();
    if let Some(p) = out {
        let path = resolve_output(Some(p), None, "");
        let mut f = create_file(&path)?;
        write_kv(&mut f, &kv).map_err(|e| io_err(&path, e))?;
    }
    write_kv(stdout, &kv).map_err(|e| CliError::Io(e.to_string()))
}

fn overrides(
    horizon: Option<f64>,
    seed: Option<u64>,
    policy: Option<&str>,
    mu: Option<Vec<f64>>,
) -> Result<Overrides, CliError> {
    Ok(Overrides {
        horizon,
        seed,
        policy: policy.map(parse_policy_flag).transpose().map_err(CliError::from)?,
        mu,
    })
}

/// Parses `args` and dispatches; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Simulate { config, horizon, seed, out, policy } => {
            overrides(horizon, seed, policy.as_deref(), None)
                .and_then(|o| cmd_simulate(&config, &o, out.as_deref(), stdout, stderr))
        }
        Command::Check { config, mu, out, policy } => overrides(None, None, policy.as_deref(), mu)
            .and_then(|o| cmd_check(&config, &o, out.as_deref(), stdout)),
        Command::Analyze { trace, out } => cmd_analyze(&trace, out.as_deref(), stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}
