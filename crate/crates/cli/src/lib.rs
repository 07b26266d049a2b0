//! Command-line driver: argument parsing, file formats and report output.

pub mod config;
pub mod error;
pub mod report;
pub mod series_file;

use std::path::{Path, PathBuf};

use autohsic::diagnostics::IidScale;
use autohsic::simulation::{preset, run_experiment, ExperimentConfig, RejectionTable};
use autohsic::{residual_bootstrap_test, verify, wild_bootstrap_test, BootstrapConfig, Garch11, ObjectSeries};
use clap::{Parser, Subcommand, ValueEnum};

use config::{unknown_preset, ModelChoice, RunConfig};
use error::{CliError, CliResult};
use report::{DiagnoseOutput, FittedParams, InputEcho, TestOutput, VerifyOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// Human-readable summary.
    #[default]
    Text,
    /// Versioned JSON (JSON Lines for simulate).
    Records,
}

#[derive(Debug, Parser)]
#[command(name = "autohsic", version, about = "Kernel-based tests of serial independence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Worker threads; 0 lets the runtime choose.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Directory receiving report files.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wild bootstrap test of serial independence of a series file.
    Test { series: PathBuf },
    /// Fit a model and test its residuals with the refitting residual bootstrap.
    Diagnose { series: PathBuf },
    /// Monte Carlo rejection rates for a named preset or configured experiments.
    Simulate {
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
        /// Replications R per cell.
        #[arg(long, value_name = "R")]
        replications: Option<usize>,
        /// Bootstrap replicates B per test.
        #[arg(long, value_name = "B")]
        bootstrap: Option<usize>,
    },
    /// Run the oracle and invariant checks.
    Verify,
}

/// Result of a command that ran to completion. `failure` is set when the
/// command produced output but must still exit non-zero.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, failure: None }
    }
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(dir) = &cli.output {
        cfg.output = Some(dir.clone());
    }
    if cfg.threads == 0 {
        return dispatch(cli, &cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {} threads: {e}", cfg.threads)))?;
    pool.install(|| dispatch(cli, &cfg))
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> CliResult<Outcome> {
    match &cli.command {
        Command::Test { series } => cmd_test(series, cfg, cli.format),
        Command::Diagnose { series } => cmd_diagnose(series, cfg, cli.format),
        Command::Simulate {
            preset,
            replications,
            bootstrap,
        } => cmd_simulate(cfg, preset.as_deref(), *replications, *bootstrap, cli.format),
        Command::Verify => cmd_verify(cfg, cli.format),
    }
}

fn input_echo(path: &Path, s: &ObjectSeries) -> InputEcho {
    InputEcho {
        path: path.display().to_string(),
        space: s.space().clone(),
        length: s.len(),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

/// Writes `<stem>.json` and `<stem>.txt` when an output directory is set and
/// returns the stdout text for `format`.
fn emit(cfg: &RunConfig, stem: &str, json: String, text: String, format: Format) -> CliResult<String> {
    if let Some(dir) = &cfg.output {
        write_file(dir, &format!("{stem}.json"), &json)?;
        write_file(dir, &format!("{stem}.txt"), &text)?;
    }
    Ok(match format {
        Format::Text => text,
        Format::Records => json,
    })
}

fn bootstrap_config(cfg: &RunConfig) -> BootstrapConfig {
    BootstrapConfig::new(cfg.bootstrap, cfg.level, cfg.seed)
}

pub fn cmd_test(path: &Path, cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let series = series_file::read(path)?;
    let (k, l) = cfg.kernels();
    let report = wild_bootstrap_test(&series, k, l, cfg.max_lag, &bootstrap_config(cfg))?;
    let out = TestOutput::new(input_echo(path, &series), &report, cfg.include_replicates);
    emit(cfg, "test_report", report::to_json(&out), out.to_text(), format).map(Outcome::ok)
}

pub fn cmd_diagnose(path: &Path, cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let series = series_file::read(path)?;
    if !series.space().is_scalar() {
        return Err(CliError::config(format!(
            "model {:?} requires a scalar series (space=vector;dim=1), {} declares another space",
            cfg.model,
            path.display()
        )));
    }
    let (k, l) = cfg.kernels();
    let boot = bootstrap_config(cfg);
    let input = input_echo(path, &series);
    let out = match cfg.model {
        ModelChoice::Garch11 => {
            let r = residual_bootstrap_test(&series, &Garch11, k, l, cfg.max_lag, &boot)?;
            DiagnoseOutput::new(input, &r, FittedParams::Garch11(r.params), cfg.include_replicates)
        }
        ModelChoice::IidScale => {
            let r = residual_bootstrap_test(&series, &IidScale, k, l, cfg.max_lag, &boot)?;
            DiagnoseOutput::new(input, &r, FittedParams::IidScale(r.params), cfg.include_replicates)
        }
    };
    emit(cfg, "diagnose_report", report::to_json(&out), out.to_text(), format).map(Outcome::ok)
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    preset_flag: Option<&str>,
    replications: Option<usize>,
    bootstrap: Option<usize>,
    format: Format,
) -> CliResult<Outcome> {
    let replications = replications.or(cfg.simulate.replications);
    let bootstrap = bootstrap.or(cfg.simulate.bootstrap);
    if replications == Some(0) || bootstrap == Some(0) {
        return Err(CliError::config("replications and bootstrap must be at least 1"));
    }
    let name = preset_flag.or(cfg.simulate.preset.as_deref());
    let mut cells: Vec<ExperimentConfig> = match name {
        Some(n) => preset(n, cfg.seed).ok_or_else(|| CliError::config(unknown_preset(n)))?,
        None => Vec::new(),
    };
    cells.extend(cfg.simulate.experiments.iter().cloned());
    if cells.is_empty() {
        return Err(CliError::config(
            "nothing to simulate: pass --preset or configure [simulate] preset or experiments",
        ));
    }
    for c in &mut cells {
        if let Some(r) = replications {
            c.replications = r;
        }
        if let Some(b) = bootstrap {
            c.bootstrap = b;
        }
    }
    let tables = cells
        .iter()
        .map(run_experiment)
        .collect::<autohsic::Result<Vec<RejectionTable>>>()?;
    let text = report::tables_text(&tables);
    let records = report::records_jsonl(&tables);
    if let Some(dir) = &cfg.output {
        let stem = name.unwrap_or("experiments");
        write_file(dir, &format!("{stem}.txt"), &text)?;
        write_file(dir, &format!("{stem}.jsonl"), &records)?;
    }
    Ok(Outcome::ok(match format {
        Format::Text => text,
        Format::Records => records,
    }))
}

pub fn cmd_verify(cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let out = VerifyOutput::new(verify::run_all());
    let failure = out.report.first_failure().map(|c| {
        CliError::Verify(format!("{}: {}", c.name, c.detail))
    });
    let stdout = emit(cfg, "verify_report", report::to_json(&out), out.to_text(), format)?;
    Ok(Outcome { stdout, failure })
}
