//! `sdf`: run complexity sweeps, the verification suite, synthetic panel
//! generation, and metric recomputation from stored returns.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sdf_core::{backtest, metrics, verify, Error};

use config::{load_config, AppConfig, MetricsConfig};

#[derive(Parser)]
#[command(name = "sdf", version, about = "Sparse vs dense SDF estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Parser)]
struct CommonArgs {
    /// configuration file (TOML or JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: available cores; env SDF_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    /// master seed override (env SDF_SEED)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rolling out-of-sample complexity sweep
    Sweep(CommonArgs),
    /// Run the randomized structural-property suite
    Verify(CommonArgs),
    /// Generate a synthetic panel with a planted sparse kernel
    Synth(CommonArgs),
    /// Recompute the metric suite from stored return series
    Metrics(CommonArgs),
}

/// seed precedence: --seed flag > SDF_SEED > config file
fn effective_seed(args: &CommonArgs) -> Result<Option<u64>, Error> {
    if let Some(s) = args.seed {
        return Ok(Some(s));
    }
    match std::env::var("SDF_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::validation(format!("SDF_SEED is not a u64: {v}"))),
        Err(_) => Ok(None),
    }
}

fn init_threads(args: &CommonArgs) -> Result<(), Error> {
    let n = match args.threads {
        Some(n) => Some(n),
        None => match std::env::var("SDF_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| Error::validation(format!("SDF_THREADS is not a usize: {v}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::validation("thread count must be >= 1"));
        }
        // ignore "already initialized" on repeated configuration
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct RunManifest {
    command: String,
    config_snapshot: serde_json::Value,
    master_seed: u64,
    code_version: String,
    elapsed_secs: f64,
    outputs: Vec<String>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: &impl serde::Serialize,
    seed: u64,
    started: Instant,
    outputs: &[String],
) -> Result<(), Error> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_snapshot: serde_json::to_value(config)?,
        master_seed: seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_secs: started.elapsed().as_secs_f64(),
        outputs: outputs.to_vec(),
    };
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<ExitCode, Error> {
    let started = Instant::now();
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::validation("sweep requires --config"))?;
    let mut app: AppConfig = load_config(path)?;
    if let Some(seed) = effective_seed(args)? {
        app.sweep.seed = seed;
    }
    let panel = app.panel.materialize()?;
    let result = backtest::run_sweep(&panel, &app.sweep)?;
    backtest::write_result(&result, &args.out)?;
    let curves = args.out.join("curves.csv");
    backtest::write_curves(&result, &curves)?;
    let outputs = vec![
        args.out.join("summary.json").display().to_string(),
        curves.display().to_string(),
    ];
    write_manifest(&args.out, "sweep", &app, app.sweep.seed, started, &outputs)?;
    if result.total_failed_windows > 0 {
        eprintln!(
            "warning: {} of {} window solves failed; affected cells are degraded",
            result.total_failed_windows, result.total_windows
        );
    }
    println!(
        "sweep: {} cells, {} summary rows -> {}",
        result.cells.len(),
        result.summaries.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &CommonArgs) -> Result<ExitCode, Error> {
    let started = Instant::now();
    let mut cfg: verify::VerifyConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => verify::VerifyConfig::default(),
    };
    if let Some(seed) = effective_seed(args)? {
        cfg.seed = seed;
    }
    let report = verify::run_verification(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    let report_path = args.out.join("theory_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
    for check in &report.checks {
        let status = if check.passed { "pass" } else { "FAIL" };
        match check.failing_seed {
            Some(s) if !check.passed => {
                println!("{status}  {} ({}) [replay seed {s}]", check.name, check.detail)
            }
            _ => println!("{status}  {} ({} instances)", check.name, check.instances),
        }
    }
    write_manifest(
        &args.out,
        "verify",
        &cfg,
        cfg.seed,
        started,
        &[report_path.display().to_string()],
    )?;
    if report.all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_synth(args: &CommonArgs) -> Result<ExitCode, Error> {
    let started = Instant::now();
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::validation("synth requires --config"))?;
    let mut spec: config::SynthSpec = load_config(path)?;
    if let Some(seed) = effective_seed(args)? {
        spec.seed = seed;
    }
    let (panel, lambda_true) = spec.generate()?;
    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("panel.csv");
    sdf_core::panel::write_panel_csv(&panel, &csv_path)?;
    let sidecar = args.out.join("lambda_true.json");
    std::fs::write(
        &sidecar,
        serde_json::to_string_pretty(&lambda_true.to_vec())? + "\n",
    )?;
    let outputs = vec![csv_path.display().to_string(), sidecar.display().to_string()];
    write_manifest(&args.out, "synth", &spec, spec.seed, started, &outputs)?;
    println!(
        "synth: {} months x {} assets -> {}",
        panel.n_months(),
        panel.months[0].r_next.len(),
        csv_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(args: &CommonArgs) -> Result<ExitCode, Error> {
    let started = Instant::now();
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::validation("metrics requires --config"))?;
    let cfg: MetricsConfig = load_config(path)?;
    let series = cfg.read_returns()?;
    let reports: Vec<metrics::MetricsReport> = series
        .iter()
        .map(|(_, rets)| metrics::report(rets, &cfg.q_grid, &cfg.gamma_grid))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&metrics::MetricsReport> = reports.iter().collect();
    let averaged = backtest::average_reports(&refs)
        .ok_or_else(|| Error::validation("metrics: no return series found"))?;
    std::fs::create_dir_all(&args.out)?;
    let out_path = args.out.join("metrics.json");
    let body = serde_json::json!({
        "per_draw": series
            .iter()
            .zip(&reports)
            .map(|((d, _), r)| serde_json::json!({"draw": d, "metrics": r}))
            .collect::<Vec<_>>(),
        "averaged": averaged,
    });
    std::fs::write(&out_path, serde_json::to_string_pretty(&body)? + "\n")?;
    write_manifest(
        &args.out,
        "metrics",
        &cfg,
        0,
        started,
        &[out_path.display().to_string()],
    )?;
    println!("metrics: {} draws -> {}", reports.len(), out_path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Sweep(a) | Command::Verify(a) | Command::Synth(a) | Command::Metrics(a) => {
            a.clone()
        }
    };
    if let Err(e) = init_threads(&args) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let run = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
