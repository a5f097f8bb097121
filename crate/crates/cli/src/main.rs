use clap::Parser;
use cocycle_core::experiments::{run, ExperimentConfig, ExperimentId};
use cocycle_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const THREADS_VAR: &str = "COCYCLE_LAB_THREADS";

/// Runs cocycle experiments from a TOML config and writes JSON/CSV reports.
///
/// Exit status: 0 when every verdict passes, 2 when some verdict fails, 1 on
/// config or runtime errors.
#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH", required_unless_present = "list")]
    config: Option<PathBuf>,

    /// Report directory; overrides `[output] dir` (default `out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed; overrides the config's `seed`.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Run only this experiment (E1..E5); default is every section in the config.
    #[arg(long, value_name = "ID", value_parser = parse_id)]
    experiment: Option<ExperimentId>,

    /// List experiments (those defined in --config, if given) and exit.
    #[arg(long)]
    list: bool,

    /// Check the config against the schema and exit without running.
    #[arg(long)]
    validate: bool,
}

fn parse_id(s: &str) -> Result<ExperimentId, String> {
    ExperimentId::parse(s).map_err(|e| e.to_string())
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    if cli.list {
        let ids = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?.config.experiments(),
            None => ExperimentId::ALL.to_vec(),
        };
        for id in ids {
            println!("{}  {}", id.name(), id.title());
        }
        return Ok(true);
    }
    let path = cli.config.as_ref().expect("clap enforces --config");
    let loaded = ExperimentConfig::load(path)?;
    let available = loaded.config.experiments();
    let ids = match cli.experiment {
        Some(id) if !available.contains(&id) => {
            return Err(Error::Config(format!(
                "{}: no [{}] section",
                path.display(),
                id.name().to_ascii_lowercase()
            )))
        }
        Some(id) => vec![id],
        None => available,
    };
    if cli.validate {
        let names: Vec<&str> = ids.iter().map(|id| id.name()).collect();
        println!("{}: valid ({})", path.display(), names.join(", "));
        return Ok(true);
    }
    init_threads()?;
    let seed = cli.seed.unwrap_or(loaded.config.seed);
    let out = cli
        .out
        .clone()
        .or_else(|| loaded.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut all_passed = true;
    for id in ids {
        let start = std::time::Instant::now();
        let report = run(&loaded, id, seed)?;
        let files = report.write(&out)?;
        for v in &report.verdicts {
            println!("{} {} {}: {}", id.name(), if v.passed { "PASS" } else { "FAIL" }, v.id, v.detail);
        }
        println!(
            "{} {} in {:.1}s, {} files under {}",
            id.name(),
            if report.passed { "passed" } else { "FAILED" },
            start.elapsed().as_secs_f64(),
            files.len(),
            files[0].parent().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        all_passed &= report.passed;
    }
    Ok(all_passed)
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
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
