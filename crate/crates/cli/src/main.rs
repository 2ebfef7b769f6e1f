use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evt_core::eval::{aggregate_table, read_csv, EvalReport};
use evt_core::evidence::{drop_classes, drop_percent, EvidenceSource};
use evt_core::experiment::{run_experiment, EvidenceSpec, ExperimentConfig};
use evt_core::io::{load_labels_text, parse_idx_labels, save_evidence};
use evt_core::seed::derive_seed;
use evt_core::Error;

#[derive(Parser)]
#[command(name = "evt", version, about = "Evidence transfer experiments")]
struct Cli {
    /// Experiment TOML, or a report.csv whose embedded config is re-run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides train.seed for `run`; seeds random draws for `gen-evidence`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for `run` (overrides output.dir), output file for `gen-evidence`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report, resolved config and checkpoints.
    Run,
    /// Write an EVT-CAT evidence file derived from labels.
    GenEvidence {
        /// Label file: IDX labels or one integer per line. Without it the
        /// labels come from the dataset of --config.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// labelset, mod:K, hash-mod:K, random:W, superset:cifar10 or superset:0,1/2,3
        #[arg(long)]
        generator: String,
        /// Keep only this fraction of samples.
        #[arg(long, conflicts_with = "remove")]
        keep: Option<f64>,
        /// Withhold these evidence classes (comma separated).
        #[arg(long, value_delimiter = ',')]
        remove: Vec<u32>,
    },
    /// Merge the report.csv files under a directory into one table.
    Report { dir: PathBuf },
}

/// Failure classes mapped to exit codes: 1 for bad input, 2 for runtime errors.
enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Evidence(_) => Failure::Input(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
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
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }

    let result = match cli.command {
        Command::Run => match &cli.config {
            Some(config) => cmd_run(config, cli.seed, cli.out, cli.quiet),
            None => Err(Failure::Input("run needs --config".into())),
        },
        Command::GenEvidence { labels, generator, keep, remove } => match &cli.out {
            Some(out) => cmd_gen_evidence(
                labels.as_deref(),
                cli.config.as_deref(),
                &generator,
                keep,
                &remove,
                cli.seed.unwrap_or(0),
                out,
            ),
            None => Err(Failure::Input("gen-evidence needs --out".into())),
        },
        Command::Report { dir } => cmd_report(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("EVT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("EVT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Reads an experiment config. A report CSV is accepted too: its `#` header
/// holds the resolved config it was produced from.
fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let text = if path.extension().is_some_and(|e| e == "csv") {
        read_csv(text.as_bytes()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?.0
    } else {
        text
    };
    ExperimentConfig::from_toml(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn cmd_run(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>, quiet: bool) -> Result<(), Failure> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    let base = base_dir(config_path);
    let out_dir = out.unwrap_or_else(|| base.join(&config.output.dir));
    config.dataset = config.dataset.anchored(&base);
    let data = config.dataset.load(&base).map_err(|e| Failure::Runtime(format!("loading dataset: {e}")))?;
    // fail before any training
    config.validate_for(&data)?;
    log::info!("{} samples x {} features from {}", data.len(), data.features.ncols(), data.provenance);

    let output = run_experiment(&config, &data)?;
    output.write(&out_dir)?;
    if !quiet {
        print!("{}", output.table());
        println!("\nwrote {}", out_dir.display());
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<u32>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    if let Ok(labels) = parse_idx_labels(&bytes) {
        return Ok(labels.into_iter().map(u32::from).collect());
    }
    load_labels_text(path).map_err(|e| Failure::Input(e.to_string()))
}

fn cmd_gen_evidence(
    labels: Option<&Path>,
    config: Option<&Path>,
    generator: &str,
    keep: Option<f64>,
    remove: &[u32],
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let spec: EvidenceSpec = generator.parse()?;
    let labels = match (labels, config) {
        (Some(path), _) => read_labels(path)?,
        (None, Some(cfg)) => {
            let config = load_config(cfg)?;
            config.dataset.load(&base_dir(cfg)).map_err(|e| Failure::Runtime(e.to_string()))?.labels
        }
        (None, None) => return Err(Failure::Input("either --labels or --config is required".into())),
    };
    let mut source: EvidenceSource = spec.build(&labels, derive_seed(seed, "random-evidence", 0))?;
    if let Some(keep) = keep {
        source = drop_percent(&source, keep, derive_seed(seed, "percent", 0))?;
    }
    if !remove.is_empty() {
        source = drop_classes(&source, &remove.iter().copied().collect())?;
    }
    save_evidence(&source, out)?;
    log::info!("{} of {} samples, width {}, written to {}", source.available(), source.len(), source.width(), out.display());
    Ok(())
}

fn find_reports(dir: &Path, found: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            find_reports(&path, found)?;
        } else if path.extension().is_some_and(|e| e == "csv") {
            found.push(path);
        }
    }
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<(), Failure> {
    let mut files = Vec::new();
    find_reports(dir, &mut files).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let mut rows: Vec<EvalReport> = Vec::new();
    for file in &files {
        let parsed = std::fs::File::open(file).map_err(Error::from).and_then(read_csv);
        match parsed {
            Ok((_, r)) => rows.extend(r),
            Err(e) => log::warn!("skipping {}: {e}", file.display()),
        }
    }
    if rows.is_empty() {
        return Err(Failure::Input(format!("no reports found under {}", dir.display())));
    }
    print!("{}", aggregate_table(&rows));
    Ok(())
}
