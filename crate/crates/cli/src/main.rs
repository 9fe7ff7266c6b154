//! `ppghb`: batch front end for hemoglobin estimation from four-wavelength PPG.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ppghb::config::PipelineConfig;
use ppghb::pipeline;
use ppghb::Error;

#[derive(Parser, Debug)]
#[command(name = "ppghb", version, about = "Hemoglobin estimation and anemia screening from multiwavelength PPG")]
struct Cli {
    /// JSON run configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the split, boosting and synthetic-data seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Overrides the metadata CSV path.
    #[arg(long, global = true)]
    metadata: Option<PathBuf>,

    /// Overrides the directory holding per-subject signal CSVs.
    #[arg(long, global = true)]
    signals_dir: Option<PathBuf>,

    /// Log stage progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Raw and filtered SQI/SNR per channel window.
    Quality,
    /// Segment feature table and cleaning report.
    Features,
    /// Subject-level aggregation.
    Aggregate,
    /// Subject-wise split and model fitting.
    Train,
    /// Predict every subject with the saved model.
    Predict,
    /// Shapley attributions, global importance and dependence data.
    Explain,
    /// WHO-threshold screening and offset sensitivity.
    Screen,
    /// Metrics, scatter and Bland-Altman data.
    Evaluate,
    /// Write a synthetic corpus to the configured data paths.
    Synth,
    /// Every stage from quality through evaluate.
    Pipeline,
}

/// Error class and exit code.
fn classify(err: &Error) -> (&'static str, u8) {
    match err {
        Error::MissingInput(_) => ("missing-input", 2),
        Error::MalformedCsv { .. } | Error::Csv(_) => ("malformed-csv", 3),
        Error::InvalidConfig(_) | Error::InvalidSynthConfig(_) => ("config", 4),
        _ => ("runtime", 1),
    }
}

fn load_config(cli: &Cli) -> ppghb::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ppghb::io::read_json::<PipelineConfig>(path).map_err(|e| match e {
            Error::Json { path, source } => Error::InvalidConfig(format!("{}: {source}", path.display())),
            other => other,
        })?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.split.seed = seed;
        cfg.gbm.seed = seed;
        cfg.synth.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(p) = &cli.metadata {
        cfg.data.metadata = p.clone();
    }
    if let Some(p) = &cli.signals_dir {
        cfg.data.signals_dir = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> ppghb::Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Synth => {
            let n = pipeline::stage_synth(&cfg)?;
            println!(
                "wrote {n} synthetic subjects to {} and {}",
                cfg.data.metadata.display(),
                cfg.data.signals_dir.display()
            );
        }
        Command::Quality => {
            let q = pipeline::stage_quality(&cfg)?;
            println!(
                "{} windows; filtered SQI >= raw in {:.1}%; mean SQI {:.3} -> {:.3}",
                q.summary.n_windows,
                100.0 * q.summary.sqi_improved_fraction,
                q.summary.mean_raw_sqi,
                q.summary.mean_filtered_sqi
            );
        }
        Command::Features => {
            let f = pipeline::stage_features(&cfg)?;
            println!(
                "{} segment rows; {} columns kept, {} dropped",
                f.cleaned.rows.len(),
                f.cleaned.columns.len(),
                f.report.dropped.len()
            );
        }
        Command::Aggregate => {
            let s = pipeline::stage_aggregate(&cfg)?;
            println!("{} subjects, {} model inputs", s.subjects.len(), s.model_feature_names().len());
        }
        Command::Train => {
            let run = pipeline::stage_train(&cfg)?;
            println!(
                "{} train / {} test subjects; final train RMSE {:.3} g/L",
                run.split.train.len(),
                run.split.test.len(),
                run.output.rmse_trace.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Predict => {
            let rows = pipeline::stage_predict(&cfg)?;
            println!("predicted {} subjects", rows.len());
        }
        Command::Explain => {
            let out = pipeline::stage_explain(&cfg)?;
            println!("explained {} subjects", out.subjects.len());
        }
        Command::Screen => {
            let (results, _) = pipeline::stage_screen(&cfg)?;
            let anemic = results.iter().filter(|r| r.status.is_anemic()).count();
            println!("screened {} subjects, {anemic} anemic", results.len());
        }
        Command::Evaluate => print_report(&pipeline::stage_evaluate(&cfg)?),
        Command::Pipeline => print_report(&pipeline::run_pipeline(&cfg)?),
    }
    Ok(())
}

fn print_report(report: &pipeline::EvaluationReport) {
    println!("{}", serde_json::to_string(report).expect("report serializes"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = classify(&err);
            let msg = err.to_string().replace(['\n', '\r'], " ");
            eprintln!("error[{kind}]: {msg}");
            ExitCode::from(code)
        }
    }
}
