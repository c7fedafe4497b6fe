//! The `adbn` command line: `train`, `eval`, `bench` and `synth`.
//!
//! Exit codes: 0 on success, 2 for usage, config or data errors, 3 for
//! training faults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{measure_layers, run_bench, summarize, write_csv};
use crate::data::{load_dataset, synth_multimodal, write_table, Dataset, InputSpec};
use crate::dbn::{train_dbn, DbnModel, Mode, TrainConfig, TrainingData};
use crate::error::{Error, Result};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TRAINING: u8 = 3;

/// Contents of a `--config` JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Modes compared by `bench`, first one is the baseline.
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub folds: usize,
    pub train: TrainConfig,
    pub input: InputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Multimodal,
            modes: vec![Mode::Traditional, Mode::Adaptive, Mode::Multimodal],
            seed: 0,
            folds: 10,
            train: TrainConfig::default(),
            input: InputSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.train.validate()?;
        cfg.input.schema.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "adbn", version, about = "Adaptive DBN training with multi-modal block arrangement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it as JSON.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Print the report as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate a trained model on labelled data.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Cross-validate several modes and print per-layer reports.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        /// Restrict to a single comparison against this mode.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        csv: bool,
    },
    /// Write a synthetic multi-modal dataset as CSV.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TrainingFault { .. } | Error::Internal(_) => EXIT_TRAINING,
        _ => EXIT_USAGE,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, data, out, seed, mode, csv } => {
            cmd_train(&config, &data, &out, seed, mode, csv)
        }
        Command::Eval { model, data } => cmd_eval(&model, &data),
        Command::Bench { config, data, seed, folds, mode, csv } => cmd_bench(&config, &data, seed, folds, mode, csv),
        Command::Synth { out, n, noise, seed } => {
            let ds = synth_multimodal(n, noise, seed)?;
            write_table(&ds, &InputSpec::default(), &out)?;
            println!("wrote {} records to {}", ds.len(), out.display());
            Ok(())
        }
    }
}

fn load_data(path: &Path, spec: &InputSpec, labels: Option<&[String]>) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::invalid(format!("data file {} does not exist", path.display())));
    }
    let ds = load_dataset(path, spec, labels)?;
    if ds.is_empty() {
        return Err(Error::invalid(format!("{} contains no records", path.display())));
    }
    Ok(ds)
}

pub fn cmd_train(
    config: &Path,
    data: &Path,
    out: &Path,
    seed: Option<u64>,
    mode: Option<Mode>,
    csv: bool,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let mode = mode.unwrap_or(cfg.mode);
    let seed = seed.unwrap_or(cfg.seed);
    let ds = load_data(data, &cfg.input, None)?;
    let train_cfg = cfg.train.clone().with_mode(mode);
    let mut training = TrainingData::from_dataset(&ds)?;
    training.input = Some(cfg.input.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = train_dbn(&training, &train_cfg, &mut rng)?;
    model.save(out)?;
    let measures = measure_layers(
        &model,
        &training.rows,
        &training.labels,
        &training.rows,
        &training.labels,
        &train_cfg,
        seed ^ 1,
    )?;
    let report = summarize(mode, &[measures]);
    if csv {
        write_csv(&[report], std::io::stdout().lock())?;
    } else {
        print!("{}", report.to_text());
        println!("model written to {} (accuracy columns are on training data)", out.display());
    }
    Ok(())
}

pub fn cmd_eval(model_path: &Path, data: &Path) -> Result<()> {
    let model = DbnModel::load(model_path)?;
    let spec = model.input.clone().unwrap_or_default();
    let ds = load_data(data, &spec, Some(&model.class_labels))?;
    if ds.n_visible() != model.n_visible() {
        return Err(Error::DimensionMismatch {
            what: "data width vs model input",
            expected: model.n_visible(),
            got: ds.n_visible(),
        });
    }
    let n_classes = model.class_count();
    let mut correct = vec![0usize; n_classes];
    let mut total = vec![0usize; n_classes];
    for rec in &ds.records {
        let pred = model.infer(&rec.visible())?;
        total[rec.label] += 1;
        correct[rec.label] += usize::from(pred.label == rec.label);
    }
    let hits: usize = correct.iter().sum();
    println!("accuracy: {:.4} ({hits}/{})", hits as f64 / ds.len() as f64, ds.len());
    for (c, name) in model.class_labels.iter().enumerate() {
        if total[c] > 0 {
            println!(
                "class {name}: {:.4} ({}/{})",
                correct[c] as f64 / total[c] as f64,
                correct[c],
                total[c]
            );
        }
    }
    Ok(())
}

pub fn cmd_bench(
    config: &Path,
    data: &Path,
    seed: Option<u64>,
    folds: Option<usize>,
    mode: Option<Mode>,
    csv: bool,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let modes = match mode {
        Some(m) if cfg.modes.first() != Some(&m) => vec![cfg.modes.first().copied().unwrap_or(Mode::Traditional), m],
        _ => cfg.modes.clone(),
    };
    if modes.len() < 2 {
        return Err(Error::Config("bench needs at least two modes in `modes`".into()));
    }
    let ds = load_data(data, &cfg.input, None)?;
    let outcome = run_bench(
        &ds,
        &cfg.train,
        &modes,
        folds.unwrap_or(cfg.folds),
        seed.unwrap_or(cfg.seed),
    )?;
    if csv {
        write_csv(&outcome.reports, std::io::stdout().lock())?;
        for line in outcome.reduction_lines() {
            eprintln!("{line}");
        }
    } else {
        for r in &outcome.reports {
            println!("{}", r.to_text());
        }
        for line in outcome.reduction_lines() {
            println!("{line}");
        }
    }
    Ok(())
}
