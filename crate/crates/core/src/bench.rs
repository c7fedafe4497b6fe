//! Per-layer benchmark reports over k-fold cross-validation.
//!
//! Every mode is trained on the same folds with the same per-fold seeds.
//! Accuracy at layer `ℓ` comes from a softmax head fit on the `ℓ`-th layer's
//! features. Times are wall-clock seconds spent in layer training; data
//! loading and evaluation are excluded. Iterations count epochs.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{kfold_split, Dataset};
use crate::dbn::{train_dbn, DbnModel, Mode, TrainConfig, TrainingData};
use crate::error::{Error, Result};
use crate::rbm::BinaryVector;

pub const REPORT_COLUMNS: [&str; 8] = [
    "Layer",
    "Ave.",
    "Std.",
    "Max.",
    "Min.",
    "No. sorting process",
    "Iterations",
    "Time",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRow {
    pub layer: usize,
    pub ave: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
    /// Mean sort moves across the folds that built this layer.
    pub sort_moves: f64,
    /// Mean epochs across the folds that built this layer.
    pub iterations: f64,
    /// Mean seconds across the folds that built this layer.
    pub time_secs: f64,
    /// Folds that built this layer.
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub machine: String,
    pub folds: usize,
    pub layers: Vec<LayerRow>,
}

impl RunReport {
    pub fn total_time(&self) -> f64 {
        self.layers.iter().map(|l| l.time_secs).sum()
    }

    pub fn total_moves(&self) -> f64 {
        self.layers.iter().map(|l| l.sort_moves).sum()
    }

    pub fn total_iterations(&self) -> f64 {
        self.layers.iter().map(|l| l.iterations).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# {} | folds: {} | machine: {} | Iterations = epochs, Time = seconds\n",
            self.mode, self.folds, self.machine
        );
        out += &format!(
            "{:>5} {:>7} {:>7} {:>7} {:>7} {:>20} {:>10} {:>10}\n",
            REPORT_COLUMNS[0],
            REPORT_COLUMNS[1],
            REPORT_COLUMNS[2],
            REPORT_COLUMNS[3],
            REPORT_COLUMNS[4],
            REPORT_COLUMNS[5],
            REPORT_COLUMNS[6],
            REPORT_COLUMNS[7]
        );
        for l in &self.layers {
            out += &format!(
                "{:>5} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>20.1} {:>10.1} {:>10.3}\n",
                l.layer, l.ave, l.std, l.max, l.min, l.sort_moves, l.iterations, l.time_secs
            );
        }
        out += &format!("{:>5} {:>73.3}\n", "Total", self.total_time());
        out
    }

    /// Rows of the CSV form, prefixed by the mode name.
    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .layers
            .iter()
            .map(|l| {
                vec![
                    self.mode.to_string(),
                    l.layer.to_string(),
                    format!("{:.6}", l.ave),
                    format!("{:.6}", l.std),
                    format!("{:.6}", l.max),
                    format!("{:.6}", l.min),
                    format!("{:.2}", l.sort_moves),
                    format!("{:.2}", l.iterations),
                    format!("{:.6}", l.time_secs),
                ]
            })
            .collect();
        let mut total = vec![self.mode.to_string(), "Total".to_string()];
        total.extend(std::iter::repeat_n(String::new(), 6));
        total.push(format!("{:.6}", self.total_time()));
        rows.push(total);
        rows
    }
}

/// Writes reports as one RFC-4180 CSV with a leading `Model` column.
pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["Model"];
    header.extend(REPORT_COLUMNS);
    w.write_record(&header)?;
    for r in reports {
        for row in r.csv_rows() {
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

/// `(1 - t_other / t_base) · 100`.
pub fn time_reduction(t_base: f64, t_other: f64) -> f64 {
    (1.0 - t_other / t_base) * 100.0
}

pub fn machine_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{}, {cpus} logical CPUs", std::env::consts::OS, std::env::consts::ARCH)
}

/// Measurements of one layer in one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMeasure {
    pub accuracy: f64,
    pub sort_moves: usize,
    pub iterations: usize,
    pub time_secs: f64,
}

/// Per-layer accuracy on `(test_rows, test_labels)` with heads fit on the
/// training rows, plus each layer's training record.
pub fn measure_layers(
    model: &DbnModel,
    train_rows: &[BinaryVector],
    train_labels: &[usize],
    test_rows: &[BinaryVector],
    test_labels: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<LayerMeasure>> {
    let depth = model.layers.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=depth)
        .map(|d| {
            let accuracy = if d == depth {
                model.accuracy(test_rows, test_labels)?
            } else {
                model
                    .truncated(d, train_rows, train_labels, cfg, &mut rng)?
                    .accuracy(test_rows, test_labels)?
            };
            let stats = &model.layers[d - 1].stats;
            Ok(LayerMeasure {
                accuracy,
                sort_moves: stats.sort_moves,
                iterations: stats.iterations,
                time_secs: stats.elapsed.as_secs_f64(),
            })
        })
        .collect()
}

/// Folds a set of per-fold measurements into report rows.
pub fn summarize(mode: Mode, per_fold: &[Vec<LayerMeasure>]) -> RunReport {
    let depth = per_fold.iter().map(Vec::len).max().unwrap_or(0);
    let layers = (0..depth)
        .map(|d| {
            let ms: Vec<&LayerMeasure> = per_fold.iter().filter_map(|f| f.get(d)).collect();
            let n = ms.len() as f64;
            let acc: Vec<f64> = ms.iter().map(|m| m.accuracy).collect();
            let ave = acc.iter().sum::<f64>() / n;
            let var = acc.iter().map(|a| (a - ave).powi(2)).sum::<f64>() / n;
            LayerRow {
                layer: d + 1,
                ave,
                std: var.sqrt(),
                max: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                min: acc.iter().copied().fold(f64::INFINITY, f64::min),
                sort_moves: ms.iter().map(|m| m.sort_moves as f64).sum::<f64>() / n,
                iterations: ms.iter().map(|m| m.iterations as f64).sum::<f64>() / n,
                time_secs: ms.iter().map(|m| m.time_secs).sum::<f64>() / n,
                folds: ms.len(),
            }
        })
        .collect();
    RunReport {
        mode,
        machine: machine_descriptor(),
        folds: per_fold.len(),
        layers,
    }
}

/// Seed used for fold `f` of a run seeded with `seed`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64)
}

/// Cross-validates one mode.
pub fn run_mode(ds: &Dataset, base: &TrainConfig, mode: Mode, folds: usize, seed: u64) -> Result<RunReport> {
    let cfg = base.clone().with_mode(mode);
    let splits = kfold_split(ds.len(), folds, seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for (f, split) in splits.iter().enumerate() {
        let train = ds.subset(&split.train);
        let test = ds.subset(&split.test);
        let data = TrainingData::from_dataset(&train)?;
        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed(seed, f));
        let model = train_dbn(&data, &cfg, &mut rng)?;
        per_fold.push(measure_layers(
            &model,
            &data.rows,
            &data.labels,
            &test.visible_rows(),
            &test.labels(),
            &cfg,
            fold_seed(seed, f) ^ 1,
        )?);
    }
    Ok(summarize(mode, &per_fold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub reports: Vec<RunReport>,
}

impl BenchOutcome {
    /// Time reduction of every later mode relative to the first one.
    pub fn reductions(&self) -> Vec<(Mode, Mode, f64)> {
        let Some(base) = self.reports.first() else {
            return Vec::new();
        };
        self.reports[1..]
            .iter()
            .map(|r| (base.mode, r.mode, time_reduction(base.total_time(), r.total_time())))
            .collect()
    }

    pub fn reduction_lines(&self) -> Vec<String> {
        self.reductions()
            .into_iter()
            .map(|(base, other, pct)| format!("time reduction of {other} vs {base}: {pct:.1}%"))
            .collect()
    }
}

pub fn run_bench(ds: &Dataset, base: &TrainConfig, modes: &[Mode], folds: usize, seed: u64) -> Result<BenchOutcome> {
    if modes.len() < 2 {
        return Err(Error::Config("a benchmark needs at least two modes".into()));
    }
    let reports = modes
        .iter()
        .map(|&m| run_mode(ds, base, m, folds, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchOutcome { reports })
}
