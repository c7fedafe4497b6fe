//! Greedy layer-wise training of an adaptive DBN.
//!
//! Each layer runs the same epoch loop: minibatch CD updates, a WD update,
//! at most one structural edit (generation before annihilation), then a
//! sorting pass over the visible blocks. Layers are stacked while the
//! layer-generation rule holds, and a softmax head is fit on the top-layer
//! hidden probabilities.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{
    apply_annihilation, apply_generation, neuron_annihilation_check, neuron_generation_check, GrowthConfig,
    WdTracker,
};
use crate::arrangement::{
    candidate_blocks, downward_projection, pseudo_blocks, sort_step, stable_fired_hidden, BlockLayout, LookupTable,
};
use crate::data::{Dataset, InputSpec};
use crate::error::{check_len, Error, Result};
use crate::rbm::{apply_gradient, cd_gradient_dense, BinaryVector, CdMode, RbmParams};

pub const MODEL_VERSION: &str = "adaptive-dbn/1";

/// The three training regimes compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Fixed structure, fixed depth, no sorting.
    Traditional,
    /// Neuron generation/annihilation and layer generation.
    Adaptive,
    /// Adaptive plus visible-block sorting.
    Multimodal,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Traditional => "Traditional DBN",
            Mode::Adaptive => "Adaptive DBN",
            Mode::Multimodal => "Multi-Modal Learning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SortingConfig {
    pub enabled: bool,
    /// Fraction of a block's units that must fire for it to be a candidate.
    pub rho: f64,
    /// Neighborhood radius in layout slots.
    pub radius: usize,
    /// Pseudo-block length above the first layer; 0 means the image row length.
    pub upper_block_len: usize,
    /// Trailing pseudo-blocks tagged CSV above the first layer.
    pub upper_csv_blocks: usize,
}

impl Default for SortingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rho: 1.0,
            radius: 1,
            upper_block_len: 0,
            upper_csv_blocks: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub initial_hidden: usize,
    pub max_layers: usize,
    /// Layers always built before the layer-generation rule is consulted.
    pub min_layers: usize,
    /// Epoch cap per layer.
    pub epoch_cap: usize,
    pub cd_k: usize,
    pub cd_mode: CdMode,
    pub init_std: f64,
    pub growth_enabled: bool,
    pub growth: GrowthConfig,
    pub sorting: SortingConfig,
    /// Layer generation needs final reconstruction error above this.
    pub err_floor: f64,
    /// Layer generation needs total WD at convergence above this.
    pub wd_floor: f64,
    /// Stop when reconstruction error improves by less than this fraction
    /// over `stop_window` epochs. Zero or less disables early stopping.
    pub stop_tolerance: f64,
    pub stop_window: usize,
    pub head: HeadConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            batch_size: 100,
            initial_hidden: 300,
            max_layers: 6,
            min_layers: 1,
            epoch_cap: 500,
            cd_k: 1,
            cd_mode: CdMode::Sampled,
            init_std: 0.01,
            growth_enabled: true,
            growth: GrowthConfig::default(),
            sorting: SortingConfig::default(),
            err_floor: 0.05,
            wd_floor: 0.01,
            stop_tolerance: 1e-4,
            stop_window: 10,
            head: HeadConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Switches the feature flags that distinguish the three regimes.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        match mode {
            Mode::Traditional => {
                self.growth_enabled = false;
                self.sorting.enabled = false;
                self.min_layers = self.max_layers;
            }
            Mode::Adaptive => {
                self.growth_enabled = true;
                self.sorting.enabled = false;
            }
            Mode::Multimodal => {
                self.growth_enabled = true;
                self.sorting.enabled = true;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("initial_hidden", self.initial_hidden),
            ("max_layers", self.max_layers),
            ("epoch_cap", self.epoch_cap),
            ("cd_k", self.cd_k),
            ("stop_window", self.stop_window),
            ("head.epochs", self.head.epochs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !self.head.lr.is_finite() || self.head.lr <= 0.0 {
            return bad("head.lr must be positive".into());
        }
        if !(self.sorting.rho > 0.0 && self.sorting.rho <= 1.0) {
            return bad(format!("sorting.rho must lie in (0, 1], got {}", self.sorting.rho));
        }
        if self.sorting.radius == 0 {
            return bad("sorting.radius must be positive".into());
        }
        if self.init_std.is_nan() || self.init_std < 0.0 {
            return bad("init_std must be non-negative".into());
        }
        self.growth.validate(if self.growth_enabled { self.initial_hidden } else { 0 })
    }
}

/// Per-layer training record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    /// Epochs run before termination.
    pub iterations: usize,
    /// Total block relocations by the sorter.
    pub sort_moves: usize,
    pub generated: usize,
    pub annihilated: usize,
    pub final_recon_error: f64,
    pub final_total_wd: f64,
    /// Reconstruction error after each epoch.
    #[serde(skip)]
    pub recon_trace: Vec<f64>,
    /// Hidden count after each epoch.
    #[serde(skip)]
    pub hidden_trace: Vec<usize>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnLayer {
    pub params: RbmParams,
    pub table: LookupTable,
    pub layout: BlockLayout,
    pub stats: LayerStats,
}

impl DbnLayer {
    /// Hidden probabilities for an input given in original order.
    pub fn upward(&self, input: &BinaryVector) -> Result<Vec<f64>> {
        let arranged = self.table.arrange(input.as_slice())?;
        Ok(self.params.hidden_probs(&widen(&arranged)))
    }
}

fn widen(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| f64::from(b)).collect()
}

/// Trains one adaptive RBM layer.
///
/// `rows` are in original order; `layout`/`table` give the starting
/// arrangement. `init` overrides the random initial parameters (it must be
/// expressed in the arranged order).
pub fn train_layer<R: Rng + ?Sized>(
    rows: &[BinaryVector],
    layout: BlockLayout,
    table: LookupTable,
    init: Option<RbmParams>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<DbnLayer> {
    cfg.validate()?;
    let Some(first) = rows.first() else {
        return Err(Error::invalid("cannot train a layer on an empty dataset"));
    };
    let n_visible = first.len();
    check_len("look-up table", n_visible, table.len())?;
    check_len("block layout", n_visible, layout.n_positions())?;
    let started = Instant::now();

    let mut layout = layout;
    let mut table = table;
    let mut params = match init {
        Some(p) => {
            check_len("initial parameters", n_visible, p.n_visible())?;
            p
        }
        None => RbmParams::random(n_visible, cfg.initial_hidden, cfg.init_std, rng)?,
    };
    let mut arranged: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            check_len("training row", n_visible, r.len())?;
            Ok(widen(&table.arrange(r.as_slice())?))
        })
        .collect::<Result<_>>()?;
    let mut tracker = WdTracker::new(n_visible, params.n_hidden(), cfg.growth.window);
    let mut stats = LayerStats::default();
    let mut order: Vec<usize> = (0..rows.len()).collect();

    for epoch in 1..=cfg.epoch_cap {
        let epoch_start = params.clone();
        order.shuffle(rng);
        let mut last_batch: &[usize] = &[];
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Vec<f64>> = chunk.iter().map(|&i| &arranged[i]).collect();
            let grad = cd_gradient_dense(&batch, &params, cfg.cd_k, cfg.cd_mode, rng)?;
            apply_gradient(&mut params, &grad, cfg.lr).map_err(|e| at_epoch(e, epoch))?;
            last_batch = chunk;
        }

        let (recon, means) = epoch_summary(&arranged, &params);
        if !recon.is_finite() {
            return Err(Error::fault(Some(epoch), "non-finite reconstruction error"));
        }
        tracker.update_wd(&epoch_start, &params).map_err(|e| at_epoch(e, epoch))?;
        tracker.record_activation(&means)?;

        if cfg.growth_enabled && tracker.is_full() {
            if let Some(parent) = neuron_generation_check(&tracker, &cfg.growth) {
                apply_generation(&mut params, &mut tracker, parent, &cfg.growth, rng)?;
                stats.generated += 1;
            } else {
                let victims = neuron_annihilation_check(&tracker.mean_activation(), tracker.wd(), &cfg.growth);
                if !victims.is_empty() {
                    apply_annihilation(&mut params, &mut tracker, &victims)?;
                    stats.annihilated += victims.len();
                }
            }
        }

        if cfg.sorting.enabled && tracker.is_full() {
            let last: Vec<&Vec<f64>> = last_batch.iter().map(|&i| &arranged[i]).collect();
            let h_state = fired_hidden(&last, &params);
            let stable = stable_fired_hidden(&h_state, tracker.wd(), cfg.growth.wd_stable)?;
            for j in stable {
                let pattern = downward_projection(j, &params)?;
                let candidates = candidate_blocks(&pattern, &layout, cfg.sorting.rho)?;
                let previous = table.clone();
                let moves = sort_step(&mut layout, &mut table, &candidates, cfg.sorting.radius)?;
                if moves > 0 {
                    let source = previous.transition_to(&table)?;
                    params.permute_visible(&source)?;
                    tracker.permute_visible(&source)?;
                    for row in &mut arranged {
                        *row = source.iter().map(|&s| row[s]).collect();
                    }
                    stats.sort_moves += moves;
                }
            }
        }

        stats.iterations = epoch;
        stats.recon_trace.push(recon);
        stats.hidden_trace.push(params.n_hidden());
        if converged(&stats.recon_trace, cfg) {
            break;
        }
    }

    stats.final_recon_error = stats.recon_trace.last().copied().unwrap_or_default();
    stats.final_total_wd = tracker.total_wd();
    stats.elapsed = started.elapsed();
    Ok(DbnLayer { params, table, layout, stats })
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::TrainingFault { epoch: None, reason } => Error::fault(Some(epoch), reason),
        other => other,
    }
}

/// Mean reconstruction error and mean hidden activation over all rows.
fn epoch_summary(rows: &[Vec<f64>], params: &RbmParams) -> (f64, Vec<f64>) {
    let mut err = 0.0;
    let mut means = vec![0.0; params.n_hidden()];
    for v in rows {
        let ph = params.hidden_probs(v);
        let r = params.visible_probs(&ph);
        err += v.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        for (m, p) in means.iter_mut().zip(&ph) {
            *m += p;
        }
    }
    let n = rows.len() as f64;
    means.iter_mut().for_each(|m| *m /= n);
    (err / (n * params.n_visible() as f64), means)
}

/// Hidden units that fire (probability > 0.5) on at least one row.
fn fired_hidden(rows: &[&Vec<f64>], params: &RbmParams) -> BinaryVector {
    let mut fired = vec![false; params.n_hidden()];
    for v in rows {
        for (f, p) in fired.iter_mut().zip(params.hidden_probs(v)) {
            *f |= p > 0.5;
        }
    }
    BinaryVector::from_bools(fired)
}

fn converged(trace: &[f64], cfg: &TrainConfig) -> bool {
    let n = trace.len();
    if cfg.stop_tolerance <= 0.0 || n <= cfg.stop_window {
        return false;
    }
    let before = trace[n - 1 - cfg.stop_window];
    let now = trace[n - 1];
    before <= 0.0 || (before - now) / before < cfg.stop_tolerance
}

/// Whether another layer should be stacked on top of `layers_built` layers.
pub fn layer_generation_check(stats: &LayerStats, layers_built: usize, cfg: &TrainConfig) -> bool {
    if layers_built >= cfg.max_layers {
        return false;
    }
    if layers_built < cfg.min_layers {
        return true;
    }
    stats.final_recon_error > cfg.err_floor && stats.final_total_wd > cfg.wd_floor
}

/// Linear softmax classifier over top-layer features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    pub n_features: usize,
    pub n_classes: usize,
    /// Row-major `n_classes × n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxHead {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        Self {
            n_features,
            n_classes,
            weights: vec![0.0; n_features * n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("head features", self.n_features, x.len())?;
        let logits: Vec<f64> = (0..self.n_classes)
            .map(|c| {
                let row = &self.weights[c * self.n_features..(c + 1) * self.n_features];
                self.bias[c] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / z).collect())
    }

    /// Minibatch SGD on cross-entropy, from zero weights.
    pub fn fit<R: Rng + ?Sized>(
        features: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        cfg: &HeadConfig,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_len("labels", features.len(), labels.len())?;
        let Some(first) = features.first() else {
            return Err(Error::invalid("cannot fit a classifier on no data"));
        };
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {n_classes} classes")));
        }
        let nf = first.len();
        let mut head = Self::zeros(nf, n_classes);
        let mut order: Vec<usize> = (0..features.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch_size.max(1)) {
                let mut gw = vec![0.0; head.weights.len()];
                let mut gb = vec![0.0; n_classes];
                for &i in chunk {
                    let p = head.probabilities(&features[i])?;
                    for c in 0..n_classes {
                        let err = f64::from(u8::from(labels[i] == c)) - p[c];
                        gb[c] += err;
                        for (g, x) in gw[c * nf..(c + 1) * nf].iter_mut().zip(&features[i]) {
                            *g += err * x;
                        }
                    }
                }
                let step = cfg.lr / chunk.len() as f64;
                head.weights.iter_mut().zip(&gw).for_each(|(w, g)| *w += step * g);
                head.bias.iter_mut().zip(&gb).for_each(|(b, g)| *b += step * g);
            }
        }
        Ok(head)
    }
}

/// Index of the largest probability, lowest index on ties.
pub fn argmax(probs: &[f64]) -> usize {
    probs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > probs[best] { i } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnModel {
    pub version: String,
    /// How raw files were binarized, when the model came from files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    pub class_labels: Vec<String>,
    pub layers: Vec<DbnLayer>,
    pub head: SoftmaxHead,
}

impl DbnModel {
    pub fn n_visible(&self) -> usize {
        self.layers[0].params.n_visible()
    }

    pub fn class_count(&self) -> usize {
        self.head.n_classes
    }

    /// Top-layer hidden probabilities after the first `depth` layers. Each
    /// layer's look-up table is applied to its input first.
    pub fn features_at(&self, raw: &BinaryVector, depth: usize) -> Result<Vec<f64>> {
        check_len("model input", self.n_visible(), raw.len())?;
        let depth = depth.clamp(1, self.layers.len());
        let mut input = raw.clone();
        let mut probs = Vec::new();
        for (k, layer) in self.layers[..depth].iter().enumerate() {
            probs = layer.upward(&input)?;
            if k + 1 < depth {
                input = BinaryVector::threshold(&probs);
            }
        }
        Ok(probs)
    }

    pub fn features(&self, raw: &BinaryVector) -> Result<Vec<f64>> {
        self.features_at(raw, self.layers.len())
    }

    pub fn infer(&self, raw: &BinaryVector) -> Result<Prediction> {
        let probabilities = self.head.probabilities(&self.features(raw)?)?;
        Ok(Prediction {
            label: argmax(&probabilities),
            probabilities,
        })
    }

    /// Fraction of `rows` whose predicted label matches.
    pub fn accuracy(&self, rows: &[BinaryVector], labels: &[usize]) -> Result<f64> {
        check_len("labels", rows.len(), labels.len())?;
        if rows.is_empty() {
            return Err(Error::invalid("accuracy of an empty dataset is undefined"));
        }
        let mut correct = 0;
        for (row, &label) in rows.iter().zip(labels) {
            correct += usize::from(self.infer(row)?.label == label);
        }
        Ok(correct as f64 / rows.len() as f64)
    }

    /// The first `depth` layers with a freshly fit head.
    pub fn truncated<R: Rng + ?Sized>(
        &self,
        depth: usize,
        rows: &[BinaryVector],
        labels: &[usize],
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<DbnModel> {
        let depth = depth.clamp(1, self.layers.len());
        let mut model = DbnModel {
            layers: self.layers[..depth].to_vec(),
            ..self.clone()
        };
        let feats = rows.iter().map(|r| model.features(r)).collect::<Result<Vec<_>>>()?;
        model.head = SoftmaxHead::fit(&feats, labels, self.class_count(), &cfg.head, cfg.batch_size, rng)?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: DbnModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::invalid(format!("unsupported model version {:?}", self.version)));
        }
        if self.layers.is_empty() {
            return Err(Error::invalid("model has no layers"));
        }
        let mut width = self.layers[0].params.n_visible();
        for layer in &self.layers {
            check_len("layer input", width, layer.params.n_visible())?;
            check_len("layer look-up table", width, layer.table.len())?;
            width = layer.params.n_hidden();
        }
        check_len("head features", width, self.head.n_features)?;
        check_len("class labels", self.head.n_classes, self.class_labels.len())?;
        check_len("head weights", self.head.n_features * self.head.n_classes, self.head.weights.len())?;
        check_len("head bias", self.head.n_classes, self.head.bias.len())
    }
}

/// Everything the stack trainer needs about its input.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub rows: Vec<BinaryVector>,
    pub labels: Vec<usize>,
    pub class_labels: Vec<String>,
    pub layout: BlockLayout,
    pub table: LookupTable,
    /// Length of one image row in bits; sizes pseudo-blocks above layer 1.
    pub row_block_len: usize,
    /// Optional first-layer parameters in arranged order.
    pub first_layer_init: Option<RbmParams>,
    pub input: Option<InputSpec>,
}

impl TrainingData {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let (layout, table) = ds.initial_layout()?;
        Ok(Self {
            rows: ds.visible_rows(),
            labels: ds.labels(),
            class_labels: ds.class_labels.clone(),
            layout,
            table,
            row_block_len: ds.image_width * ds.channels,
            first_layer_init: None,
            input: None,
        })
    }
}

/// Greedy stack training followed by the softmax head.
pub fn train_dbn<R: Rng + ?Sized>(data: &TrainingData, cfg: &TrainConfig, rng: &mut R) -> Result<DbnModel> {
    cfg.validate()?;
    check_len("labels", data.rows.len(), data.labels.len())?;
    let mut layers: Vec<DbnLayer> = Vec::new();
    let mut rows = data.rows.clone();
    let block_len = match cfg.sorting.upper_block_len {
        0 => data.row_block_len.max(1),
        n => n,
    };
    loop {
        let (layout, table, init) = match layers.last() {
            None => (data.layout.clone(), data.table.clone(), data.first_layer_init.clone()),
            Some(prev) => {
                let (layout, table) = pseudo_blocks(prev.params.n_hidden(), block_len, cfg.sorting.upper_csv_blocks)?;
                (layout, table, None)
            }
        };
        let layer = train_layer(&rows, layout, table, init, cfg, rng)?;
        let more = layer_generation_check(&layer.stats, layers.len() + 1, cfg);
        if more {
            rows = rows
                .iter()
                .map(|r| layer.upward(r).map(|p| BinaryVector::threshold(&p)))
                .collect::<Result<_>>()?;
        }
        layers.push(layer);
        if !more {
            break;
        }
    }
    let mut model = DbnModel {
        version: MODEL_VERSION.into(),
        input: data.input.clone(),
        class_labels: data.class_labels.clone(),
        layers,
        head: SoftmaxHead::zeros(1, 1),
    };
    let feats = data.rows.iter().map(|r| model.features(r)).collect::<Result<Vec<_>>>()?;
    model.head = SoftmaxHead::fit(&feats, &data.labels, data.class_labels.len(), &cfg.head, cfg.batch_size, rng)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::bars_and_stripes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            lr: 0.1,
            batch_size: 10,
            initial_hidden: 8,
            init_std: 0.1,
            epoch_cap: 200,
            stop_tolerance: 0.0,
            max_layers: 1,
            head: HeadConfig { lr: 0.5, epochs: 50 },
            ..TrainConfig::default()
        }
        .with_mode(Mode::Traditional)
    }

    fn identity_layout(n: usize) -> (BlockLayout, LookupTable) {
        pseudo_blocks(n, n, 0).unwrap()
    }

    #[test]
    fn mode_flags() {
        let t = TrainConfig::default().with_mode(Mode::Traditional);
        assert!(!t.growth_enabled && !t.sorting.enabled);
        assert_eq!(t.min_layers, t.max_layers);
        let a = TrainConfig::default().with_mode(Mode::Adaptive);
        assert!(a.growth_enabled && !a.sorting.enabled);
        let m = TrainConfig::default().with_mode(Mode::Multimodal);
        assert!(m.growth_enabled && m.sorting.enabled);
    }

    #[test]
    fn layer_generation_rules() {
        let cfg = TrainConfig { max_layers: 3, ..TrainConfig::default() };
        let busy = LayerStats { final_recon_error: 0.2, final_total_wd: 1.0, ..LayerStats::default() };
        assert!(!layer_generation_check(&busy, 3, &cfg));
        assert!(layer_generation_check(&busy, 1, &cfg));
        let done = LayerStats { final_recon_error: 0.0, ..busy.clone() };
        assert!(!layer_generation_check(&done, 1, &cfg));
        let forced = TrainConfig { min_layers: 2, ..cfg };
        assert!(layer_generation_check(&done, 1, &forced));
    }

    #[test]
    fn plain_cd_reduces_reconstruction_error() {
        let rows = bars_and_stripes(4);
        let (layout, table) = identity_layout(16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = train_layer(&rows, layout, table, None, &small_cfg(), &mut rng).unwrap();
        let trace = &layer.stats.recon_trace;
        assert!(trace.last().unwrap() < &trace[0]);
        assert_eq!(layer.stats.sort_moves, 0);
        assert_eq!(layer.params.n_hidden(), 8);
    }

    #[test]
    fn faults_are_stamped_with_epoch() {
        let e = at_epoch(Error::fault(None, "boom"), 7);
        assert!(matches!(e, Error::TrainingFault { epoch: Some(7), .. }));
        assert_eq!(e.to_string(), "training fault at epoch 7: boom");
        let bad = TrainConfig { lr: f64::INFINITY, ..small_cfg() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn softmax_head_probabilities_and_ties() {
        let head = SoftmaxHead::zeros(3, 4);
        let p = head.probabilities(&[1.0, 0.0, 0.5]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&p), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
    }

    #[test]
    fn single_layer_stack_and_json_round_trip() {
        let rows = bars_and_stripes(4);
        let labels: Vec<usize> = (0..rows.len()).map(|i| i % 2).collect();
        let (layout, table) = identity_layout(16);
        let data = TrainingData {
            rows: rows.clone(),
            labels,
            class_labels: vec!["a".into(), "b".into()],
            layout,
            table,
            row_block_len: 4,
            first_layer_init: None,
            input: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = train_dbn(&data, &small_cfg(), &mut rng).unwrap();
        assert_eq!(model.layers.len(), 1);
        let back = DbnModel::from_json(&model.to_json().unwrap()).unwrap();
        for r in &rows {
            assert_eq!(model.infer(r).unwrap(), back.infer(r).unwrap());
        }
        assert!(model.infer(&BinaryVector::zeros(5)).is_err());
    }
}
