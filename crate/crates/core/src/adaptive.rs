//! Walking-Distance (WD) monitoring and hidden-neuron generation/annihilation.
//!
//! WD is the population variance of per-epoch parameter deltas over a sliding
//! window. Per hidden neuron it pools the deltas of column `j` of `W` and of
//! `c_j` across every epoch in the window.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rbm::RbmParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthConfig {
    /// WD above which the most unsettled neuron is split.
    pub theta_gen: f64,
    /// Mean activation below which a neuron counts as dead.
    pub theta_ann: f64,
    /// WD below which a neuron counts as stable.
    pub wd_stable: f64,
    pub window: usize,
    pub max_hidden: usize,
    /// Std of the noise added to a newborn neuron's weights.
    pub noise_std: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            theta_gen: 0.05,
            theta_ann: 0.01,
            wd_stable: 0.01,
            window: 10,
            max_hidden: 1000,
            noise_std: 0.01,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self, initial_hidden: usize) -> Result<()> {
        let positive = [
            ("theta_gen", self.theta_gen),
            ("theta_ann", self.theta_ann),
            ("wd_stable", self.wd_stable),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.theta_ann >= 1.0 {
            return Err(Error::Config("theta_ann must lie in (0, 1)".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if self.max_hidden < initial_hidden {
            return Err(Error::Config(format!(
                "max_hidden {} is below the initial hidden count {initial_hidden}",
                self.max_hidden
            )));
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            return Err(Error::Config("noise_std must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Deltas {
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
    weights: Vec<f64>,
}

/// Pooled WD of each parameter group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupWd {
    pub visible_bias: f64,
    pub hidden_bias: f64,
    pub weights: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WdTracker {
    window: usize,
    n_visible: usize,
    n_hidden: usize,
    deltas: VecDeque<Deltas>,
    activations: VecDeque<Vec<f64>>,
    wd: Vec<f64>,
}

impl WdTracker {
    pub fn new(n_visible: usize, n_hidden: usize, window: usize) -> Self {
        Self {
            window: window.max(1),
            n_visible,
            n_hidden,
            deltas: VecDeque::new(),
            activations: VecDeque::new(),
            wd: vec![0.0; n_hidden],
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// True once `window` epochs of deltas have been recorded.
    pub fn is_full(&self) -> bool {
        self.deltas.len() >= self.window
    }

    /// Per-hidden-neuron WD.
    pub fn wd(&self) -> &[f64] {
        &self.wd
    }

    pub fn total_wd(&self) -> f64 {
        self.wd.iter().sum()
    }

    /// Records the deltas `new - old` of one epoch and refreshes per-neuron WD.
    pub fn update_wd(&mut self, old: &RbmParams, new: &RbmParams) -> Result<()> {
        let shape_err = |what: &'static str, e: Error| match e {
            Error::DimensionMismatch { expected, got, .. } => {
                Error::fault(None, format!("{what} shape changed ({expected} vs {got}) during WD update"))
            }
            other => other,
        };
        check_len("visible", old.n_visible(), new.n_visible()).map_err(|e| shape_err("visible", e))?;
        check_len("hidden", old.n_hidden(), new.n_hidden()).map_err(|e| shape_err("hidden", e))?;
        check_len("visible", self.n_visible, new.n_visible()).map_err(|e| shape_err("tracker visible", e))?;
        check_len("hidden", self.n_hidden, new.n_hidden()).map_err(|e| shape_err("tracker hidden", e))?;
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).collect::<Vec<_>>();
        self.deltas.push_back(Deltas {
            visible_bias: diff(old.visible_bias(), new.visible_bias()),
            hidden_bias: diff(old.hidden_bias(), new.hidden_bias()),
            weights: diff(old.weights(), new.weights()),
        });
        while self.deltas.len() > self.window {
            self.deltas.pop_front();
        }
        self.recompute();
        Ok(())
    }

    /// Records one epoch of mean hidden activations.
    pub fn record_activation(&mut self, means: &[f64]) -> Result<()> {
        check_len("hidden activation means", self.n_hidden, means.len())?;
        self.activations.push_back(means.to_vec());
        while self.activations.len() > self.window {
            self.activations.pop_front();
        }
        Ok(())
    }

    /// Mean activation of each hidden neuron over the recorded window.
    pub fn mean_activation(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_hidden];
        if self.activations.is_empty() {
            return out;
        }
        for epoch in &self.activations {
            for (o, a) in out.iter_mut().zip(epoch) {
                *o += a;
            }
        }
        let n = self.activations.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    pub fn group_wd(&self) -> GroupWd {
        let pooled = |pick: fn(&Deltas) -> &[f64]| {
            let mut stats = Moments::default();
            for d in &self.deltas {
                pick(d).iter().for_each(|&x| stats.push(x));
            }
            stats.variance()
        };
        GroupWd {
            visible_bias: pooled(|d| &d.visible_bias),
            hidden_bias: pooled(|d| &d.hidden_bias),
            weights: pooled(|d| &d.weights),
        }
    }

    fn recompute(&mut self) {
        let nh = self.n_hidden;
        let mut stats = vec![Moments::default(); nh];
        for d in &self.deltas {
            for (j, s) in stats.iter_mut().enumerate() {
                s.push(d.hidden_bias[j]);
            }
            for row in d.weights.chunks_exact(nh) {
                for (s, &x) in stats.iter_mut().zip(row) {
                    s.push(x);
                }
            }
        }
        self.wd = stats.iter().map(Moments::variance).collect();
    }

    /// Reorders the visible axis: new unit `k` takes old unit `source[k]`.
    pub fn permute_visible(&mut self, source: &[usize]) -> Result<()> {
        check_len("visible permutation", self.n_visible, source.len())?;
        let nh = self.n_hidden;
        for d in &mut self.deltas {
            d.visible_bias = source.iter().map(|&s| d.visible_bias[s]).collect();
            let mut w = Vec::with_capacity(d.weights.len());
            for &s in source {
                w.extend_from_slice(&d.weights[s * nh..(s + 1) * nh]);
            }
            d.weights = w;
        }
        Ok(())
    }

    fn insert_hidden(&mut self, at: usize) {
        let nh = self.n_hidden;
        for d in &mut self.deltas {
            d.hidden_bias.insert(at, 0.0);
            let mut w = Vec::with_capacity(self.n_visible * (nh + 1));
            for row in d.weights.chunks_exact(nh) {
                w.extend_from_slice(&row[..at]);
                w.push(0.0);
                w.extend_from_slice(&row[at..]);
            }
            d.weights = w;
        }
        for a in &mut self.activations {
            // the child inherits its parent's share of activity
            let parent = a[at.saturating_sub(1)];
            a.insert(at, parent);
        }
        self.n_hidden += 1;
        self.recompute();
    }

    fn remove_hidden(&mut self, keep: &[bool]) {
        let nh = self.n_hidden;
        let filter = |xs: &[f64]| {
            xs.iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(&x, _)| x)
                .collect::<Vec<_>>()
        };
        for d in &mut self.deltas {
            d.hidden_bias = filter(&d.hidden_bias);
            d.weights = d.weights.chunks_exact(nh).flat_map(&filter).collect();
        }
        for a in &mut self.activations {
            *a = filter(a);
        }
        self.n_hidden = keep.iter().filter(|&&k| k).count();
        self.recompute();
    }
}

/// Welford accumulator for a population variance.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0)
        }
    }
}

/// Index of the highest-WD neuron when it exceeds `theta_gen` and the layer
/// still has room to grow.
pub fn neuron_generation_check(tracker: &WdTracker, cfg: &GrowthConfig) -> Option<usize> {
    if !tracker.is_full() || tracker.n_hidden() >= cfg.max_hidden {
        return None;
    }
    let (idx, &wd) = tracker
        .wd()
        .iter()
        .enumerate()
        .fold(None::<(usize, &f64)>, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })?;
    (wd > cfg.theta_gen).then_some(idx)
}

/// Splits `parent` into two neurons that share its weights.
///
/// The child is inserted at `parent + 1`. Returns the child's index.
pub fn apply_generation<R: Rng + ?Sized>(
    params: &mut RbmParams,
    tracker: &mut WdTracker,
    parent: usize,
    cfg: &GrowthConfig,
    rng: &mut R,
) -> Result<usize> {
    let nh = params.n_hidden();
    if parent >= nh {
        return Err(Error::invalid(format!("parent {parent} out of range for {nh} hidden units")));
    }
    if nh >= cfg.max_hidden {
        return Err(Error::invalid(format!("hidden layer already at max_hidden = {}", cfg.max_hidden)));
    }
    check_len("tracker hidden units", nh, tracker.n_hidden())?;
    let noise = (cfg.noise_std > 0.0)
        .then(|| Normal::new(0.0, cfg.noise_std))
        .transpose()
        .map_err(|e| Error::invalid(format!("noise std: {e}")))?;
    let ni = params.n_visible();
    let child = parent + 1;
    let mut weights = Vec::with_capacity(ni * (nh + 1));
    for row in params.weights().chunks_exact(nh) {
        let half = row[parent] / 2.0;
        let jitter = noise.map_or(0.0, |n| n.sample(rng));
        for (j, &w) in row.iter().enumerate() {
            weights.push(if j == parent { half } else { w });
            if j == parent {
                weights.push(half + jitter);
            }
        }
    }
    let mut hidden_bias = params.hidden_bias().to_vec();
    hidden_bias.insert(child, hidden_bias[parent]);
    *params = RbmParams::from_parts(params.visible_bias().to_vec(), hidden_bias, weights)?;
    tracker.insert_hidden(child);
    Ok(child)
}

/// Dead and stable neurons: mean activation below `theta_ann` and WD below
/// `wd_stable`. At least one neuron always survives.
pub fn neuron_annihilation_check(means: &[f64], wd: &[f64], cfg: &GrowthConfig) -> Vec<usize> {
    debug_assert!(means.iter().all(|m| (0.0..=1.0).contains(m)));
    if means.len() <= 1 {
        return Vec::new();
    }
    let mut victims: Vec<usize> = means
        .iter()
        .zip(wd)
        .enumerate()
        .filter(|(_, (&m, &w))| m < cfg.theta_ann && w < cfg.wd_stable)
        .map(|(j, _)| j)
        .collect();
    if victims.len() == means.len() {
        // spare the most active one; lowest index on ties
        let survivor = (0..means.len())
            .fold(0, |best, j| if means[j] > means[best] { j } else { best });
        victims.retain(|&j| j != survivor);
    }
    victims
}

/// Removes the `victims` hidden neurons, keeping the rest in order.
pub fn apply_annihilation(params: &mut RbmParams, tracker: &mut WdTracker, victims: &[usize]) -> Result<()> {
    let nh = params.n_hidden();
    check_len("tracker hidden units", nh, tracker.n_hidden())?;
    if victims.is_empty() {
        return Ok(());
    }
    let mut keep = vec![true; nh];
    for &v in victims {
        if v >= nh {
            return Err(Error::invalid(format!("victim {v} out of range for {nh} hidden units")));
        }
        keep[v] = false;
    }
    if !keep.iter().any(|&k| k) {
        return Err(Error::invalid("annihilation would remove every hidden neuron"));
    }
    let filter = |xs: &[f64]| {
        xs.iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&x, _)| x)
            .collect::<Vec<_>>()
    };
    let weights = params.weights().chunks_exact(nh).flat_map(&filter).collect();
    *params = RbmParams::from_parts(params.visible_bias().to_vec(), filter(params.hidden_bias()), weights)?;
    tracker.remove_hidden(&keep);
    Ok(())
}
