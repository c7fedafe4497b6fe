//! Binary-binary restricted Boltzmann machine.
//!
//! Energy of a joint state:
//!
//! ```text
//! E(v, h) = -Σ_i b_i v_i - Σ_j c_j h_j - Σ_i Σ_j v_i W_ij h_j
//! ```
//!
//! with `p(v, h) = exp(-E(v, h)) / Z`. The conditionals factorize into
//! logistic units: `p(h_j = 1 | v) = σ(c_j + Σ_i v_i W_ij)` and
//! `p(v_i = 1 | h) = σ(b_i + Σ_j W_ij h_j)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest `I + J` for which exact enumeration is allowed.
pub const MAX_EXACT_UNITS: usize = 24;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A vector over {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(format!(
                "bit at position {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self(bits.into_iter().map(u8::from).collect())
    }

    /// Fires every unit whose probability is strictly above one half.
    pub fn threshold(probs: &[f64]) -> Self {
        Self::from_bools(probs.iter().map(|&p| p > 0.5))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }

    /// Concatenates two vectors (e.g. image bits followed by CSV bits).
    pub fn concat(&self, other: &BinaryVector) -> BinaryVector {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        BinaryVector(bits)
    }

    /// Bits of `index` in little-endian order, `len` wide.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|k| ((index >> k) & 1) as u8).collect())
    }
}

impl TryFrom<Vec<u8>> for BinaryVector {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        BinaryVector::new(bits)
    }
}

impl From<BinaryVector> for Vec<u8> {
    fn from(v: BinaryVector) -> Self {
        v.0
    }
}

impl AsRef<[u8]> for BinaryVector {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// Non-empty list of equal-length binary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    rows: Vec<BinaryVector>,
}

impl Batch {
    pub fn new(rows: Vec<BinaryVector>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("batch must contain at least one row"));
        };
        let width = first.len();
        for row in &rows {
            check_len("batch row", width, row.len())?;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[BinaryVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }
}

/// Learnable parameters `{b, c, W}` of one RBM. `weights` is row-major `I × J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmParams {
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
    weights: Vec<f64>,
}

impl RbmParams {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Result<Self> {
        Self::from_parts(
            vec![0.0; n_visible],
            vec![0.0; n_hidden],
            vec![0.0; n_visible * n_hidden],
        )
    }

    /// Gaussian weights with the given standard deviation and zero biases.
    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        n_hidden: usize,
        weight_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(n_visible, n_hidden)?;
        if weight_std > 0.0 {
            let normal = Normal::new(0.0, weight_std)
                .map_err(|e| Error::invalid(format!("weight std: {e}")))?;
            for w in &mut params.weights {
                *w = normal.sample(rng);
            }
        }
        Ok(params)
    }

    pub fn from_parts(visible_bias: Vec<f64>, hidden_bias: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if visible_bias.is_empty() || hidden_bias.is_empty() {
            return Err(Error::invalid("an RBM needs at least one visible and one hidden unit"));
        }
        check_len("weight matrix", visible_bias.len() * hidden_bias.len(), weights.len())?;
        let params = Self {
            visible_bias,
            hidden_bias,
            weights,
        };
        if !params.is_finite() {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(params)
    }

    pub fn n_visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_hidden() + j]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, value: f64) {
        let nh = self.n_hidden();
        self.weights[i * nh + j] = value;
    }

    pub fn visible_bias_mut(&mut self) -> &mut [f64] {
        &mut self.visible_bias
    }

    pub fn hidden_bias_mut(&mut self) -> &mut [f64] {
        &mut self.hidden_bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Column `j` of `W`: the weights incident to hidden unit `j`.
    pub fn hidden_column(&self, j: usize) -> Vec<f64> {
        (0..self.n_visible()).map(|i| self.weight(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .all(|x| x.is_finite())
    }

    /// Multiplies every parameter by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |xs: &[f64]| xs.iter().map(|x| x * factor).collect::<Vec<_>>();
        Self {
            visible_bias: scale(&self.visible_bias),
            hidden_bias: scale(&self.hidden_bias),
            weights: scale(&self.weights),
        }
    }

    /// Reorders visible units so that new unit `k` takes old unit `source[k]`.
    pub fn permute_visible(&mut self, source: &[usize]) -> Result<()> {
        check_len("visible permutation", self.n_visible(), source.len())?;
        let nh = self.n_hidden();
        let b: Vec<f64> = source.iter().map(|&s| self.visible_bias[s]).collect();
        let mut w = Vec::with_capacity(self.weights.len());
        for &s in source {
            w.extend_from_slice(&self.weights[s * nh..(s + 1) * nh]);
        }
        self.visible_bias = b;
        self.weights = w;
        Ok(())
    }

    /// Hidden pre-activations `c_j + Σ_i v_i W_ij` for a real-valued visible vector.
    pub fn hidden_input(&self, v: &[f64]) -> Vec<f64> {
        let nh = self.n_hidden();
        let mut acc = self.hidden_bias.clone();
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                let row = &self.weights[i * nh..(i + 1) * nh];
                for (a, w) in acc.iter_mut().zip(row) {
                    *a += vi * w;
                }
            }
        }
        acc
    }

    /// Visible pre-activations `b_i + Σ_j W_ij h_j`.
    pub fn visible_input(&self, h: &[f64]) -> Vec<f64> {
        let nh = self.n_hidden();
        self.visible_bias
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let row = &self.weights[i * nh..(i + 1) * nh];
                b + row.iter().zip(h).map(|(w, hj)| w * hj).sum::<f64>()
            })
            .collect()
    }

    pub fn hidden_probs(&self, v: &[f64]) -> Vec<f64> {
        let mut x = self.hidden_input(v);
        x.iter_mut().for_each(|a| *a = sigmoid(*a));
        x
    }

    pub fn visible_probs(&self, h: &[f64]) -> Vec<f64> {
        let mut x = self.visible_input(h);
        x.iter_mut().for_each(|a| *a = sigmoid(*a));
        x
    }

    /// One mean-field pass `v -> p(h|v) -> p(v|p(h|v))`.
    pub fn reconstruct(&self, v: &[f64]) -> Vec<f64> {
        self.visible_probs(&self.hidden_probs(v))
    }

    /// `log Z`, summing over hidden units analytically and enumerating
    /// visible states.
    pub fn log_partition(&self) -> Result<f64> {
        self.check_exact_size()?;
        let n = self.n_visible();
        let mut terms = Vec::with_capacity(1 << n);
        for index in 0..(1u64 << n) {
            let v = BinaryVector::from_index(index, n).to_f64();
            terms.push(self.log_unnormalized_marginal(&v));
        }
        Ok(log_sum_exp(&terms))
    }

    /// `log Σ_h exp(-E(v, h))` (negative free energy).
    pub fn log_unnormalized_marginal(&self, v: &[f64]) -> f64 {
        let bv: f64 = self.visible_bias.iter().zip(v).map(|(b, x)| b * x).sum();
        bv + self
            .hidden_input(v)
            .iter()
            .map(|&x| softplus(x))
            .sum::<f64>()
    }

    fn check_exact_size(&self) -> Result<()> {
        let units = self.n_visible() + self.n_hidden();
        if units > MAX_EXACT_UNITS {
            return Err(Error::Capability(format!(
                "exact enumeration over {units} units exceeds the limit of {MAX_EXACT_UNITS}"
            )));
        }
        Ok(())
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Same-shape carrier for `(Δb, Δc, ΔW)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Gradient {
    pub fn zeros_like(params: &RbmParams) -> Self {
        Self {
            visible_bias: vec![0.0; params.n_visible()],
            hidden_bias: vec![0.0; params.n_hidden()],
            weights: vec![0.0; params.weights.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// All components flattened as `b, c, W`.
    pub fn flatten(&self) -> Vec<f64> {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .copied()
            .collect()
    }

    pub fn add(&mut self, other: &Gradient) {
        for (a, b) in self.visible_bias.iter_mut().zip(&other.visible_bias) {
            *a += b;
        }
        for (a, b) in self.hidden_bias.iter_mut().zip(&other.hidden_bias) {
            *a += b;
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
    }

    fn check_shape(&self, params: &RbmParams) -> Result<()> {
        check_len("visible bias gradient", params.n_visible(), self.visible_bias.len())?;
        check_len("hidden bias gradient", params.n_hidden(), self.hidden_bias.len())?;
        check_len("weight gradient", params.weights.len(), self.weights.len())
    }
}

/// Negative-phase statistics for contrastive divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdMode {
    /// Gibbs chain with Bernoulli samples.
    #[default]
    Sampled,
    /// Deterministic chain on probabilities.
    MeanField,
}

pub fn energy(v: &BinaryVector, h: &BinaryVector, params: &RbmParams) -> Result<f64> {
    check_len("visible vector", params.n_visible(), v.len())?;
    check_len("hidden vector", params.n_hidden(), h.len())?;
    let mut e = 0.0;
    for (b, &x) in params.visible_bias.iter().zip(v.as_slice()) {
        e -= b * f64::from(x);
    }
    for (c, &x) in params.hidden_bias.iter().zip(h.as_slice()) {
        e -= c * f64::from(x);
    }
    let nh = params.n_hidden();
    for (i, &vi) in v.as_slice().iter().enumerate() {
        for (j, &hj) in h.as_slice().iter().enumerate() {
            e -= f64::from(vi) * params.weights[i * nh + j] * f64::from(hj);
        }
    }
    Ok(e)
}

pub fn exact_partition(params: &RbmParams) -> Result<f64> {
    Ok(params.log_partition()?.exp())
}

pub fn joint_probability(v: &BinaryVector, h: &BinaryVector, params: &RbmParams) -> Result<f64> {
    let e = energy(v, h, params)?;
    let log_z = params.log_partition()?;
    Ok((-e - log_z).exp())
}

pub fn hidden_probabilities(v: &BinaryVector, params: &RbmParams) -> Result<Vec<f64>> {
    check_len("visible vector", params.n_visible(), v.len())?;
    Ok(params.hidden_probs(&v.to_f64()))
}

pub fn visible_probabilities(h: &BinaryVector, params: &RbmParams) -> Result<Vec<f64>> {
    check_len("hidden vector", params.n_hidden(), h.len())?;
    Ok(params.visible_probs(&h.to_f64()))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<BinaryVector> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(BinaryVector(sample_unchecked(probs, rng)))
}

fn sample_unchecked<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Vec<u8> {
    probs
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect()
}

fn to_f64s(bits: Vec<u8>) -> Vec<f64> {
    bits.into_iter().map(f64::from).collect()
}

/// CD-k estimate of the log-likelihood gradient, averaged over rows.
pub fn cd_gradient<R: Rng + ?Sized>(
    batch: &Batch,
    params: &RbmParams,
    k: usize,
    mode: CdMode,
    rng: &mut R,
) -> Result<Gradient> {
    check_len("batch row", params.n_visible(), batch.width())?;
    let rows: Vec<Vec<f64>> = batch.rows().iter().map(BinaryVector::to_f64).collect();
    cd_gradient_dense(&rows, params, k, mode, rng)
}

/// [`cd_gradient`] on rows already widened to `f64`.
pub fn cd_gradient_dense<V: AsRef<[f64]>, R: Rng + ?Sized>(
    rows: &[V],
    params: &RbmParams,
    k: usize,
    mode: CdMode,
    rng: &mut R,
) -> Result<Gradient> {
    if k == 0 {
        return Err(Error::invalid("CD requires k >= 1"));
    }
    if rows.is_empty() {
        return Err(Error::invalid("batch must contain at least one row"));
    }
    let ni = params.n_visible();
    let nh = params.n_hidden();
    let mut grad = Gradient::zeros_like(params);
    for v0 in rows {
        let v0 = v0.as_ref();
        check_len("batch row", ni, v0.len())?;
        let ph0 = params.hidden_probs(v0);
        let (vk, phk) = match mode {
            CdMode::MeanField => {
                let mut h = ph0.clone();
                let mut v = Vec::new();
                for _ in 0..k {
                    v = params.visible_probs(&h);
                    h = params.hidden_probs(&v);
                }
                (v, h)
            }
            CdMode::Sampled => {
                let mut h = to_f64s(sample_unchecked(&ph0, rng));
                let mut v = Vec::new();
                let mut ph = Vec::new();
                for step in 0..k {
                    v = to_f64s(sample_unchecked(&params.visible_probs(&h), rng));
                    ph = params.hidden_probs(&v);
                    if step + 1 < k {
                        h = to_f64s(sample_unchecked(&ph, rng));
                    }
                }
                (v, ph)
            }
        };
        for i in 0..ni {
            grad.visible_bias[i] += v0[i] - vk[i];
            let row = &mut grad.weights[i * nh..(i + 1) * nh];
            for j in 0..nh {
                row[j] += v0[i] * ph0[j] - vk[i] * phk[j];
            }
        }
        for j in 0..nh {
            grad.hidden_bias[j] += ph0[j] - phk[j];
        }
    }
    let scale = 1.0 / rows.len() as f64;
    grad.visible_bias.iter_mut().for_each(|x| *x *= scale);
    grad.hidden_bias.iter_mut().for_each(|x| *x *= scale);
    grad.weights.iter_mut().for_each(|x| *x *= scale);
    Ok(grad)
}

/// `θ + lr · grad`.
pub fn sgd_update(params: &RbmParams, grad: &Gradient, lr: f64) -> Result<RbmParams> {
    let mut next = params.clone();
    apply_gradient(&mut next, grad, lr)?;
    Ok(next)
}

/// In-place form of [`sgd_update`].
pub fn apply_gradient(params: &mut RbmParams, grad: &Gradient, lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
    }
    grad.check_shape(params)?;
    if !grad.is_finite() {
        return Err(Error::fault(None, "non-finite gradient"));
    }
    for (p, g) in params.visible_bias.iter_mut().zip(&grad.visible_bias) {
        *p += lr * g;
    }
    for (p, g) in params.hidden_bias.iter_mut().zip(&grad.hidden_bias) {
        *p += lr * g;
    }
    for (p, g) in params.weights.iter_mut().zip(&grad.weights) {
        *p += lr * g;
    }
    if !params.is_finite() {
        return Err(Error::fault(None, "update produced non-finite parameters"));
    }
    Ok(())
}

/// Mean squared difference between rows and their mean-field reconstruction.
pub fn reconstruction_error(batch: &Batch, params: &RbmParams) -> Result<f64> {
    check_len("batch row", params.n_visible(), batch.width())?;
    let rows: Vec<Vec<f64>> = batch.rows().iter().map(BinaryVector::to_f64).collect();
    Ok(reconstruction_error_dense(&rows, params))
}

pub fn reconstruction_error_dense(rows: &[Vec<f64>], params: &RbmParams) -> f64 {
    let mut total = 0.0;
    for v in rows {
        let r = params.reconstruct(v);
        total += v.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    total / (rows.len() * params.n_visible()) as f64
}
