//! Independent reference implementations used by the integration tests.
//! Everything here works from the textbook definitions by brute force and
//! shares no code with the library beyond parameter accessors.

#![allow(dead_code, clippy::needless_range_loop)]

use adaptive_dbn::rbm::{BinaryVector, RbmParams};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn bits(index: u64, len: usize) -> Vec<f64> {
    (0..len).map(|k| ((index >> k) & 1) as f64).collect()
}

/// `E(v, h) = -Σ b_i v_i - Σ c_j h_j - Σ_ij v_i W_ij h_j` with explicit loops.
pub fn naive_energy(v: &[f64], h: &[f64], p: &RbmParams) -> f64 {
    let mut e = 0.0;
    for i in 0..p.n_visible() {
        e -= p.visible_bias()[i] * v[i];
    }
    for j in 0..p.n_hidden() {
        e -= p.hidden_bias()[j] * h[j];
    }
    for i in 0..p.n_visible() {
        for j in 0..p.n_hidden() {
            e -= v[i] * p.weight(i, j) * h[j];
        }
    }
    e
}

/// Every `(v, h, exp(-E))` triple.
pub fn enumerate_joint(p: &RbmParams) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    let (ni, nh) = (p.n_visible(), p.n_hidden());
    let mut out = Vec::new();
    for vi in 0..1u64 << ni {
        let v = bits(vi, ni);
        for hi in 0..1u64 << nh {
            let h = bits(hi, nh);
            let w = (-naive_energy(&v, &h, p)).exp();
            out.push((v.clone(), h, w));
        }
    }
    out
}

pub fn brute_partition(p: &RbmParams) -> f64 {
    enumerate_joint(p).iter().map(|t| t.2).sum()
}

/// `p(h_j = 1 | v)` by summing the joint over all hidden states.
pub fn brute_hidden_conditional(v: &[f64], p: &RbmParams) -> Vec<f64> {
    let nh = p.n_hidden();
    let mut on = vec![0.0; nh];
    let mut total = 0.0;
    for hi in 0..1u64 << nh {
        let h = bits(hi, nh);
        let w = (-naive_energy(v, &h, p)).exp();
        total += w;
        for j in 0..nh {
            on[j] += w * h[j];
        }
    }
    on.into_iter().map(|x| x / total).collect()
}

/// Mean log-likelihood of `data` by enumeration.
pub fn log_likelihood(data: &[Vec<f64>], p: &RbmParams) -> f64 {
    let joint = enumerate_joint(p);
    let z: f64 = joint.iter().map(|t| t.2).sum();
    let nh = p.n_hidden();
    data.iter()
        .map(|v| {
            let m: f64 = (0..1u64 << nh).map(|hi| (-naive_energy(v, &bits(hi, nh), p)).exp()).sum();
            (m / z).ln()
        })
        .sum::<f64>()
        / data.len() as f64
}

/// Exact gradient of [`log_likelihood`], flattened as `b, c, W`:
/// data expectations under `p(h|v)` minus model expectations under `p(v,h)`.
pub fn exact_gradient(data: &[Vec<f64>], p: &RbmParams) -> Vec<f64> {
    let (ni, nh) = (p.n_visible(), p.n_hidden());
    let len = ni + nh + ni * nh;
    let stats = |v: &[f64], h: &[f64], w: f64, acc: &mut [f64]| {
        for i in 0..ni {
            acc[i] += w * v[i];
        }
        for j in 0..nh {
            acc[ni + j] += w * h[j];
        }
        for i in 0..ni {
            for j in 0..nh {
                acc[ni + nh + i * nh + j] += w * v[i] * h[j];
            }
        }
    };
    let mut positive = vec![0.0; len];
    for v in data {
        let mut acc = vec![0.0; len];
        let mut m = 0.0;
        for hi in 0..1u64 << nh {
            let h = bits(hi, nh);
            let w = (-naive_energy(v, &h, p)).exp();
            m += w;
            stats(v, &h, w, &mut acc);
        }
        for (a, x) in positive.iter_mut().zip(acc) {
            *a += x / m / data.len() as f64;
        }
    }
    let mut negative = vec![0.0; len];
    let mut z = 0.0;
    for (v, h, w) in enumerate_joint(p) {
        z += w;
        stats(&v, &h, w, &mut negative);
    }
    positive.iter().zip(negative).map(|(a, b)| a - b / z).collect()
}

/// Parameters rebuilt from a flat `b, c, W` vector.
pub fn unflatten(p: &RbmParams, flat: &[f64]) -> RbmParams {
    let (ni, nh) = (p.n_visible(), p.n_hidden());
    RbmParams::from_parts(flat[..ni].to_vec(), flat[ni..ni + nh].to_vec(), flat[ni + nh..].to_vec()).unwrap()
}

pub fn flatten(p: &RbmParams) -> Vec<f64> {
    p.visible_bias()
        .iter()
        .chain(p.hidden_bias())
        .chain(p.weights())
        .copied()
        .collect()
}

/// Central finite differences of [`log_likelihood`].
pub fn finite_difference(data: &[Vec<f64>], p: &RbmParams, step: f64) -> Vec<f64> {
    let theta = flatten(p);
    (0..theta.len())
        .map(|k| {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += step;
            down[k] -= step;
            (log_likelihood(data, &unflatten(p, &up)) - log_likelihood(data, &unflatten(p, &down))) / (2.0 * step)
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// RBM with every parameter drawn from `N(0, std²)`.
pub fn random_params<R: Rng>(ni: usize, nh: usize, std: f64, rng: &mut R) -> RbmParams {
    let n = Normal::new(0.0, std).unwrap();
    let mut draw = |len: usize| (0..len).map(|_| n.sample(rng)).collect::<Vec<f64>>();
    RbmParams::from_parts(draw(ni), draw(nh), draw(ni * nh)).unwrap()
}

pub fn random_bits<R: Rng>(len: usize, rng: &mut R) -> BinaryVector {
    BinaryVector::from_bools((0..len).map(|_| rng.random_bool(0.5)))
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
