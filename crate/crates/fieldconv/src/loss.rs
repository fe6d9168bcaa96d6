//! Training losses: softmax cross-entropy with label smoothing and the
//! contrastive twin loss over descriptor pairs.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Margin of the twin loss hinge term.
pub const TWIN_MARGIN: f64 = 5.0;

/// Upper bound of the random weight drawn for non-corresponding pairs.
pub const TWIN_ALPHA_MAX: f64 = 0.2;

/// Numerically stable log-sum-exp.
fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Smoothed target distribution: `1 - smoothing` on the target class,
/// `smoothing / (K - 1)` elsewhere.
fn smoothed_target(k: usize, target: usize, smoothing: f64, class: usize) -> f64 {
    if class == target {
        1.0 - smoothing
    } else {
        smoothing / (k - 1) as f64
    }
}

/// Softmax cross-entropy of one logit row against a smoothed one-hot
/// target.
pub fn cross_entropy_smoothed(logits: &[f64], target: usize, smoothing: f64) -> Result<f64> {
    let k = logits.len();
    if target >= k {
        return Err(Error::InvalidClass {
            class: target,
            n_classes: k,
        });
    }
    if !(0.0..1.0).contains(&smoothing) {
        return Err(Error::InvalidArgument(format!(
            "smoothing {smoothing} outside [0, 1)"
        )));
    }
    let lse = log_sum_exp(logits);
    let mut loss = 0.0;
    for (c, l) in logits.iter().enumerate() {
        loss += smoothed_target(k, target, smoothing, c) * (lse - l);
    }
    Ok(loss)
}

/// Mean smoothed cross-entropy over rows; the per-vertex training loss.
pub fn cross_entropy_rows(
    logits: &[f64],
    k: usize,
    targets: &[usize],
    smoothing: f64,
) -> Result<f64> {
    assert_eq!(logits.len(), k * targets.len());
    let mut total = 0.0;
    for (row, &t) in targets.iter().enumerate() {
        total += cross_entropy_smoothed(&logits[row * k..(row + 1) * k], t, smoothing)?;
    }
    Ok(total / targets.len() as f64)
}

/// Gradient of [`cross_entropy_rows`] toward the logits.
pub fn cross_entropy_rows_backward(
    logits: &[f64],
    k: usize,
    targets: &[usize],
    smoothing: f64,
    g_loss: f64,
) -> Vec<f64> {
    let rows = targets.len();
    let scale = g_loss / rows as f64;
    let mut gx = vec![0.0f64; logits.len()];
    for (row, &t) in targets.iter().enumerate() {
        let lrow = &logits[row * k..(row + 1) * k];
        let lse = log_sum_exp(lrow);
        for c in 0..k {
            let p = (lrow[c] - lse).exp();
            gx[row * k + c] = scale * (p - smoothed_target(k, t, smoothing, c));
        }
    }
    gx
}

/// One descriptor pair of the twin loss; `alpha = 1` marks a correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinPair {
    pub s: usize,
    pub m: usize,
    pub alpha: f64,
}

/// Builds weighted pairs from correspondence flags: corresponding pairs get
/// `alpha = 1`, the rest draw `alpha` uniformly from `[0, 0.2)` with a
/// seeded stream (resampled on every call).
pub fn twin_pairs_with_seed(pairs: &[(usize, usize, bool)], seed: u64) -> Vec<TwinPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs
        .iter()
        .map(|&(s, m, corr)| TwinPair {
            s,
            m,
            alpha: if corr {
                1.0
            } else {
                rng.gen_range(0.0..TWIN_ALPHA_MAX)
            },
        })
        .collect()
}

/// Twin loss with explicit pair weights:
/// `sum alpha d^2 + (1 - alpha) max(0, margin - d^2)` with
/// `d = || F_S(s) - F_M(m) ||`.
pub fn twin_loss_with_pairs(
    f_s: &[f64],
    f_m: &[f64],
    dim: usize,
    pairs: &[TwinPair],
) -> Result<f64> {
    if dim == 0 || f_s.len() % dim != 0 || f_m.len() % dim != 0 {
        return Err(Error::dim("descriptor dimension".to_string()));
    }
    let (ns, nm) = (f_s.len() / dim, f_m.len() / dim);
    let mut loss = 0.0;
    for pair in pairs {
        if pair.s >= ns || pair.m >= nm {
            return Err(Error::dim(format!(
                "pair ({}, {}) out of range",
                pair.s, pair.m
            )));
        }
        let d2 = descriptor_dist2(f_s, f_m, dim, pair.s, pair.m);
        loss += pair.alpha * d2 + (1.0 - pair.alpha) * (TWIN_MARGIN - d2).max(0.0);
    }
    Ok(loss)
}

/// Twin loss with seeded random weights for non-correspondences.
pub fn twin_loss(
    f_s: &[f64],
    f_m: &[f64],
    dim: usize,
    pairs: &[(usize, usize, bool)],
    seed: u64,
) -> Result<f64> {
    twin_loss_with_pairs(f_s, f_m, dim, &twin_pairs_with_seed(pairs, seed))
}

#[inline]
fn descriptor_dist2(f_s: &[f64], f_m: &[f64], dim: usize, s: usize, m: usize) -> f64 {
    let a = &f_s[s * dim..(s + 1) * dim];
    let b = &f_m[m * dim..(m + 1) * dim];
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gradient of [`twin_loss_with_pairs`] toward both descriptor matrices.
/// The hinge subgradient at `d^2 = margin` is zero.
pub fn twin_loss_backward(
    f_s: &[f64],
    f_m: &[f64],
    dim: usize,
    pairs: &[TwinPair],
    g_loss: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut gs = vec![0.0f64; f_s.len()];
    let mut gm = vec![0.0f64; f_m.len()];
    for pair in pairs {
        let d2 = descriptor_dist2(f_s, f_m, dim, pair.s, pair.m);
        let mut coef = pair.alpha;
        if d2 < TWIN_MARGIN {
            coef -= 1.0 - pair.alpha;
        }
        let coef = 2.0 * coef * g_loss;
        if coef == 0.0 {
            continue;
        }
        for i in 0..dim {
            let diff = f_s[pair.s * dim + i] - f_m[pair.m * dim + i];
            gs[pair.s * dim + i] += coef * diff;
            gm[pair.m * dim + i] -= coef * diff;
        }
    }
    (gs, gm)
}
