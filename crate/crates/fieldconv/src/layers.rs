//! Network building blocks over tangent fields and their analytic backward
//! kernels: complex linearities without offsets, the radial ReLU, the
//! learned-gradient lift from scalar channels, residual convolution blocks,
//! ECHO descriptors, magnitude/pool readouts, dropout, and the real MLP
//! pieces. Forward functions here are pure; the tape wrappers in
//! [`crate::ops`] call into them.

use num_complex::Complex64;
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conv::{field_convolve, ConvTables};
use crate::field::{polar, TangentField};
use crate::filter::FcFilter;
use crate::intrinsic::IntrinsicCache;
use crate::par;
use crate::{Error, Result};

/// Norm guard below which the gradient-lift direction is treated as zero.
pub const LIFT_NORM_GUARD: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Complex linearity (no translational offset).

/// `y(v, co) = sum_ci W[co][ci] x(v, ci)`; `w` is row-major `[co][ci]`.
pub fn complex_linear(
    x: &TangentField,
    w: &[Complex64],
    c_out: usize,
) -> Result<TangentField> {
    let c_in = x.n_channels();
    if w.len() != c_in * c_out {
        return Err(Error::dim(format!(
            "complex linear weight has {} entries, expected {}",
            w.len(),
            c_in * c_out
        )));
    }
    let v = x.n_vertices();
    let mut out = vec![Complex64::new(0.0, 0.0); v * c_out];
    par::for_each_row(&mut out, c_out, |p, row| {
        for (co, slot) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for ci in 0..c_in {
                acc += w[co * c_in + ci] * x.get(p, ci);
            }
            *slot = acc;
        }
    });
    Ok(TangentField::from_values(out, v, c_out))
}

/// Backward of [`complex_linear`]: gradients toward the field and weights.
pub fn complex_linear_backward(
    x: &TangentField,
    w: &[Complex64],
    gy: &[Complex64],
    c_out: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (v, c_in) = (x.n_vertices(), x.n_channels());
    let mut gx = vec![Complex64::new(0.0, 0.0); v * c_in];
    par::for_each_row(&mut gx, c_in, |p, row| {
        for (ci, slot) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for co in 0..c_out {
                acc += w[co * c_in + ci].conj() * gy[p * c_out + co];
            }
            *slot = acc;
        }
    });
    let mut gw = vec![Complex64::new(0.0, 0.0); c_in * c_out];
    par::for_each_row(&mut gw, c_in, |co, row| {
        for (ci, slot) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..v {
                acc += x.get(p, ci).conj() * gy[p * c_out + co];
            }
            *slot = acc;
        }
    });
    (gx, gw)
}

// ---------------------------------------------------------------------------
// Radial ReLU.

/// `ReLU(rho + b) e^{i phi}` per vertex and channel; the phase is preserved
/// wherever the output magnitude is positive.
pub fn radial_relu(x: &TangentField, b: &[f64]) -> TangentField {
    let (v, c) = (x.n_vertices(), x.n_channels());
    assert_eq!(b.len(), c);
    let mut out = vec![Complex64::new(0.0, 0.0); v * c];
    par::for_each_row(&mut out, c, |p, row| {
        for (ch, slot) in row.iter_mut().enumerate() {
            let z = x.get(p, ch);
            let rho = z.norm();
            if rho == 0.0 {
                *slot = Complex64::new(b[ch].max(0.0), 0.0);
            } else {
                let mag = (rho + b[ch]).max(0.0);
                *slot = z * (mag / rho);
            }
        }
    });
    TangentField::from_values(out, v, c)
}

/// Backward of [`radial_relu`]; the subgradient at `rho + b = 0` is zero.
pub fn radial_relu_backward(
    x: &TangentField,
    b: &[f64],
    gy: &[Complex64],
) -> (Vec<Complex64>, Vec<f64>) {
    let (v, c) = (x.n_vertices(), x.n_channels());
    let mut gx = vec![Complex64::new(0.0, 0.0); v * c];
    let mut gb = vec![0.0f64; c];
    for p in 0..v {
        for ch in 0..c {
            let z = x.get(p, ch);
            let rho = z.norm();
            let g = gy[p * c + ch];
            if rho == 0.0 {
                // Output is (max(b, 0), 0); no usable direction toward z.
                if b[ch] > 0.0 {
                    gb[ch] += g.re;
                }
                continue;
            }
            if rho + b[ch] <= 0.0 {
                continue;
            }
            let s = (rho + b[ch]) / rho;
            let (cx, sy) = (z.re / rho, z.im / rho);
            let k = b[ch] / rho;
            // d out / d z for out = s z with s = 1 + b / rho.
            let dxx = s - k * cx * cx;
            let dxy = -k * cx * sy;
            let dyy = s - k * sy * sy;
            gx[p * c + ch] = Complex64::new(g.re * dxx + g.im * dxy, g.re * dxy + g.im * dyy);
            gb[ch] += g.re * cx + g.im * sy;
        }
    }
    (gx, gb)
}

// ---------------------------------------------------------------------------
// Learned-gradient lift.

/// Saved intermediates of the lift forward pass.
#[derive(Debug, Clone)]
pub struct LiftAux {
    /// Direction sum before the rotational offset, per (vertex, out-channel).
    pub phi_raw: Vec<Complex64>,
    /// Magnitude sum, per (vertex, out-channel).
    pub p_mag: Vec<f64>,
}

/// Lifts real scalar channels to a tangent field: a learned weighted
/// gradient direction (normalized) scaled by the square of a learned
/// weighted magnitude.
///
/// `f1`/`f2` are radially isotropic profiles stored as `[ci][co][node]`
/// reals, `beta` one rotational offset per output channel. `n_radial` nodes
/// interpolate over `[0, epsilon]`; radii and directions come from the
/// center-side log map (`r`, `theta_pq`).
pub fn gradient_lift(
    xi: &[f64],
    c_in: usize,
    f1: &[f64],
    f2: &[f64],
    beta: &[f64],
    c_out: usize,
    cache: &IntrinsicCache,
    tables: &ConvTables,
) -> Result<(TangentField, LiftAux)> {
    let v = cache.n_vertices();
    if xi.len() != v * c_in {
        return Err(Error::dim(format!(
            "lift input has {} entries, expected {}",
            xi.len(),
            v * c_in
        )));
    }
    let n = tables.radial_nodes;
    if f1.len() != c_in * c_out * n || f2.len() != c_in * c_out * n || beta.len() != c_out {
        return Err(Error::dim("lift parameter shapes".to_string()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); v * c_out];
    let mut phi_raw = vec![Complex64::new(0.0, 0.0); v * c_out];
    let mut p_mag = vec![0.0f64; v * c_out];
    par::for_each_row3(
        &mut out,
        c_out,
        &mut phi_raw,
        c_out,
        &mut p_mag,
        c_out,
        |p, orow, phirow, prow| {
            for j in cache.offsets[p]..cache.offsets[p + 1] {
                let rec = &cache.records[j];
                let q = rec.q as usize;
                let (k0, w0, w1) = tables.interp[j];
                let k0 = k0 as usize;
                let dir = Complex64::from_polar(1.0, rec.theta_pq);
                for ci in 0..c_in {
                    let dxi = xi[q * c_in + ci] - xi[p * c_in + ci];
                    let xq = xi[q * c_in + ci];
                    for co in 0..c_out {
                        let base = (ci * c_out + co) * n;
                        let mut f1v = w0 * f1[base + k0];
                        let mut f2v = w0 * f2[base + k0];
                        if w1 != 0.0 {
                            f1v += w1 * f1[base + k0 + 1];
                            f2v += w1 * f2[base + k0 + 1];
                        }
                        phirow[co] += rec.w * dxi * f1v * dir;
                        prow[co] += rec.w * xq * f2v;
                    }
                }
            }
            for co in 0..c_out {
                let phi = phirow[co] * Complex64::from_polar(1.0, beta[co]);
                let norm = phi.norm();
                if norm > LIFT_NORM_GUARD {
                    orow[co] = (prow[co] * prow[co] / norm) * phi;
                }
            }
        },
    );
    Ok((
        TangentField::from_values(out, v, c_out),
        LiftAux { phi_raw, p_mag },
    ))
}

/// Gradients of the lift toward the scalar input and all three parameter
/// blocks. Inside the norm guard the gradient is defined as zero.
#[allow(clippy::too_many_arguments)]
pub fn gradient_lift_backward(
    xi: &[f64],
    c_in: usize,
    f1: &[f64],
    f2: &[f64],
    beta: &[f64],
    c_out: usize,
    cache: &IntrinsicCache,
    tables: &ConvTables,
    aux: &LiftAux,
    gy: &[Complex64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let v = cache.n_vertices();
    let n = tables.radial_nodes;
    // Per-(p, co) upstream gradients toward the raw direction sum and the
    // magnitude sum; beta folds in here as well.
    let mut g_phi_raw = vec![Complex64::new(0.0, 0.0); v * c_out];
    let mut g_p = vec![0.0f64; v * c_out];
    let mut g_beta = vec![0.0f64; c_out];
    for p in 0..v {
        for co in 0..c_out {
            let g = gy[p * c_out + co];
            if g.re == 0.0 && g.im == 0.0 {
                continue;
            }
            let raw = aux.phi_raw[p * c_out + co];
            let rot = Complex64::from_polar(1.0, beta[co]);
            let phi = raw * rot;
            let norm = phi.norm();
            if norm <= LIFT_NORM_GUARD {
                continue;
            }
            let pm = aux.p_mag[p * c_out + co];
            let dir = phi / norm;
            g_p[p * c_out + co] = 2.0 * pm * (g.re * dir.re + g.im * dir.im);
            // d dir / d phi through the normalization.
            let p2 = pm * pm;
            let n3 = norm * norm * norm;
            let g_dir = Complex64::new(p2 * g.re, p2 * g.im);
            let g_phi = Complex64::new(
                (g_dir.re * phi.im * phi.im - g_dir.im * phi.re * phi.im) / n3,
                (-g_dir.re * phi.re * phi.im + g_dir.im * phi.re * phi.re) / n3,
            );
            // phi = e^{i beta} raw.
            g_beta[co] += g_phi.re * (-phi.im) + g_phi.im * phi.re;
            g_phi_raw[p * c_out + co] = rot.conj() * g_phi;
        }
    }

    // Parameter gradients: accumulate over centers sequentially (small).
    let mut g_f1 = vec![0.0f64; f1.len()];
    let mut g_f2 = vec![0.0f64; f2.len()];
    for p in 0..v {
        for j in cache.offsets[p]..cache.offsets[p + 1] {
            let rec = &cache.records[j];
            let q = rec.q as usize;
            let (k0, w0, w1) = tables.interp[j];
            let k0 = k0 as usize;
            let dir = Complex64::from_polar(1.0, rec.theta_pq);
            for ci in 0..c_in {
                let dxi = xi[q * c_in + ci] - xi[p * c_in + ci];
                let xq = xi[q * c_in + ci];
                for co in 0..c_out {
                    let gphi = g_phi_raw[p * c_out + co];
                    let gp = g_p[p * c_out + co];
                    if gphi.re == 0.0 && gphi.im == 0.0 && gp == 0.0 {
                        continue;
                    }
                    let base = (ci * c_out + co) * n;
                    let along = gphi.re * dir.re + gphi.im * dir.im;
                    let c1 = rec.w * dxi * along;
                    let c2 = rec.w * xq * gp;
                    g_f1[base + k0] += w0 * c1;
                    g_f2[base + k0] += w0 * c2;
                    if w1 != 0.0 {
                        g_f1[base + k0 + 1] += w1 * c1;
                        g_f2[base + k0 + 1] += w1 * c2;
                    }
                }
            }
        }
    }

    // Input gradient: gather per scalar vertex (own-center terms plus the
    // balls that contain it).
    let mut g_xi = vec![0.0f64; v * c_in];
    par::for_each_row(&mut g_xi, c_in, |t, row| {
        // As the center, xi(t) enters each difference with weight -1.
        for j in cache.offsets[t]..cache.offsets[t + 1] {
            let rec = &cache.records[j];
            let (k0, w0, w1) = tables.interp[j];
            let k0 = k0 as usize;
            let dir = Complex64::from_polar(1.0, rec.theta_pq);
            for (ci, slot) in row.iter_mut().enumerate() {
                for co in 0..c_out {
                    let gphi = g_phi_raw[t * c_out + co];
                    if gphi.re == 0.0 && gphi.im == 0.0 {
                        continue;
                    }
                    let base = (ci * c_out + co) * n;
                    let mut f1v = w0 * f1[base + k0];
                    if w1 != 0.0 {
                        f1v += w1 * f1[base + k0 + 1];
                    }
                    let along = gphi.re * dir.re + gphi.im * dir.im;
                    *slot -= rec.w * f1v * along;
                }
            }
        }
        // As a neighbor of p, xi(t) enters the difference and the magnitude.
        for &(p, j) in cache.incoming(t) {
            let (p, j) = (p as usize, j as usize);
            let rec = &cache.records[j];
            let (k0, w0, w1) = tables.interp[j];
            let k0 = k0 as usize;
            let dir = Complex64::from_polar(1.0, rec.theta_pq);
            for (ci, slot) in row.iter_mut().enumerate() {
                for co in 0..c_out {
                    let gphi = g_phi_raw[p * c_out + co];
                    let gp = g_p[p * c_out + co];
                    if gphi.re == 0.0 && gphi.im == 0.0 && gp == 0.0 {
                        continue;
                    }
                    let base = (ci * c_out + co) * n;
                    let mut f1v = w0 * f1[base + k0];
                    let mut f2v = w0 * f2[base + k0];
                    if w1 != 0.0 {
                        f1v += w1 * f1[base + k0 + 1];
                        f2v += w1 * f2[base + k0 + 1];
                    }
                    let along = gphi.re * dir.re + gphi.im * dir.im;
                    *slot += rec.w * (f1v * along + f2v * gp);
                }
            }
        }
    });

    (g_xi, g_f1, g_f2, g_beta)
}

// ---------------------------------------------------------------------------
// ECHO descriptors.

/// Polar histogram layout for ECHO descriptors: one center bin plus
/// `radial_rings x angular_bins` bins over the disk of radius epsilon,
/// Gaussian splatting of width `sigma` (in units of the ring spacing),
/// truncated at `2 sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoConfig {
    pub descriptors: usize,
    pub radial_rings: usize,
    pub angular_bins: usize,
    pub sigma: f64,
}

impl EchoConfig {
    pub const DEFAULT_SIGMA: f64 = 0.75;

    pub fn new(descriptors: usize, radial_rings: usize, angular_bins: usize) -> Self {
        EchoConfig {
            descriptors,
            radial_rings,
            angular_bins,
            sigma: Self::DEFAULT_SIGMA,
        }
    }

    /// Picks the ring/sector split for a requested sample count
    /// `H = 1 + rings * sectors`: 8 sectors when `H - 1` divides by 8,
    /// otherwise 4 (H = 33 -> 4 x 8, H = 13 -> 3 x 4).
    pub fn for_samples(descriptors: usize, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "descriptor sample count {samples} too small"
            )));
        }
        let rest = samples - 1;
        let angular = if rest % 8 == 0 {
            8
        } else if rest % 4 == 0 {
            4
        } else {
            return Err(Error::InvalidArgument(format!(
                "descriptor sample count {samples} has no ring layout"
            )));
        };
        Ok(EchoConfig::new(descriptors, rest / angular, angular))
    }

    pub fn samples(&self) -> usize {
        1 + self.radial_rings * self.angular_bins
    }

    /// Bin centers on the disk of radius `epsilon`.
    pub fn bin_centers(&self, epsilon: f64) -> Vec<Complex64> {
        let mut centers = Vec::with_capacity(self.samples());
        centers.push(Complex64::new(0.0, 0.0));
        let spacing = epsilon / self.radial_rings as f64;
        for ring in 1..=self.radial_rings {
            for t in 0..self.angular_bins {
                let angle = std::f64::consts::TAU * t as f64 / self.angular_bins as f64;
                centers.push(Complex64::from_polar(ring as f64 * spacing, angle));
            }
        }
        centers
    }
}

/// Gauge-invariant per-vertex descriptors: every neighbor casts a vote at
/// the position of the center in the neighbor's feature-aligned frame,
/// weighted by `w_q rho_q`, splatted onto the polar bins. Output is
/// row-major `[vertex][descriptor][bin]`.
pub fn echo_descriptor(x: &TangentField, cache: &IntrinsicCache, cfg: &EchoConfig) -> Vec<f64> {
    let v = cache.n_vertices();
    let d = cfg.descriptors;
    assert_eq!(x.n_channels(), d);
    let h = cfg.samples();
    let centers = cfg.bin_centers(cache.epsilon);
    let spacing = cache.epsilon / cfg.radial_rings as f64;
    let cutoff2 = (2.0 * cfg.sigma) * (2.0 * cfg.sigma);
    let inv_two_sigma2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let inv_spacing2 = 1.0 / (spacing * spacing);
    let mut out = vec![0.0f64; v * d * h];
    par::for_each_row(&mut out, d * h, |p, row| {
        for j in cache.offsets[p]..cache.offsets[p + 1] {
            let rec = &cache.records[j];
            let q = rec.q as usize;
            for ch in 0..d {
                let (rho, phi) = x.polar(q, ch);
                if rho == 0.0 {
                    continue;
                }
                let z = Complex64::from_polar(rec.r, rec.theta_qp - phi);
                let weight = rec.w * rho;
                for (hb, c) in centers.iter().enumerate() {
                    let dz = z - c;
                    let d2 = (dz.re * dz.re + dz.im * dz.im) * inv_spacing2;
                    if d2 <= cutoff2 {
                        row[ch * h + hb] += weight * (-d2 * inv_two_sigma2).exp();
                    }
                }
            }
        }
    });
    out
}

/// Backward of [`echo_descriptor`] toward the field (the only
/// differentiable input).
pub fn echo_descriptor_backward(
    x: &TangentField,
    cache: &IntrinsicCache,
    cfg: &EchoConfig,
    gy: &[f64],
) -> Vec<Complex64> {
    let v = cache.n_vertices();
    let d = cfg.descriptors;
    let h = cfg.samples();
    let centers = cfg.bin_centers(cache.epsilon);
    let spacing = cache.epsilon / cfg.radial_rings as f64;
    let cutoff2 = (2.0 * cfg.sigma) * (2.0 * cfg.sigma);
    let inv_two_sigma2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    let inv_spacing2 = 1.0 / (spacing * spacing);
    let mut gx = vec![Complex64::new(0.0, 0.0); v * d];
    par::for_each_row(&mut gx, d, |t, row| {
        for &(p, j) in cache.incoming(t) {
            let (p, j) = (p as usize, j as usize);
            let rec = &cache.records[j];
            for (ch, slot) in row.iter_mut().enumerate() {
                let (rho, phi) = x.polar(t, ch);
                if rho == 0.0 {
                    continue;
                }
                let (cphi, sphi) = (phi.cos(), phi.sin());
                let z = Complex64::from_polar(rec.r, rec.theta_qp - phi);
                for (hb, c) in centers.iter().enumerate() {
                    let g = gy[(p * d + ch) * h + hb];
                    if g == 0.0 {
                        continue;
                    }
                    let dz = z - c;
                    let d2 = (dz.re * dz.re + dz.im * dz.im) * inv_spacing2;
                    if d2 > cutoff2 {
                        continue;
                    }
                    let k = (-d2 * inv_two_sigma2).exp();
                    // Gradient of the kernel toward the vote position.
                    let scale = -k * inv_two_sigma2 * 2.0 * inv_spacing2;
                    let kx = scale * dz.re;
                    let ky = scale * dz.im;
                    // d z / d phi = -i z.
                    let s = kx * z.im - ky * z.re;
                    slot.re += g * rec.w * (k * cphi - s * sphi);
                    slot.im += g * rec.w * (k * sphi + s * cphi);
                }
            }
        }
    });
    gx
}

// ---------------------------------------------------------------------------
// Residual convolution block (pure composition, used by contract tests).

/// Two field convolutions, each followed by a radial ReLU, plus the
/// residual connection. Input and output widths must match.
pub fn fc_res_block(
    x: &TangentField,
    filter1: &FcFilter,
    b1: &[f64],
    filter2: &FcFilter,
    b2: &[f64],
    cache: &IntrinsicCache,
) -> Result<TangentField> {
    if filter1.c_in != filter2.c_out {
        return Err(Error::dim(
            "residual block needs matching input/output widths".to_string(),
        ));
    }
    let h1 = radial_relu(&field_convolve(x, filter1, cache)?, b1);
    let h2 = radial_relu(&field_convolve(&h1, filter2, cache)?, b2);
    let mut out = h2;
    for (o, xv) in out.values.iter_mut().zip(x.values.iter()) {
        *o += xv;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Readouts, dropout, and real MLP pieces.

/// Per-vertex feature magnitudes, row-major `[vertex][channel]`.
pub fn magnitude_readout(x: &TangentField) -> Vec<f64> {
    x.values.iter().map(|z| z.norm()).collect()
}

pub fn magnitude_readout_backward(x: &TangentField, gy: &[f64]) -> Vec<Complex64> {
    x.values
        .iter()
        .zip(gy.iter())
        .map(|(z, g)| {
            let rho = z.norm();
            if rho == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(g * z.re / rho, g * z.im / rho)
            }
        })
        .collect()
}

/// Uniform mean over vertices of per-vertex real channels.
pub fn global_mean_pool(values: &[f64], n_vertices: usize, n_channels: usize) -> Vec<f64> {
    assert_eq!(values.len(), n_vertices * n_channels);
    let mut out = vec![0.0f64; n_channels];
    for p in 0..n_vertices {
        for c in 0..n_channels {
            out[c] += values[p * n_channels + c];
        }
    }
    let inv = 1.0 / n_vertices as f64;
    for o in &mut out {
        *o *= inv;
    }
    out
}

/// Seeded Bernoulli dropout mask: zero with probability `p`, survivors
/// scaled by `1/(1-p)`. Identity in inference mode.
pub fn dropout_mask(len: usize, p: f64, training: bool, seed: u64) -> Vec<f64> {
    assert!((0.0..1.0).contains(&p));
    if !training || p == 0.0 {
        return vec![1.0; len];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect()
}

/// Pure dropout over a real buffer.
pub fn dropout(values: &[f64], p: f64, training: bool, seed: u64) -> Vec<f64> {
    let mask = dropout_mask(values.len(), p, training, seed);
    values.iter().zip(mask.iter()).map(|(v, m)| v * m).collect()
}

/// Row-wise real affine map: `y[row] = W x[row] + b`.
pub fn linear_forward(
    x: &[f64],
    w: &[f64],
    bias: &[f64],
    rows: usize,
    d_in: usize,
    d_out: usize,
) -> Vec<f64> {
    assert_eq!(x.len(), rows * d_in);
    assert_eq!(w.len(), d_out * d_in);
    assert_eq!(bias.len(), d_out);
    let mut out = vec![0.0f64; rows * d_out];
    par::for_each_row(&mut out, d_out, |row, orow| {
        let xrow = &x[row * d_in..(row + 1) * d_in];
        for (j, slot) in orow.iter_mut().enumerate() {
            let wrow = &w[j * d_in..(j + 1) * d_in];
            let mut acc = bias[j];
            for (wv, xv) in wrow.iter().zip(xrow.iter()) {
                acc += wv * xv;
            }
            *slot = acc;
        }
    });
    out
}

/// Backward of [`linear_forward`].
pub fn linear_backward(
    x: &[f64],
    w: &[f64],
    gy: &[f64],
    rows: usize,
    d_in: usize,
    d_out: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0f64; rows * d_in];
    par::for_each_row(&mut gx, d_in, |row, grow| {
        let gyrow = &gy[row * d_out..(row + 1) * d_out];
        for (i, slot) in grow.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, g) in gyrow.iter().enumerate() {
                acc += w[j * d_in + i] * g;
            }
            *slot = acc;
        }
    });
    let mut gw = vec![0.0f64; d_out * d_in];
    par::for_each_row(&mut gw, d_in, |j, wrow| {
        for row in 0..rows {
            let g = gy[row * d_out + j];
            if g == 0.0 {
                continue;
            }
            let xrow = &x[row * d_in..(row + 1) * d_in];
            for (slot, xv) in wrow.iter_mut().zip(xrow.iter()) {
                *slot += g * xv;
            }
        }
    });
    let mut gb = vec![0.0f64; d_out];
    for row in 0..rows {
        for (j, slot) in gb.iter_mut().enumerate() {
            *slot += gy[row * d_out + j];
        }
    }
    (gx, gw, gb)
}
