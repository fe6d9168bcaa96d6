//! The discrete field convolution. Each neighbor `q` of a center `p`
//! contributes its transported feature value weighted by the filter
//! evaluated at the position of `p` in `q`'s feature-aligned frame:
//!
//! ```text
//! (X * f)(p) = sum_{q in N_p} sum_{|m| <= B}
//!     w_q rho_q e^{i(phi_q + phi_pq)} f_m(r_qp) e^{i beta_|m|} e^{i m (theta_qp - phi_q)}
//! ```
//!
//! The fast path factors the sum through a per-vertex accumulator
//! `A[p][m][node][ci] = sum_q w_q c_node(r) e^{i(phi_pq + m theta_qp)} u_m(X(q, ci))`
//! with `u_m(z) = rho e^{i(1-m)phi}`, followed by a dense contraction with
//! the coefficient tensor. Neighbor accumulation runs in ascending-q order
//! per center and the contraction order is fixed, so outputs are bitwise
//! deterministic for any thread count. [`brute_force_convolve`] evaluates
//! the same sum as the plainest possible nested loop and exists as the
//! reference oracle.

use num_complex::Complex64;

use crate::field::TangentField;
use crate::filter::{interp_weights, FcFilter};
use crate::intrinsic::IntrinsicCache;
use crate::par;
use crate::{Error, Result};

/// Magnitudes below this are treated as exactly zero: every term carries a
/// `rho_q` factor, so the contribution (and its subgradient) vanish.
const TINY_MAGNITUDE: f64 = 1e-300;

/// Row-block size for deterministic parallel reductions in the backward
/// pass: per-block partials are computed independently, then folded in
/// fixed block order.
const REDUCE_BLOCK: usize = 64;

/// Per-pair phase and interpolation tables derived from a cache. They
/// depend on the cache plus `(band_limit, radial_nodes)`, so one instance is
/// shared by every convolution of a network operating on that cache.
#[derive(Debug, Clone)]
pub struct ConvTables {
    pub band_limit: usize,
    pub radial_nodes: usize,
    pub epsilon: f64,
    /// `e^{i (phi_pq + m theta_qp)}` per record, `mu = m + B` fastest.
    emul: Vec<Complex64>,
    /// `(k0, w0, w1)` radial interpolation per record.
    pub(crate) interp: Vec<(u32, f64, f64)>,
}

impl ConvTables {
    pub fn new(cache: &IntrinsicCache, radial_nodes: usize, band_limit: usize) -> Self {
        let mu_count = 2 * band_limit + 1;
        let n_rec = cache.records.len();
        let mut emul = vec![Complex64::new(0.0, 0.0); n_rec * mu_count];
        let mut interp = vec![(0u32, 0.0f64, 0.0f64); n_rec];
        for (j, rec) in cache.records.iter().enumerate() {
            let base = Complex64::from_polar(1.0, rec.phi_pq);
            let step = Complex64::from_polar(1.0, rec.theta_qp);
            let mut val = base;
            // Walk m = 0 down to -B and up to +B multiplicatively.
            emul[j * mu_count + band_limit] = val;
            for m in 1..=band_limit {
                val *= step;
                emul[j * mu_count + band_limit + m] = val;
            }
            val = base;
            for m in 1..=band_limit {
                val *= step.conj();
                emul[j * mu_count + band_limit - m] = val;
            }
            let (k0, w0, w1) = interp_weights(rec.r, cache.epsilon, radial_nodes);
            interp[j] = (k0 as u32, w0, w1);
        }
        ConvTables {
            band_limit,
            radial_nodes,
            epsilon: cache.epsilon,
            emul,
            interp,
        }
    }

    #[inline]
    fn mu_count(&self) -> usize {
        2 * self.band_limit + 1
    }
}

/// Intermediates saved by the forward pass for the backward kernel.
#[derive(Debug, Clone)]
pub struct ConvWorkspace {
    /// `[p][mu][node][ci]` accumulator.
    a: Vec<Complex64>,
    /// `[p][mu][co]` per-frequency output partial sums (before offsets).
    s: Vec<Complex64>,
}

/// Gradients produced by [`field_convolve_backward`].
#[derive(Debug, Clone)]
pub struct ConvGrads {
    /// d loss / d X, complex per (vertex, in-channel).
    pub gx: Vec<Complex64>,
    /// d loss / d coefficient dof (layout of [`FcFilter::coeffs_to_dof`]).
    pub g_coeff_dof: Vec<f64>,
    /// d loss / d rotational offsets.
    pub g_offsets: Vec<f64>,
}

fn check_dims(x: &TangentField, filter: &FcFilter, cache: &IntrinsicCache) -> Result<()> {
    if x.n_vertices() != cache.n_vertices() {
        return Err(Error::dim(format!(
            "field has {} vertices, cache has {}",
            x.n_vertices(),
            cache.n_vertices()
        )));
    }
    if x.n_channels() != filter.c_in {
        return Err(Error::dim(format!(
            "field has {} channels, filter expects {}",
            x.n_channels(),
            filter.c_in
        )));
    }
    if (filter.epsilon - cache.epsilon).abs() > 1e-12 {
        return Err(Error::EpsilonMismatch {
            filter: filter.epsilon,
            cache: cache.epsilon,
        });
    }
    Ok(())
}

/// Builds `u_m(z) = rho e^{i(1-m)phi}` for `m = -B..=B` into `u`
/// (`u[mu]`, `mu = m + B`). Returns false for (near-)zero magnitudes.
#[inline]
fn fill_u_ladder(z: Complex64, band_limit: usize, u: &mut [Complex64]) -> bool {
    let rho = z.norm();
    if rho < TINY_MAGNITUDE {
        return false;
    }
    let t = z.conj() / rho; // e^{-i phi}
    u[band_limit] = z;
    let mut up = z;
    let mut down = z;
    for m in 1..=band_limit {
        up *= t;
        u[band_limit + m] = up;
        down *= t.conj();
        u[band_limit - m] = down;
    }
    true
}

/// Expanded coefficient tensor `[mu][node][ci][co]` with
/// `F_{-m} = conj(F_m)`.
fn expand_coeffs(filter: &FcFilter) -> Vec<Complex64> {
    let b = filter.band_limit;
    let mu_count = 2 * b + 1;
    let (n, cin, cout) = (filter.radial_nodes, filter.c_in, filter.c_out);
    let mut ftilde = vec![Complex64::new(0.0, 0.0); mu_count * n * cin * cout];
    for mu in 0..mu_count {
        let m = mu as i64 - b as i64;
        for k in 0..n {
            for ci in 0..cin {
                for co in 0..cout {
                    let c = filter.coeff(ci, co, m.unsigned_abs() as usize, k);
                    let c = if m < 0 { c.conj() } else { c };
                    ftilde[((mu * n + k) * cin + ci) * cout + co] = c;
                }
            }
        }
    }
    ftilde
}

/// Fast field convolution. See [`field_convolve_with_tables`] when the
/// per-cache tables are reused across calls.
pub fn field_convolve(
    x: &TangentField,
    filter: &FcFilter,
    cache: &IntrinsicCache,
) -> Result<TangentField> {
    let tables = ConvTables::new(cache, filter.radial_nodes, filter.band_limit);
    Ok(field_convolve_with_tables(x, filter, cache, &tables)?.0)
}

/// Fast field convolution returning the saved intermediates needed by
/// [`field_convolve_backward`].
pub fn field_convolve_with_tables(
    x: &TangentField,
    filter: &FcFilter,
    cache: &IntrinsicCache,
    tables: &ConvTables,
) -> Result<(TangentField, ConvWorkspace)> {
    check_dims(x, filter, cache)?;
    assert_eq!(tables.band_limit, filter.band_limit);
    assert_eq!(tables.radial_nodes, filter.radial_nodes);
    let v = x.n_vertices();
    let (cin, cout) = (filter.c_in, filter.c_out);
    let (n, b) = (filter.radial_nodes, filter.band_limit);
    let mu_count = 2 * b + 1;
    let ftilde = expand_coeffs(filter);
    let eb: Vec<Complex64> = (0..mu_count)
        .map(|mu| {
            let m = (mu as i64 - b as i64).unsigned_abs() as usize;
            Complex64::from_polar(1.0, filter.offsets[m])
        })
        .collect();

    let a_stride = mu_count * n * cin;
    let s_stride = mu_count * cout;
    let mut a = vec![Complex64::new(0.0, 0.0); v * a_stride];
    let mut s = vec![Complex64::new(0.0, 0.0); v * s_stride];
    let mut y = vec![Complex64::new(0.0, 0.0); v * cout];

    let offsets = &cache.offsets;
    let records = &cache.records;
    let xs = &x.values;
    par::for_each_row3(
        &mut y,
        cout,
        &mut a,
        a_stride,
        &mut s,
        s_stride,
        |p, yrow, arow, srow| {
            let mut u = vec![Complex64::new(0.0, 0.0); mu_count];
            for j in offsets[p]..offsets[p + 1] {
                let rec = &records[j];
                let (k0, w0, w1) = tables.interp[j];
                let k0 = k0 as usize;
                let q = rec.q as usize;
                for ci in 0..cin {
                    let z = xs[q * cin + ci];
                    if !fill_u_ladder(z, b, &mut u) {
                        continue;
                    }
                    for (mu, um) in u.iter().enumerate() {
                        let prod = tables.emul[j * mu_count + mu] * um * rec.w;
                        arow[(mu * n + k0) * cin + ci] += w0 * prod;
                        if w1 != 0.0 {
                            arow[(mu * n + k0 + 1) * cin + ci] += w1 * prod;
                        }
                    }
                }
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); cout];
            for mu in 0..mu_count {
                acc.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                for k in 0..n {
                    for ci in 0..cin {
                        let aval = arow[(mu * n + k) * cin + ci];
                        if aval.re == 0.0 && aval.im == 0.0 {
                            continue;
                        }
                        let fbase = ((mu * n + k) * cin + ci) * cout;
                        for (co, accc) in acc.iter_mut().enumerate() {
                            *accc += aval * ftilde[fbase + co];
                        }
                    }
                }
                for co in 0..cout {
                    srow[mu * cout + co] = acc[co];
                    yrow[co] += eb[mu] * acc[co];
                }
            }
        },
    );

    Ok((
        TangentField::from_values(y, v, cout),
        ConvWorkspace { a, s },
    ))
}

/// Analytic backward pass of the field convolution with respect to the
/// input field, the coefficient dof vector, and the rotational offsets.
/// `gy` holds d loss / d output per (vertex, out-channel) in the complex
/// pair convention `(d/dRe, d/dIm)`.
pub fn field_convolve_backward(
    x: &TangentField,
    filter: &FcFilter,
    cache: &IntrinsicCache,
    tables: &ConvTables,
    ws: &ConvWorkspace,
    gy: &[Complex64],
) -> ConvGrads {
    let v = x.n_vertices();
    let (cin, cout) = (filter.c_in, filter.c_out);
    let (n, b) = (filter.radial_nodes, filter.band_limit);
    let mu_count = 2 * b + 1;
    assert_eq!(gy.len(), v * cout);
    let ftilde = expand_coeffs(filter);
    let eb: Vec<Complex64> = (0..mu_count)
        .map(|mu| {
            let m = (mu as i64 - b as i64).unsigned_abs() as usize;
            Complex64::from_polar(1.0, filter.offsets[m])
        })
        .collect();

    let a_stride = mu_count * n * cin;
    let s_stride = mu_count * cout;

    // gS = conj(e^{i beta}) gY, and gA = sum_co conj(Ftilde) gS.
    let mut gs = vec![Complex64::new(0.0, 0.0); v * s_stride];
    let mut ga = vec![Complex64::new(0.0, 0.0); v * a_stride];
    par::for_each_row2(
        &mut gs,
        s_stride,
        &mut ga,
        a_stride,
        |p, gsrow, garow| {
            for mu in 0..mu_count {
                let ebc = eb[mu].conj();
                for co in 0..cout {
                    gsrow[mu * cout + co] = ebc * gy[p * cout + co];
                }
            }
            for mu in 0..mu_count {
                for k in 0..n {
                    for ci in 0..cin {
                        let fbase = ((mu * n + k) * cin + ci) * cout;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for co in 0..cout {
                            acc += ftilde[fbase + co].conj() * gsrow[mu * cout + co];
                        }
                        garow[(mu * n + k) * cin + ci] = acc;
                    }
                }
            }
        },
    );

    // Offset and coefficient gradients: per-block partials folded in block
    // order (deterministic for any thread count).
    let n_blocks = v.div_ceil(REDUCE_BLOCK);
    let ftilde_len = ftilde.len();
    let partials: Vec<(Vec<f64>, Vec<Complex64>)> = par::map_indexed(n_blocks, |blk| {
        let mut g_beta = vec![0.0f64; b + 1];
        let mut g_ftilde = vec![Complex64::new(0.0, 0.0); ftilde_len];
        let lo = blk * REDUCE_BLOCK;
        let hi = (lo + REDUCE_BLOCK).min(v);
        for p in lo..hi {
            for mu in 0..mu_count {
                let m_abs = (mu as i64 - b as i64).unsigned_abs() as usize;
                let ieb = Complex64::new(0.0, 1.0) * eb[mu];
                for co in 0..cout {
                    let sval = ws.s[p * s_stride + mu * cout + co];
                    let g = gy[p * cout + co];
                    let d = ieb * sval;
                    g_beta[m_abs] += g.re * d.re + g.im * d.im;
                }
                for k in 0..n {
                    for ci in 0..cin {
                        let aval = ws.a[p * a_stride + (mu * n + k) * cin + ci];
                        if aval.re == 0.0 && aval.im == 0.0 {
                            continue;
                        }
                        let ac = aval.conj();
                        let fbase = ((mu * n + k) * cin + ci) * cout;
                        for co in 0..cout {
                            g_ftilde[fbase + co] += ac * gs[p * s_stride + mu * cout + co];
                        }
                    }
                }
            }
        }
        (g_beta, g_ftilde)
    });
    let mut g_offsets = vec![0.0f64; b + 1];
    let mut g_ftilde = vec![Complex64::new(0.0, 0.0); ftilde_len];
    for (gb, gf) in &partials {
        for (acc, x) in g_offsets.iter_mut().zip(gb.iter()) {
            *acc += x;
        }
        for (acc, x) in g_ftilde.iter_mut().zip(gf.iter()) {
            *acc += x;
        }
    }

    // Fold the expanded tensor back to the m >= 0 dof layout:
    // gF_m = gFtilde_{+m} + conj(gFtilde_{-m}); m = 0 keeps the real part.
    let mut g_coeff_dof = Vec::with_capacity(filter.coeff_dof_len());
    for ci in 0..cin {
        for co in 0..cout {
            for k in 0..n {
                let g0 = g_ftilde[((b * n + k) * cin + ci) * cout + co];
                g_coeff_dof.push(g0.re);
            }
            for m in 1..=b {
                for k in 0..n {
                    let gp = g_ftilde[(((b + m) * n + k) * cin + ci) * cout + co];
                    let gn = g_ftilde[(((b - m) * n + k) * cin + ci) * cout + co];
                    let gm = gp + gn.conj();
                    g_coeff_dof.push(gm.re);
                    g_coeff_dof.push(gm.im);
                }
            }
        }
    }

    // Input gradient: gather per source vertex over the balls that contain
    // it (membership is symmetric, so the transpose index covers all uses).
    let mut gx = vec![Complex64::new(0.0, 0.0); v * cin];
    let records = &cache.records;
    let xs = &x.values;
    par::for_each_row(&mut gx, cin, |q, gxrow| {
        let mut u = vec![Complex64::new(0.0, 0.0); mu_count];
        for &(p, j) in cache.incoming(q) {
            let (p, j) = (p as usize, j as usize);
            let rec = &records[j];
            let (k0, w0, w1) = tables.interp[j];
            let k0 = k0 as usize;
            for ci in 0..cin {
                let z = xs[q * cin + ci];
                let rho = z.norm();
                if rho < TINY_MAGNITUDE {
                    continue;
                }
                if !fill_u_ladder(z, b, &mut u) {
                    continue;
                }
                let cosphi = z.re / rho;
                let sinphi = z.im / rho;
                let ga_base = p * a_stride;
                for mu in 0..mu_count {
                    let m = mu as i64 - b as i64;
                    // A += (w c_k emul) u, so gu = w c_k conj(emul) gA.
                    let econj = tables.emul[j * mu_count + mu].conj();
                    let mut gu = (rec.w * w0) * econj * ga[ga_base + (mu * n + k0) * cin + ci];
                    if w1 != 0.0 {
                        gu += (rec.w * w1) * econj * ga[ga_base + (mu * n + k0 + 1) * cin + ci];
                    }
                    // u = rho e^{i(1-m)phi}: real-pair partials toward z.
                    let e_pow = u[mu] / rho;
                    let one_m = (1 - m) as f64;
                    let dux = e_pow * Complex64::new(cosphi, -one_m * sinphi);
                    let duy = e_pow * Complex64::new(sinphi, one_m * cosphi);
                    gxrow[ci].re += gu.re * dux.re + gu.im * dux.im;
                    gxrow[ci].im += gu.re * duy.re + gu.im * duy.im;
                }
            }
        }
    });

    ConvGrads {
        gx,
        g_coeff_dof,
        g_offsets,
    }
}

/// Reference evaluation of the same sum as the plainest possible nested
/// loop over centers, neighbors, channels, and frequencies. No factoring,
/// no shared tables; kept for oracle tests.
pub fn brute_force_convolve(
    x: &TangentField,
    filter: &FcFilter,
    cache: &IntrinsicCache,
) -> Result<TangentField> {
    check_dims(x, filter, cache)?;
    let v = x.n_vertices();
    let (cin, cout) = (filter.c_in, filter.c_out);
    let b = filter.band_limit as i64;
    let mut out = TangentField::zeros(v, cout);
    for p in 0..v {
        for rec in cache.neighbors(p) {
            for ci in 0..cin {
                let (rho, phi) = x.polar(rec.q as usize, ci);
                for co in 0..cout {
                    for m in -b..=b {
                        let mut fm = filter.radial_value(ci, co, m.unsigned_abs() as usize, rec.r);
                        if m < 0 {
                            fm = fm.conj();
                        }
                        let term = rec.w
                            * rho
                            * Complex64::from_polar(1.0, phi + rec.phi_pq)
                            * fm
                            * Complex64::from_polar(1.0, filter.offsets[m.unsigned_abs() as usize])
                            * Complex64::from_polar(1.0, m as f64 * (rec.theta_qp - phi));
                        let cur = out.get(p, co);
                        out.set(p, co, cur + term);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intrinsic::{assemble_cache, build_frames, IsolatedPolicy, NeighborRecord, TangentFrames};
    use crate::mesh::{synth, vertex_area_weights};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn two_vertex_cache(w: f64, r: f64, theta_qp: f64, theta_pq: f64, phi_pq: f64) -> IntrinsicCache {
        let frames = TangentFrames {
            e1: vec![Vector3::x(); 2],
            e2: vec![Vector3::y(); 2],
            normal: vec![Vector3::z(); 2],
        };
        let rec_pq = NeighborRecord {
            q: 1,
            w,
            r,
            theta_qp,
            theta_pq,
            phi_pq,
        };
        let rec_qp = NeighborRecord {
            q: 0,
            w: 1.0,
            r,
            theta_qp: theta_pq,
            theta_pq: theta_qp,
            phi_pq: -phi_pq,
        };
        IntrinsicCache::from_parts(
            0.2,
            frames,
            vec![0, 1, 2],
            vec![rec_pq, rec_qp],
            [0u8; 32],
        )
    }

    fn sphere_cache() -> (IntrinsicCache, usize) {
        let m = synth::icosphere(1);
        let f = build_frames(&m).unwrap();
        let w = vertex_area_weights(&m);
        let cache = assemble_cache(&m, &f, &w, 0.8, IsolatedPolicy::Error).unwrap();
        let v = m.n_vertices();
        (cache, v)
    }

    fn random_field(v: usize, c: usize, rng: &mut impl Rng) -> TangentField {
        let values = (0..v * c)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        TangentField::from_values(values, v, c)
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let filter = FcFilter::random_init(2, 3, 2, 4, cache.epsilon, &mut rng);
        let x = TangentField::zeros(v, 2);
        let y = field_convolve(&x, &filter, &cache).unwrap();
        assert!(y.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_pair_hand_evaluation() {
        // w = 0.5, rho = 2, phi = pi/2, phi_pq = 0, constant isotropic
        // filter 1: output at p is 0.5 * 2 * e^{i pi/2} = i.
        let cache = two_vertex_cache(0.5, 0.1, 0.3, -0.7, 0.0);
        let mut filter = FcFilter::zeros(1, 1, 0, 3, 0.2);
        for k in 0..3 {
            let idx = filter.index(0, 0, 0, k);
            filter.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        let mut x = TangentField::zeros(2, 1);
        x.set(1, 0, Complex64::from_polar(2.0, FRAC_PI_2));
        let y = field_convolve(&x, &filter, &cache).unwrap();
        assert!((y.get(0, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        let yb = brute_force_convolve(&x, &filter, &cache).unwrap();
        assert!((yb.get(0, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn fast_path_matches_brute_force() {
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..20 {
            let (cin, cout) = (1 + case % 3, 1 + (case / 3) % 3);
            let b = case % 3;
            let filter = FcFilter::random_init(cin, cout, b, 4, cache.epsilon, &mut rng);
            let x = random_field(v, cin, &mut rng);
            let fast = field_convolve(&x, &filter, &cache).unwrap();
            let brute = brute_force_convolve(&x, &filter, &cache).unwrap();
            assert!(
                fast.max_abs_diff(&brute) <= 1e-12,
                "case {case}: diff {}",
                fast.max_abs_diff(&brute)
            );
        }
    }

    #[test]
    fn offsets_rotate_output() {
        let cache = two_vertex_cache(1.0, 0.1, 0.0, PI, 0.0);
        let mut filter = FcFilter::zeros(1, 1, 0, 2, 0.2);
        for k in 0..2 {
            let idx = filter.index(0, 0, 0, k);
            filter.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        let mut x = TangentField::zeros(2, 1);
        x.set(1, 0, Complex64::new(1.0, 0.0));
        let y0 = field_convolve(&x, &filter, &cache).unwrap().get(0, 0);
        filter.offsets[0] = 0.4;
        let y1 = field_convolve(&x, &filter, &cache).unwrap().get(0, 0);
        assert!((y1 - y0 * Complex64::from_polar(1.0, 0.4)).norm() < 1e-12);
    }

    #[test]
    fn gauge_equivariance_is_exact() {
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let filter = FcFilter::random_init(2, 2, 2, 5, cache.epsilon, &mut rng);
        let x = random_field(v, 2, &mut rng);
        let y = field_convolve(&x, &filter, &cache).unwrap();

        let alphas: Vec<f64> = (0..v).map(|_| rng.gen_range(-PI..PI)).collect();
        let cache_rot = cache.rotated_gauge(&alphas);
        let mut x_rot = x.clone();
        for p in 0..v {
            let rot = Complex64::from_polar(1.0, -alphas[p]);
            for c in 0..2 {
                x_rot.set(p, c, x.get(p, c) * rot);
            }
        }
        let y_rot = field_convolve(&x_rot, &filter, &cache_rot).unwrap();
        let mut max_dev = 0.0f64;
        for p in 0..v {
            let rot = Complex64::from_polar(1.0, -alphas[p]);
            for c in 0..2 {
                max_dev = max_dev.max((y_rot.get(p, c) - y.get(p, c) * rot).norm());
            }
        }
        assert!(max_dev <= 1e-10, "gauge deviation {max_dev}");
    }

    #[test]
    fn linear_in_x_for_isotropic_filters() {
        // The m = 0 term is the only complex-linear one; a band-limit-0
        // filter therefore commutes with complex scalings and sums.
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let filter = FcFilter::random_init(2, 2, 0, 4, cache.epsilon, &mut rng);
        let x = random_field(v, 2, &mut rng);
        let yx = random_field(v, 2, &mut rng);
        let a = Complex64::new(0.8, -1.3);
        let bsc = Complex64::new(-0.2, 0.45);
        let mut combo = TangentField::zeros(v, 2);
        for i in 0..v * 2 {
            combo.values[i] = a * x.values[i] + bsc * yx.values[i];
        }
        let lhs = field_convolve(&combo, &filter, &cache).unwrap();
        let fx = field_convolve(&x, &filter, &cache).unwrap();
        let fy = field_convolve(&yx, &filter, &cache).unwrap();
        for i in 0..v * 2 {
            let rhs = a * fx.values[i] + bsc * fy.values[i];
            assert!((lhs.values[i] - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn positively_homogeneous_in_x() {
        // General band limits scale with positive reals (rho scales, the
        // feature-aligned filter argument is unchanged).
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let filter = FcFilter::random_init(2, 2, 2, 4, cache.epsilon, &mut rng);
        let x = random_field(v, 2, &mut rng);
        let c = 1.7;
        let mut scaled = x.clone();
        for z in &mut scaled.values {
            *z *= c;
        }
        let lhs = field_convolve(&scaled, &filter, &cache).unwrap();
        let rhs = field_convolve(&x, &filter, &cache).unwrap();
        for i in 0..v * 2 {
            assert!((lhs.values[i] - c * rhs.values[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn linear_in_coefficients() {
        let (cache, v) = sphere_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_field(v, 2, &mut rng);
        let f1 = FcFilter::random_init(2, 2, 1, 4, cache.epsilon, &mut rng);
        let mut f2 = FcFilter::random_init(2, 2, 1, 4, cache.epsilon, &mut rng);
        f2.offsets = f1.offsets.clone();
        let (a, bsc) = (0.6, -1.9);
        let mut combo = f1.clone();
        for (c, (c1, c2)) in combo
            .coeffs
            .iter_mut()
            .zip(f1.coeffs.iter().zip(f2.coeffs.iter()))
        {
            *c = a * c1 + bsc * c2;
        }
        let lhs = field_convolve(&x, &combo, &cache).unwrap();
        let y1 = field_convolve(&x, &f1, &cache).unwrap();
        let y2 = field_convolve(&x, &f2, &cache).unwrap();
        for i in 0..lhs.values.len() {
            let rhs = a * y1.values[i] + bsc * y2.values[i];
            assert!((lhs.values[i] - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (cache, v) = sphere_cache();
        let filter = FcFilter::zeros(2, 2, 1, 3, cache.epsilon);
        let x = TangentField::zeros(v, 3);
        assert!(matches!(
            field_convolve(&x, &filter, &cache),
            Err(Error::DimensionMismatch { .. })
        ));
        let filter_bad_eps = FcFilter::zeros(2, 2, 1, 3, cache.epsilon * 2.0);
        let x = TangentField::zeros(v, 2);
        assert!(matches!(
            field_convolve(&x, &filter_bad_eps, &cache),
            Err(Error::EpsilonMismatch { .. })
        ));
    }
}
