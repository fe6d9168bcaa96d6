//! Band-limited filter parameterization: complex Fourier coefficients over
//! angular frequencies `m = 0..=B` at `N` radial nodes spanning `[0,
//! epsilon]`, plus one learned rotational offset per frequency magnitude.
//! Negative frequencies are implicit through `f_{-m}(r) = conj(f_m(r))`, so
//! the filter is real-valued; this forces the `m = 0` coefficients real.

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Filter coefficients for a full `C_in x C_out` channel block.
#[derive(Debug, Clone, PartialEq)]
pub struct FcFilter {
    pub c_in: usize,
    pub c_out: usize,
    pub band_limit: usize,
    pub radial_nodes: usize,
    pub epsilon: f64,
    /// Indexed `[ci][co][m][node]`, `m = 0..=band_limit`. The imaginary
    /// parts of the `m = 0` slice are structurally zero.
    pub coeffs: Vec<Complex64>,
    /// Rotational offsets, one per frequency magnitude (`band_limit + 1`).
    pub offsets: Vec<f64>,
}

/// Trainable real degrees of freedom per `(c_in, c_out)` channel pair plus
/// the shared offsets: `N (2 B + 1) + B + 1`.
pub fn count_parameters(radial_nodes: usize, band_limit: usize) -> usize {
    assert!(radial_nodes >= 1);
    radial_nodes * (2 * band_limit + 1) + band_limit + 1
}

/// Linear interpolation weights on `radial_nodes` uniform nodes over
/// `[0, epsilon]` (both endpoints included). Returns `(k0, w0, w1)` with the
/// value read as `w0 * f[k0] + w1 * f[k0 + 1]`; `w1` is 0 when `k0` is the
/// last node.
#[inline]
pub fn interp_weights(r: f64, epsilon: f64, radial_nodes: usize) -> (usize, f64, f64) {
    if radial_nodes == 1 {
        return (0, 1.0, 0.0);
    }
    let t = (r / epsilon) * (radial_nodes - 1) as f64;
    let mut k0 = t.floor() as usize;
    if k0 >= radial_nodes - 1 {
        k0 = radial_nodes - 2;
    }
    let frac = t - k0 as f64;
    (k0, 1.0 - frac, frac)
}

impl FcFilter {
    pub fn zeros(
        c_in: usize,
        c_out: usize,
        band_limit: usize,
        radial_nodes: usize,
        epsilon: f64,
    ) -> Self {
        FcFilter {
            c_in,
            c_out,
            band_limit,
            radial_nodes,
            epsilon,
            coeffs: vec![Complex64::new(0.0, 0.0); c_in * c_out * (band_limit + 1) * radial_nodes],
            offsets: vec![0.0; band_limit + 1],
        }
    }

    /// Coefficients i.i.d. uniform on `[-s, s]` with
    /// `s = 1 / sqrt(c_in (2 B + 1))`; offsets start at zero.
    pub fn random_init(
        c_in: usize,
        c_out: usize,
        band_limit: usize,
        radial_nodes: usize,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut f = Self::zeros(c_in, c_out, band_limit, radial_nodes, epsilon);
        let s = 1.0 / ((c_in * (2 * band_limit + 1)) as f64).sqrt();
        for ci in 0..c_in {
            for co in 0..c_out {
                for m in 0..=band_limit {
                    for k in 0..radial_nodes {
                        let re = rng.gen_range(-s..=s);
                        let im = if m == 0 { 0.0 } else { rng.gen_range(-s..=s) };
                        let idx = f.index(ci, co, m, k);
                        f.coeffs[idx] = Complex64::new(re, im);
                    }
                }
            }
        }
        f
    }

    #[inline]
    pub fn index(&self, ci: usize, co: usize, m: usize, k: usize) -> usize {
        ((ci * self.c_out + co) * (self.band_limit + 1) + m) * self.radial_nodes + k
    }

    #[inline]
    pub fn coeff(&self, ci: usize, co: usize, m: usize, k: usize) -> Complex64 {
        self.coeffs[self.index(ci, co, m, k)]
    }

    /// Radial profile of frequency `m` at radius `r` for one channel pair.
    pub fn radial_value(&self, ci: usize, co: usize, m: usize, r: f64) -> Complex64 {
        let (k0, w0, w1) = interp_weights(r, self.epsilon, self.radial_nodes);
        let mut v = w0 * self.coeff(ci, co, m, k0);
        if w1 != 0.0 {
            v += w1 * self.coeff(ci, co, m, k0 + 1);
        }
        v
    }

    /// Filter evaluation at `z` for one channel pair, as the full complex
    /// angular sum (no rotational offsets). Real-valued up to rounding.
    pub fn eval_complex(&self, ci: usize, co: usize, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if r > self.epsilon * (1.0 + 1e-12) {
            return Err(Error::OutsideSupport {
                radius: r,
                epsilon: self.epsilon,
            });
        }
        let theta = if r == 0.0 { 0.0 } else { z.im.atan2(z.re) };
        let mut sum = self.radial_value(ci, co, 0, r);
        for m in 1..=self.band_limit {
            let fm = self.radial_value(ci, co, m, r);
            let phase = Complex64::from_polar(1.0, m as f64 * theta);
            sum += fm * phase + fm.conj() * phase.conj();
        }
        Ok(sum)
    }

    /// Real filter value at `z` (errors when `|z|` exceeds the support).
    pub fn eval_at(&self, ci: usize, co: usize, z: Complex64) -> Result<f64> {
        Ok(self.eval_complex(ci, co, z)?.re)
    }

    /// Number of real coefficient degrees of freedom (excludes offsets).
    pub fn coeff_dof_len(&self) -> usize {
        self.c_in * self.c_out * self.radial_nodes * (2 * self.band_limit + 1)
    }

    /// Packs coefficients into the trainable real vector: per channel pair,
    /// the `m = 0` node values (real), then `(re, im)` node pairs for each
    /// `m >= 1`.
    pub fn coeffs_to_dof(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coeff_dof_len());
        for ci in 0..self.c_in {
            for co in 0..self.c_out {
                for k in 0..self.radial_nodes {
                    out.push(self.coeff(ci, co, 0, k).re);
                }
                for m in 1..=self.band_limit {
                    for k in 0..self.radial_nodes {
                        let c = self.coeff(ci, co, m, k);
                        out.push(c.re);
                        out.push(c.im);
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`FcFilter::coeffs_to_dof`].
    pub fn set_coeffs_from_dof(&mut self, dof: &[f64]) {
        assert_eq!(dof.len(), self.coeff_dof_len());
        let mut it = dof.iter();
        for ci in 0..self.c_in {
            for co in 0..self.c_out {
                for k in 0..self.radial_nodes {
                    let idx = self.index(ci, co, 0, k);
                    self.coeffs[idx] = Complex64::new(*it.next().unwrap(), 0.0);
                }
                for m in 1..=self.band_limit {
                    for k in 0..self.radial_nodes {
                        let re = *it.next().unwrap();
                        let im = *it.next().unwrap();
                        let idx = self.index(ci, co, m, k);
                        self.coeffs[idx] = Complex64::new(re, im);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count_formula() {
        assert_eq!(count_parameters(6, 2), 33);
        assert_eq!(count_parameters(1, 0), 2);
        assert_eq!(count_parameters(3, 1), 11);
        assert_eq!(count_parameters(6, 1), 20);
    }

    #[test]
    fn dof_packing_matches_count() {
        let f = FcFilter::zeros(3, 5, 2, 6, 0.2);
        // Per channel pair N(2B+1) coefficients plus B+1 shared offsets.
        assert_eq!(
            f.coeff_dof_len() / (3 * 5) + f.offsets.len(),
            count_parameters(6, 2)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = FcFilter::random_init(3, 5, 2, 6, 0.2, &mut rng);
        let dof = f.coeffs_to_dof();
        let mut g = FcFilter::zeros(3, 5, 2, 6, 0.2);
        g.set_coeffs_from_dof(&dof);
        assert_eq!(g.coeffs, f.coeffs);
    }

    #[test]
    fn constant_isotropic_filter() {
        let mut f = FcFilter::zeros(1, 1, 2, 4, 1.0);
        for k in 0..4 {
            let idx = f.index(0, 0, 0, k);
            f.coeffs[idx] = Complex64::new(2.5, 0.0);
        }
        for z in [
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.5, 0.5),
            Complex64::new(0.0, 0.0),
        ] {
            assert!((f.eval_at(0, 0, z).unwrap() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_first_harmonic_reproduces_r_cos_theta() {
        // f_1 node values r_k / 2 give f(r e^{i theta}) = r cos(theta):
        // linear interpolation is exact on linear radial profiles.
        let n = 5;
        let eps = 1.0;
        let mut f = FcFilter::zeros(1, 1, 1, n, eps);
        for k in 0..n {
            let rk = eps * k as f64 / (n - 1) as f64;
            let idx = f.index(0, 0, 1, k);
            f.coeffs[idx] = Complex64::new(rk / 2.0, 0.0);
        }
        for (r, theta) in [(0.0, 0.3), (0.37, 1.1), (0.8, -2.0), (1.0, 0.0)] {
            let z = Complex64::from_polar(r, theta);
            let got = f.eval_at(0, 0, z).unwrap();
            assert!((got - r * theta.cos()).abs() < 1e-12, "r={r} theta={theta}");
        }
    }

    #[test]
    fn nodal_exactness() {
        let n = 6;
        let eps = 0.2;
        let mut f = FcFilter::zeros(1, 1, 0, n, eps);
        let k = 3;
        let idx = f.index(0, 0, 0, k);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        let rk = eps * k as f64 / (n - 1) as f64;
        let (k0, w0, w1) = interp_weights(rk, eps, n);
        assert!(k0 == k && (w0 - 1.0).abs() < 1e-12 || k0 + 1 == k && (w1 - 1.0).abs() < 1e-12);
        let got = f.eval_at(0, 0, Complex64::from_polar(rk, 0.7)).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_real_for_random_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = FcFilter::random_init(2, 3, 3, 5, 0.5, &mut rng);
        for _ in 0..50 {
            let r = rng.gen_range(0.0..0.5);
            let theta = rng.gen_range(-3.14..3.14);
            let z = Complex64::from_polar(r, theta);
            let v = f.eval_complex(1, 2, z).unwrap();
            assert!(v.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn outside_support_is_rejected() {
        let f = FcFilter::zeros(1, 1, 1, 3, 0.2);
        assert!(matches!(
            f.eval_at(0, 0, Complex64::new(0.3, 0.0)),
            Err(Error::OutsideSupport { .. })
        ));
    }
}
