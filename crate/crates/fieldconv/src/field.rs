//! Per-vertex, per-channel tangent vectors stored as complex numbers in each
//! vertex's local frame.

use num_complex::Complex64;

/// A multi-channel tangent vector field. Values are row-major over
/// `(vertex, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    pub values: Vec<Complex64>,
    n_vertices: usize,
    n_channels: usize,
}

impl TangentField {
    pub fn zeros(n_vertices: usize, n_channels: usize) -> Self {
        TangentField {
            values: vec![Complex64::new(0.0, 0.0); n_vertices * n_channels],
            n_vertices,
            n_channels,
        }
    }

    pub fn from_values(values: Vec<Complex64>, n_vertices: usize, n_channels: usize) -> Self {
        assert_eq!(values.len(), n_vertices * n_channels);
        TangentField {
            values,
            n_vertices,
            n_channels,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    #[inline]
    pub fn get(&self, vertex: usize, channel: usize) -> Complex64 {
        self.values[vertex * self.n_channels + channel]
    }

    #[inline]
    pub fn set(&mut self, vertex: usize, channel: usize, value: Complex64) {
        self.values[vertex * self.n_channels + channel] = value;
    }

    /// Magnitude and phase; the phase is defined as 0 at zero magnitude.
    #[inline]
    pub fn polar(&self, vertex: usize, channel: usize) -> (f64, f64) {
        polar(self.get(vertex, channel))
    }

    /// Interleaved (re, im) layout used for tape values.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() * 2);
        for z in &self.values {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn from_flat(flat: &[f64], n_vertices: usize, n_channels: usize) -> Self {
        assert_eq!(flat.len(), 2 * n_vertices * n_channels);
        let values = flat
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        TangentField::from_values(values, n_vertices, n_channels)
    }

    pub fn max_abs_diff(&self, other: &TangentField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Polar decomposition with the zero-magnitude phase convention.
#[inline]
pub fn polar(z: Complex64) -> (f64, f64) {
    let rho = z.norm();
    if rho == 0.0 {
        (0.0, 0.0)
    } else {
        (rho, z.im.atan2(z.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_roundtrip() {
        let mut f = TangentField::zeros(3, 2);
        f.set(1, 0, Complex64::new(0.5, -2.0));
        f.set(2, 1, Complex64::new(-1.0, 3.0));
        let back = TangentField::from_flat(&f.to_flat(), 3, 2);
        assert_eq!(back, f);
    }

    #[test]
    fn polar_of_zero() {
        assert_eq!(polar(Complex64::new(0.0, 0.0)), (0.0, 0.0));
    }
}
