//! Trigonometric-interpolation derivatives on the periodic φ grid.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Differentiates periodic samples on n equispaced nodes by FFT. Exact for
/// trigonometric polynomials of degree < n/2.
pub struct SpectralDiff {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDiff").field("n", &self.n).finish()
    }
}

impl SpectralDiff {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `order`-th derivative of the samples (period 2π).
    pub fn derivative(&self, samples: &[f64], order: u32) -> Vec<f64> {
        assert_eq!(samples.len(), self.n);
        if order == 0 {
            return samples.to_vec();
        }
        let n = self.n;
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (m, c) in buf.iter_mut().enumerate() {
            let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            // The Nyquist mode of an even grid has no well-defined odd derivative.
            if n.is_multiple_of(2) && m == n / 2 && order % 2 == 1 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, k).powu(order);
            *c *= ik;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn exact_on_trig_polynomials() {
        let n = 32;
        let d = SpectralDiff::new(n);
        let phi: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        let f: Vec<f64> = phi.iter().map(|p| 1.0 + (3.0 * p).sin() - 0.5 * (7.0 * p).cos()).collect();
        let d1 = d.derivative(&f, 1);
        let d2 = d.derivative(&f, 2);
        for (k, p) in phi.iter().enumerate() {
            let e1 = 3.0 * (3.0 * p).cos() + 3.5 * (7.0 * p).sin();
            let e2 = -9.0 * (3.0 * p).sin() + 24.5 * (7.0 * p).cos();
            assert!((d1[k] - e1).abs() < 1e-12);
            assert!((d2[k] - e2).abs() < 1e-11);
        }
    }
}
