//! Monte-Carlo rods in (y, φ): Euler–Maruyama for
//! dy = −V(φ)dt + √(2ε) dW₁, dφ = Φ(φ)dt + √(2D) dW₂,
//! reflected at y = 0 and wrapped in φ.
//!
//! Particle k owns the generator seeded with `seed ^ k·stream_stride`, so an
//! ensemble is reproducible bit for bit whatever the thread count.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coefficients::ModelParams;
use crate::error::{Error, Result};
use crate::grids::{PhaseField, PhaseGrid};

pub const DEFAULT_STREAM_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Tolerance on the mass mismatch accepted by [`tv_distance`].
pub const TV_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
    pub seed: u64,
    pub stream_stride: u64,
    rngs: Vec<SmallRng>,
}

fn substream(seed: u64, stride: u64, k: usize) -> SmallRng {
    SmallRng::seed_from_u64(seed ^ (k as u64).wrapping_mul(stride))
}

impl ParticleEnsemble {
    pub fn new(y: Vec<f64>, phi: Vec<f64>, seed: u64, stream_stride: u64) -> Result<Self> {
        if y.len() != phi.len() {
            return Err(Error::Config(format!("{} positions but {} angles", y.len(), phi.len())));
        }
        if let Some(bad) = y.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Config(format!("particle position {bad} is negative")));
        }
        let rngs = (0..y.len()).map(|k| substream(seed, stream_stride, k)).collect();
        let phi = phi.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self { y, phi, seed, stream_stride, rngs })
    }

    /// `n` particles with y ~ e^{−y} truncated to [0, y_max] and φ uniform,
    /// each drawn from its own substream.
    pub fn sample_truncated_exponential(n: usize, y_max: f64, seed: u64, stream_stride: u64) -> Self {
        let norm = -(-y_max).exp_m1();
        let mut rngs: Vec<SmallRng> = (0..n).map(|k| substream(seed, stream_stride, k)).collect();
        let (y, phi): (Vec<f64>, Vec<f64>) = rngs
            .par_iter_mut()
            .map(|r| {
                let u: f64 = r.random();
                let p: f64 = r.random();
                (-(-u * norm).ln_1p(), p * TAU)
            })
            .unzip();
        Self { y, phi, seed, stream_stride, rngs }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Largest step accepted by [`em_step`]: 0.1 / max(‖Φ‖∞, ‖V‖∞).
pub fn max_step(params: &ModelParams) -> f64 {
    0.1 / params.turning.sup_abs(0).max(params.speed.sup_abs(0))
}

pub fn em_step(e: &mut ParticleEnsemble, params: &ModelParams, dt: f64) -> Result<()> {
    if !(dt > 0.0) || dt > max_step(params) {
        return Err(Error::Config(format!("particle dt = {dt} must lie in (0, {}]", max_step(params))));
    }
    let sy = (2.0 * params.epsilon * dt).sqrt();
    let sp = (2.0 * params.diffusion * dt).sqrt();
    let (speed, turning) = (&params.speed, &params.turning);
    e.y.par_iter_mut().zip(e.phi.par_iter_mut()).zip(e.rngs.par_iter_mut()).for_each(|((y, phi), r)| {
        let n1: f64 = r.sample(StandardNormal);
        let n2: f64 = r.sample(StandardNormal);
        let p = *phi;
        *y = (*y - speed.value(p) * dt + sy * n1).abs();
        *phi = (p + turning.value(p) * dt + sp * n2).rem_euclid(TAU);
    });
    Ok(())
}

/// Steps the ensemble to `t_final` with uniform steps no longer than `dt`.
pub fn run_particles(e: &mut ParticleEnsemble, params: &ModelParams, dt: f64, t_final: f64) -> Result<()> {
    for h in crate::full_solver::interval_steps(t_final, dt) {
        em_step(e, params, h)?;
    }
    Ok(())
}

/// Particle density per cell, normalised to unit mass. Particles above the
/// grid are counted in the top row.
pub fn histogram(e: &ParticleEnsemble, grid: &Arc<PhaseGrid>) -> Result<PhaseField> {
    if e.is_empty() {
        return Err(Error::Config("cannot histogram an empty ensemble".into()));
    }
    let (ny, nphi) = (grid.n_y(), grid.n_phi());
    let faces = grid.y.faces();
    let h = grid.phi.spacing();
    let mut counts = vec![0u64; ny * nphi];
    for (y, p) in e.y.iter().zip(&e.phi) {
        let i = faces.partition_point(|f| f <= y).saturating_sub(1).min(ny - 1);
        let j = ((p + 0.5 * h) / h).floor() as usize % nphi;
        counts[j * ny + i] += 1;
    }
    let n = e.len() as f64;
    let w = grid.y.widths();
    let values = counts.iter().enumerate().map(|(k, &c)| c as f64 / (n * w[k % ny] * h)).collect();
    PhaseField::from_values(grid, values)
}

/// ½‖h − f‖_{L¹} for two unit-mass densities on the same grid.
pub fn tv_distance(h: &PhaseField, f: &PhaseField) -> Result<f64> {
    let (mh, mf) = (h.mass(), f.mass());
    if (mh - mf).abs() > TV_MASS_TOL {
        return Err(Error::Numerical(format!("mass mismatch {mh} vs {mf} in TV distance")));
    }
    Ok(0.5 * h.l1_distance(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::AngularCoefficient;
    use crate::grids::{PhiGrid, YGrid};

    fn params(eps: f64, d: f64, turning: f64) -> ModelParams {
        ModelParams::new(eps, d, 1.0, AngularCoefficient::constant(1.0), AngularCoefficient::constant(turning))
    }

    #[test]
    fn deterministic_drift_hits_the_wall() {
        let mut e = ParticleEnsemble::new(vec![1.0; 10], vec![0.3; 10], 1, DEFAULT_STREAM_STRIDE).unwrap();
        let p = params(0.0, 0.0, 0.0);
        run_particles(&mut e, &p, 0.05, 0.5).unwrap();
        assert!(e.y.iter().all(|y| (y - 0.5).abs() < 1e-12));
        let mut e2 = ParticleEnsemble::new(vec![1.0; 4], vec![0.0; 4], 1, DEFAULT_STREAM_STRIDE).unwrap();
        run_particles(&mut e2, &p, 0.05, 1.0).unwrap();
        assert!(e2.y.iter().all(|&y| y < 1e-12));
    }

    #[test]
    fn linear_rotation_is_exact() {
        let mut e = ParticleEnsemble::new(vec![5.0; 3], vec![0.1, 2.0, 6.0], 7, DEFAULT_STREAM_STRIDE).unwrap();
        let p = params(0.0, 0.0, 1.0);
        run_particles(&mut e, &p, 0.05, 1.0).unwrap();
        for (got, start) in e.phi.iter().zip([0.1_f64, 2.0, 6.0]) {
            assert!((got - (start + 1.0).rem_euclid(TAU)).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducible_and_nonnegative() {
        let p = params(0.05, 0.2, 0.0);
        let mut a = ParticleEnsemble::sample_truncated_exponential(2000, 6.0, 42, DEFAULT_STREAM_STRIDE);
        let mut b = a.clone();
        run_particles(&mut a, &p, 1e-3, 0.1).unwrap();
        run_particles(&mut b, &p, 1e-3, 0.1).unwrap();
        assert_eq!(a, b);
        assert!(a.y.iter().all(|&y| y >= 0.0));
    }

    #[test]
    fn histogram_mass_and_tv() {
        let grid = PhaseGrid::new(YGrid::uniform(2.0, 4).unwrap(), PhiGrid::new(4).unwrap());
        let e = ParticleEnsemble::new(vec![0.1; 5], vec![0.0; 5], 0, 1).unwrap();
        let hist = histogram(&e, &grid).unwrap();
        assert!((hist.mass() - 1.0).abs() < 1e-12);
        assert!(hist.get(0, 0) > 0.0 && hist.values().iter().filter(|&&v| v > 0.0).count() == 1);
        assert_eq!(tv_distance(&hist, &hist).unwrap(), 0.0);
        let other = histogram(&ParticleEnsemble::new(vec![1.9; 5], vec![3.0; 5], 0, 1).unwrap(), &grid).unwrap();
        assert!((tv_distance(&hist, &other).unwrap() - 1.0).abs() < 1e-12);
        let mut half = other.clone();
        half.scale(0.5);
        assert!(tv_distance(&hist, &half).is_err());
    }

    #[test]
    fn rejects_large_step() {
        let mut e = ParticleEnsemble::new(vec![1.0], vec![0.0], 0, 1).unwrap();
        assert!(em_step(&mut e, &params(0.1, 0.1, 0.0), 0.5).is_err());
    }
}
