//! Explicit conservative φ-transport ∂_t u + ∂_φ(Φu − D∂_φu) = 0, shared by
//! the full solver, the bulk of the limiting solver and the wall equation.

use crate::coefficients::AngularCoefficient;
use crate::error::{Error, Result};
use crate::grids::PhiGrid;

pub const CFL_SAFETY: f64 = 0.9;
pub const MAX_SUBCYCLES: usize = 1_000_000;

/// Upwind advective flux on the sign of Φ at each face plus centred
/// diffusion, sub-cycled under
/// `dt ≤ 0.9 / (2‖Φ‖∞/h + 2D/h²)`, which keeps every update a convex
/// combination of neighbours.
#[derive(Debug, Clone)]
pub struct PhiTransport {
    n_phi: usize,
    h: f64,
    face_turning: Vec<f64>,
    diffusion: f64,
    dt_stable: f64,
}

impl PhiTransport {
    pub fn new(phi: &PhiGrid, turning: &AngularCoefficient, diffusion: f64) -> Self {
        let h = phi.spacing();
        let face_turning: Vec<f64> = (0..phi.len()).map(|j| turning.value(phi.face(j))).collect();
        let rate = 2.0 * turning.sup_abs(0) / h + 2.0 * diffusion / (h * h);
        let dt_stable = if rate > 0.0 { CFL_SAFETY / rate } else { f64::INFINITY };
        Self { n_phi: phi.len(), h, face_turning, diffusion, dt_stable }
    }

    /// Largest stable explicit step.
    pub fn dt_stable(&self) -> f64 {
        self.dt_stable
    }

    pub fn is_trivial(&self) -> bool {
        self.diffusion == 0.0 && self.face_turning.iter().all(|&v| v == 0.0)
    }

    pub fn subcycles(&self, dt: f64) -> Result<usize> {
        if self.is_trivial() {
            return Ok(0);
        }
        let n = (dt / self.dt_stable).ceil().max(1.0);
        if n > MAX_SUBCYCLES as f64 {
            return Err(Error::Config(format!(
                "φ sub-cycle count {n:.0} exceeds {MAX_SUBCYCLES} (dt={dt}, stable dt={})",
                self.dt_stable
            )));
        }
        Ok(n as usize)
    }

    /// Advances a φ-major block (`values[j * rows + i]`) by `dt`.
    pub fn advance(&self, values: &mut [f64], rows: usize, dt: f64) -> Result<()> {
        let n = self.subcycles(dt)?;
        if n == 0 {
            return Ok(());
        }
        let sub = dt / n as f64;
        let mut flux = vec![0.0; values.len()];
        for _ in 0..n {
            self.single(values, rows, sub, &mut flux);
        }
        Ok(())
    }

    /// Net φ-flux divergence ∂_φ(Φu − D∂_φu) of a block, discretised exactly
    /// as in [`PhiTransport::advance`].
    pub fn divergence(&self, values: &[f64], rows: usize) -> Vec<f64> {
        let mut flux = vec![0.0; values.len()];
        self.face_fluxes(values, rows, &mut flux);
        let nphi = self.n_phi;
        let mut out = vec![0.0; values.len()];
        for j in 0..nphi {
            let jm = (j + nphi - 1) % nphi;
            for i in 0..rows {
                out[j * rows + i] = (flux[j * rows + i] - flux[jm * rows + i]) / self.h;
            }
        }
        out
    }

    fn face_fluxes(&self, values: &[f64], rows: usize, flux: &mut [f64]) {
        let nphi = self.n_phi;
        let dh = self.diffusion / self.h;
        for j in 0..nphi {
            let jp = (j + 1) % nphi;
            let phi_f = self.face_turning[j];
            let (pos, neg) = (phi_f.max(0.0), phi_f.min(0.0));
            let here = &values[j * rows..(j + 1) * rows];
            let next = &values[jp * rows..(jp + 1) * rows];
            let out = &mut flux[j * rows..(j + 1) * rows];
            for i in 0..rows {
                out[i] = pos * here[i] + neg * next[i] - dh * (next[i] - here[i]);
            }
        }
    }

    fn single(&self, values: &mut [f64], rows: usize, dt: f64, flux: &mut [f64]) {
        self.face_fluxes(values, rows, flux);
        let nphi = self.n_phi;
        let c = dt / self.h;
        for j in 0..nphi {
            let jm = (j + nphi - 1) % nphi;
            for i in 0..rows {
                values[j * rows + i] -= c * (flux[j * rows + i] - flux[jm * rows + i]);
            }
        }
    }
}
