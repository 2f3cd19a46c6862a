//! Finite-volume solver for the ε-dependent problem
//! ∂_t f + ∂_φ(Φf) − D∂²_φ f − V∂_y f − ε∂²_y f = 0 with zero total flux at
//! both y-boundaries.
//!
//! Operator splitting: the y-part is advanced implicitly with an
//! exponentially fitted two-point flux, the φ-part explicitly with
//! [`PhiTransport`].

use std::sync::Arc;

use rayon::prelude::*;

use crate::coefficients::{AngularCoefficient, ModelParams};
use crate::error::{Error, Result};
use crate::grids::{exp_cell_integral, PhaseField, PhaseGrid, YGrid};
use crate::linalg::solve_tridiagonal;
use crate::transport::PhiTransport;

/// Upper bound for the automatic step when the φ-operator gives no CFL limit
/// or a very loose one.
pub const AUTO_DT_CAP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSolverConfig {
    pub dt: TimeStep,
    pub splitting: Splitting,
    pub linear_tol: f64,
}

impl Default for FullSolverConfig {
    fn default() -> Self {
        Self { dt: TimeStep::Auto, splitting: Splitting::Strang, linear_tol: 1e-12 }
    }
}

impl FullSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Config(format!("dt = {dt} must be > 0")));
            }
        }
        if !(self.linear_tol > 0.0) || self.linear_tol > 1e-10 {
            return Err(Error::Config(format!("linear_tol = {} must lie in (0, 1e-10]", self.linear_tol)));
        }
        Ok(())
    }

    /// Resolves the configured step against the φ stability limit.
    pub fn resolve_dt(&self, transport: &PhiTransport) -> f64 {
        match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => transport.dt_stable().min(AUTO_DT_CAP),
        }
    }
}

/// Face transmissibilities of the fitted y-flux on one φ-column:
/// G_k = −α_k f_k + β_k f_{k−1} on interior face k.
#[derive(Debug, Clone)]
struct ColumnFlux {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl ColumnFlux {
    fn new(y: &YGrid, speed: f64, epsilon: f64) -> Self {
        let n = y.len();
        let w = y.widths();
        let kappa = speed / epsilon;
        let mut alpha = vec![0.0; n + 1];
        let mut beta = vec![0.0; n + 1];
        for k in 1..n {
            let (wb, wa) = (w[k - 1], w[k]);
            // Ratio of the cell averages of e^{−κy} above and below face k.
            let ln_q = -kappa * wb + (wb / wa).ln() + (-(-kappa * wa).exp_m1()).ln()
                - (-(-kappa * wb).exp_m1()).ln();
            let one_minus_q = -ln_q.exp_m1();
            let q = ln_q.exp();
            alpha[k] = speed / one_minus_q;
            beta[k] = speed * q / one_minus_q;
        }
        Self { alpha, beta }
    }
}

/// Precomputed operators for one (grid, model) pair.
#[derive(Debug, Clone)]
pub struct FullSolver {
    grid: Arc<PhaseGrid>,
    params: ModelParams,
    config: FullSolverConfig,
    columns: Vec<ColumnFlux>,
    transport: PhiTransport,
}

impl FullSolver {
    pub fn new(grid: &Arc<PhaseGrid>, params: &ModelParams, config: &FullSolverConfig) -> Result<Self> {
        params.validate_full()?;
        config.validate()?;
        let columns = (0..grid.n_phi())
            .map(|j| ColumnFlux::new(&grid.y, params.speed.value(grid.phi.node(j)), params.epsilon))
            .collect();
        let transport = PhiTransport::new(&grid.phi, &params.turning, params.diffusion);
        let solver = Self { grid: Arc::clone(grid), params: params.clone(), config: config.clone(), columns, transport };
        // Surface a sub-cycling overflow at construction rather than mid-run.
        solver.transport.subcycles(solver.dt())?;
        Ok(solver)
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The nominal step actually used.
    pub fn dt(&self) -> f64 {
        self.config.resolve_dt(&self.transport)
    }

    fn y_substep(&self, f: &mut PhaseField, dt: f64) -> Result<()> {
        let ny = self.grid.n_y();
        let w = self.grid.y.widths();
        let results: Vec<Result<()>> = f
            .values_mut()
            .par_chunks_mut(ny)
            .zip(self.columns.par_iter())
            .map(|(col, flux)| {
                let mut lower = vec![0.0; ny];
                let mut diag = vec![0.0; ny];
                let mut upper = vec![0.0; ny];
                for i in 0..ny {
                    diag[i] = w[i] / dt + flux.alpha[i] + flux.beta[i + 1];
                    lower[i] = -flux.beta[i];
                    upper[i] = -flux.alpha[i + 1];
                    col[i] *= w[i] / dt;
                }
                let mut scratch = Vec::with_capacity(ny);
                solve_tridiagonal(&lower, &diag, &upper, col, &mut scratch)
            })
            .collect();
        results.into_iter().collect()
    }

    fn phi_substep(&self, f: &mut PhaseField, dt: f64) -> Result<()> {
        let ny = self.grid.n_y();
        self.transport.advance(f.values_mut(), ny, dt)
    }

    /// One split step of length `dt`, with the mass and finiteness checks.
    pub fn step(&self, f: &mut PhaseField, dt: f64) -> Result<()> {
        if !f.same_grid(&PhaseField::zeros(&self.grid)) {
            return Err(Error::Grid("state lives on a different grid than the solver".into()));
        }
        let m0 = f.mass();
        match self.config.splitting {
            Splitting::Lie => {
                self.y_substep(f, dt)?;
                self.phi_substep(f, dt)?;
            }
            Splitting::Strang => {
                self.phi_substep(f, 0.5 * dt)?;
                self.y_substep(f, dt)?;
                self.phi_substep(f, 0.5 * dt)?;
            }
        }
        if !f.all_finite() {
            return Err(Error::Numerical("non-finite value in full solver state".into()));
        }
        let m1 = f.mass();
        if (m1 - m0).abs() > self.config.linear_tol * m0.abs().max(1.0) {
            return Err(Error::Numerical(format!("mass changed by {:e} in one step", m1 - m0)));
        }
        Ok(())
    }

    /// Integrates from t = 0 and returns the state at each requested time.
    /// Steps are shortened where needed so that every snapshot time is hit
    /// exactly.
    pub fn run(&self, f0: &PhaseField, snapshot_times: &[f64]) -> Result<Vec<PhaseField>> {
        let times = validate_times(snapshot_times, self.params.t_final)?;
        let dt = self.dt();
        let mut f = f0.clone();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in &times {
            for h in interval_steps(target - t, dt) {
                self.step(&mut f, h)?;
            }
            t = target;
            out.push(f.clone());
        }
        Ok(out)
    }
}

pub(crate) fn validate_times(times: &[f64], t_final: f64) -> Result<Vec<f64>> {
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev) || t > t_final * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "snapshot times must be non-decreasing within [0, {t_final}], got {times:?}"
            )));
        }
        prev = t;
    }
    Ok(times.to_vec())
}

/// Uniform sub-steps covering an interval of length `len` with step ≤ `dt`.
pub(crate) fn interval_steps(len: f64, dt: f64) -> impl Iterator<Item = f64> {
    let n = if len <= 0.0 { 0 } else { (len / dt - 1e-9).ceil().max(1.0) as usize };
    let h = if n > 0 { len / n as f64 } else { 0.0 };
    std::iter::repeat_n(h, n)
}

/// One step of the configured scheme using the configured (or automatic) dt.
pub fn step_full(f: &PhaseField, params: &ModelParams, config: &FullSolverConfig) -> Result<PhaseField> {
    let solver = FullSolver::new(f.grid(), params, config)?;
    let mut out = f.clone();
    solver.step(&mut out, solver.dt())?;
    Ok(out)
}

pub fn run_full(
    f0: &PhaseField,
    params: &ModelParams,
    config: &FullSolverConfig,
    snapshot_times: &[f64],
) -> Result<Vec<PhaseField>> {
    FullSolver::new(f0.grid(), params, config)?.run(f0, snapshot_times)
}

/// Cell averages of the unit-mass boundary layer (V/ε) e^{−Vy/ε} per φ.
pub fn steady_layer(grid: &Arc<PhaseGrid>, speed: &AngularCoefficient, epsilon: f64) -> PhaseField {
    let faces = grid.y.faces().to_vec();
    let w = grid.y.widths().to_vec();
    let speeds: Vec<f64> = grid.phi.nodes().iter().map(|&p| speed.value(p)).collect();
    PhaseField::from_fn(grid, |i, j| {
        let kappa = speeds[j] / epsilon;
        kappa * exp_cell_integral(faces[i], w[i], kappa) / w[i]
    })
}
