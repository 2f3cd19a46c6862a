//! The ε → 0 limit: a transport equation for the bulk density coupled to an
//! angular equation for the wall density,
//!
//! ```text
//! ∂_t ρ + ∂_φ(Φρ) − D∂²_φ ρ − V∂_y ρ = 0           (y > 0)
//! ∂_t w + ∂_φ(Φw) − D∂²_φ w        = V ρ|_{y=0}
//! ```
//!
//! Whatever leaves the bulk through y = 0 is deposited on the wall, so the
//! combined mass ∫∫ρ + ∮w is conserved by the discretisation.

pub mod checks;

use std::sync::Arc;

use crate::coefficients::ModelParams;
use crate::error::{Error, Result};
use crate::full_solver::{interval_steps, validate_times, FullSolverConfig, Splitting};
use crate::grids::{PhaseField, PhaseGrid};
use crate::transport::PhiTransport;

pub type LimitSolverConfig = FullSolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct BulkWallState {
    pub bulk: PhaseField,
    /// Wall density at the φ nodes.
    pub wall: Vec<f64>,
}

impl BulkWallState {
    pub fn new(bulk: PhaseField, wall: Vec<f64>) -> Result<Self> {
        if wall.len() != bulk.grid().n_phi() {
            return Err(Error::Grid(format!(
                "wall profile has {} entries for {} φ nodes",
                wall.len(),
                bulk.grid().n_phi()
            )));
        }
        Ok(Self { bulk, wall })
    }

    /// Bulk only, empty wall.
    pub fn from_bulk(bulk: PhaseField) -> Self {
        let n = bulk.grid().n_phi();
        Self { bulk, wall: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        self.bulk.grid()
    }

    pub fn wall_mass(&self) -> f64 {
        self.grid().phi.integrate(&self.wall)
    }

    pub fn combined_mass(&self) -> f64 {
        self.bulk.mass() + self.wall_mass()
    }
}

#[derive(Debug, Clone)]
pub struct LimitSolver {
    grid: Arc<PhaseGrid>,
    params: ModelParams,
    config: LimitSolverConfig,
    speeds: Vec<f64>,
    transport: PhiTransport,
}

impl LimitSolver {
    pub fn new(grid: &Arc<PhaseGrid>, params: &ModelParams, config: &LimitSolverConfig) -> Result<Self> {
        params.validate_limit()?;
        config.validate()?;
        let speeds = grid.phi.nodes().iter().map(|&p| params.speed.value(p)).collect();
        let transport = PhiTransport::new(&grid.phi, &params.turning, params.diffusion);
        let solver = Self { grid: Arc::clone(grid), params: params.clone(), config: config.clone(), speeds, transport };
        solver.transport.subcycles(solver.dt())?;
        Ok(solver)
    }

    pub fn dt(&self) -> f64 {
        self.config.resolve_dt(&self.transport)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn transport(&self) -> &PhiTransport {
        &self.transport
    }

    /// Implicit upwind sweep from the top boundary down; the flux through
    /// y = 0 goes to the wall.
    fn y_substep(&self, state: &mut BulkWallState, dt: f64) {
        let g = &self.grid;
        let ny = g.n_y();
        let w = g.y.widths();
        for j in 0..g.n_phi() {
            let v = self.speeds[j];
            let col = state.bulk.column_mut(j);
            let mut above = 0.0;
            for i in (0..ny).rev() {
                col[i] = (w[i] * col[i] + dt * v * above) / (w[i] + dt * v);
                above = col[i];
            }
            state.wall[j] += dt * v * col[0];
        }
    }

    fn phi_substep(&self, state: &mut BulkWallState, dt: f64) -> Result<()> {
        let ny = self.grid.n_y();
        self.transport.advance(state.bulk.values_mut(), ny, dt)?;
        self.transport.advance(&mut state.wall, 1, dt)
    }

    pub fn step(&self, state: &mut BulkWallState, dt: f64) -> Result<()> {
        if !state.bulk.same_grid(&PhaseField::zeros(&self.grid)) {
            return Err(Error::Grid("state lives on a different grid than the solver".into()));
        }
        let m0 = state.combined_mass();
        match self.config.splitting {
            Splitting::Lie => {
                self.y_substep(state, dt);
                self.phi_substep(state, dt)?;
            }
            Splitting::Strang => {
                self.phi_substep(state, 0.5 * dt)?;
                self.y_substep(state, dt);
                self.phi_substep(state, 0.5 * dt)?;
            }
        }
        if !state.bulk.all_finite() || state.wall.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical("non-finite value in limit solver state".into()));
        }
        let m1 = state.combined_mass();
        if (m1 - m0).abs() > self.config.linear_tol * m0.abs().max(1.0) {
            return Err(Error::Numerical(format!("combined mass changed by {:e} in one step", m1 - m0)));
        }
        Ok(())
    }

    pub fn run(&self, initial: &BulkWallState, snapshot_times: &[f64]) -> Result<Vec<BulkWallState>> {
        let times = validate_times(snapshot_times, self.params.t_final)?;
        let dt = self.dt();
        let mut state = initial.clone();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in &times {
            for h in interval_steps(target - t, dt) {
                self.step(&mut state, h)?;
            }
            t = target;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Semi-discrete rate of change of the bulk, using the same upwind
    /// fluxes as the time stepper.
    pub fn bulk_tendency(&self, bulk: &PhaseField) -> PhaseField {
        let g = &self.grid;
        let ny = g.n_y();
        let w = g.y.widths();
        let div = self.transport.divergence(bulk.values(), ny);
        let mut out = PhaseField::zeros(g);
        for j in 0..g.n_phi() {
            let v = self.speeds[j];
            let col = bulk.column(j);
            let dst = out.column_mut(j);
            for i in 0..ny {
                let above = if i + 1 < ny { col[i + 1] } else { 0.0 };
                dst[i] = v * (above - col[i]) / w[i] - div[j * ny + i];
            }
        }
        out
    }

    /// Semi-discrete wall rate: φ-transport of `wall` plus the outflow V ρ_0
    /// of `bulk`.
    pub fn wall_tendency(&self, wall: &[f64], bulk: &PhaseField) -> Vec<f64> {
        let div = self.transport.divergence(wall, 1);
        (0..self.grid.n_phi()).map(|j| self.speeds[j] * bulk.get(0, j) - div[j]).collect()
    }
}

pub fn step_limit(state: &BulkWallState, params: &ModelParams, config: &LimitSolverConfig) -> Result<BulkWallState> {
    let solver = LimitSolver::new(state.grid(), params, config)?;
    let mut out = state.clone();
    solver.step(&mut out, solver.dt())?;
    Ok(out)
}

pub fn run_limit(
    initial: &BulkWallState,
    params: &ModelParams,
    config: &LimitSolverConfig,
    snapshot_times: &[f64],
) -> Result<Vec<BulkWallState>> {
    LimitSolver::new(initial.grid(), params, config)?.run(initial, snapshot_times)
}

/// Closed-form solution for V ≡ 1, Φ ≡ 0 started from ρ = e^{−y}(a0 + a1 cos φ)
/// and an empty wall:
/// ρ = e^{−(y+t)} A(φ, t), w = A(φ, t)(1 − e^{−t}), A = a0 + a1 e^{−Dt} cos φ.
/// The bulk is returned as exact cell averages.
pub fn manufactured_state(grid: &Arc<PhaseGrid>, t: f64, a0: f64, a1: f64, diffusion: f64) -> BulkWallState {
    let amp = |phi: f64| a0 + a1 * (-diffusion * t).exp() * phi.cos();
    let bulk = PhaseField::from_antiderivative(grid, |y, phi| -(-(y + t)).exp() * amp(phi));
    let wall = grid.phi.nodes().iter().map(|&p| amp(p) * (1.0 - (-t).exp())).collect();
    BulkWallState { bulk, wall }
}
