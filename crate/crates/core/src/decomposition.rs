//! Splitting of an ε-solution into a wall-layer amplitude and an orthogonal
//! remainder, f = ε⁻¹ m e^{−Vy/ε} + u with ∫ u e^{−Vy/ε} dy = 0, plus the
//! energy and weak-limit diagnostics built on it.
//!
//! On a grid the layer is represented by its exact cell averages and m is
//! normalised by the discrete self-pairing of that representation, so a
//! cell-averaged layer decomposes to exactly (m, 0) and u is orthogonal to
//! the weight to rounding. For a resolved layer the normalisation reduces to
//! m = 2V ∫ f e^{−Vy/ε} dy.

use crate::coefficients::{AngularCoefficient, ModelParams};
use crate::error::{Error, Result};
use crate::grids::{exp_cell_integral, layer_pairing, PhaseField, PhiGrid};
use crate::limit_solver::{run_limit, BulkWallState, LimitSolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub m: Vec<f64>,
    pub u: PhaseField,
    pub epsilon: f64,
    /// Per-φ Σ_cells u ∫_cell e^{−Vy/ε} dy.
    pub orthogonality_defect: Vec<f64>,
}

/// Tolerance on the orthogonality defect relative to ‖f‖_{L¹}.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

pub fn decompose(f: &PhaseField, speed: &AngularCoefficient, epsilon: f64) -> Result<Decomposition> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon = {epsilon} must be > 0")));
    }
    let g = f.grid();
    let faces = g.y.faces();
    let w = g.y.widths();
    let pair = layer_pairing(f, speed, epsilon);
    let mut u = f.clone();
    let mut m = Vec::with_capacity(g.n_phi());
    let mut defect: Vec<f64> = Vec::with_capacity(g.n_phi());
    for (j, &p) in pair.iter().enumerate() {
        let kappa = speed.value(g.phi.node(j)) / epsilon;
        let weights: Vec<f64> = (0..g.n_y()).map(|i| exp_cell_integral(faces[i], w[i], kappa)).collect();
        // Cell averages of ε⁻¹e^{−κy}, and their pairing with the weight,
        // which tends to 1/(2V) as the layer is resolved.
        let shape: Vec<f64> = weights.iter().zip(w).map(|(i, wi)| i / (epsilon * wi)).collect();
        let self_pair: f64 = shape.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let mj = if self_pair > 0.0 { p / self_pair } else { 0.0 };
        let col = u.column_mut(j);
        for (c, s) in col.iter_mut().zip(&shape) {
            *c -= mj * s;
        }
        defect.push(col.iter().zip(&weights).map(|(a, b)| a * b).sum());
        m.push(mj);
    }
    let scale = f.norms().l1.max(f64::MIN_POSITIVE);
    let worst = defect.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    if worst > ORTHOGONALITY_TOL * scale {
        return Err(Error::Numerical(format!(
            "orthogonality defect {worst:e} exceeds {ORTHOGONALITY_TOL:e} × ‖f‖ = {:e}",
            ORTHOGONALITY_TOL * scale
        )));
    }
    Ok(Decomposition { m, u, epsilon, orthogonality_defect: defect })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub energy: f64,
    pub dissipation: f64,
}

/// E = ∬u² + ∮ m²/(4V) and ε∬(∂_y u)², the latter with differences between
/// neighbouring cell centres.
pub fn energy_step(dec: &Decomposition, speed: &AngularCoefficient) -> EnergySample {
    let g = dec.u.grid();
    let w = g.y.widths();
    let c = g.y.centers();
    let h = g.phi.spacing();
    let mut bulk = 0.0;
    let mut diss = 0.0;
    for j in 0..g.n_phi() {
        let col = dec.u.column(j);
        bulk += col.iter().zip(w).map(|(u, wi)| u * u * wi).sum::<f64>();
        for i in 0..col.len() - 1 {
            let dc = c[i + 1] - c[i];
            diss += ((col[i + 1] - col[i]) / dc).powi(2) * dc;
        }
    }
    let wall: Vec<f64> = (0..g.n_phi()).map(|j| dec.m[j].powi(2) / (4.0 * speed.value(g.phi.node(j)))).collect();
    EnergySample { energy: bulk * h + g.phi.integrate(&wall), dissipation: dec.epsilon * diss * h }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
}

impl EnergyTrace {
    pub fn from_snapshots(times: &[f64], snapshots: &[PhaseField], speed: &AngularCoefficient, epsilon: f64) -> Result<Self> {
        let mut trace = Self { times: times.to_vec(), energy: Vec::new(), dissipation: Vec::new() };
        for f in snapshots {
            let s = energy_step(&decompose(f, speed, epsilon)?, speed);
            trace.energy.push(s.energy);
            trace.dissipation.push(s.dissipation);
        }
        Ok(trace)
    }

    /// (E(t) + ∫₀ᵗ dissipation) / (E(0) e^{Ct}) at every snapshot, with the
    /// dissipation integrated by the trapezoid rule.
    pub fn gronwall_profile(&self, constant: f64) -> Vec<f64> {
        let mut acc = 0.0;
        let (t0, e0) = (self.times[0], self.energy[0]);
        (0..self.times.len())
            .map(|k| {
                if k > 0 {
                    acc += 0.5 * (self.dissipation[k] + self.dissipation[k - 1]) * (self.times[k] - self.times[k - 1]);
                }
                (self.energy[k] + acc) / (e0 * (constant * (self.times[k] - t0)).exp())
            })
            .collect()
    }

    /// Worst value of [`Self::gronwall_profile`]; ≤ 1 means the bound holds.
    pub fn gronwall_ratio(&self, constant: f64) -> f64 {
        self.gronwall_profile(constant).into_iter().fold(0.0, f64::max)
    }
}

/// ‖Φ′‖∞ + 2‖V‖∞ + 2.
pub fn gronwall_constant(params: &ModelParams) -> f64 {
    params.turning.sup_abs(1) + 2.0 * params.speed.sup_abs(0) + 2.0
}

/// ∮ m h dφ for each test profile h.
pub fn weak_pairings(m: &[f64], tests: &[Vec<f64>], phi: &PhiGrid) -> Vec<f64> {
    tests
        .iter()
        .map(|h| phi.integrate(&m.iter().zip(h).map(|(a, b)| a * b).collect::<Vec<_>>()))
        .collect()
}

/// The standard test profiles 1, cos φ, sin φ with their labels.
pub fn standard_tests(phi: &PhiGrid) -> Vec<(&'static str, Vec<f64>)> {
    let nodes = phi.nodes();
    vec![
        ("1", vec![1.0; nodes.len()]),
        ("cos", nodes.iter().map(|p| p.cos()).collect()),
        ("sin", nodes.iter().map(|p| p.sin()).collect()),
    ]
}

/// The D = 0 limit, run through the bulk/wall solver.
pub fn solve_limit_no_diffusion(
    initial: &BulkWallState,
    params: &ModelParams,
    config: &LimitSolverConfig,
    snapshot_times: &[f64],
) -> Result<Vec<BulkWallState>> {
    if params.diffusion != 0.0 {
        return Err(Error::Config(format!("expected D = 0, got {}", params.diffusion)));
    }
    run_limit(initial, params, config, snapshot_times)
}

/// The layer amplitude corresponding to a wall density: m = V ρ_wall.
pub fn wall_amplitude(state: &BulkWallState, speed: &AngularCoefficient) -> Vec<f64> {
    let phi = &state.grid().phi;
    state.wall.iter().enumerate().map(|(j, w)| speed.value(phi.node(j)) * w).collect()
}
