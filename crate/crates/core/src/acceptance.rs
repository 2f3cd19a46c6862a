//! The acceptance suite: fourteen numerical criteria with fixed thresholds,
//! shared by the `check-all` subcommand and the `acceptance` test target.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::asymptotics::InnerExpansion;
use crate::coefficients::{epsilon_from_physical, mu0, AngularCoefficient, ModelParams};
use crate::decomposition::{decompose, gronwall_constant, EnergyTrace};
use crate::error::Result;
use crate::full_solver::{run_full, steady_layer, FullSolverConfig, Splitting, TimeStep};
use crate::grids::{rebin, PhaseField, PhaseGrid, PhiGrid, YGrid};
use crate::harness::config::{
    exponential_initial, CoefficientSpec, ExperimentSection, GridSection, ModelSection, OutputSection, RunConfig,
    TimeSection,
};
use crate::harness::sweep::{fit_log_slope, fit_order, sweep_epsilon, SweepRecord};
use crate::limit_solver::checks::{band_limited_field, coercivity_gap, resolvent_solve, LineField, LineGrid, ResolventProblem};
use crate::limit_solver::{manufactured_state, run_limit, BulkWallState, LimitSolver};
use crate::particles::{histogram, run_particles, tv_distance, ParticleEnsemble, DEFAULT_STREAM_STRIDE};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self { id, name, passed, detail }
    }

    fn from_result(id: u8, name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(id, name, passed, detail),
            Err(e) => Self::new(id, name, false, format!("error: {e}")),
        }
    }

    pub fn line(&self) -> String {
        format!("[{}] {:02} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn spec(family: &str, params: &[(&str, f64)]) -> CoefficientSpec {
    CoefficientSpec { family: family.into(), params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

/// Shifted-sine speed (1, 0.5), shear turning γ = 0.5, 256 graded y-cells
/// to y = 30 with a 32-cell zone of width 8ε, 128 φ nodes, T = 1,
/// f₀ = e^{−y}/2π.
pub fn reference_config(diffusion: f64, epsilon_list: Vec<f64>) -> RunConfig {
    RunConfig {
        model: ModelSection {
            epsilon: 0.02,
            diffusion,
            t_final: 1.0,
            speed: spec("shifted-sine", &[("g0", 1.0), ("a", 0.5)]),
            turning: spec("shear", &[("gamma", 0.5)]),
        },
        grid: GridSection::default(),
        time: TimeSection::default(),
        experiment: ExperimentSection { epsilon_list, ..Default::default() },
        output: OutputSection::default(),
    }
}

pub const SWEEP_EPSILONS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

pub fn criterion_01() -> CriterionReport {
    let r = epsilon_from_physical(2e3, 3.0, 1e3).map(|eps| {
        let rel = (eps - 6.6e-4).abs() / 6.6e-4;
        (rel <= 0.05, format!("epsilon = {eps:.4e}, relative deviation from 6.6e-4 = {rel:.3} (tol 0.05)"))
    });
    CriterionReport::from_result(1, "epsilon from physical scales", r)
}

pub fn criterion_02() -> CriterionReport {
    let r = (|| {
        let cfg = reference_config(0.2, vec![0.02]);
        let params = cfg.params()?;
        let grid = cfg.grid_for(0.02)?;
        let f0 = exponential_initial(&grid);
        let f = run_full(&f0, &params, &cfg.solver_config()?, &[1.0])?.pop().expect("snapshot");
        let drift = ((f.mass() - f0.mass()) / f0.mass()).abs();
        Ok((drift <= 1e-8, format!("relative mass drift = {drift:.3e} (tol 1e-8)")))
    })();
    CriterionReport::from_result(2, "full-solver mass conservation", r)
}

pub fn criterion_03() -> CriterionReport {
    let r = (|| {
        let eps = 0.05;
        let params = ModelParams::new(eps, 0.5, 1.0, AngularCoefficient::constant(1.0), AngularCoefficient::constant(0.0));
        let grid = PhaseGrid::new(YGrid::graded(2.0, 64, 0.4, 32)?, PhiGrid::new(32)?);
        let mut f0 = steady_layer(&grid, &params.speed, eps);
        f0.scale(1.0 / TAU);
        let f = run_full(&f0, &params, &FullSolverConfig::default(), &[1.0])?.pop().expect("snapshot");
        let dev = f.l1_distance(&f0)?;
        Ok((dev <= 1e-6, format!("L1 deviation at T=1 = {dev:.3e} (tol 1e-6)")))
    })();
    CriterionReport::from_result(3, "steady layer stationarity", r)
}

/// L¹ error at T = 1 of the rotating layer h(φ − t)·layer(y), with
/// h = 1 + 0.5 cos φ, Φ = 1, D = 0, V = 1, ε = 0.05, dt = 0.4 h_φ.
pub fn rotating_layer_error(n_phi: usize) -> Result<f64> {
    let eps = 0.05;
    let params = ModelParams::new(eps, 0.0, 1.0, AngularCoefficient::constant(1.0), AngularCoefficient::constant(1.0));
    let grid = PhaseGrid::new(YGrid::graded(2.0, 32, 0.4, 16)?, PhiGrid::new(n_phi)?);
    let layer = steady_layer(&grid, &params.speed, eps);
    let profile = |t: f64| -> PhaseField {
        // Cell averages in φ of 1 + 0.5 cos(φ − t) over [φ_j ± h/2].
        let h = grid.phi.spacing();
        let avg = 0.5 * (0.5 * h).sin() / (0.5 * h);
        let mut f = layer.clone();
        for j in 0..grid.n_phi() {
            let a = 1.0 + avg * (grid.phi.node(j) - t).cos();
            f.column_mut(j).iter_mut().for_each(|v| *v *= a);
        }
        f
    };
    let cfg = FullSolverConfig { dt: TimeStep::Fixed(0.4 * grid.phi.spacing()), splitting: Splitting::Lie, ..Default::default() };
    let f = run_full(&profile(0.0), &params, &cfg, &[1.0])?.pop().expect("snapshot");
    f.l1_distance(&profile(1.0))
}

pub fn criterion_04() -> CriterionReport {
    let r = (|| {
        let errs = [32, 64, 128, 256].map(rotating_layer_error).into_iter().collect::<Result<Vec<f64>>>()?;
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let ok = orders.iter().all(|o| (0.8..=1.2).contains(o));
        Ok((ok, format!("errors {} orders {} (band [0.8, 1.2])", fmt_list(&errs), fmt_list(&orders))))
    })();
    CriterionReport::from_result(4, "rotating layer convergence", r)
}

/// L∞ error of the limit solver against the manufactured bulk/wall pair at
/// T = 1 (a0 = 1, a1 = 0.5, D = 0.5), and the combined-mass drift.
pub fn manufactured_error(n_y: usize, n_phi: usize, dt: f64) -> Result<(f64, f64)> {
    let (a0, a1, d) = (1.0, 0.5, 0.5);
    let params = ModelParams::new(0.0, d, 1.0, AngularCoefficient::constant(1.0), AngularCoefficient::constant(0.0));
    let grid = PhaseGrid::new(YGrid::uniform(16.0, n_y)?, PhiGrid::new(n_phi)?);
    let init = manufactured_state(&grid, 0.0, a0, a1, d);
    let cfg = FullSolverConfig { dt: TimeStep::Fixed(dt), splitting: Splitting::Lie, ..Default::default() };
    let out = run_limit(&init, &params, &cfg, &[1.0])?.pop().expect("snapshot");
    let exact = manufactured_state(&grid, 1.0, a0, a1, d);
    let bulk_err = out.bulk.max_abs_diff(&exact.bulk);
    let wall_err = out.wall.iter().zip(&exact.wall).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let drift = (out.combined_mass() - init.combined_mass()).abs() / init.combined_mass();
    Ok((bulk_err.max(wall_err), drift))
}

pub fn criterion_05() -> CriterionReport {
    let r = (|| {
        let levels = [(64, 16, 0.1), (128, 32, 0.05), (256, 64, 0.025), (512, 128, 0.0125)];
        let res = levels.iter().map(|&(ny, np, dt)| manufactured_error(ny, np, dt)).collect::<Result<Vec<_>>>()?;
        let errs: Vec<f64> = res.iter().map(|r| r.0).collect();
        let drift = res.iter().map(|r| r.1).fold(0.0, f64::max);
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
        let ok = ratios.iter().all(|q| (0.4..=0.6).contains(q)) && drift <= 1e-10;
        Ok((ok, format!("Linf errors {} ratios {} (band [0.4, 0.6]); max mass drift {drift:.2e} (tol 1e-10)", fmt_list(&errs), fmt_list(&ratios))))
    })();
    CriterionReport::from_result(5, "manufactured bulk/wall convergence", r)
}

/// The D > 0 sweep behind criteria 6 and 7.
pub fn reference_sweep() -> Vec<SweepRecord> {
    sweep_epsilon(&reference_config(0.2, SWEEP_EPSILONS.to_vec()))
}

fn failed_rows(rows: &[SweepRecord]) -> Option<String> {
    rows.iter().find_map(|r| r.failure.as_ref().map(|f| format!("row eps={} failed: {f}", r.epsilon)))
}

pub fn criterion_06(rows: &[SweepRecord]) -> CriterionReport {
    if let Some(f) = failed_rows(rows) {
        return CriterionReport::new(6, "composite L1 convergence", false, f);
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.l1_error).collect();
    let r = fit_order(rows).map(|order| {
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        (decreasing && order >= 0.7, format!("l1 errors {} fitted order {order:.3} (min 0.7, strictly decreasing: {decreasing})", fmt_list(&errs)))
    });
    CriterionReport::from_result(6, "composite L1 convergence", r)
}

pub fn criterion_07(rows: &[SweepRecord]) -> CriterionReport {
    if let Some(f) = failed_rows(rows) {
        return CriterionReport::new(7, "residual order", false, f);
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.residual_total()).collect();
    let r = fit_log_slope(&eps, &res).map(|s| {
        ((0.75..=1.25).contains(&s), format!("residual totals {} slope {s:.3} (band [0.75, 1.25])", fmt_list(&res)))
    });
    CriterionReport::from_result(7, "residual order", r)
}

/// D = 0 full run at ε = 0.02 decomposed at t = 0, 1/9, …, 1.
pub fn no_diffusion_energy() -> Result<(f64, EnergyTrace, f64)> {
    let eps = 0.02;
    let cfg = reference_config(0.0, vec![eps]);
    let params = cfg.params()?;
    let grid = cfg.grid_for(eps)?;
    let f0 = exponential_initial(&grid);
    let times: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
    let snaps = run_full(&f0, &params, &cfg.solver_config()?, &times)?;
    let mut worst: f64 = 0.0;
    for f in &snaps {
        let dec = decompose(f, &params.speed, eps)?;
        let scale = f.norms().l1;
        worst = dec.orthogonality_defect.iter().fold(worst, |w, d| w.max(d.abs() / scale));
    }
    let trace = EnergyTrace::from_snapshots(&times, &snaps, &params.speed, eps)?;
    Ok((worst, trace, gronwall_constant(&params)))
}

pub fn criterion_08_09() -> (CriterionReport, CriterionReport) {
    match no_diffusion_energy() {
        Ok((worst, trace, c)) => {
            let ratio = trace.gronwall_ratio(c);
            let profile = trace.gronwall_profile(c);
            (
                CriterionReport::new(8, "orthogonality of the decomposition", worst <= 1e-8, format!("max |pairing|/||f|| = {worst:.3e} (tol 1e-8)")),
                CriterionReport::new(
                    9,
                    "energy bound",
                    ratio <= 1.0,
                    format!(
                        "max (E + int dissipation)/(E0 e^(Ct)) = {ratio:.4} with C = {c:.3} (must be <= 1); per snapshot {}",
                        fmt_list(&profile)
                    ),
                ),
            )
        }
        Err(e) => (
            CriterionReport::new(8, "orthogonality of the decomposition", false, format!("error: {e}")),
            CriterionReport::new(9, "energy bound", false, format!("error: {e}")),
        ),
    }
}

pub fn no_diffusion_sweep() -> Vec<SweepRecord> {
    sweep_epsilon(&reference_config(0.0, SWEEP_EPSILONS.to_vec()))
}

pub fn criterion_10(rows: &[SweepRecord]) -> CriterionReport {
    if let Some(f) = failed_rows(rows) {
        return CriterionReport::new(10, "weak pairings", false, f);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..rows[0].pairings.len() {
        let diffs: Vec<f64> = rows.iter().map(|r| (r.pairings[k].full - r.pairings[k].limit).abs()).collect();
        let dec = diffs.windows(2).all(|w| w[1] < w[0]);
        ok &= dec;
        parts.push(format!("h={}: {}", rows[0].pairings[k].test, fmt_list(&diffs)));
    }
    CriterionReport::new(10, "weak pairings", ok, format!("{} (each must decrease)", parts.join("; ")))
}

pub fn criterion_11() -> CriterionReport {
    let r = (|| {
        let params = reference_config(0.2, vec![0.02]).params()?;
        let lambda = mu0(&params.turning) + 1.0;
        let mut worst = f64::INFINITY;
        for (ny, nphi) in [(256, 32), (512, 64)] {
            let g = LineGrid::new(8.0, ny, nphi)?;
            for seed in 0..20 {
                let u = band_limited_field(&g, 6, seed);
                worst = worst.min(coercivity_gap(&u, lambda, &params));
            }
        }
        Ok((worst >= -1e-8, format!("min gap over 40 fields = {worst:.4e} (tol -1e-8)")))
    })();
    CriterionReport::from_result(11, "coercivity gap", r)
}

pub fn resolvent_ratios(eps_reg: &[f64]) -> Result<Vec<f64>> {
    let params = reference_config(0.2, vec![0.02]).params()?;
    let lambda = mu0(&params.turning) + 1.0;
    let g = LineGrid::new(8.0, 400, 32)?;
    let f = LineField::from_fn(&g, |y, p| (-y * y).exp() * (1.0 + 0.5 * p.cos() + 0.3 * (2.0 * p).sin()));
    eps_reg
        .iter()
        .map(|&e| {
            let prob = ResolventProblem::new(lambda, e, f.clone(), &params)?;
            Ok(resolvent_solve(&prob, &params)?.bound_ratio)
        })
        .collect()
}

pub fn criterion_12() -> CriterionReport {
    let r = resolvent_ratios(&[0.1, 0.01, 0.001]).map(|ratios| {
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &r| (a.min(r), b.max(r)));
        let spread = hi / lo;
        (spread < 2.0, format!("bound ratios {} spread {spread:.3} (must be < 2)", fmt_list(&ratios)))
    });
    CriterionReport::from_result(12, "resolvent uniformity", r)
}

/// TV distance at T = 0.5 between `n` particles and the full solver, both
/// binned on 64 × 32 cells (graded y to 6).
pub fn particle_tv(n: usize, dt: f64, seed: u64) -> Result<f64> {
    let eps = 0.05;
    let y_max = 6.0;
    let params = reference_config(0.2, vec![eps]).params()?.with_epsilon(eps);
    let params = ModelParams { t_final: 0.5, ..params };

    let bins = PhaseGrid::new(YGrid::graded(y_max, 64, 8.0 * eps, 16)?, PhiGrid::new(32)?);
    let fine = PhaseGrid::new(YGrid::graded(y_max, 256, 8.0 * eps, 64)?, PhiGrid::new(128)?);
    let norm = -(-y_max).exp_m1() * TAU;
    let f0 = PhaseField::from_antiderivative(&fine, |y, _| -(-y).exp() / norm);
    let f = run_full(&f0, &params, &FullSolverConfig::default(), &[0.5])?.pop().expect("snapshot");
    let pde = rebin(&f, &bins);

    let mut e = ParticleEnsemble::sample_truncated_exponential(n, y_max, seed, DEFAULT_STREAM_STRIDE);
    run_particles(&mut e, &params, dt, 0.5)?;
    tv_distance(&histogram(&e, &bins)?, &pde)
}

pub const PARTICLE_COUNT: usize = 1_000_000;
pub const PARTICLE_DT: f64 = 5e-4;

pub fn criterion_13() -> CriterionReport {
    let r = particle_tv(PARTICLE_COUNT, PARTICLE_DT, 2024)
        .map(|tv| (tv <= 0.05, format!("TV distance = {tv:.4} with {PARTICLE_COUNT} particles, dt = {PARTICLE_DT} (tol 0.05)")));
    CriterionReport::from_result(13, "particle oracle", r)
}

/// ∮|c₁ + Vû₀| dφ at T = 1 from a limit solve on uniform y-cells.
pub fn compat_residual(n_y: usize, n_phi: usize, dt: f64) -> Result<f64> {
    let params = reference_config(0.2, vec![0.02]).params()?;
    let grid: Arc<PhaseGrid> = PhaseGrid::new(YGrid::uniform(16.0, n_y)?, PhiGrid::new(n_phi)?);
    let cfg = FullSolverConfig { dt: TimeStep::Fixed(dt), ..Default::default() };
    let solver = LimitSolver::new(&grid, &params, &cfg)?;
    let init = BulkWallState::from_bulk(exponential_initial(&grid));
    let state = solver.run(&init, &[1.0])?.pop().expect("snapshot");
    let inner = InnerExpansion::from_limit_state(&state, &solver);
    let abs: Vec<f64> = inner.corrector.compat_residual.iter().map(|v| v.abs()).collect();
    Ok(grid.phi.integrate(&abs))
}

pub fn criterion_14() -> CriterionReport {
    let r = (|| {
        let levels = [(64, 32, 0.02), (128, 64, 0.01), (256, 128, 0.005), (512, 256, 0.0025)];
        let vals = levels.iter().map(|&(ny, np, dt)| compat_residual(ny, np, dt)).collect::<Result<Vec<f64>>>()?;
        let ratios: Vec<f64> = vals.windows(2).map(|w| w[1] / w[0]).collect();
        let ok = ratios.iter().all(|q| (0.35..=0.65).contains(q));
        Ok((ok, format!("compat residuals {} ratios {} (band [0.35, 0.65])", fmt_list(&vals), fmt_list(&ratios))))
    })();
    CriterionReport::from_result(14, "compatibility residual", r)
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Every criterion, in order.
pub fn run_all() -> Vec<CriterionReport> {
    let mut out = vec![criterion_01(), criterion_02(), criterion_03(), criterion_04(), criterion_05()];
    let sweep = reference_sweep();
    out.push(criterion_06(&sweep));
    out.push(criterion_07(&sweep));
    let (c8, c9) = criterion_08_09();
    out.push(c8);
    out.push(c9);
    out.push(criterion_10(&no_diffusion_sweep()));
    out.push(criterion_11());
    out.push(criterion_12());
    out.push(criterion_13());
    out.push(criterion_14());
    out
}
