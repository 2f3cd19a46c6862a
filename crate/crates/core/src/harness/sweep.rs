//! ε-sweeps comparing the full solution with the limit-based composites.

use rayon::prelude::*;

use crate::asymptotics::{composite_refined, composite_simple, residual_report, InnerExpansion};
use crate::decomposition::{decompose, standard_tests, wall_amplitude, weak_pairings};
use crate::error::{Error, Result};
use crate::full_solver::FullSolver;
use crate::harness::config::RunConfig;
use crate::harness::output::{Cell, Table};
use crate::limit_solver::{BulkWallState, LimitSolver};

#[derive(Debug, Clone, PartialEq)]
pub struct PairingRow {
    pub test: &'static str,
    /// ∮ m_ε h from the decomposition of the full solution.
    pub full: f64,
    /// ∮ V ρ_wall h from the limit solution.
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub t_final: f64,
    pub l1_error: f64,
    pub l1_error_refined: f64,
    pub l1_residual_interior: f64,
    pub l1_residual_boundary: f64,
    pub mass_full: f64,
    pub mass_full_initial: f64,
    pub mass_limit_combined: f64,
    pub mass_limit_initial: f64,
    pub order_vs_prev: Option<f64>,
    pub pairings: Vec<PairingRow>,
    pub failure: Option<String>,
}

impl SweepRecord {
    fn failed(epsilon: f64, t_final: f64, err: &Error) -> Self {
        Self {
            epsilon,
            t_final,
            l1_error: f64::NAN,
            l1_error_refined: f64::NAN,
            l1_residual_interior: f64::NAN,
            l1_residual_boundary: f64::NAN,
            mass_full: f64::NAN,
            mass_full_initial: f64::NAN,
            mass_limit_combined: f64::NAN,
            mass_limit_initial: f64::NAN,
            order_vs_prev: None,
            pairings: Vec::new(),
            failure: Some(err.to_string()),
        }
    }

    pub fn residual_total(&self) -> f64 {
        self.l1_residual_interior + self.l1_residual_boundary
    }

    pub fn mass_full_drift(&self) -> f64 {
        ((self.mass_full - self.mass_full_initial) / self.mass_full_initial).abs()
    }

    pub fn mass_limit_drift(&self) -> f64 {
        ((self.mass_limit_combined - self.mass_limit_initial) / self.mass_limit_initial).abs()
    }
}

/// One sweep row: full and limit solves on the grid built for `epsilon`.
pub fn sweep_row(cfg: &RunConfig, epsilon: f64) -> Result<SweepRecord> {
    let params = cfg.params()?.with_epsilon(epsilon);
    let solver_cfg = cfg.solver_config()?;
    let grid = cfg.grid_for(epsilon)?;
    let f0 = cfg.initial_field(&grid, epsilon)?;
    let t = params.t_final;

    let full = FullSolver::new(&grid, &params, &solver_cfg)?;
    let f = full.run(&f0, &[t])?.pop().expect("one snapshot");

    let limit = LimitSolver::new(&grid, &params, &solver_cfg)?;
    let init = BulkWallState::from_bulk(f0.clone());
    let state = limit.run(&init, &[t])?.pop().expect("one snapshot");

    let inner = InnerExpansion::from_limit_state(&state, &limit);
    let f_bar = composite_simple(&state, &params.speed, epsilon)?;
    let f_hat = composite_refined(&state, &inner, &params.speed, epsilon)?;
    let res = residual_report(&state, &inner, &params)?;

    let dec = decompose(&f, &params.speed, epsilon)?;
    let tests = standard_tests(&grid.phi);
    let profiles: Vec<Vec<f64>> = tests.iter().map(|(_, h)| h.clone()).collect();
    let full_pairs = weak_pairings(&dec.m, &profiles, &grid.phi);
    let limit_pairs = weak_pairings(&wall_amplitude(&state, &params.speed), &profiles, &grid.phi);
    let pairings = tests
        .iter()
        .zip(full_pairs.iter().zip(&limit_pairs))
        .map(|((name, _), (&a, &b))| PairingRow { test: name, full: a, limit: b })
        .collect();

    Ok(SweepRecord {
        epsilon,
        t_final: t,
        l1_error: f.l1_distance(&f_bar)?,
        l1_error_refined: f.l1_distance(&f_hat)?,
        l1_residual_interior: res.l1_interior,
        l1_residual_boundary: res.l1_boundary,
        mass_full: f.mass(),
        mass_full_initial: f0.mass(),
        mass_limit_combined: state.combined_mass(),
        mass_limit_initial: init.combined_mass(),
        order_vs_prev: None,
        pairings,
        failure: None,
    })
}

/// Runs every ε of the experiment list. Rows are independent and computed
/// in parallel; a failing row is kept with its error message.
pub fn sweep_epsilon(cfg: &RunConfig) -> Vec<SweepRecord> {
    let t = cfg.model.t_final;
    let mut rows: Vec<SweepRecord> = cfg
        .experiment
        .epsilon_list
        .par_iter()
        .map(|&eps| sweep_row(cfg, eps).unwrap_or_else(|e| SweepRecord::failed(eps, t, &e)))
        .collect();
    for k in 1..rows.len() {
        let (prev, cur) = (rows[k - 1].l1_error, rows[k].l1_error);
        let ratio = rows[k - 1].epsilon / rows[k].epsilon;
        if prev > 0.0 && cur > 0.0 {
            rows[k].order_vs_prev = Some((prev / cur).ln() / ratio.ln());
        }
    }
    rows
}

/// Least-squares slope of ln(value) against ln(ε).
pub fn fit_log_slope(eps: &[f64], values: &[f64]) -> Result<f64> {
    if eps.len() < 3 || eps.len() != values.len() {
        return Err(Error::Fit(format!("need at least 3 points, got {}", eps.len())));
    }
    if values.iter().chain(eps).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("log-log fit needs positive finite values".into()));
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Convergence order of `l1_error` over the sweep.
pub fn fit_order(records: &[SweepRecord]) -> Result<f64> {
    let eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    let err: Vec<f64> = records.iter().map(|r| r.l1_error).collect();
    fit_log_slope(&eps, &err)
}

pub fn sweep_table(records: &[SweepRecord]) -> Table {
    let mut t = Table::new(&[
        "epsilon",
        "t_final",
        "l1_error",
        "l1_error_refined",
        "l1_R",
        "l1_r",
        "mass_full",
        "mass_limit_combined",
        "order_vs_prev",
    ]);
    for r in records {
        t.push(&[
            r.epsilon,
            r.t_final,
            r.l1_error,
            r.l1_error_refined,
            r.l1_residual_interior,
            r.l1_residual_boundary,
            r.mass_full,
            r.mass_limit_combined,
            r.order_vs_prev.unwrap_or(f64::NAN),
        ]);
    }
    t
}

/// `epsilon,test,pairing`; the limit value is listed once with ε = 0,
/// taken from the finest row.
pub fn pairing_table(records: &[SweepRecord]) -> Table {
    let mut t = Table::new(&["epsilon", "test", "pairing"]);
    for r in records {
        for p in &r.pairings {
            t.push_cells(&[Cell::Num(r.epsilon), Cell::Text(p.test), Cell::Num(p.full)]);
        }
    }
    if let Some(last) = records.iter().rev().find(|r| r.failure.is_none()) {
        for p in &last.pairings {
            t.push_cells(&[Cell::Num(0.0), Cell::Text(p.test), Cell::Num(p.limit)]);
        }
    }
    t
}

pub fn residual_table(records: &[SweepRecord]) -> Table {
    let mut t = Table::new(&["epsilon", "l1_R", "l1_r"]);
    for r in records {
        t.push(&[r.epsilon, r.l1_residual_interior, r.l1_residual_boundary]);
    }
    t
}
