//! `activerods <subcommand> --config run.toml`. Every artifact is written
//! under the configured output directory and announced with one line on
//! stdout.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::acceptance;
use crate::asymptotics::{composite_refined, composite_simple, residual_report, InnerExpansion};
use crate::coefficients::mu0;
use crate::decomposition::{decompose, gronwall_constant, standard_tests, wall_amplitude, weak_pairings, EnergyTrace};
use crate::error::{Error, Result};
use crate::full_solver::FullSolver;
use crate::grids::PhaseField;
use crate::harness::config::RunConfig;
use crate::harness::output::{field_table, profile_table, summary_line, Cell, Table};
use crate::harness::sweep::{pairing_table, residual_table, sweep_epsilon, sweep_table};
use crate::limit_solver::checks::{band_limited_field, coercivity_gap, resolvent_solve, LineField, LineGrid, ResolventProblem};
use crate::limit_solver::{BulkWallState, LimitSolver};
use crate::particles::{histogram, run_particles, tv_distance, ParticleEnsemble, DEFAULT_STREAM_STRIDE};

#[derive(Debug, Parser)]
#[command(name = "activerods", version, about = "Wall accumulation of active rods: full, limit and particle solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full kinetic solve at the model ε; writes full_snapshots.csv.
    RunFull(ConfigArg),
    /// Bulk/wall limit solve; writes limit_bulk.csv and limit_wall.csv.
    RunLimit(ConfigArg),
    /// Composite approximations at T; writes composite.csv and residual.csv.
    Composite(ConfigArg),
    /// ε-sweep over experiment.epsilon_list; writes sweep.csv, pairings.csv, residual.csv.
    Sweep(ConfigArg),
    /// Wall/remainder split of the full solution at the snapshot times.
    Decompose(ConfigArg),
    /// Monte-Carlo ensemble binned on the run grid, with its TV distance to the full solver.
    Particles(ConfigArg),
    /// Coercivity gap of the adjoint-shifted limit operator on random fields.
    CheckCoercivity(ConfigArg),
    /// Regularised resolvent bound ratios over experiment.eps_reg_list.
    CheckResolvent(ConfigArg),
    /// Runs the acceptance suite; exits 4 if any criterion fails.
    CheckAll,
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code: 0 success, 2 configuration, 3 assumption violated, 4 numerical.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let load = |a: &ConfigArg| RunConfig::from_path(&a.config);
    match cmd {
        Command::RunFull(a) => run_full_cmd(&load(&a)?),
        Command::RunLimit(a) => run_limit_cmd(&load(&a)?),
        Command::Composite(a) => composite_cmd(&load(&a)?),
        Command::Sweep(a) => sweep_cmd(&load(&a)?),
        Command::Decompose(a) => decompose_cmd(&load(&a)?),
        Command::Particles(a) => particles_cmd(&load(&a)?),
        Command::CheckCoercivity(a) => coercivity_cmd(&load(&a)?),
        Command::CheckResolvent(a) => resolvent_cmd(&load(&a)?),
        Command::CheckAll => return Ok(check_all()),
    }
    .map(|()| 0)
}

fn emit(dir: &Path, name: &str, table: &Table) -> Result<()> {
    let path = table.write(dir, name)?;
    println!("{}", summary_line(&path, table));
    Ok(())
}

fn limit_run(cfg: &RunConfig) -> Result<(LimitSolver, BulkWallState, Vec<BulkWallState>)> {
    let eps = cfg.model.epsilon;
    let grid = cfg.grid_for(eps)?;
    let solver = LimitSolver::new(&grid, &cfg.params()?, &cfg.solver_config()?)?;
    let init = BulkWallState::from_bulk(cfg.initial_field(&grid, eps)?);
    let snaps = solver.run(&init, &cfg.snapshot_times())?;
    Ok((solver, init, snaps))
}

fn full_run(cfg: &RunConfig) -> Result<Vec<PhaseField>> {
    let eps = cfg.model.epsilon;
    let grid = cfg.grid_for(eps)?;
    let solver = FullSolver::new(&grid, &cfg.params()?, &cfg.solver_config()?)?;
    solver.run(&cfg.initial_field(&grid, eps)?, &cfg.snapshot_times())
}

fn run_full_cmd(cfg: &RunConfig) -> Result<()> {
    let times = cfg.snapshot_times();
    let snaps = full_run(cfg)?;
    let refs: Vec<&PhaseField> = snaps.iter().collect();
    emit(&cfg.out_dir(), "full_snapshots.csv", &field_table(&times, &refs, "f"))
}

fn run_limit_cmd(cfg: &RunConfig) -> Result<()> {
    let times = cfg.snapshot_times();
    let (_, _, snaps) = limit_run(cfg)?;
    let dir = cfg.out_dir();
    let phi = snaps[0].grid().phi.clone();
    let bulk: Vec<&PhaseField> = snaps.iter().map(|s| &s.bulk).collect();
    emit(&dir, "limit_bulk.csv", &field_table(&times, &bulk, "rho_bulk"))?;
    let wall: Vec<&[f64]> = snaps.iter().map(|s| s.wall.as_slice()).collect();
    emit(&dir, "limit_wall.csv", &profile_table(&times, &wall, &phi, "rho_wall"))
}

fn composite_cmd(cfg: &RunConfig) -> Result<()> {
    let eps = cfg.model.epsilon;
    let params = cfg.params()?;
    let cfg_final = RunConfig { experiment: Default::default(), ..cfg.clone() };
    let (solver, _, mut snaps) = limit_run(&cfg_final)?;
    let state = snaps.pop().expect("final snapshot");
    let inner = InnerExpansion::from_limit_state(&state, &solver);
    let f_bar = composite_simple(&state, &params.speed, eps)?;
    let f_hat = composite_refined(&state, &inner, &params.speed, eps)?;
    let grid = state.grid().clone();
    let mut t = Table::new(&["y", "phi", "f_bar", "f_hat"]);
    for j in 0..grid.n_phi() {
        for (i, &y) in grid.y.centers().iter().enumerate() {
            t.push(&[y, grid.phi.node(j), f_bar.get(i, j), f_hat.get(i, j)]);
        }
    }
    let dir = cfg.out_dir();
    emit(&dir, "composite.csv", &t)?;
    let res = residual_report(&state, &inner, &params)?;
    let mut r = Table::new(&["epsilon", "l1_R", "l1_r"]);
    r.push(&[res.epsilon, res.l1_interior, res.l1_boundary]);
    emit(&dir, "residual.csv", &r)
}

fn sweep_cmd(cfg: &RunConfig) -> Result<()> {
    let rows = sweep_epsilon(cfg);
    let dir = cfg.out_dir();
    emit(&dir, "sweep.csv", &sweep_table(&rows))?;
    emit(&dir, "pairings.csv", &pairing_table(&rows))?;
    emit(&dir, "residual.csv", &residual_table(&rows))?;
    for r in &rows {
        if let Some(f) = &r.failure {
            eprintln!("row epsilon={} failed: {f}", r.epsilon);
        }
    }
    Ok(())
}

fn decompose_cmd(cfg: &RunConfig) -> Result<()> {
    let eps = cfg.model.epsilon;
    let params = cfg.params()?;
    let times = cfg.snapshot_times();
    let snaps = full_run(cfg)?;
    let phi = snaps[0].grid().phi.clone();
    let decs = snaps.iter().map(|f| decompose(f, &params.speed, eps)).collect::<Result<Vec<_>>>()?;
    let dir = cfg.out_dir();
    let ms: Vec<&[f64]> = decs.iter().map(|d| d.m.as_slice()).collect();
    emit(&dir, "decompose_m.csv", &profile_table(&times, &ms, &phi, "m"))?;

    let trace = EnergyTrace::from_snapshots(&times, &snaps, &params.speed, eps)?;
    let mut e = Table::new(&["t", "E", "dissipation"]);
    for k in 0..times.len() {
        e.push(&[times[k], trace.energy[k], trace.dissipation[k]]);
    }
    emit(&dir, "energy.csv", &e)?;

    let tests = standard_tests(&phi);
    let profiles: Vec<Vec<f64>> = tests.iter().map(|(_, h)| h.clone()).collect();
    let (_, _, limit_snaps) = limit_run(cfg)?;
    let full = weak_pairings(&decs.last().expect("snapshot").m, &profiles, &phi);
    let limit = weak_pairings(&wall_amplitude(limit_snaps.last().expect("snapshot"), &params.speed), &profiles, &phi);
    let mut p = Table::new(&["epsilon", "test", "pairing"]);
    for ((name, _), v) in tests.iter().zip(&full) {
        p.push_cells(&[Cell::Num(eps), Cell::Text(name), Cell::Num(*v)]);
    }
    for ((name, _), v) in tests.iter().zip(&limit) {
        p.push_cells(&[Cell::Num(0.0), Cell::Text(name), Cell::Num(*v)]);
    }
    emit(&dir, "pairings.csv", &p)?;
    if params.diffusion == 0.0 {
        println!("energy bound ratio {:.6} (<= 1 holds)", trace.gronwall_ratio(gronwall_constant(&params)));
    }
    Ok(())
}

fn particles_cmd(cfg: &RunConfig) -> Result<()> {
    if cfg.experiment.initial != "exponential" {
        return Err(Error::Config("particles supports only exponential initial data".into()));
    }
    let eps = cfg.model.epsilon;
    let params = cfg.params()?;
    params.validate_full()?;
    let grid = cfg.grid_for(eps)?;
    let mut pde = full_run(&RunConfig { experiment: Default::default(), ..cfg.clone() })?.pop().expect("snapshot");
    pde.scale(1.0 / pde.mass());
    let ex = &cfg.experiment;
    let seed = *ex.seeds.first().ok_or_else(|| Error::Config("experiment.seeds is empty".into()))?;
    let mut e = ParticleEnsemble::sample_truncated_exponential(ex.particles, grid.y.y_max(), seed, DEFAULT_STREAM_STRIDE);
    run_particles(&mut e, &params, ex.particle_dt, params.t_final)?;
    let hist = histogram(&e, &grid)?;
    let tv = tv_distance(&hist, &pde)?;

    let mut t = Table::new(&["y", "phi", "density"]);
    for j in 0..grid.n_phi() {
        for (i, &y) in grid.y.centers().iter().enumerate() {
            t.push(&[y, grid.phi.node(j), hist.get(i, j)]);
        }
    }
    let dir = cfg.out_dir();
    emit(&dir, "particles_binned.csv", &t)?;
    let mut r = Table::new(&["particles", "seed", "dt", "tv_distance"]);
    r.push(&[ex.particles as f64, seed as f64, ex.particle_dt, tv]);
    emit(&dir, "particles_tv.csv", &r)
}

fn line_grid(cfg: &RunConfig) -> Result<LineGrid> {
    let ex = &cfg.experiment;
    LineGrid::new(ex.line_extent, ex.line_n_y, ex.line_n_phi)
}

fn shift(cfg: &RunConfig) -> Result<f64> {
    Ok(cfg.experiment.lambda.unwrap_or(mu0(&cfg.turning()?) + 1.0))
}

fn coercivity_cmd(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    let (g, lambda) = (line_grid(cfg)?, shift(cfg)?);
    let mut t = Table::new(&["seed", "lambda", "gap"]);
    for &seed in &cfg.experiment.seeds {
        let u = band_limited_field(&g, 6, seed);
        t.push(&[seed as f64, lambda, coercivity_gap(&u, lambda, &params)]);
    }
    emit(&cfg.out_dir(), "coercivity.csv", &t)
}

fn resolvent_cmd(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    let (g, lambda) = (line_grid(cfg)?, shift(cfg)?);
    let f = LineField::from_fn(&g, |y, p| (-y * y).exp() * (1.0 + 0.5 * p.cos() + 0.3 * (2.0 * p).sin()));
    let mut t = Table::new(&["eps_reg", "lambda", "bound_ratio"]);
    for &e in &cfg.experiment.eps_reg_list {
        let sol = resolvent_solve(&ResolventProblem::new(lambda, e, f.clone(), &params)?, &params)?;
        t.push(&[e, lambda, sol.bound_ratio]);
    }
    emit(&cfg.out_dir(), "resolvent.csv", &t)
}

fn check_all() -> i32 {
    let reports = acceptance::run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed == 0 {
        0
    } else {
        4
    }
}
