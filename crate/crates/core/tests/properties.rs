use std::f64::consts::TAU;

use activerods::decomposition::decompose;
use activerods::full_solver::{run_full, FullSolverConfig, Splitting, TimeStep};
use activerods::grids::rebin;
use activerods::limit_solver::{run_limit, BulkWallState};
use activerods::{AngularCoefficient, ModelParams, PhaseField, PhaseGrid, PhiGrid, YGrid};
use proptest::prelude::*;

fn params(eps: f64, d: f64, a: f64, gamma: f64) -> ModelParams {
    ModelParams::new(eps, d, 1.0, AngularCoefficient::shifted_sine(1.0, a), AngularCoefficient::shear_turning(gamma))
}

fn bumpy(grid: &std::sync::Arc<PhaseGrid>, k: f64, c: f64) -> PhaseField {
    PhaseField::from_fn(grid, |i, j| {
        let y = grid.y.centers()[i];
        let p = grid.phi.node(j);
        (1.0 + c * (p * k).cos()) * (-(y - 1.0).powi(2)).exp()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn full_solver_conserves_mass_and_positivity(
        eps in 0.01f64..0.2, d in 0.0f64..0.5, a in 0.0f64..0.9, gamma in -1.0f64..1.0,
        k in 1.0f64..4.0, c in 0.0f64..0.9, lie in any::<bool>(),
    ) {
        let grid = PhaseGrid::new(YGrid::graded(6.0, 48, 8.0 * eps, 12).unwrap(), PhiGrid::new(16).unwrap());
        let f0 = bumpy(&grid, k.round(), c);
        let cfg = FullSolverConfig {
            dt: TimeStep::Fixed(0.02),
            splitting: if lie { Splitting::Lie } else { Splitting::Strang },
            ..Default::default()
        };
        let out = run_full(&f0, &params(eps, d, a, gamma), &cfg, &[0.3]).unwrap().pop().unwrap();
        prop_assert!(((out.mass() - f0.mass()) / f0.mass()).abs() < 1e-11);
        prop_assert!(out.min() >= -1e-14);
    }

    #[test]
    fn limit_solver_conserves_combined_mass(d in 0.0f64..0.5, a in 0.0f64..0.9, gamma in -1.0f64..1.0) {
        let grid = PhaseGrid::new(YGrid::uniform(6.0, 48).unwrap(), PhiGrid::new(16).unwrap());
        let init = BulkWallState::from_bulk(bumpy(&grid, 2.0, 0.5));
        let out = run_limit(&init, &params(0.0, d, a, gamma), &FullSolverConfig::default(), &[0.5]).unwrap().pop().unwrap();
        prop_assert!((out.combined_mass() - init.combined_mass()).abs() < 1e-12 * init.combined_mass());
        prop_assert!(out.wall.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn decomposition_is_orthogonal_and_exact(eps in 0.005f64..0.1, k in 1.0f64..3.0, c in 0.0f64..0.9) {
        let grid = PhaseGrid::new(YGrid::graded(6.0, 64, 8.0 * eps, 16).unwrap(), PhiGrid::new(16).unwrap());
        let f = bumpy(&grid, k.round(), c);
        let speed = AngularCoefficient::shifted_sine(1.0, 0.5);
        let dec = decompose(&f, &speed, eps).unwrap();
        let scale = f.norms().l1;
        prop_assert!(dec.orthogonality_defect.iter().all(|d| d.abs() <= 1e-12 * scale));
    }

    #[test]
    fn rebin_conserves_mass(n_fine in 16usize..60, n_coarse in 4usize..16) {
        let fine = PhaseGrid::new(YGrid::graded(5.0, n_fine, 0.5, 8).unwrap(), PhiGrid::new(32).unwrap());
        let coarse = PhaseGrid::new(YGrid::uniform(5.0, n_coarse).unwrap(), PhiGrid::new(8).unwrap());
        let f = PhaseField::from_antiderivative(&fine, |y, _| -(-y).exp() / TAU);
        let g = rebin(&f, &coarse);
        prop_assert!((g.mass() - f.mass()).abs() < 1e-12);
    }
}
