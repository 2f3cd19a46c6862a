//! Matched boundary-layer expansion of the ε-problem around the limit.
//!
//! With z = y/ε the inner solution is
//! ε⁻¹ ŵ V e^{−Vz} + û₀ + m(z) e^{−Vz}, m(z) = c₀ + c₁z + c₂z² + c₃z³,
//! and the composite adds the outer bulk u₀(y) − û₀.

use std::sync::Arc;

use crate::coefficients::{AngularCoefficient, ModelParams};
use crate::error::{Error, Result};
use crate::full_solver::steady_layer;
use crate::grids::{poly_exp_integral, trace_wall, PhaseField, PhaseGrid, PhiGrid};
use crate::limit_solver::{BulkWallState, LimitSolver};
use crate::spectral::SpectralDiff;

/// Angular coefficient samples and the spectral differentiator on one grid.
#[derive(Debug)]
pub struct AngularContext {
    pub speed: Vec<f64>,
    pub speed_d1: Vec<f64>,
    pub speed_d2: Vec<f64>,
    pub turning: Vec<f64>,
    pub diffusion: f64,
    diff: SpectralDiff,
}

impl AngularContext {
    pub fn new(phi: &PhiGrid, speed: &AngularCoefficient, turning: &AngularCoefficient, diffusion: f64) -> Self {
        let nodes = phi.nodes();
        let s = |f: &dyn Fn(f64) -> f64| nodes.iter().map(|&p| f(p)).collect::<Vec<_>>();
        Self {
            speed: s(&|p| speed.value(p)),
            speed_d1: s(&|p| speed.derivative(p)),
            speed_d2: s(&|p| speed.second_derivative(p)),
            turning: s(&|p| turning.value(p)),
            diffusion,
            diff: SpectralDiff::new(phi.len()),
        }
    }

    pub fn from_params(phi: &PhiGrid, params: &ModelParams) -> Self {
        Self::new(phi, &params.speed, &params.turning, params.diffusion)
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn d(&self, v: &[f64], order: u32) -> Vec<f64> {
        self.diff.derivative(v, order)
    }

    /// Continuous wall rate −∂_φ(Φŵ) + D∂²_φŵ + Vû₀.
    pub fn wall_rate(&self, w_hat: &[f64], u0_hat: &[f64]) -> Vec<f64> {
        let flux: Vec<f64> = mul(&self.turning, w_hat);
        let d_flux = self.d(&flux, 1);
        let w2 = self.d(w_hat, 2);
        (0..self.len()).map(|j| -d_flux[j] + self.diffusion * w2[j] + self.speed[j] * u0_hat[j]).collect()
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Σ_k p_k(φ) z^k e^{−zV(φ)}, with p_k sampled on the φ nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPoly {
    pub coeffs: Vec<Vec<f64>>,
}

impl LayerPoly {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, j: usize, z: f64, speed: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c[j];
        }
        acc * (-speed * z).exp()
    }

    /// Polynomial part only, at z.
    pub fn poly(&self, j: usize, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c[j])
    }

    /// (∂_φ(Φ·) − D∂²_φ) applied to the layer function, collected again in
    /// powers of z (degree grows by two).
    pub fn apply_angular(&self, ctx: &AngularContext) -> LayerPoly {
        let n = ctx.len();
        let mut out = vec![vec![0.0; n]; self.coeffs.len() + 2];
        let d = ctx.diffusion;
        for (k, q) in self.coeffs.iter().enumerate() {
            let flux = mul(&ctx.turning, q);
            let d_flux = ctx.d(&flux, 1);
            let q1 = ctx.d(q, 1);
            let q2 = ctx.d(q, 2);
            for j in 0..n {
                let (v1, v2) = (ctx.speed_d1[j], ctx.speed_d2[j]);
                out[k][j] += d_flux[j] - d * q2[j];
                out[k + 1][j] += -v1 * flux[j] + d * (2.0 * v1 * q1[j] + v2 * q[j]);
                out[k + 2][j] += -d * v1 * v1 * q[j];
            }
        }
        LayerPoly { coeffs: out }
    }

    /// Exact average of the layer function over [a, b] in y = εz.
    pub fn cell_average(&self, j: usize, a: f64, b: f64, epsilon: f64, speed: f64) -> f64 {
        let (za, zb) = (a / epsilon, b / epsilon);
        let s: f64 = self.coeffs.iter().enumerate().map(|(k, c)| c[j] * poly_exp_integral(k, za, zb, speed)).sum();
        s * epsilon / (b - a)
    }
}

/// z⁰, z¹, z² coefficients of (∂_t + ∂_φ(Φ·) − D∂²_φ)(ŵVe^{−zV}) e^{zV},
/// with ∂_tŵ given by `w_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ACoeffs {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
}

pub fn a_coeffs_with_rate(w_hat: &[f64], w_rate: &[f64], ctx: &AngularContext) -> ACoeffs {
    let p = mul(w_hat, &ctx.speed);
    let mut poly = LayerPoly::new(vec![p]).apply_angular(ctx);
    for j in 0..ctx.len() {
        poly.coeffs[0][j] += ctx.speed[j] * w_rate[j];
    }
    let mut it = poly.coeffs.into_iter();
    ACoeffs { a1: it.next().unwrap(), a2: it.next().unwrap(), a3: it.next().unwrap() }
}

/// A-coefficients with ∂_tŵ eliminated through the continuous wall equation.
pub fn a_coeffs(w_hat: &[f64], u0_hat: &[f64], ctx: &AngularContext) -> ACoeffs {
    let rate = ctx.wall_rate(w_hat, u0_hat);
    a_coeffs_with_rate(w_hat, &rate, ctx)
}

/// Alternate closed forms of A₂, A₃ that carry an extra factor Φ in their
/// diffusion terms. They coincide with [`a_coeffs`] when D = 0 and are
/// kept for comparison only.
pub fn alternate_a2_a3(w_hat: &[f64], ctx: &AngularContext) -> (Vec<f64>, Vec<f64>) {
    let p = mul(w_hat, &ctx.speed);
    let p1 = ctx.d(&p, 1);
    let d = ctx.diffusion;
    let n = ctx.len();
    let a2 = (0..n)
        .map(|j| {
            let (v1, v2, phi) = (ctx.speed_d1[j], ctx.speed_d2[j], ctx.turning[j]);
            -v1 * phi * p[j] + 2.0 * d * v1 * p1[j] + d * v2 * phi * p[j]
        })
        .collect();
    let a3 = (0..n).map(|j| -d * ctx.speed_d1[j].powi(2) * ctx.turning[j] * p[j]).collect();
    (a2, a3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    /// c₀..c₃ of the cubic m.
    pub c: [Vec<f64>; 4],
    /// c₁ + Vû₀, the defect in the z = 0 flux condition.
    pub compat_residual: Vec<f64>,
}

pub fn p0_coeffs(a: &ACoeffs, speed: &[f64], u0_hat: &[f64]) -> Corrector {
    let n = speed.len();
    let c0 = vec![0.0; n];
    let c3: Vec<f64> = (0..n).map(|j| -a.a3[j] / (3.0 * speed[j])).collect();
    let c2: Vec<f64> = (0..n).map(|j| (6.0 * c3[j] - a.a2[j]) / (2.0 * speed[j])).collect();
    let c1: Vec<f64> = (0..n).map(|j| (2.0 * c2[j] - a.a1[j]) / speed[j]).collect();
    let compat_residual = (0..n).map(|j| c1[j] + speed[j] * u0_hat[j]).collect();
    Corrector { c: [c0, c1, c2, c3], compat_residual }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerExpansion {
    pub w_hat: Vec<f64>,
    pub u0_hat: Vec<f64>,
    pub w_rate: Vec<f64>,
    pub a: ACoeffs,
    pub alternate_a2: Vec<f64>,
    pub alternate_a3: Vec<f64>,
    pub corrector: Corrector,
    /// Time derivatives of c₀..c₃, when the expansion came from a solver.
    pub corrector_rate: Option<[Vec<f64>; 4]>,
}

impl InnerExpansion {
    /// From wall and trace profiles, eliminating ∂_tŵ with the continuous
    /// wall equation.
    pub fn from_profiles(w_hat: &[f64], u0_hat: &[f64], ctx: &AngularContext) -> Self {
        let w_rate = ctx.wall_rate(w_hat, u0_hat);
        Self::assemble(w_hat, u0_hat, w_rate, ctx, None)
    }

    /// From a limit-solver state: ∂_tŵ is the solver's own discrete wall
    /// tendency, and the corrector's time derivative follows from the
    /// linearity of the coefficient map applied to (∂_tŵ, ∂²_tŵ).
    pub fn from_limit_state(state: &BulkWallState, solver: &LimitSolver) -> Self {
        let ctx = AngularContext::from_params(&state.grid().phi, solver.params());
        let u0_hat = trace_wall(&state.bulk);
        let w_rate = solver.wall_tendency(&state.wall, &state.bulk);
        let bulk_rate = solver.bulk_tendency(&state.bulk);
        let w_rate2 = solver.wall_tendency(&w_rate, &bulk_rate);
        let u0_rate = trace_wall(&bulk_rate);
        let rate_coeffs = a_coeffs_with_rate(&w_rate, &w_rate2, &ctx);
        let rate_corr = p0_coeffs(&rate_coeffs, &ctx.speed, &u0_rate);
        Self::assemble(&state.wall, &u0_hat, w_rate, &ctx, Some(rate_corr.c))
    }

    fn assemble(
        w_hat: &[f64],
        u0_hat: &[f64],
        w_rate: Vec<f64>,
        ctx: &AngularContext,
        corrector_rate: Option<[Vec<f64>; 4]>,
    ) -> Self {
        let a = a_coeffs_with_rate(w_hat, &w_rate, ctx);
        let (alternate_a2, alternate_a3) = alternate_a2_a3(w_hat, ctx);
        let corrector = p0_coeffs(&a, &ctx.speed, u0_hat);
        Self {
            w_hat: w_hat.to_vec(),
            u0_hat: u0_hat.to_vec(),
            w_rate,
            a,
            alternate_a2,
            alternate_a3,
            corrector,
            corrector_rate,
        }
    }

    pub fn cubic(&self) -> LayerPoly {
        LayerPoly::new(self.corrector.c.to_vec())
    }

    /// max_φ |A₂ − alternate A₂| and |A₃ − alternate A₃|.
    pub fn alternate_discrepancy(&self) -> (f64, f64) {
        let md = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        (md(&self.a.a2, &self.alternate_a2), md(&self.a.a3, &self.alternate_a3))
    }

    pub fn max_compat_residual(&self) -> f64 {
        self.corrector.compat_residual.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cell averages of ε⁻¹ ŵ V e^{−Vy/ε}.
pub fn wall_layer(w_hat: &[f64], grid: &Arc<PhaseGrid>, speed: &AngularCoefficient, epsilon: f64) -> Result<PhaseField> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon = {epsilon} must be > 0")));
    }
    if w_hat.len() != grid.n_phi() {
        return Err(Error::Grid("wall profile length does not match the φ grid".into()));
    }
    let mut f = steady_layer(grid, speed, epsilon);
    for (j, &w) in w_hat.iter().enumerate() {
        f.column_mut(j).iter_mut().for_each(|v| *v *= w);
    }
    Ok(f)
}

/// Wall layer plus bulk.
pub fn composite_simple(state: &BulkWallState, speed: &AngularCoefficient, epsilon: f64) -> Result<PhaseField> {
    let mut f = wall_layer(&state.wall, state.grid(), speed, epsilon)?;
    f.axpy(1.0, &state.bulk);
    Ok(f)
}

/// Wall layer + cubic corrector layer + bulk.
pub fn composite_refined(
    state: &BulkWallState,
    inner: &InnerExpansion,
    speed: &AngularCoefficient,
    epsilon: f64,
) -> Result<PhaseField> {
    let mut f = composite_simple(state, speed, epsilon)?;
    let g = state.grid();
    let faces = g.y.faces();
    let cubic = inner.cubic();
    for j in 0..g.n_phi() {
        let v = speed.value(g.phi.node(j));
        let col = f.column_mut(j);
        for (i, c) in col.iter_mut().enumerate() {
            *c += cubic.cell_average(j, faces[i], faces[i + 1], epsilon, v);
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub l1_interior: f64,
    pub l1_boundary: f64,
}

impl ResidualReport {
    pub fn total(&self) -> f64 {
        self.l1_interior + self.l1_boundary
    }
}

/// Second derivative of the parabola through three unevenly spaced points.
fn second_difference(x: [f64; 3], f: [f64; 3]) -> f64 {
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    2.0 * (f[0] / (h1 * (h1 + h2)) - f[1] / (h1 * h2) + f[2] / (h2 * (h1 + h2)))
}

/// Interior and boundary residuals of the refined composite in the full
/// ε-problem. The bulk obeys its limit equation by construction (its time
/// derivative is the solver's tendency), so what remains is the layer
/// defect (∂_t + L_φ)(m e^{−Vz}) plus the outer diffusion −ε∂²_y u₀, both
/// evaluated at cell centres; the boundary part is −ε∂_y u₀ at y = 0.
pub fn residual_report(state: &BulkWallState, inner: &InnerExpansion, params: &ModelParams) -> Result<ResidualReport> {
    let epsilon = params.epsilon;
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon = {epsilon} must be > 0")));
    }
    let rate = inner
        .corrector_rate
        .as_ref()
        .ok_or_else(|| Error::Config("residuals need an expansion built from a limit-solver state".into()))?;
    let g = state.grid();
    let ctx = AngularContext::from_params(&g.phi, params);
    let cubic = inner.cubic();

    // (∂_t + L)(m e^{−Vz}).
    let mut layer = cubic.apply_angular(&ctx);
    for (k, rk) in rate.iter().enumerate() {
        for j in 0..ctx.len() {
            layer.coeffs[k][j] += rk[j];
        }
    }
    // (1/ε)[ΣA_k z^k − (m″ − Vm′)]; vanishes up to rounding.
    let c = &inner.corrector.c;
    let balance: Vec<[f64; 3]> = (0..ctx.len())
        .map(|j| {
            let v = ctx.speed[j];
            [
                inner.a.a1[j] - (2.0 * c[2][j] - v * c[1][j]),
                inner.a.a2[j] - (6.0 * c[3][j] - 2.0 * v * c[2][j]),
                inner.a.a3[j] + 3.0 * v * c[3][j],
            ]
        })
        .collect();

    let centers = g.y.centers();
    let widths = g.y.widths();
    let ny = g.n_y();
    let h = g.phi.spacing();
    let mut l1 = 0.0;
    for j in 0..g.n_phi() {
        let v = ctx.speed[j];
        let col = state.bulk.column(j);
        for i in 0..ny {
            let z = centers[i] / epsilon;
            let e = (-v * z).exp();
            let b = &balance[j];
            let t1 = (b[0] + z * (b[1] + z * b[2])) * e / epsilon;
            let t2 = layer.eval(j, z, v);
            let k = i.clamp(1, ny - 2);
            let uyy = second_difference(
                [centers[k - 1], centers[k], centers[k + 1]],
                [col[k - 1], col[k], col[k + 1]],
            );
            let t4 = -epsilon * uyy;
            l1 += (t1 + t2 + t4).abs() * widths[i];
        }
    }
    let boundary: Vec<f64> = (0..g.n_phi())
        .map(|j| {
            let col = state.bulk.column(j);
            (-epsilon * (col[1] - col[0]) / (centers[1] - centers[0])).abs()
        })
        .collect();
    Ok(ResidualReport { epsilon, l1_interior: l1 * h, l1_boundary: g.phi.integrate(&boundary) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::YGrid;

    fn ctx(n: usize, speed: AngularCoefficient, turning: AngularCoefficient, d: f64) -> (PhiGrid, AngularContext) {
        let phi = PhiGrid::new(n).unwrap();
        let c = AngularContext::new(&phi, &speed, &turning, d);
        (phi, c)
    }

    #[test]
    fn trivial_operator_gives_speed_squared_trace() {
        let (phi, c) = ctx(32, AngularCoefficient::shifted_sine(1.0, 0.5), AngularCoefficient::constant(0.0), 0.0);
        let w: Vec<f64> = phi.nodes().iter().map(|p| 1.0 + 0.3 * p.cos()).collect();
        let u: Vec<f64> = phi.nodes().iter().map(|p| 0.5 + 0.1 * p.sin()).collect();
        let a = a_coeffs(&w, &u, &c);
        for j in 0..32 {
            assert!((a.a1[j] - c.speed[j].powi(2) * u[j]).abs() < 1e-12);
            assert!(a.a2[j].abs() < 1e-12 && a.a3[j].abs() < 1e-12);
        }
    }

    #[test]
    fn alternate_formulas_agree_without_diffusion() {
        let (phi, c) = ctx(64, AngularCoefficient::shifted_sine(1.0, 0.5), AngularCoefficient::shear_turning(0.7), 0.0);
        let w: Vec<f64> = phi.nodes().iter().map(|p| 1.0 + 0.3 * p.cos()).collect();
        let u = vec![0.2; 64];
        let a = a_coeffs(&w, &u, &c);
        let (p2, p3) = alternate_a2_a3(&w, &c);
        for j in 0..64 {
            let expected = -c.speed_d1[j] * c.speed[j] * c.turning[j] * w[j];
            assert!((a.a2[j] - expected).abs() < 1e-12);
            assert!((a.a2[j] - p2[j]).abs() < 1e-12 && a.a3[j].abs() < 1e-15 && p3[j].abs() < 1e-15);
        }
    }

    #[test]
    fn constant_speed_has_no_higher_terms() {
        let (phi, c) = ctx(32, AngularCoefficient::constant(1.5), AngularCoefficient::shear_turning(0.7), 0.4);
        let w: Vec<f64> = phi.nodes().iter().map(|p| 1.0 + 0.3 * p.cos()).collect();
        let a = a_coeffs(&w, &vec![0.1; 32], &c);
        assert!(a.a2.iter().chain(&a.a3).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cubic_reproduces_forcing() {
        let a = ACoeffs { a1: vec![0.7], a2: vec![-1.3], a3: vec![3.0] };
        let speed = [1.0];
        let corr = p0_coeffs(&a, &speed, &[0.0]);
        assert!((corr.c[3][0] + 1.0).abs() < 1e-15);
        let c = &corr.c;
        for z in [0.0, 1.0, 2.0] {
            let m1 = c[1][0] + 2.0 * c[2][0] * z + 3.0 * c[3][0] * z * z;
            let m2 = 2.0 * c[2][0] + 6.0 * c[3][0] * z;
            let lhs = m2 - speed[0] * m1;
            let rhs = 0.7 - 1.3 * z + 3.0 * z * z;
            assert!((lhs - rhs).abs() < 1e-14);
        }
        let zero = p0_coeffs(&ACoeffs { a1: vec![0.0], a2: vec![0.0], a3: vec![0.0] }, &[2.0], &[0.5]);
        assert!(zero.c.iter().all(|c| c[0] == 0.0));
        assert!((zero.compat_residual[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_elimination_closes_flux_condition() {
        let (phi, c) = ctx(64, AngularCoefficient::shifted_sine(1.0, 0.5), AngularCoefficient::shear_turning(0.5), 0.2);
        let w: Vec<f64> = phi.nodes().iter().map(|p| 1.0 + 0.3 * p.cos()).collect();
        let u: Vec<f64> = phi.nodes().iter().map(|p| 0.5 + 0.1 * p.sin()).collect();
        let inner = InnerExpansion::from_profiles(&w, &u, &c);
        assert!(inner.max_compat_residual() < 1e-9, "{}", inner.max_compat_residual());
    }

    #[test]
    fn wall_layer_has_unit_mass_per_angle() {
        let grid = PhaseGrid::new(YGrid::graded(2.0, 40, 0.2, 20).unwrap(), PhiGrid::new(8).unwrap());
        let speed = AngularCoefficient::shifted_sine(1.0, 0.5);
        let f = wall_layer(&[1.0; 8], &grid, &speed, 0.01).unwrap();
        for m in f.y_mass_profile() {
            assert!((m - 1.0).abs() < 1e-12);
        }
        let z = wall_layer(&[0.0; 8], &grid, &speed, 0.01).unwrap();
        assert_eq!(z.min(), 0.0);
        assert!(wall_layer(&[1.0; 8], &grid, &speed, 0.0).is_err());
    }

    #[test]
    fn composites_coincide_without_corrector() {
        let grid = PhaseGrid::new(YGrid::graded(3.0, 30, 0.3, 10).unwrap(), PhiGrid::new(8).unwrap());
        let speed = AngularCoefficient::constant(1.0);
        let bulk = PhaseField::from_fn(&grid, |i, _| 1.0 / (1.0 + i as f64));
        let state = BulkWallState::from_bulk(bulk);
        let (_, c) = ctx(8, speed, AngularCoefficient::constant(0.0), 0.0);
        let mut inner = InnerExpansion::from_profiles(&state.wall, &[0.0; 8], &c);
        inner.corrector.c.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0.0));
        let a = composite_simple(&state, &speed, 0.05).unwrap();
        let b = composite_refined(&state, &inner, &speed, 0.05).unwrap();
        assert!(a.max_abs_diff(&b) == 0.0);
        assert!(a.max_abs_diff(&state.bulk) == 0.0);
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let x = [0.1, 0.25, 0.7];
        let f = x.map(|t| 3.0 * t * t - t + 2.0);
        assert!((second_difference(x, f) - 6.0).abs() < 1e-12);
    }
}
