//! Discrete spot checks of the whole-line operator
//! B u = ∂_φ(Φu) − D∂²_φ u + V∂_y u: its accretivity shift and the uniform
//! bound on the regularised resolvent (B − ε∂²_y + λ)⁻¹.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::{mu0, ModelParams};
use crate::error::{Error, Result};
use crate::grids::PhiGrid;
use crate::linalg::BandMatrix;
use crate::spectral::SpectralDiff;

/// Uniform nodes y_k = −y_extent + k·dy, k = 0..=n_y, times a periodic φ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub y_extent: f64,
    pub n_y: usize,
    pub phi: PhiGrid,
}

impl LineGrid {
    pub fn new(y_extent: f64, n_y: usize, n_phi: usize) -> Result<Self> {
        if !(y_extent > 0.0) || n_y < 4 {
            return Err(Error::Grid(format!("whole-line grid needs y_extent > 0 and n_y ≥ 4 (got {y_extent}, {n_y})")));
        }
        Ok(Self { y_extent, n_y, phi: PhiGrid::new(n_phi)? })
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.y_extent / self.n_y as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.y_extent + k as f64 * self.dy()
    }

    pub fn rows(&self) -> usize {
        self.n_y + 1
    }
}

/// Nodal values, φ-major: `values[j * rows + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineField {
    pub grid: LineGrid,
    pub values: Vec<f64>,
}

impl LineField {
    pub fn from_fn(grid: &LineGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let rows = grid.rows();
        let mut values = Vec::with_capacity(rows * grid.phi.len());
        for j in 0..grid.phi.len() {
            let p = grid.phi.node(j);
            for k in 0..rows {
                values.push(f(grid.node(k), p));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[j * self.grid.rows() + k]
    }

    /// Trapezoid-in-y, rectangle-in-φ inner product.
    pub fn inner(&self, other: &[f64]) -> f64 {
        inner(&self.grid, &self.values, other)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(&self.values)
    }

    /// φ-derivative of every row by trigonometric interpolation.
    pub fn phi_derivative(&self, order: u32) -> Vec<f64> {
        phi_derivative(&self.grid, &self.values, order)
    }
}

fn inner(grid: &LineGrid, a: &[f64], b: &[f64]) -> f64 {
    let rows = grid.rows();
    let mut s = 0.0;
    for (idx, (x, y)) in a.iter().zip(b).enumerate() {
        let k = idx % rows;
        let wt = if k == 0 || k == rows - 1 { 0.5 } else { 1.0 };
        s += wt * x * y;
    }
    s * grid.dy() * grid.phi.spacing()
}

fn phi_derivative(grid: &LineGrid, values: &[f64], order: u32) -> Vec<f64> {
    let (rows, nphi) = (grid.rows(), grid.phi.len());
    let sd = SpectralDiff::new(nphi);
    let mut out = vec![0.0; values.len()];
    let mut row = vec![0.0; nphi];
    for k in 0..rows {
        for j in 0..nphi {
            row[j] = values[j * rows + k];
        }
        for (j, d) in sd.derivative(&row, order).into_iter().enumerate() {
            out[j * rows + k] = d;
        }
    }
    out
}

/// Central y-difference in the interior, one-sided at the ends.
fn y_derivative(grid: &LineGrid, values: &[f64]) -> Vec<f64> {
    let rows = grid.rows();
    let dy = grid.dy();
    let mut out = vec![0.0; values.len()];
    for j in 0..grid.phi.len() {
        let c = &values[j * rows..(j + 1) * rows];
        let o = &mut out[j * rows..(j + 1) * rows];
        o[0] = (c[1] - c[0]) / dy;
        o[rows - 1] = (c[rows - 1] - c[rows - 2]) / dy;
        for k in 1..rows - 1 {
            o[k] = (c[k + 1] - c[k - 1]) / (2.0 * dy);
        }
    }
    out
}

/// ⟨(B+λ)u, u⟩ − (λ − μ₀)‖u‖² − D‖∂_φu‖², which the accretivity estimate
/// says is non-negative.
pub fn coercivity_gap(u: &LineField, lambda: f64, params: &ModelParams) -> f64 {
    let g = &u.grid;
    let rows = g.rows();
    let nphi = g.phi.len();
    let turning: Vec<f64> = g.phi.nodes().iter().map(|&p| params.turning.value(p)).collect();
    let speed: Vec<f64> = g.phi.nodes().iter().map(|&p| params.speed.value(p)).collect();

    let mut flux = u.values.clone();
    for j in 0..nphi {
        flux[j * rows..(j + 1) * rows].iter_mut().for_each(|v| *v *= turning[j]);
    }
    let d_flux = phi_derivative(g, &flux, 1);
    let u_phi = u.phi_derivative(1);
    let u_phiphi = u.phi_derivative(2);
    let u_y = y_derivative(g, &u.values);

    let mut bu = vec![0.0; u.values.len()];
    for j in 0..nphi {
        for k in 0..rows {
            let idx = j * rows + k;
            bu[idx] = d_flux[idx] - params.diffusion * u_phiphi[idx] + speed[j] * u_y[idx] + lambda * u.values[idx];
        }
    }
    let norm = u.norm_sq();
    u.inner(&bu) - (lambda - mu0(&params.turning)) * norm - params.diffusion * inner(g, &u_phi, &u_phi)
}

/// A random smooth field: trigonometric polynomial of degree ≤ `modes` in φ
/// times a sum of Gaussians in y, deterministic in `seed`.
pub fn band_limited_field(grid: &LineGrid, modes: usize, seed: u64) -> LineField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..=modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.5..1.5), rng.random_range(0.5..2.0)))
        .collect();
    LineField::from_fn(grid, move |y, p| {
        let ang: f64 = coeffs.iter().enumerate().map(|(m, (a, b))| a * (m as f64 * p).cos() + b * (m as f64 * p).sin()).sum();
        let rad: f64 = bumps.iter().map(|(c, s, w)| c * (-((y - s) * w).powi(2)).exp()).sum();
        ang * rad
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventProblem {
    pub lambda: f64,
    pub eps_reg: f64,
    pub rhs: LineField,
}

impl ResolventProblem {
    pub fn new(lambda: f64, eps_reg: f64, rhs: LineField, params: &ModelParams) -> Result<Self> {
        let m = mu0(&params.turning);
        if !(lambda > m) {
            return Err(Error::Config(format!("resolvent shift λ = {lambda} must exceed μ₀ = {m}")));
        }
        if !(eps_reg > 0.0) {
            return Err(Error::Config(format!("regularisation ε = {eps_reg} must be > 0")));
        }
        Ok(Self { lambda, eps_reg, rhs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub u: LineField,
    /// (‖u‖² + ‖∂_φu‖² + ‖∂_yu‖² + ‖∂²_φu‖²) / ‖f‖².
    pub bound_ratio: f64,
}

/// Solves (B − ε∂²_y + λ)u = f with u = 0 at y = ±y_extent. y-advection is
/// upwinded (backward differences, V > 0), the φ-flux is upwinded on the
/// sign of Φ at the faces and both diffusions are centred.
pub fn resolvent_solve(p: &ResolventProblem, params: &ModelParams) -> Result<ResolventSolution> {
    let g = &p.rhs.grid;
    let (rows, nphi) = (g.rows(), g.phi.len());
    let inner_rows = rows - 2;
    let n = inner_rows * nphi;
    let (dy, h) = (g.dy(), g.phi.spacing());
    let speed: Vec<f64> = g.phi.nodes().iter().map(|&q| params.speed.value(q)).collect();
    let face: Vec<f64> = (0..nphi).map(|j| params.turning.value(g.phi.face(j))).collect();
    let d = params.diffusion;

    // Unknown (k, j) for interior node k = 1..rows-1, φ fastest.
    let idx = |k: usize, j: usize| (k - 1) * nphi + j;
    let mut a = BandMatrix::zeros(n, nphi, nphi);
    let mut b = vec![0.0; n];
    for k in 1..rows - 1 {
        for j in 0..nphi {
            let r = idx(k, j);
            b[r] = p.rhs.get(k, j);
            let jp = (j + 1) % nphi;
            let jm = (j + nphi - 1) % nphi;
            let mut add = |kk: usize, jj: usize, v: f64| {
                if kk >= 1 && kk < rows - 1 {
                    a.add(r, idx(kk, jj), v);
                }
            };
            add(k, j, p.lambda);
            // y-advection and regularising diffusion.
            add(k, j, speed[j] / dy + 2.0 * p.eps_reg / (dy * dy));
            add(k - 1, j, -speed[j] / dy - p.eps_reg / (dy * dy));
            add(k + 1, j, -p.eps_reg / (dy * dy));
            // φ-flux divergence: (F_{j+1/2} − F_{j−1/2})/h.
            let (fp, fm) = (face[j], face[jm]);
            add(k, j, fp.max(0.0) / h - fm.min(0.0) / h + 2.0 * d / (h * h));
            add(k, jp, fp.min(0.0) / h - d / (h * h));
            add(k, jm, -fm.max(0.0) / h - d / (h * h));
        }
    }
    let x = a.solve(&b)?;
    let mut values = vec![0.0; rows * nphi];
    for k in 1..rows - 1 {
        for j in 0..nphi {
            values[j * rows + k] = x[idx(k, j)];
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite resolvent solution".into()));
    }
    let u = LineField { grid: g.clone(), values };
    let f_norm = p.rhs.norm_sq();
    let bound_ratio = if f_norm == 0.0 {
        0.0
    } else {
        let u_phi = u.phi_derivative(1);
        let u_phiphi = u.phi_derivative(2);
        let u_y = y_derivative(g, &u.values);
        (u.norm_sq() + inner(g, &u_phi, &u_phi) + inner(g, &u_y, &u_y) + inner(g, &u_phiphi, &u_phiphi)) / f_norm
    };
    Ok(ResolventSolution { u, bound_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::AngularCoefficient;

    fn params(turning: AngularCoefficient) -> ModelParams {
        ModelParams::new(0.0, 0.3, 1.0, AngularCoefficient::shifted_sine(1.0, 0.5), turning)
    }

    #[test]
    fn gap_is_norm_for_zero_turning() {
        let g = LineGrid::new(6.0, 600, 16).unwrap();
        let u = LineField::from_fn(&g, |y, p| (-y * y).exp() * p.sin());
        let p = params(AngularCoefficient::constant(0.0));
        let gap = coercivity_gap(&u, 3.0, &p);
        assert!((gap - u.norm_sq()).abs() < 1e-6 * u.norm_sq(), "{gap} vs {}", u.norm_sq());
    }

    #[test]
    fn zero_field_has_zero_gap_and_solution() {
        let g = LineGrid::new(4.0, 40, 8).unwrap();
        let z = LineField::from_fn(&g, |_, _| 0.0);
        let p = params(AngularCoefficient::shear_turning(0.5));
        assert_eq!(coercivity_gap(&z, 3.0, &p), 0.0);
        let prob = ResolventProblem::new(3.0, 0.01, z, &p).unwrap();
        let sol = resolvent_solve(&prob, &p).unwrap();
        assert!(sol.u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_below_mu0_is_rejected() {
        let g = LineGrid::new(4.0, 40, 8).unwrap();
        let z = LineField::from_fn(&g, |_, _| 1.0);
        let p = params(AngularCoefficient::shear_turning(0.5));
        assert!(ResolventProblem::new(1.0, 0.01, z, &p).is_err());
    }
}
