//! Periodic φ grid, layer-resolving graded y grid, and the cell-centred
//! [`PhaseField`] that lives on their product.
//!
//! Values are finite-volume cell averages in y and nodal values in φ (the
//! φ "cell" of node j is [φ_j − h/2, φ_j + h/2]). Storage is φ-major, so a
//! y-column for fixed φ is a contiguous slice.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::coefficients::AngularCoefficient;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PhiGrid {
    n: usize,
}

impl PhiGrid {
    pub fn new(n_phi: usize) -> Result<Self> {
        if n_phi < 4 {
            return Err(Error::Grid(format!("n_phi = {n_phi} < 4")));
        }
        Ok(Self { n: n_phi })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// φ_{j+1/2}, the face between node j and node j+1 (mod n).
    pub fn face(&self, j: usize) -> f64 {
        self.node(j) + 0.5 * self.spacing()
    }

    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n as isize) as usize
    }

    /// ∮ g dφ by the rectangle rule (spectrally accurate for periodic g).
    pub fn integrate(&self, profile: &[f64]) -> f64 {
        profile.iter().sum::<f64>() * self.spacing()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YGrid {
    faces: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
    layer_width: f64,
    layer_cells: usize,
}

impl YGrid {
    /// Uniform cells of width `layer_width / layer_cells` on [0, layer_width],
    /// then `n_y − layer_cells` geometrically stretched cells ending exactly
    /// at `y_max`. The stretch ratio is found by bisection and must lie in
    /// [1, 2].
    pub fn graded(y_max: f64, n_y: usize, layer_width: f64, layer_cells: usize) -> Result<Self> {
        if !(y_max > layer_width && layer_width > 0.0) {
            return Err(Error::Grid(format!(
                "need y_max > layer_width > 0 (y_max={y_max}, layer_width={layer_width})"
            )));
        }
        if layer_cells < 8 || n_y <= layer_cells {
            return Err(Error::Grid(format!(
                "need n_y > layer_cells >= 8 (n_y={n_y}, layer_cells={layer_cells})"
            )));
        }
        let h = layer_width / layer_cells as f64;
        let outer = n_y - layer_cells;
        let rest = y_max - layer_width;
        let span = |r: f64| -> f64 { (1..=outer).map(|k| h * r.powi(k as i32)).sum() };

        let ratio = if (span(1.0) - rest).abs() <= 1e-12 * rest {
            1.0
        } else if span(1.0) > rest {
            return Err(Error::Grid(format!(
                "{outer} outer cells of width >= {h} overshoot y_max = {y_max}"
            )));
        } else if span(2.0) < rest {
            return Err(Error::Grid(format!(
                "grading ratio would exceed 2 (y_max={y_max}, n_y={n_y}, layer_width={layer_width})"
            )));
        } else {
            let (mut lo, mut hi) = (1.0f64, 2.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if span(mid) < rest {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        let mut faces = Vec::with_capacity(n_y + 1);
        faces.extend((0..=layer_cells).map(|k| h * k as f64));
        let mut y = layer_width;
        for k in 1..=outer {
            y += h * ratio.powi(k as i32);
            faces.push(y);
        }
        faces[layer_cells] = layer_width;
        faces[n_y] = y_max;
        Self::from_faces_with_layer(faces, layer_width, layer_cells)
    }

    pub fn uniform(y_max: f64, n_y: usize) -> Result<Self> {
        if !(y_max > 0.0) || n_y < 2 {
            return Err(Error::Grid(format!("bad uniform grid (y_max={y_max}, n_y={n_y})")));
        }
        let faces = (0..=n_y).map(|k| y_max * k as f64 / n_y as f64).collect();
        Self::from_faces_with_layer(faces, y_max, n_y)
    }

    fn from_faces_with_layer(faces: Vec<f64>, layer_width: f64, layer_cells: usize) -> Result<Self> {
        if faces.len() < 3 || faces[0] != 0.0 || faces.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("faces must start at 0 and increase strictly".into()));
        }
        let widths = faces.windows(2).map(|w| w[1] - w[0]).collect();
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { faces, centers, widths, layer_width, layer_cells })
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn y_max(&self) -> f64 {
        *self.faces.last().unwrap()
    }

    pub fn layer_width(&self) -> f64 {
        self.layer_width
    }

    pub fn layer_cells(&self) -> usize {
        self.layer_cells
    }
}

/// The (y, φ) product grid shared by every field of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub y: YGrid,
    pub phi: PhiGrid,
}

impl PhaseGrid {
    pub fn new(y: YGrid, phi: PhiGrid) -> Arc<Self> {
        Arc::new(Self { y, phi })
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: Arc<PhaseGrid>,
    values: Vec<f64>,
}

impl PhaseField {
    pub fn zeros(grid: &Arc<PhaseGrid>) -> Self {
        Self { grid: Arc::clone(grid), values: vec![0.0; grid.n_y() * grid.n_phi()] }
    }

    /// `f(y_index, phi_index)` for every cell.
    pub fn from_fn(grid: &Arc<PhaseGrid>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let (ny, nphi) = (grid.n_y(), grid.n_phi());
        let mut values = Vec::with_capacity(ny * nphi);
        for j in 0..nphi {
            for i in 0..ny {
                values.push(f(i, j));
            }
        }
        Self { grid: Arc::clone(grid), values }
    }

    pub fn from_values(grid: &Arc<PhaseGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_y() * grid.n_phi() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.n_y() * grid.n_phi(),
                values.len()
            )));
        }
        Ok(Self { grid: Arc::clone(grid), values })
    }

    /// Cell averages of a function of (y, φ) whose y-antiderivative is known:
    /// `antideriv(y, φ_j)` with ∂_y antideriv = g.
    pub fn from_antiderivative(grid: &Arc<PhaseGrid>, antideriv: impl Fn(f64, f64) -> f64) -> Self {
        let faces = grid.y.faces().to_vec();
        let widths = grid.y.widths().to_vec();
        let phis = grid.phi.nodes();
        Self::from_fn(grid, |i, j| (antideriv(faces[i + 1], phis[j]) - antideriv(faces[i], phis[j])) / widths[i])
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n_y() + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let ny = self.grid.n_y();
        self.values[j * ny + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let ny = self.grid.n_y();
        &self.values[j * ny..(j + 1) * ny]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        let ny = self.grid.n_y();
        &mut self.values[j * ny..(j + 1) * ny]
    }

    pub fn same_grid(&self, other: &PhaseField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norms(&self) -> Norms {
        let h = self.grid.phi.spacing();
        let w = self.grid.y.widths();
        let (mut l1, mut l2, mut mass) = (0.0, 0.0, 0.0);
        for j in 0..self.grid.n_phi() {
            for (v, wi) in self.column(j).iter().zip(w) {
                l1 += v.abs() * wi;
                l2 += v * v * wi;
                mass += v * wi;
            }
        }
        Norms { l1: l1 * h, l2: (l2 * h).sqrt(), mass: mass * h }
    }

    pub fn mass(&self) -> f64 {
        self.norms().mass
    }

    /// Per-φ y-integral ∫ f dy.
    pub fn y_mass_profile(&self) -> Vec<f64> {
        let w = self.grid.y.widths();
        (0..self.grid.n_phi()).map(|j| self.column(j).iter().zip(w).map(|(v, wi)| v * wi).sum()).collect()
    }

    /// ‖self − other‖_{L¹} on the shared grid.
    pub fn l1_distance(&self, other: &PhaseField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::Grid("l1_distance: fields live on different grids".into()));
        }
        let h = self.grid.phi.spacing();
        let w = self.grid.y.widths();
        let ny = self.grid.n_y();
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(k, (a, b))| (a - b).abs() * w[k % ny])
            .sum();
        Ok(s * h)
    }

    pub fn max_abs_diff(&self, other: &PhaseField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: f64, x: &PhaseField) {
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }
}

/// ∫_a^{a+w} e^{−κy} dy in a cancellation-free form.
pub fn exp_cell_integral(a: f64, w: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return w;
    }
    (-kappa * a).exp() * (-(-kappa * w).exp_m1()) / kappa
}

/// ∫_{za}^{zb} z^k e^{−v z} dz via the closed-form antiderivative
/// −e^{−vz} Σ_{j≤k} k!/j! z^j / v^{k−j+1}.
pub fn poly_exp_integral(k: usize, za: f64, zb: f64, v: f64) -> f64 {
    if k == 0 {
        return exp_cell_integral(za, zb - za, v);
    }
    let anti = |z: f64| -> f64 {
        let e = (-v * z).exp();
        if e == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut fact_ratio = 1.0; // k!/j!
        for j in (0..=k).rev() {
            sum += fact_ratio * z.powi(j as i32) / v.powi((k - j + 1) as i32);
            fact_ratio *= j as f64;
        }
        -e * sum
    };
    anti(zb) - anti(za)
}

/// Linear extrapolation of the first two cell-centre values to y = 0, per φ.
pub fn trace_wall(field: &PhaseField) -> Vec<f64> {
    let c = field.grid().y.centers();
    let (c1, c2) = (c[0], c[1]);
    (0..field.grid().n_phi())
        .map(|j| {
            let col = field.column(j);
            (col[0] * c2 - col[1] * c1) / (c2 - c1)
        })
        .collect()
}

/// Per φ, Σ_cells f_cell ∫_cell e^{−V(φ) y/ε} dy with the exponential
/// integrated exactly.
pub fn layer_pairing(field: &PhaseField, speed: &AngularCoefficient, epsilon: f64) -> Vec<f64> {
    let g = field.grid();
    let faces = g.y.faces();
    let w = g.y.widths();
    (0..g.n_phi())
        .map(|j| {
            let kappa = speed.value(g.phi.node(j)) / epsilon;
            field
                .column(j)
                .iter()
                .enumerate()
                .map(|(i, f)| f * exp_cell_integral(faces[i], w[i], kappa))
                .sum()
        })
        .collect()
}

fn overlap_weights(src: &[f64], dst: &[f64]) -> Vec<Vec<(usize, f64)>> {
    // For each destination interval, the (source index, overlap length) list.
    let mut out = vec![Vec::new(); dst.len() - 1];
    let mut s = 0;
    for (d, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = (dst[d], dst[d + 1]);
        while s + 1 < src.len() && src[s + 1] <= lo {
            s += 1;
        }
        let mut k = s;
        while k + 1 < src.len() && src[k] < hi {
            let ov = src[k + 1].min(hi) - src[k].max(lo);
            if ov > 0.0 {
                slot.push((k, ov));
            }
            k += 1;
        }
    }
    out
}

/// Conservative remap of `field` onto `target`: each target cell receives
/// the exact integral of the piecewise-constant source over its extent.
/// Mass outside the target's y range is dropped.
pub fn rebin(field: &PhaseField, target: &Arc<PhaseGrid>) -> PhaseField {
    let src = field.grid();
    let ywts = overlap_weights(src.y.faces(), target.y.faces());

    // φ cells are [φ_j − h/2, φ_j + h/2]; unroll the circle by one period on
    // each side so the wrap-around pieces are found by the same sweep.
    let (ns, nt) = (src.n_phi(), target.n_phi());
    let (hs, ht) = (src.phi.spacing(), target.phi.spacing());
    let src_faces: Vec<f64> = (0..=3 * ns).map(|k| (k as f64 - ns as f64 - 0.5) * hs).collect();
    let dst_faces: Vec<f64> = (0..=nt).map(|k| (k as f64 - 0.5) * ht).collect();
    let pw = overlap_weights(&src_faces, &dst_faces);

    let tw = target.y.widths();
    PhaseField::from_fn(target, |i, j| {
        let mut acc = 0.0;
        for &(kp, op) in &pw[j] {
            let js = kp % ns;
            let col = field.column(js);
            let inner: f64 = ywts[i].iter().map(|&(ks, oy)| col[ks] * oy).sum();
            acc += inner * op;
        }
        acc / (tw[i] * ht)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid_for(y: YGrid, n_phi: usize) -> Arc<PhaseGrid> {
        PhaseGrid::new(y, PhiGrid::new(n_phi).unwrap())
    }

    #[test]
    fn graded_example() {
        let g = YGrid::graded(8.0, 128, 0.25, 32).unwrap();
        assert_eq!(g.len(), 128);
        for w in &g.widths()[..32] {
            assert_abs_diff_eq!(*w, 1.0 / 128.0, epsilon = 1e-15);
        }
        assert_eq!(g.y_max(), 8.0);
        // Oracle: the stretch ratio solves h Σ r^k = 7.75; check the built
        // widths are geometric with that ratio.
        let r = g.widths()[33] / g.widths()[32];
        let s: f64 = (1..=96).map(|k| r.powi(k)).sum::<f64>() / 128.0;
        assert_abs_diff_eq!(s, 7.75, epsilon = 1e-9);
        assert!(g.widths()[32] > g.widths()[31]);
    }

    #[test]
    fn degenerate_grading_is_uniform() {
        let g = YGrid::graded(4.0, 64, 2.0, 32).unwrap();
        for w in g.widths() {
            assert_abs_diff_eq!(*w, 4.0 / 64.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn grading_errors() {
        assert!(matches!(YGrid::graded(8.0, 32, 0.25, 32), Err(Error::Grid(_))));
        assert!(matches!(YGrid::graded(8.0, 40, 0.25, 4), Err(Error::Grid(_))));
        // ratio > 2
        assert!(matches!(YGrid::graded(1e6, 40, 0.25, 32), Err(Error::Grid(_))));
        // widths would have to shrink
        assert!(matches!(YGrid::graded(1.0, 128, 0.5, 8), Err(Error::Grid(_))));
    }

    #[test]
    fn grading_invariants() {
        for &(ymax, ny, lw, lc) in &[(8.0, 128, 0.25, 32), (30.0, 256, 0.08, 32), (2.0, 64, 0.4, 32)] {
            let g = YGrid::graded(ymax, ny, lw, lc).unwrap();
            let w = g.widths();
            let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(wmin >= lw / lc as f64 * (1.0 - 1e-12));
            for p in w.windows(2) {
                assert!(p[1] / p[0] <= 2.0 && p[1] >= p[0] * (1.0 - 1e-12));
            }
            let inside = g.faces().iter().filter(|&&f| f <= lw * (1.0 + 1e-14)).count() - 1;
            assert!(inside >= lc);
        }
    }

    #[test]
    fn norms_examples() {
        let g = grid_for(YGrid::graded(2.0, 96, 0.4, 32).unwrap(), 16);
        let eps = 0.05;
        let layer = PhaseField::from_antiderivative(&g, |y, _| -(-y / eps).exp());
        assert_abs_diff_eq!(layer.mass(), TAU, epsilon = 1e-12);

        let z = PhaseField::zeros(&g);
        assert_eq!(z.norms(), Norms { l1: 0.0, l2: 0.0, mass: 0.0 });

        let mut one = PhaseField::zeros(&g);
        one.set(40, 3, 1.0);
        let w = g.y.widths()[40];
        assert_abs_diff_eq!(one.norms().l1, w * g.phi.spacing(), epsilon = 1e-15);

        let ones = PhaseField::from_fn(&g, |_, _| 1.0);
        assert_abs_diff_eq!(ones.mass(), TAU * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_examples() {
        let g = grid_for(YGrid::graded(3.0, 40, 0.5, 16).unwrap(), 8);
        let c = g.y.centers().to_vec();
        let lin = PhaseField::from_fn(&g, |i, _| 1.0 + c[i]);
        for t in trace_wall(&lin) {
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-13);
        }
        let k = PhaseField::from_fn(&g, |_, _| 4.2);
        for t in trace_wall(&k) {
            assert_abs_diff_eq!(t, 4.2, epsilon = 1e-13);
        }
        let g2 = grid_for(YGrid::uniform(2.0, 2).unwrap(), 4);
        let sq = PhaseField::from_fn(&g2, |i, _| [0.25, 2.25][i]);
        for t in trace_wall(&sq) {
            assert_abs_diff_eq!(t, -0.75, epsilon = 1e-15);
        }
    }

    #[test]
    fn layer_pairing_examples() {
        let eps = 0.05;
        let g = grid_for(YGrid::graded(4.0, 96, 8.0 * eps, 32).unwrap(), 8);
        let v = AngularCoefficient::constant(1.0);
        let ones = PhaseField::from_fn(&g, |_, _| 1.0);
        for p in layer_pairing(&ones, &v, eps) {
            assert_abs_diff_eq!(p, eps, epsilon = 1e-15);
        }
        let layer = PhaseField::from_antiderivative(&g, |y, _| -(-y / eps).exp());
        for p in layer_pairing(&layer, &v, eps) {
            assert!((p - 0.5).abs() < 5e-3, "{p}");
        }
        for p in layer_pairing(&PhaseField::zeros(&g), &v, eps) {
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn layer_pairing_matches_geometric_sum() {
        // Uniform cells of width w: Σ_k e^{−κ k w}(1 − e^{−κw})/κ = (1 − e^{−κ y_max})/κ.
        let g = grid_for(YGrid::uniform(1.0, 50).unwrap(), 4);
        let eps = 0.3;
        let v = AngularCoefficient::constant(1.7);
        let kappa = 1.7 / eps;
        let exact = (1.0 - (-kappa * 1.0f64).exp()) / kappa;
        for p in layer_pairing(&PhaseField::from_fn(&g, |_, _| 1.0), &v, eps) {
            assert!(((p - exact) / exact).abs() < 1e-12);
        }
    }

    #[test]
    fn poly_exp_integral_against_quadrature() {
        for k in 0..4 {
            for &(za, zb, v) in &[(0.0, 1.0, 1.0), (0.3, 2.5, 1.7), (5.0, 5.01, 0.6)] {
                let n = 20_000;
                let h = (zb - za) / n as f64;
                // composite Simpson oracle
                let f = |z: f64| z.powi(k as i32) * (-v * z).exp();
                let mut s = f(za) + f(zb);
                for m in 1..n {
                    s += if m % 2 == 1 { 4.0 } else { 2.0 } * f(za + m as f64 * h);
                }
                let quad = s * h / 3.0;
                let got = poly_exp_integral(k, za, zb, v);
                assert!((got - quad).abs() <= 1e-10 * quad.abs().max(1e-12), "k={k}: {got} vs {quad}");
            }
        }
    }

    #[test]
    fn rebin_conserves_mass() {
        let fine = grid_for(YGrid::graded(6.0, 200, 0.4, 64).unwrap(), 96);
        let coarse = grid_for(YGrid::graded(6.0, 64, 0.4, 16).unwrap(), 32);
        let f = PhaseField::from_fn(&fine, |i, j| (1.0 + (j as f64).sin().abs()) * (1.0 + i as f64));
        let r = rebin(&f, &coarse);
        assert_abs_diff_eq!(r.mass(), f.mass(), epsilon = 1e-10 * f.mass());
        let ones = rebin(&PhaseField::from_fn(&fine, |_, _| 1.0), &coarse);
        for v in ones.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn exact_mass_of_unit_field(ny in 40usize..200, lc in 8usize..32, ymax in 2.0f64..20.0) {
            let lw = 0.1;
            if let Ok(y) = YGrid::graded(ymax, ny, lw, lc) {
                let g = grid_for(y, 12);
                let m = PhaseField::from_fn(&g, |_, _| 1.0).mass();
                prop_assert!((m - TAU * ymax).abs() <= 1e-12 * TAU * ymax);
            }
        }
    }
}
