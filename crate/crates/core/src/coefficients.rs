//! Angular coefficients V(φ) (wall-ward speed) and Φ(φ) (turning rate),
//! plus the nondimensional model parameters.
//!
//! Every family is closed form so that first and second derivatives are
//! exact. Sup norms and minima are taken over a dense uniform sample of
//! [`SUP_SAMPLES`] points, which resolves these band-limited families to
//! machine precision.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Sample count for sup norms, minima and CFL bounds.
pub const SUP_SAMPLES: usize = 4096;

/// Which coefficient slot a family is being parsed for; `shear`
/// means a different function for V and for Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Speed,
    Turning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// c
    Constant { value: f64 },
    /// g₀ + a(1 + sin φ)
    ShiftedSine { g0: f64, a: f64 },
    /// g − V_prop sin φ, positive for g > V_prop ≥ 0
    ShearSpeed { g: f64, v_prop: f64 },
    /// V_prop sin φ − g; never positive everywhere for g > 0
    ShearSpeedSigned { g: f64, v_prop: f64 },
    /// −γ sin² φ
    ShearTurning { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularCoefficient {
    pub family: Family,
}

impl AngularCoefficient {
    pub fn constant(value: f64) -> Self {
        Self { family: Family::Constant { value } }
    }

    pub fn shifted_sine(g0: f64, a: f64) -> Self {
        Self { family: Family::ShiftedSine { g0, a } }
    }

    pub fn shear_speed(g: f64, v_prop: f64) -> Self {
        Self { family: Family::ShearSpeed { g, v_prop } }
    }

    pub fn shear_speed_signed(g: f64, v_prop: f64) -> Self {
        Self { family: Family::ShearSpeedSigned { g, v_prop } }
    }

    pub fn shear_turning(gamma: f64) -> Self {
        Self { family: Family::ShearTurning { gamma } }
    }

    /// Builds a coefficient from a family id and named parameters, as they
    /// appear in the configuration file.
    pub fn from_spec(role: Role, family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match (family, role) {
            ("constant", _) => &["value"],
            ("shifted-sine", _) => &["g0", "a"],
            ("shear" | "shear-signed", Role::Speed) => &["g", "V_prop"],
            ("shear", Role::Turning) => &["gamma"],
            _ => {
                return Err(Error::Config(format!(
                    "unknown coefficient family `{family}` for {role:?}"
                )))
            }
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown parameter `{bad}` for family `{family}`"
            )));
        }
        let get = |name: &str| {
            params.get(name).copied().ok_or_else(|| {
                Error::Config(format!("family `{family}` requires parameter `{name}`"))
            })
        };
        let family = match (family, role) {
            ("constant", _) => Family::Constant { value: get("value")? },
            ("shifted-sine", _) => Family::ShiftedSine { g0: get("g0")?, a: get("a")? },
            ("shear", Role::Speed) => Family::ShearSpeed { g: get("g")?, v_prop: get("V_prop")? },
            ("shear-signed", _) => {
                Family::ShearSpeedSigned { g: get("g")?, v_prop: get("V_prop")? }
            }
            _ => Family::ShearTurning { gamma: get("gamma")? },
        };
        Ok(Self { family })
    }

    /// Value (`order` 0) or derivative (`order` 1, 2) at φ, wrapped mod 2π.
    pub fn eval(&self, phi: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::Config(format!("derivative order {order} not supported")));
        }
        Ok(self.eval_unchecked(phi, order))
    }

    pub(crate) fn eval_unchecked(&self, phi: f64, order: u8) -> f64 {
        let phi = phi.rem_euclid(TAU);
        let (s, c) = phi.sin_cos();
        match (self.family, order) {
            (Family::Constant { value }, 0) => value,
            (Family::Constant { .. }, _) => 0.0,
            (Family::ShiftedSine { g0, a }, 0) => g0 + a * (1.0 + s),
            (Family::ShiftedSine { a, .. }, 1) => a * c,
            (Family::ShiftedSine { a, .. }, _) => -a * s,
            (Family::ShearSpeed { g, v_prop }, 0) => g - v_prop * s,
            (Family::ShearSpeed { v_prop, .. }, 1) => -v_prop * c,
            (Family::ShearSpeed { v_prop, .. }, _) => v_prop * s,
            (Family::ShearSpeedSigned { g, v_prop }, 0) => v_prop * s - g,
            (Family::ShearSpeedSigned { v_prop, .. }, 1) => v_prop * c,
            (Family::ShearSpeedSigned { v_prop, .. }, _) => -v_prop * s,
            (Family::ShearTurning { gamma }, 0) => -gamma * s * s,
            (Family::ShearTurning { gamma }, 1) => -gamma * 2.0 * s * c,
            (Family::ShearTurning { gamma }, _) => -gamma * 2.0 * (c * c - s * s),
        }
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.eval_unchecked(phi, 0)
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        self.eval_unchecked(phi, 1)
    }

    pub fn second_derivative(&self, phi: f64) -> f64 {
        self.eval_unchecked(phi, 2)
    }

    /// Samples `order` on `n` nodes φ_j = 2πj/n.
    pub fn sample(&self, n: usize, order: u8) -> Vec<f64> {
        (0..n).map(|j| self.eval_unchecked(TAU * j as f64 / n as f64, order)).collect()
    }

    /// sup |c⁽ᵒʳᵈᵉʳ⁾| over the dense sample.
    pub fn sup_abs(&self, order: u8) -> f64 {
        self.sample(SUP_SAMPLES, order).into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.sample(SUP_SAMPLES, 0).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_constant(&self) -> bool {
        match self.family {
            Family::Constant { .. } => true,
            Family::ShiftedSine { a, .. } => a == 0.0,
            Family::ShearSpeed { v_prop, .. } | Family::ShearSpeedSigned { v_prop, .. } => v_prop == 0.0,
            Family::ShearTurning { gamma } => gamma == 0.0,
        }
    }
}

/// Checks that V > 0 on a dense sample and returns g_min = min V.
pub fn validate_assumptions(speed: &AngularCoefficient, n_samples: usize) -> Result<f64> {
    if n_samples < 256 {
        return Err(Error::Config(format!("n_samples = {n_samples} < 256")));
    }
    let g_min = speed.sample(n_samples, 0).into_iter().fold(f64::INFINITY, f64::min);
    if g_min > 0.0 {
        Ok(g_min)
    } else {
        Err(Error::Assumption { g_min })
    }
}

/// Accretivity shift μ₀ = ½‖Φ′‖∞ + 1.
pub fn mu0(turning: &AngularCoefficient) -> f64 {
    0.5 * turning.sup_abs(1) + 1.0
}

/// ε = D_tr / (D_rot L²).
pub fn epsilon_from_physical(d_tr: f64, d_rot: f64, length: f64) -> Result<f64> {
    if !(d_tr > 0.0 && d_rot > 0.0 && length > 0.0) {
        return Err(Error::Config(format!(
            "physical scales must be positive (D_tr={d_tr}, D_rot={d_rot}, L={length})"
        )));
    }
    Ok(d_tr / (d_rot * length * length))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    /// Rotational diffusion D.
    pub diffusion: f64,
    pub t_final: f64,
    pub speed: AngularCoefficient,
    pub turning: AngularCoefficient,
}

impl ModelParams {
    pub fn new(
        epsilon: f64,
        diffusion: f64,
        t_final: f64,
        speed: AngularCoefficient,
        turning: AngularCoefficient,
    ) -> Self {
        Self { epsilon, diffusion, t_final, speed, turning }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn with_diffusion(&self, diffusion: f64) -> Self {
        Self { diffusion, ..self.clone() }
    }

    fn check_common(&self) -> Result<f64> {
        if !(self.diffusion >= 0.0) || !self.diffusion.is_finite() {
            return Err(Error::Config(format!("D = {} must be >= 0", self.diffusion)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("T = {} must be >= 0", self.t_final)));
        }
        validate_assumptions(&self.speed, SUP_SAMPLES)
    }

    /// Gate for the ε-dependent problem: ε > 0, D ≥ 0 and V > 0.
    pub fn validate_full(&self) -> Result<f64> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon = {} must be > 0", self.epsilon)));
        }
        self.check_common()
    }

    /// Gate for the limiting system, where ε plays no role.
    pub fn validate_limit(&self) -> Result<f64> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        self.check_common()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn all_families() -> Vec<AngularCoefficient> {
        vec![
            AngularCoefficient::constant(1.3),
            AngularCoefficient::shifted_sine(1.0, 0.5),
            AngularCoefficient::shear_speed(2.0, 1.0),
            AngularCoefficient::shear_speed_signed(2.0, 1.0),
            AngularCoefficient::shear_turning(0.7),
        ]
    }

    #[test]
    fn eval_examples() {
        let v = AngularCoefficient::shifted_sine(1.0, 0.5);
        assert_abs_diff_eq!(v.eval(FRAC_PI_2, 0).unwrap(), 2.0, epsilon = 1e-15);
        let zero = AngularCoefficient::constant(0.0);
        assert_eq!(zero.eval(0.3, 1).unwrap(), 0.0);
        let phi = AngularCoefficient::shear_turning(1.0);
        assert_abs_diff_eq!(phi.eval(FRAC_PI_4, 0).unwrap(), -0.5, epsilon = 1e-15);
        assert!(matches!(v.eval(0.0, 3), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_family_is_config_error() {
        let params = BTreeMap::new();
        let err = AngularCoefficient::from_spec(Role::Speed, "tabulated", &params).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let mut p = BTreeMap::new();
        p.insert("gamma".to_string(), 1.0);
        p.insert("beta".to_string(), 1.0);
        assert!(AngularCoefficient::from_spec(Role::Turning, "shear", &p).is_err());
        p.remove("beta");
        let c = AngularCoefficient::from_spec(Role::Turning, "shear", &p).unwrap();
        assert_eq!(c, AngularCoefficient::shear_turning(1.0));
    }

    #[test]
    fn validate_examples() {
        // g₀ + a(1 + sin φ) with g₀ = 1, a = 0.5 bottoms out at φ = −π/2 with value g₀.
        let g = validate_assumptions(&AngularCoefficient::shifted_sine(1.0, 0.5), 4096).unwrap();
        let brute = (0..100_000)
            .map(|k| 1.0 + 0.5 * (1.0 + (TAU * k as f64 / 100_000.0).sin()))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(g, brute, epsilon = 1e-12);
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);

        assert_eq!(validate_assumptions(&AngularCoefficient::constant(1.0), 256).unwrap(), 1.0);
        let sine = AngularCoefficient::shifted_sine(-1.0, 1.0);
        assert!(matches!(validate_assumptions(&sine, 256), Err(Error::Assumption { .. })));
        assert!(validate_assumptions(&AngularCoefficient::shear_speed_signed(2.0, 1.0), 256).is_err());
        assert!(validate_assumptions(&AngularCoefficient::constant(1.0), 100).is_err());
    }

    #[test]
    fn mu0_examples() {
        assert_eq!(mu0(&AngularCoefficient::constant(0.0)), 1.0);
        assert_abs_diff_eq!(mu0(&AngularCoefficient::shear_turning(1.0)), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mu0(&AngularCoefficient::shear_turning(2.0)), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_examples() {
        let eps = epsilon_from_physical(2e3, 3.0, 1e3).unwrap();
        assert!((eps - 6.6e-4).abs() / 6.6e-4 < 0.05);
        assert_abs_diff_eq!(epsilon_from_physical(8.0, 2.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(epsilon_from_physical(1.0, 4.0, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert!(epsilon_from_physical(0.0, 1.0, 1.0).is_err());
        assert!(epsilon_from_physical(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn derivatives_converge_at_second_order() {
        for c in all_families() {
            for order in 0..2u8 {
                let phi0 = 0.83;
                let err = |h: f64| {
                    let fd = (c.eval_unchecked(phi0 + h, order) - c.eval_unchecked(phi0 - h, order))
                        / (2.0 * h);
                    (fd - c.eval_unchecked(phi0, order + 1)).abs()
                };
                let (e1, e2) = (err(1e-2), err(5e-3));
                if c.is_constant() {
                    assert!(e1 < 1e-12);
                    continue;
                }
                let rate = (e1 / e2).log2();
                assert!((rate - 2.0).abs() < 0.05, "{c:?} order {order}: rate {rate}");
            }
        }
    }

    #[test]
    fn params_gate() {
        let p = ModelParams::new(
            0.02,
            0.2,
            1.0,
            AngularCoefficient::shifted_sine(1.0, 0.5),
            AngularCoefficient::shear_turning(0.5),
        );
        assert!(p.validate_full().is_ok());
        assert!(p.with_epsilon(0.0).validate_full().is_err());
        assert!(p.with_epsilon(0.0).validate_limit().is_ok());
        assert!(p.with_diffusion(-1.0).validate_limit().is_err());
        let bad = ModelParams { speed: AngularCoefficient::shifted_sine(-1.0, 1.0), ..p };
        assert!(matches!(bad.validate_full(), Err(Error::Assumption { .. })));
    }

    proptest! {
        #[test]
        fn evaluation_is_periodic(phi in -50.0f64..50.0, k in -3i32..4, order in 0u8..3) {
            for c in all_families() {
                let a = c.eval_unchecked(phi, order);
                let b = c.eval_unchecked(phi + k as f64 * TAU, order);
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn shear_speed_positive_when_g_exceeds_vprop() {
        let v = AngularCoefficient::shear_speed(1.5, 1.0);
        assert_abs_diff_eq!(v.min_value(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(v.value(PI / 2.0), 0.5, epsilon = 1e-15);
    }
}
