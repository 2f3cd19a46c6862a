//! Run configuration: a TOML file with sections `[model]`, `[grid]`,
//! `[time]`, `[experiment]` and `[output]`. Unknown keys are rejected.
//!
//! ```toml
//! [model]
//! epsilon = 0.02
//! D = 0.2
//! T = 1.0
//! V = { family = "shifted-sine", params = { g0 = 1.0, a = 0.5 } }
//! Phi = { family = "shear", params = { gamma = 0.5 } }
//!
//! [grid]
//! y_max = 30.0
//! n_y = 256
//! n_phi = 128
//! layer_width_factor = 8.0
//! layer_cells = 32
//!
//! [time]
//! dt = "auto"
//! splitting = "strang"
//!
//! [experiment]
//! epsilon_list = [0.08, 0.04, 0.02, 0.01]
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::coefficients::{AngularCoefficient, ModelParams, Role};
use crate::error::{Error, Result};
use crate::full_solver::{steady_layer, FullSolverConfig, Splitting, TimeStep};
use crate::grids::{PhaseField, PhaseGrid, PhiGrid, YGrid};

pub const OUT_DIR_ENV: &str = "ACTIVERODS_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub epsilon: f64,
    #[serde(rename = "D")]
    pub diffusion: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "V")]
    pub speed: CoefficientSpec,
    #[serde(rename = "Phi")]
    pub turning: CoefficientSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub y_max: f64,
    pub n_y: usize,
    pub n_phi: usize,
    /// Width of the refined wall zone in units of ε.
    pub layer_width_factor: f64,
    pub layer_cells: usize,
    /// Use uniform y-cells instead of the graded mesh.
    pub uniform: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { y_max: 30.0, n_y: 256, n_phi: 128, layer_width_factor: 8.0, layer_cells: 32, uniform: false }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: DtSpec,
    pub splitting: String,
    pub linear_tol: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: DtSpec::Named("auto".into()), splitting: "strang".into(), linear_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub epsilon_list: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `exponential` (e^{−y}/2π) or `layer` (unit layer per angle, /2π).
    pub initial: String,
    pub particles: usize,
    pub particle_dt: f64,
    /// Resolvent shift; defaults to μ₀ + 1.
    pub lambda: Option<f64>,
    pub eps_reg_list: Vec<f64>,
    pub line_extent: f64,
    pub line_n_y: usize,
    pub line_n_phi: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            epsilon_list: vec![0.08, 0.04, 0.02, 0.01],
            snapshot_times: Vec::new(),
            seeds: vec![1],
            initial: "exponential".into(),
            particles: 100_000,
            particle_dt: 5e-4,
            lambda: None,
            eps_reg_list: vec![0.1, 0.01, 0.001],
            line_extent: 8.0,
            line_n_y: 256,
            line_n_phi: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["csv".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    fn validate(&self) -> Result<()> {
        self.solver_config()?.validate()?;
        self.speed()?;
        self.turning()?;
        if !matches!(self.experiment.initial.as_str(), "exponential" | "layer") {
            return Err(Error::Config(format!("unknown initial data '{}'", self.experiment.initial)));
        }
        let list = &self.experiment.epsilon_list;
        if list.iter().any(|e| !(*e > 0.0)) || list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilon_list must be positive and strictly decreasing".into()));
        }
        if !self.output.formats.iter().all(|f| f == "csv") {
            return Err(Error::Config(format!("unsupported output formats {:?}", self.output.formats)));
        }
        Ok(())
    }

    pub fn speed(&self) -> Result<AngularCoefficient> {
        let s = &self.model.speed;
        AngularCoefficient::from_spec(Role::Speed, &s.family, &s.params)
    }

    pub fn turning(&self) -> Result<AngularCoefficient> {
        let s = &self.model.turning;
        AngularCoefficient::from_spec(Role::Turning, &s.family, &s.params)
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.model.epsilon, self.model.diffusion, self.model.t_final, self.speed()?, self.turning()?))
    }

    pub fn solver_config(&self) -> Result<FullSolverConfig> {
        let dt = match &self.time.dt {
            DtSpec::Fixed(v) => TimeStep::Fixed(*v),
            DtSpec::Named(s) if s == "auto" => TimeStep::Auto,
            DtSpec::Named(s) => return Err(Error::Config(format!("dt must be a number or \"auto\", got '{s}'"))),
        };
        let splitting = match self.time.splitting.as_str() {
            "lie" => Splitting::Lie,
            "strang" => Splitting::Strang,
            other => return Err(Error::Config(format!("unknown splitting '{other}'"))),
        };
        Ok(FullSolverConfig { dt, splitting, linear_tol: self.time.linear_tol })
    }

    /// Grid with the wall zone scaled to `epsilon`.
    pub fn grid_for(&self, epsilon: f64) -> Result<Arc<PhaseGrid>> {
        let g = &self.grid;
        let y = if g.uniform {
            YGrid::uniform(g.y_max, g.n_y)?
        } else {
            YGrid::graded(g.y_max, g.n_y, g.layer_width_factor * epsilon, g.layer_cells)?
        };
        Ok(PhaseGrid::new(y, PhiGrid::new(g.n_phi)?))
    }

    /// Snapshot times, defaulting to the final time alone.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.experiment.snapshot_times.is_empty() {
            vec![self.model.t_final]
        } else {
            self.experiment.snapshot_times.clone()
        }
    }

    pub fn initial_field(&self, grid: &Arc<PhaseGrid>, epsilon: f64) -> Result<PhaseField> {
        match self.experiment.initial.as_str() {
            "exponential" => Ok(exponential_initial(grid)),
            "layer" => {
                let mut f = steady_layer(grid, &self.speed()?, epsilon);
                f.scale(1.0 / TAU);
                Ok(f)
            }
            other => Err(Error::Config(format!("unknown initial data '{other}'"))),
        }
    }

    /// Output directory; `ACTIVERODS_OUT_DIR` wins over the file.
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => PathBuf::from(&self.output.directory),
        }
    }
}

/// Cell averages of e^{−y}/(2π).
pub fn exponential_initial(grid: &Arc<PhaseGrid>) -> PhaseField {
    PhaseField::from_antiderivative(grid, |y, _| -(-y).exp() / TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
epsilon = 0.02
D = 0.2
T = 1.0
V = { family = "shifted-sine", params = { g0 = 1.0, a = 0.5 } }
Phi.family = "shear"
Phi.params.gamma = 0.5
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg: RunConfig = MINIMAL.parse().unwrap();
        assert_eq!(cfg.grid.n_y, 256);
        assert_eq!(cfg.solver_config().unwrap().dt, TimeStep::Auto);
        let p = cfg.params().unwrap();
        assert!((p.turning.value(std::f64::consts::FRAC_PI_2) + 0.5).abs() < 1e-15);
        assert_eq!(cfg.snapshot_times(), vec![1.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let extra = format!("{MINIMAL}\n[grid]\nbogus = 1\n");
        assert!(matches!(extra.parse::<RunConfig>(), Err(Error::Config(_))));
        let bad_dt = format!("{MINIMAL}\n[time]\ndt = \"soon\"\n");
        assert!(matches!(bad_dt.parse::<RunConfig>(), Err(Error::Config(_))));
        let bad_family = MINIMAL.replace("shifted-sine", "zigzag");
        assert!(matches!(bad_family.parse::<RunConfig>(), Err(Error::Config(_))));
        let unsorted = format!("{MINIMAL}\n[experiment]\nepsilon_list = [0.01, 0.02]\n");
        assert!(matches!(unsorted.parse::<RunConfig>(), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_dt_and_splitting() {
        let text = format!("{MINIMAL}\n[time]\ndt = 0.005\nsplitting = \"lie\"\n");
        let cfg: RunConfig = text.parse().unwrap();
        let sc = cfg.solver_config().unwrap();
        assert_eq!(sc.dt, TimeStep::Fixed(0.005));
        assert_eq!(sc.splitting, Splitting::Lie);
    }
}
