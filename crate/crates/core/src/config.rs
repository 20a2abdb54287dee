//! Run configuration, read from TOML.
//!
//! ```toml
//! name = "butatriene_1d"
//! n_states = 10
//!
//! [model]
//! e1 = 9.45
//! # ...
//!
//! [grid]
//! axes = [{ q_min = -9.0, q_max = 9.0, n_points = 401 }]
//! ```
//!
//! Every section except `model` and `grid` is optional. Axis frequencies are
//! taken from the model.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::{ReferenceKind, ReferenceOptions};
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::factorize::FactorizeOptions;
use crate::grid::{GridSpec, ProductGrid};
use crate::model::ModelParams;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "VIBRONIC_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Number of exact vibronic states.
    pub n_states: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ModelParams,
    pub grid: GridConfig,
    #[serde(default)]
    pub verification: Option<VerificationConfig>,
    #[serde(default)]
    pub factorize: FactorizeOptions,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub single_surface: SingleSurfaceConfig,
    #[serde(default)]
    pub overlaps: OverlapConfig,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    /// Grid of the single-surface check; the vibronic grid when absent.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// States `0..=max_state` are verified.
    pub max_state: usize,
    /// Extra potential caps whose effect on `e0` is reported.
    #[serde(default)]
    pub cap_study: Vec<f64>,
    #[serde(default)]
    pub cap_study_states: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Merge upper-surface states into the adiabatic families.
    pub include_upper: bool,
    /// Ceiling for the diagonal correction, eV.
    pub cap: f64,
    /// Number of states per reference Hamiltonian; 0 skips it.
    pub states: ReferenceStates,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceStates {
    pub diabatic_lambda_zero: usize,
    pub adiabatic: usize,
    pub born_huang: usize,
}

impl Default for ReferenceStates {
    fn default() -> Self {
        Self {
            diabatic_lambda_zero: 10,
            adiabatic: 10,
            born_huang: 10,
        }
    }
}

impl ReferenceStates {
    pub fn get(&self, kind: ReferenceKind) -> usize {
        match kind {
            ReferenceKind::DiabaticLambdaZero => self.diabatic_lambda_zero,
            ReferenceKind::Adiabatic => self.adiabatic,
            ReferenceKind::BornHuang => self.born_huang,
        }
    }
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let o = ReferenceOptions::default();
        Self {
            include_upper: o.include_upper,
            cap: o.cap,
            states: ReferenceStates::default(),
        }
    }
}

impl ReferenceConfig {
    pub fn options(&self) -> ReferenceOptions {
        ReferenceOptions {
            include_upper: self.include_upper,
            cap: self.cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleSurfaceConfig {
    /// Eigenpairs of `T + Ē` built from the ground state; 0 skips the study.
    pub states: usize,
}

impl Default for SingleSurfaceConfig {
    fn default() -> Self {
        Self { states: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    /// Full matrices to compute, as `row_family:column_family` names.
    pub pairs: Vec<String>,
    /// Energy window for degeneracy clusters, eV.
    pub cluster_tol: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            pairs: vec!["adiabatic:exact".into(), "modulus_adiabatic:amplitude".into()],
            cluster_tol: crate::eigen::DEGENERACY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Extent and point count are both multiplied by this factor.
    pub factor: usize,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    /// States whose factorized fields are exported by `run`.
    pub field_states: usize,
    /// Ceiling applied to exported potentials meant for plotting, eV.
    pub plot_clip: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: true,
            json: true,
            field_states: 10,
            plot_clip: 12.0,
        }
    }
}

/// Scalar settings that command-line flags may replace.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n_states: Option<usize>,
    pub grid_points: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads a path, or one of the bundled configs by name.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        let path = Path::new(name_or_path);
        if path.exists() {
            return Self::load(path);
        }
        let stem = name_or_path.trim_end_matches(".toml").trim_end_matches(".cfg");
        match bundled(stem) {
            Some(text) => Self::from_toml(text),
            None => Err(Error::Config(format!(
                "no config file `{name_or_path}` and no bundled config of that name"
            ))),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_states == 0 {
            return Err(Error::Config("n_states must be at least 1".into()));
        }
        if self.grid.axes.len() != self.model.ndim() {
            return Err(Error::Config(format!(
                "model has {} modes but the grid has {} axes",
                self.model.ndim(),
                self.grid.axes.len()
            )));
        }
        for spec in self.grid_specs() {
            spec.validate()?;
        }
        if let Some(v) = &self.verification {
            if let Some(g) = &v.grid {
                if g.axes.len() != self.model.ndim() {
                    return Err(Error::Config("verification grid has the wrong number of axes".into()));
                }
            }
            for spec in self.verification_specs() {
                spec.validate()?;
            }
            if v.max_state >= self.n_states {
                return Err(Error::Config(format!(
                    "verification.max_state = {} needs n_states > {}",
                    v.max_state, v.max_state
                )));
            }
            if let Some(s) = v.cap_study_states.iter().find(|s| **s > v.max_state) {
                return Err(Error::Config(format!("cap study state {s} is not verified")));
            }
        }
        if let Some(c) = &self.convergence {
            if c.factor < 2 || c.states == 0 || c.states > self.n_states {
                return Err(Error::Config(
                    "convergence needs factor >= 2 and 1 <= states <= n_states".into(),
                ));
            }
        }
        if !(self.factorize.cap > 0.0) || !(self.reference.cap > 0.0) {
            return Err(Error::Config("potential caps must be positive".into()));
        }
        for pair in &self.overlaps.pairs {
            parse_pair(pair)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(n) = o.n_states {
            self.n_states = n;
        }
        if let Some(n) = o.grid_points {
            for a in &mut self.grid.axes {
                a.n_points = n;
            }
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        } else if let Ok(dir) = std::env::var(OUT_ENV) {
            if !dir.is_empty() {
                self.output.dir = PathBuf::from(dir);
            }
        }
        self.validate()
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut s = self.solver.clone();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }

    pub fn grid_specs(&self) -> Vec<GridSpec> {
        specs(&self.grid, &self.model)
    }

    pub fn verification_specs(&self) -> Vec<GridSpec> {
        match self.verification.as_ref().and_then(|v| v.grid.as_ref()) {
            Some(g) => specs(g, &self.model),
            None => self.grid_specs(),
        }
    }

    pub fn build_grid(&self) -> Result<ProductGrid> {
        ProductGrid::from_specs(&self.grid_specs())
    }
}

fn specs(g: &GridConfig, model: &ModelParams) -> Vec<GridSpec> {
    g.axes
        .iter()
        .zip(model.omegas())
        .map(|(a, w)| GridSpec::new(a.q_min, a.q_max, a.n_points, w))
        .collect()
}

/// Family names accepted in overlap pairs.
pub const FAMILY_NAMES: [&str; 8] = [
    "exact",
    "amplitude",
    "diabatic_lambda_zero",
    "adiabatic",
    "born_huang",
    "modulus_adiabatic",
    "modulus_born_huang",
    "single_surface",
];

pub fn parse_pair(pair: &str) -> Result<(String, String)> {
    let (a, b) = pair
        .split_once([':', ','])
        .ok_or_else(|| Error::Config(format!("overlap pair `{pair}` must look like `a:b`")))?;
    for name in [a, b] {
        if !FAMILY_NAMES.contains(&name) {
            return Err(Error::Config(format!(
                "unknown family `{name}`; expected one of {}",
                FAMILY_NAMES.join(", ")
            )));
        }
    }
    Ok((a.to_string(), b.to_string()))
}

pub const BUTATRIENE_1D: &str = include_str!("../configs/butatriene_1d.toml");
pub const BUTATRIENE_2D: &str = include_str!("../configs/butatriene_2d.toml");

pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "butatriene_1d" => Some(BUTATRIENE_1D),
        "butatriene_2d" => Some(BUTATRIENE_2D),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let one = RunConfig::from_toml(BUTATRIENE_1D).unwrap();
        assert_eq!(one.model.ndim(), 1);
        assert_eq!(one.grid_specs()[0].n_points, 401);
        assert_eq!(one.verification_specs()[0].n_points, 3200);
        let two = RunConfig::from_toml(BUTATRIENE_2D).unwrap();
        assert_eq!(two.grid_specs().len(), 2);
        assert_eq!(two.grid_specs()[1].omega, two.model.omega_y);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml(BUTATRIENE_2D).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{BUTATRIENE_1D}\nbogus = 3\n");
        assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn axis_count_must_match_model() {
        let text = BUTATRIENE_1D.replace(
            "axes = [{ q_min = -9.0, q_max = 9.0, n_points = 401 }]",
            "axes = [{ q_min = -9.0, q_max = 9.0, n_points = 401 }, { q_min = -9.0, q_max = 9.0, n_points = 401 }]",
        );
        assert_ne!(text, BUTATRIENE_1D);
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn overrides_replace_scalars() {
        let mut cfg = RunConfig::from_toml(BUTATRIENE_1D).unwrap();
        cfg.apply(&Overrides {
            n_states: Some(12),
            grid_points: Some(101),
            seed: Some(7),
            out: Some(PathBuf::from("/tmp/x")),
        })
        .unwrap();
        assert_eq!(cfg.n_states, 12);
        assert_eq!(cfg.grid.axes[0].n_points, 101);
        assert_eq!(cfg.solver_options().seed, 7);
        assert_eq!(cfg.output.dir, PathBuf::from("/tmp/x"));
        assert!(cfg
            .apply(&Overrides {
                grid_points: Some(3),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn overlap_pairs_are_checked() {
        assert_eq!(
            parse_pair("adiabatic,exact").unwrap(),
            ("adiabatic".to_string(), "exact".to_string())
        );
        assert!(parse_pair("adiabatic").is_err());
        assert!(parse_pair("adiabatic:nonsense").is_err());
    }

    #[test]
    fn unknown_bundled_name() {
        assert!(RunConfig::resolve("no_such_config").is_err());
        assert!(RunConfig::resolve("butatriene_1d").is_ok());
        assert!(RunConfig::resolve("butatriene_2d.cfg").is_ok());
    }
}
