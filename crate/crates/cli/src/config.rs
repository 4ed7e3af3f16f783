//! JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use robustdeg::engine::{chernoff_sample_size, EngineConfig, EstimatorMode, RadiusGrid};
use robustdeg::lti::{LtiRequirement, RobustnessSpec, UncertainRational, UncertainSystem};
use robustdeg::uncertainty::{BlockKind, BlockSpec, NormOrder, UncertaintySet};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const BUILTIN_GSV: &str = "gsv_example";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub uncertainty: UncertaintyConfig,
    pub grid: GridConfig,
    pub sampling: SamplingConfig,
    /// Intervals are reported at level `1 − delta`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub spec: RobustnessSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub estimator: EstimatorMode,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

fn default_delta() -> f64 {
    0.01
}

fn default_workers() -> usize {
    1
}

/// Either `{"builtin": name}` or `{"controller": …, "plant": …}`, each with
/// an optional component → coordinate `binding`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<UncertainRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<UncertainRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityTag {
    #[serde(rename = "inf")]
    Inf,
}

/// `p` of an `l_p` ball: a positive integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LpOrder {
    Finite(u32),
    Infinite(InfinityTag),
}

impl LpOrder {
    fn norm_order(self) -> NormOrder {
        match self {
            LpOrder::Finite(p) => NormOrder::Finite(p),
            LpOrder::Infinite(_) => NormOrder::Infinity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncertaintyConfig {
    LpBall {
        p: LpOrder,
        dim: usize,
    },
    SpectralBall {
        blocks: Vec<BlockConfig>,
    },
    /// Center defaults to the vertex centroid.
    StarSimplex {
        vertices: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub kind: BlockKind,
    #[serde(default = "one")]
    pub rows: usize,
    #[serde(default = "one")]
    pub cols: usize,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

/// `{a, b, l}` or `{radii}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

/// Exactly one of `n` and `chernoff`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chernoff: Option<ChernoffConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChernoffConfig {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

/// Library objects built from a validated configuration.
pub struct Experiment {
    pub set: UncertaintySet,
    pub grid: RadiusGrid,
    pub samples_per_radius: usize,
    pub requirement: LtiRequirement,
}

fn field<E: std::fmt::Display>(name: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{name}: {e}"))
}

impl ExperimentConfig {
    pub fn set(&self) -> Result<UncertaintySet, CliError> {
        match &self.uncertainty {
            UncertaintyConfig::LpBall { p, dim } => {
                UncertaintySet::lp_ball(p.norm_order(), *dim).map_err(field("uncertainty"))
            }
            UncertaintyConfig::SpectralBall { blocks } => {
                let specs = blocks
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        BlockSpec::new(b.kind, b.rows, b.cols, b.multiplicity)
                            .map_err(|e| CliError::Config(format!("uncertainty.blocks[{k}]: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                UncertaintySet::spectral_ball(specs).map_err(field("uncertainty.blocks"))
            }
            UncertaintyConfig::StarSimplex { vertices, center } => {
                let center = match center {
                    Some(c) => c.clone(),
                    None => robustdeg::uncertainty::centroid(vertices).map_err(field("uncertainty.vertices"))?,
                };
                UncertaintySet::star_simplex(vertices.clone(), center).map_err(field("uncertainty"))
            }
        }
    }

    pub fn radius_grid(&self) -> Result<RadiusGrid, CliError> {
        let g = &self.grid;
        match (g.a, g.b, g.l, &g.radii) {
            (Some(a), Some(b), Some(l), None) => RadiusGrid::linspace(a, b, l).map_err(field("grid")),
            (None, None, None, Some(radii)) => RadiusGrid::from_radii(radii.clone()).map_err(field("grid.radii")),
            _ => Err(CliError::Config(
                "grid: give either all of a, b, l or an explicit radii list".into(),
            )),
        }
    }

    pub fn samples_per_radius(&self) -> Result<usize, CliError> {
        match (&self.sampling.n, &self.sampling.chernoff) {
            (Some(0), None) => Err(CliError::Config("sampling.n: must be >= 1".into())),
            (Some(n), None) => Ok(*n),
            (None, Some(c)) => chernoff_sample_size(c.epsilon, c.delta).map_err(field("sampling.chernoff")),
            _ => Err(CliError::Config("sampling: give exactly one of n or chernoff".into())),
        }
    }

    pub fn system(&self) -> Result<UncertainSystem, CliError> {
        let s = &self.system;
        match (&s.builtin, &s.controller, &s.plant) {
            (Some(name), None, None) => {
                if name != BUILTIN_GSV {
                    return Err(CliError::Config(format!(
                        "system.builtin: unknown builtin `{name}` (known: {BUILTIN_GSV})"
                    )));
                }
                match &s.binding {
                    None => Ok(UncertainSystem::gsv_example()),
                    Some(binding) => {
                        UncertainSystem::gsv_example_with_binding(binding.clone()).map_err(field("system.binding"))
                    }
                }
            }
            (None, Some(controller), Some(plant)) => UncertainSystem::new(
                controller.clone(),
                plant.clone(),
                s.binding.clone().unwrap_or_default(),
            )
            .map_err(field("system")),
            _ => Err(CliError::Config(
                "system: give either builtin or both controller and plant".into(),
            )),
        }
    }

    /// Validates every field and builds the library objects.
    pub fn resolve(&self) -> Result<Experiment, CliError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Config(format!("delta: must lie in (0, 1), got {}", self.delta)));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers: must be >= 1".into()));
        }
        let set = self.set()?;
        let grid = self.radius_grid()?;
        let samples_per_radius = self.samples_per_radius()?;
        let requirement = LtiRequirement::new(self.system()?, self.spec.clone(), &set).map_err(field("system.binding"))?;
        Ok(Experiment {
            set,
            grid,
            samples_per_radius,
            requirement,
        })
    }

    pub fn engine_config(&self, experiment: &Experiment) -> EngineConfig {
        let mut cfg = EngineConfig::new(
            experiment.samples_per_radius,
            self.delta,
            experiment.grid.clone(),
            experiment.set.clone(),
            self.seed,
        );
        cfg.workers = self.workers;
        cfg.mode = self.estimator;
        cfg
    }
}

/// Parses and validates a configuration document. Syntax errors carry line
/// and column; validation errors name the field.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let at = format!("line {} column {}", inner.line(), inner.column());
        if path == "." || path.is_empty() {
            CliError::Config(format!("{inner} ({at})"))
        } else {
            CliError::Config(format!("{path}: {inner} ({at})"))
        }
    })?;
    config.resolve()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn emit_config(config: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(config).expect("configuration serializes")
}
