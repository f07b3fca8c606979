//! Experiment configuration and its schema checks.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use contact_core::capacity::BoxSet;
use contact_core::energy::EnergySettings;
use contact_core::geometry::CustomManifoldSpec;
use contact_core::terms::TermTable;
use contact_core::ManifoldModel;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A built-in model name or a custom chart table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ManifoldChoice {
    Named(String),
    Custom(CustomManifoldSpec),
}

impl<'de> Deserialize<'de> for ManifoldChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Self::Named(s)),
            v @ serde_json::Value::Object(_) => CustomManifoldSpec::deserialize(v)
                .map(Self::Custom)
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "expected a model name or a custom table, found {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Flow,
    Energy,
    Translated,
    Capacity,
    Axioms,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Flow => "flow",
            Task::Energy => "energy",
            Task::Translated => "translated",
            Task::Capacity => "capacity",
            Task::Axioms => "axioms",
        }
    }

    fn needs_hamiltonian(&self) -> bool {
        !matches!(self, Task::Axioms)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| CliError::schema("task", format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Integrator tolerance.
    pub flow: f64,
    /// Root-finding and acceptance tolerance.
    pub accept: f64,
    /// Slack allowed on energy–capacity audits.
    pub audit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            flow: 1e-10,
            accept: 1e-8,
            audit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: String,
    pub plotdata: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            plotdata: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowOptions {
    /// Random starting points.
    pub points: usize,
    /// Trace sampling intervals on `[0, 1]`.
    pub intervals: usize,
    /// Times at which the pullback identity is checked.
    pub checkpoints: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            points: 8,
            intervals: 64,
            checkpoints: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslatedOptions {
    pub n_seeds: usize,
    pub eta_seeds: usize,
    pub eta_window: Option<(f64, f64)>,
    pub max_iters: usize,
    /// Grid size per dimension of the brute-force oracle; `None` skips it.
    pub oracle_grid: Option<usize>,
    pub oracle_eta_nodes: usize,
}

impl Default for TranslatedOptions {
    fn default() -> Self {
        Self {
            n_seeds: 32,
            eta_seeds: 16,
            eta_window: None,
            max_iters: 50,
            oracle_grid: None,
            oracle_eta_nodes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityOptions {
    #[serde(rename = "box")]
    pub box_set: BoxSet,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Extra scales at which `ĉ` is recomputed.
    #[serde(default)]
    pub scales: Vec<f64>,
}

fn default_samples() -> usize {
    400
}

fn default_margin() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxiomOptions {
    pub hamiltonians: usize,
    pub naturality_cases: usize,
    pub amplitude: f64,
    /// Energy settings of the triangle, symmetry and shift checks.
    pub grid_per_dim: usize,
    pub time_nodes: usize,
    /// Time nodes of the triangle check. `t ↦ max|H_t|` has kinks where the
    /// maximizer switches, so Simpson is only second order there.
    pub triangle_time_nodes: usize,
    /// Time nodes of the naturality check, whose integrand needs a flow per sample.
    pub naturality_time_nodes: usize,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        Self {
            hamiltonians: 20,
            naturality_cases: 3,
            amplitude: 0.5,
            grid_per_dim: 16,
            time_nodes: 33,
            triangle_time_nodes: 4097,
            naturality_time_nodes: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldChoice,
    #[serde(default)]
    pub hamiltonian: Option<TermTable>,
    pub task: Task,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub energy: EnergySettings,
    #[serde(default)]
    pub flow: FlowOptions,
    #[serde(default)]
    pub translated: TranslatedOptions,
    #[serde(default)]
    pub capacity: Option<CapacityOptions>,
    #[serde(default)]
    pub axioms: AxiomOptions,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "config".to_string()
            } else {
                path
            };
            CliError::schema(field, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn model(&self) -> Result<ManifoldModel, CliError> {
        match &self.manifold {
            ManifoldChoice::Named(n) => {
                ManifoldModel::by_name(n).map_err(|e| CliError::schema("manifold", e.to_string()))
            }
            ManifoldChoice::Custom(spec) => ManifoldModel::from_custom(spec.clone())
                .map_err(|e| CliError::schema("manifold", e.to_string())),
        }
    }

    /// Checks cross-field constraints that the schema alone cannot express.
    pub fn validate(&self) -> Result<ManifoldModel, CliError> {
        let m = self.model()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::schema(
                    format!("tolerances.{name}"),
                    format!("must be positive, got {v}"),
                ))
            }
        };
        positive("flow", self.tolerances.flow)?;
        positive("accept", self.tolerances.accept)?;
        positive("audit", self.tolerances.audit)?;
        self.energy
            .validate()
            .map_err(|e| CliError::schema("energy", e.to_string()))?;
        match &self.hamiltonian {
            Some(h) => {
                if h.min_dimension() > m.ambient_dim() {
                    return Err(CliError::schema(
                        "hamiltonian",
                        format!(
                            "uses coordinate {} but {} has {} coordinates",
                            h.min_dimension() - 1,
                            m.name(),
                            m.ambient_dim()
                        ),
                    ));
                }
                if h.terms.iter().any(|t| !t.coeff.is_finite()) {
                    return Err(CliError::schema("hamiltonian", "non-finite coefficient"));
                }
            }
            None if self.task.needs_hamiltonian() => {
                return Err(CliError::schema(
                    "hamiltonian",
                    format!("required for task `{}`", self.task),
                ))
            }
            None => {}
        }
        match (&self.capacity, self.task) {
            (None, Task::Capacity) => {
                return Err(CliError::schema("capacity", "required for task `capacity`"))
            }
            (Some(c), _) => {
                c.box_set
                    .validate()
                    .and_then(|_| c.box_set.check_model(&m))
                    .map_err(|e| CliError::schema("capacity.box", e.to_string()))?;
                if c.samples < 100 {
                    return Err(CliError::schema("capacity.samples", "must be at least 100"));
                }
                if let Some(l) = c.scales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                    return Err(CliError::schema(
                        "capacity.scales",
                        format!("invalid scale {l}"),
                    ));
                }
            }
            _ => {}
        }
        if self.task == Task::Axioms && self.axioms.hamiltonians < 2 {
            return Err(CliError::schema("axioms.hamiltonians", "need at least two"));
        }
        Ok(m)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "manifold": "Torus3",
        "task": "energy",
        "hamiltonian": {"terms": [{"coeff": 0.5, "time_power": 0,
            "factors": [{"kind": "cos", "coord": 0, "k": 1}]}]}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.task, Task::Energy);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.validate().unwrap().name(), "Torus3");
        assert_eq!(
            c.hash(),
            ExperimentConfig::from_json_str(MINIMAL).unwrap().hash()
        );
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_json_str(r#"{"task": "flow"}"#).unwrap_err();
        assert!(e.to_string().contains("manifold"), "{e}");
        let e = ExperimentConfig::from_json_str(
            r#"{"manifold": "Torus3", "task": "flow", "tolerances": {"flow": "x"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("tolerances.flow"), "{e}");
        let c =
            ExperimentConfig::from_json_str(r#"{"manifold": "Klein", "task": "axioms"}"#).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("manifold"));
        let c = ExperimentConfig::from_json_str(r#"{"manifold": "S3", "task": "flow"}"#).unwrap();
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("hamiltonian"));
    }

    #[test]
    fn task_override_parses() {
        assert_eq!("Translated".parse::<Task>().unwrap(), Task::Translated);
        assert!("plot".parse::<Task>().is_err());
    }
}
