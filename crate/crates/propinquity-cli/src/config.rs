//! Space configuration documents (JSON) and their zoo constructors.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use propinquity::error::{Error, Result};
use propinquity::zoo::{
    self, circle_metric, space_from_finite_metric, FiniteMetricSpace, FuzzyTorus, FuzzyTorusSpec,
    GroupActionSpec,
};
use propinquity::{CStarAlgebra, QuantumMetricSpace, StarMorphism};

/// One space per document; `kind` picks the zoo constructor.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    FiniteMetric {
        label: String,
        points: Vec<String>,
        metric: Vec<Vec<f64>>,
    },
    CircleSubgroup {
        label: String,
        k: usize,
    },
    FuzzyTorus {
        label: String,
        dims: Vec<usize>,
        /// `θ_ij = exp(2πi · theta_turns[i][j])`; omitted means untwisted.
        #[serde(default)]
        theta_turns: Option<Vec<Vec<f64>>>,
    },
    GroupAction {
        label: String,
        points: usize,
        elements: Vec<GroupElementConfig>,
        /// `table[i][j]` is the index of `g_i g_j` among `elements`, or null
        /// for the identity.
        #[serde(default)]
        table: Option<Vec<Vec<Option<usize>>>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupElementConfig {
    pub label: String,
    pub length: f64,
    /// Point permutation of the underlying commutative algebra.
    pub permutation: Vec<usize>,
}

/// A space built from a config, with whatever extra structure the kind carries.
pub struct BuiltSpace {
    pub label: String,
    pub qms: Arc<QuantumMetricSpace>,
    pub metric: Option<FiniteMetricSpace>,
}

impl SpaceConfig {
    pub fn label(&self) -> &str {
        match self {
            SpaceConfig::FiniteMetric { label, .. }
            | SpaceConfig::CircleSubgroup { label, .. }
            | SpaceConfig::FuzzyTorus { label, .. }
            | SpaceConfig::GroupAction { label, .. } => label,
        }
    }

    pub fn build(&self) -> Result<BuiltSpace> {
        match self {
            SpaceConfig::FiniteMetric {
                label,
                points,
                metric,
            } => {
                let n = points.len();
                let mut m = propinquity::linalg::RMat::zeros(n, n);
                if metric.len() != n || metric.iter().any(|r| r.len() != n) {
                    return Err(Error::Structure("metric matrix shape mismatch".into()));
                }
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = metric[i][j];
                    }
                }
                let fms = FiniteMetricSpace::new(points.clone(), m)?;
                let qms = space_from_finite_metric(&fms, label.clone())?;
                Ok(BuiltSpace {
                    label: label.clone(),
                    qms,
                    metric: Some(fms),
                })
            }
            SpaceConfig::CircleSubgroup { label, k } => {
                let fms = circle_metric(*k)?;
                let qms = space_from_finite_metric(&fms, label.clone())?;
                Ok(BuiltSpace {
                    label: label.clone(),
                    qms,
                    metric: Some(fms),
                })
            }
            SpaceConfig::FuzzyTorus {
                label,
                dims,
                theta_turns,
            } => {
                let d = dims.len();
                let theta = match theta_turns {
                    None => vec![vec![Complex64::new(1.0, 0.0); d]; d],
                    Some(turns) => {
                        if turns.len() != d || turns.iter().any(|r| r.len() != d) {
                            return Err(Error::Structure("theta_turns must be d x d".into()));
                        }
                        turns
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|&t| Complex64::from_polar(1.0, TAU * t))
                                    .collect()
                            })
                            .collect()
                    }
                };
                let spec = FuzzyTorusSpec::new(dims.clone(), theta, label.clone())?;
                let torus = FuzzyTorus::build(spec)?;
                Ok(BuiltSpace {
                    label: label.clone(),
                    qms: torus.qms,
                    metric: None,
                })
            }
            SpaceConfig::GroupAction {
                label,
                points,
                elements,
                table,
            } => {
                let alg = CStarAlgebra::new(vec![1; *points], format!("{label}#base"))?;
                let mut elts = Vec::new();
                for e in elements {
                    if e.permutation.len() != *points {
                        return Err(Error::Structure(format!(
                            "permutation of {} has wrong arity",
                            e.label
                        )));
                    }
                    let auto = StarMorphism::permute_points(&alg, &e.permutation)?;
                    elts.push((e.label.clone(), auto, e.length));
                }
                let spec = GroupActionSpec {
                    label: label.clone(),
                    algebra: alg,
                    elements: elts,
                    table: table.clone(),
                };
                let qms = zoo::group_action_space(&spec)?;
                Ok(BuiltSpace {
                    label: label.clone(),
                    qms,
                    metric: None,
                })
            }
        }
    }
}

pub fn load_config(path: &str) -> std::result::Result<SpaceConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    parse_config(&text).map_err(|e| format!("{path}: {e}"))
}

pub fn parse_config(text: &str) -> std::result::Result<SpaceConfig, String> {
    serde_json::from_str(text).map_err(|e| format!("parse error at line {}: {e}", e.line()))
}

/// A chain document: an ordered list of spaces glued by direct-sum tunnels.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub spaces: Vec<SpaceConfig>,
}

pub fn load_chain(path: &str) -> std::result::Result<ChainConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    serde_json::from_str(&text)
        .map_err(|e| format!("{path}: parse error at line {}: {e}", e.line()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_metric_roundtrip() {
        let cfg = parse_config(
            r#"{"kind":"finite_metric","label":"X","points":["a","b"],
                "metric":[[0.0,2.0],[2.0,0.0]]}"#,
        )
        .unwrap();
        let built = cfg.build().unwrap();
        assert_eq!(built.qms.algebra().n_blocks(), 2);
        assert!((built.qms.diameter().interval.hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        assert!(parse_config("{nope").is_err());
        assert!(parse_config(r#"{"kind":"unknown","label":"x"}"#).is_err());
    }

    #[test]
    fn circle_and_torus_configs() {
        let z4 = parse_config(r#"{"kind":"circle_subgroup","label":"Z4","k":4}"#).unwrap();
        assert_eq!(z4.build().unwrap().qms.algebra().n_blocks(), 4);
        let t = parse_config(
            r#"{"kind":"fuzzy_torus","label":"P","dims":[2,2],
                "theta_turns":[[0.0,0.5],[-0.5,0.0]]}"#,
        )
        .unwrap();
        let built = t.build().unwrap();
        assert_eq!(built.qms.algebra().block_dims(), &[2]);
    }

    #[test]
    fn group_action_config() {
        let cfg = parse_config(
            r#"{"kind":"group_action","label":"G","points":2,
                "elements":[{"label":"flip","length":3.14159,"permutation":[1,0]}],
                "table":[[null]]}"#,
        )
        .unwrap();
        let built = cfg.build().unwrap();
        assert!(built.qms.kernel_certificate().passed);
    }
}
