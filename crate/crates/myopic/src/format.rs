//! The JSON model file.
//!
//! ```json
//! {"name": "ex1", "X": 3, "Y": 3, "U": 2, "discount": 0.9,
//!  "transition": {"shared": [[...], ...]},
//!  "observation": [[[...], ...], ...],
//!  "reward": [[...], ...]}
//! ```
//!
//! `transition` is either `{"shared": P}` or `{"per_action": [P(0), ...]}`.
//! Matrices are arrays of rows.

use std::fs;
use std::path::Path;

use myopic_core::model::validate_model;
use myopic_core::{Matrix, PomdpModel, Transition};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    #[serde(rename = "X")]
    pub num_states: usize,
    #[serde(rename = "Y")]
    pub num_obs: usize,
    #[serde(rename = "U")]
    pub num_actions: usize,
    pub discount: f64,
    pub transition: TransitionFile,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionFile {
    Shared(Vec<Vec<f64>>),
    PerAction(Vec<Vec<Vec<f64>>>),
}

impl From<&PomdpModel> for ModelFile {
    fn from(m: &PomdpModel) -> Self {
        Self {
            name: m.name.clone(),
            num_states: m.num_states,
            num_obs: m.num_obs,
            num_actions: m.num_actions,
            discount: m.discount,
            transition: match &m.transition {
                Transition::Shared(p) => TransitionFile::Shared(p.to_rows()),
                Transition::PerAction(ps) => TransitionFile::PerAction(ps.iter().map(Matrix::to_rows).collect()),
            },
            observation: m.observation.iter().map(Matrix::to_rows).collect(),
            reward: m.reward.clone(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    if rows.is_empty() {
        return Err(CliError::Shape(format!("{what} has no rows")));
    }
    Matrix::from_rows(rows).map_err(|e| CliError::Shape(format!("{what}: {e}")))
}

impl ModelFile {
    /// Builds the model without checking stochasticity; ragged or empty
    /// matrices are rejected here, everything else by [`validate_model`].
    pub fn into_model(self) -> Result<PomdpModel> {
        let transition = match self.transition {
            TransitionFile::Shared(p) => Transition::Shared(matrix(&p, "transition")?),
            TransitionFile::PerAction(ps) => Transition::PerAction(
                ps.iter()
                    .enumerate()
                    .map(|(u, p)| matrix(p, &format!("transition[{u}]")))
                    .collect::<Result<_>>()?,
            ),
        };
        let observation = self
            .observation
            .iter()
            .enumerate()
            .map(|(u, b)| matrix(b, &format!("observation[{u}]")))
            .collect::<Result<_>>()?;
        Ok(PomdpModel {
            name: self.name,
            num_states: self.num_states,
            num_obs: self.num_obs,
            num_actions: self.num_actions,
            discount: self.discount,
            transition,
            observation,
            reward: self.reward,
        })
    }
}

pub fn parse_model(text: &str, path: &Path) -> Result<PomdpModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    file.into_model()
}

/// Reads a model file without validating it.
pub fn read_model(path: &Path) -> Result<PomdpModel> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text, path)
}

/// Reads a model file and rejects models that violate any invariant.
pub fn load_model(path: &Path) -> Result<PomdpModel> {
    let m = read_model(path)?;
    let violations = validate_model(&m);
    if violations.is_empty() {
        Ok(m)
    } else {
        Err(CliError::Invalid {
            name: m.name,
            violations,
        })
    }
}

/// Canonical text of a model file: pretty-printed JSON with a trailing newline.
pub fn model_to_json(m: &PomdpModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(m)).expect("model files always serialize");
    s.push('\n');
    s
}
