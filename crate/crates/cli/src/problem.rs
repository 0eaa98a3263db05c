//! Problem files: schema, loading and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use representer_core::regularizer::RegularizerSpec;
use representer_core::solvers::{InterpolationProblem, SolverOptions};
use representer_core::spaces::{DualFunctional, PrimalVector, SpaceSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

/// Budgets for the admissibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    pub n_samples: usize,
    pub n_faces: usize,
    /// Margin a violation must exceed to count as a witness.
    pub tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            n_samples: 200,
            n_faces: 16,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub solver: SolverOptions,
    pub seed: u64,
    pub checks: CheckOptions,
    /// Truncations used for hull evidence on sequence spaces.
    pub hull_truncations: Vec<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            solver: SolverOptions::default(),
            seed: 0,
            checks: CheckOptions::default(),
            hull_truncations: vec![8, 64, 512],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub space: SpaceSpec,
    pub functionals: Vec<DualFunctional>,
    pub targets: Vec<f64>,
    #[serde(default = "RegularizerSpec::norm")]
    pub regularizer: RegularizerSpec,
    #[serde(default)]
    pub options: Options,
}

impl ProblemFile {
    pub fn problem(&self) -> InterpolationProblem {
        InterpolationProblem {
            space: self.space,
            functionals: self.functionals.clone(),
            targets: self.targets.clone(),
            regularizer: self.regularizer.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != SCHEMA_VERSION {
            return Err(format!("unsupported version {} (expected {SCHEMA_VERSION})", self.version));
        }
        self.problem().validate().map_err(|e| e.to_string())?;
        let o = &self.options.solver;
        if !(o.epsilon > 0.0 && o.tol > 0.0 && o.feas_tol > 0.0) {
            return Err("epsilon, tol and feas_tol must be positive".into());
        }
        if o.truncation_start == 0 || o.truncation_max < o.truncation_start {
            return Err("need 0 < truncation_start ≤ truncation_max".into());
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|e| LoadError::Schema {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

/// Parses and validates a problem file. Nothing is computed before this succeeds.
pub fn parse_problem(path: &Path, text: &str) -> Result<ProblemFile, LoadError> {
    let pf: ProblemFile = parse(path, text)?;
    pf.validate().map_err(|msg| LoadError::Invalid {
        path: path.display().to_string(),
        msg,
    })?;
    Ok(pf)
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, LoadError> {
    parse_problem(path, &read(path)?)
}

/// A point given either densely (`[x1, x2, …]`) or sparsely (`{"entries": [[i, v], …]}`).
#[derive(Deserialize)]
#[serde(untagged)]
enum PointFile {
    Dense(Vec<f64>),
    Sparse(PrimalVector),
}

pub fn load_point(path: &Path) -> Result<PrimalVector, LoadError> {
    let text = read(path)?;
    Ok(match parse::<PointFile>(path, &text)? {
        PointFile::Dense(x) => PrimalVector::from_dense(&x),
        PointFile::Sparse(v) => v,
    })
}
