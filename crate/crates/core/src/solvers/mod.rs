//! Minimal-norm and regularized interpolation solvers, the Ekeland descent,
//! the extension step and the Tikhonov λ-path.

use serde::{Deserialize, Serialize};

use crate::certificates::Certificate;
use crate::error::{Error, Result};
use crate::regularizer::{RegularizerKind, RegularizerSpec};
use crate::spaces::{pair, DualFunctional, PrimalVector, SpaceSpec};

mod ekeland;
mod extension;
mod min_norm;
mod regularized;
mod sequence;
mod tikhonov;

pub use ekeland::{ekeland_descend, EkelandReport};
pub use extension::{hb_extend, Extension};
pub use min_norm::solve_min_norm;
pub use regularized::solve_regularized;
pub use sequence::approx_solve_l1;
pub use tikhonov::{tikhonov_path, ErrorSpec, PathStep, StepStatus, TikhonovConfig, TikhonovPath};

/// Constraints `Lᵢ(f) = yᵢ` plus a regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpolationProblem {
    pub space: SpaceSpec,
    pub functionals: Vec<DualFunctional>,
    pub targets: Vec<f64>,
    #[serde(default = "RegularizerSpec::norm")]
    pub regularizer: RegularizerSpec,
}

impl InterpolationProblem {
    pub fn new(
        space: SpaceSpec,
        functionals: Vec<DualFunctional>,
        targets: Vec<f64>,
        regularizer: RegularizerSpec,
    ) -> Result<Self> {
        let p = InterpolationProblem {
            space,
            functionals,
            targets,
            regularizer,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.functionals.is_empty() {
            return Err(Error::DimensionMismatch("at least one functional is required".into()));
        }
        if self.functionals.len() != self.targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} functionals but {} targets",
                self.functionals.len(),
                self.targets.len()
            )));
        }
        if self.targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::DimensionMismatch("targets must be finite".into()));
        }
        for l in &self.functionals {
            self.space.check_functional(l)?;
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.functionals.len()
    }

    /// `max |Lᵢ(f) − yᵢ|`.
    pub fn residual(&self, f: &PrimalVector) -> f64 {
        self.functionals
            .iter()
            .zip(&self.targets)
            .map(|(l, y)| (pair(l, f) - y).abs())
            .fold(0.0, f64::max)
    }

    /// Rows of the constraint matrix restricted to the first `n` coordinates.
    pub(crate) fn rows(&self, n: usize) -> Vec<Vec<f64>> {
        self.functionals.iter().map(|l| l.to_dense(n)).collect()
    }
}

/// Tolerances and budgets shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Target accuracy for approximate (sequence-space) solves.
    pub epsilon: f64,
    /// Optimality tolerance; also the exactness threshold for certificates.
    pub tol: f64,
    /// Allowed constraint violation.
    pub feas_tol: f64,
    pub truncation_start: usize,
    pub truncation_max: usize,
    /// Radius search window `[r_min, max(r_min, 1)·r_cap]`.
    pub r_cap: f64,
    pub grid_points: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: 0.25,
            tol: 1e-8,
            feas_tol: 1e-9,
            truncation_start: 8,
            truncation_max: 1 << 20,
            r_cap: 1e3,
            grid_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SolveMode {
    Exact,
    Approx { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub point: PrimalVector,
    pub norm: f64,
    pub objective: f64,
    /// A lower bound on the infimum (exact value in finite dimensions).
    pub inf_estimate: f64,
    pub gap: f64,
    pub mode: SolveMode,
    pub iterations: usize,
    /// Truncation `N` at which a sequence-space solve stopped.
    pub truncation: Option<usize>,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

/// Dispatches on the space and regularizer.
pub fn solve(problem: &InterpolationProblem, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    match (problem.space, &problem.regularizer.kind) {
        (SpaceSpec::SequenceL1, _) => approx_solve_l1(problem, opts.epsilon, opts),
        (_, RegularizerKind::Custom(_)) => Err(Error::NonRadialRegularizer),
        (_, RegularizerKind::Norm) if problem.regularizer.mollifier.is_none() => solve_min_norm(problem, opts),
        _ => solve_regularized(problem, opts),
    }
}
