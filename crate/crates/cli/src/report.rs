//! Report files written by every command.

use serde::{Deserialize, Serialize};

use representer_core::admissibility::Verdict;
use representer_core::certificates::{CertifyOutcome, CounterexampleTable};
use representer_core::proximinality::ProximinalityReport;
use representer_core::solvers::SolveResult;
use representer_core::spaces::PrimalVector;

use crate::problem::ProblemFile;

pub const TOOL: &str = "representer-lab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Outcome {
    Solve(SolveResult),
    Infeasible {
        residual: f64,
        message: String,
    },
    BudgetExceeded {
        n_max: usize,
        best_gap: f64,
        best_distance: f64,
        message: String,
    },
    Certify {
        point: PrimalVector,
        outcome: CertifyOutcome,
    },
    Proximinal {
        report: ProximinalityReport,
        reflexivity: String,
    },
    Admissible(Verdict),
    Counterexample(CounterexampleTable),
    Failed {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective problem after command-line overrides.
    pub problem: Option<ProblemFile>,
    pub result: Outcome,
    pub timings: Vec<StageTiming>,
}

impl ReportFile {
    pub fn new(command: &str, problem: Option<ProblemFile>, result: Outcome, timings: Vec<StageTiming>) -> Self {
        ReportFile {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            problem,
            result,
            timings,
        }
    }

    /// The report with timings cleared; equal inputs give equal values.
    pub fn without_timings(&self) -> Self {
        ReportFile {
            timings: Vec::new(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
