//! One function per subcommand. Each returns a report and an exit code.

use std::time::Instant;

use representer_core::admissibility::{admissibility_verdict, Budget};
use representer_core::certificates::{certify_exact, run_counterexample, CertMode, Certificate, CertifyOutcome, CounterexampleTable};
use representer_core::par::Execution;
use representer_core::proximinality::{hull_vertices, image_ball_closed, kernel_proximinal_single, reflexivity_note};
use representer_core::solvers::solve as core_solve;
use representer_core::spaces::PrimalVector;
use representer_core::Error;

use crate::problem::ProblemFile;
use crate::report::{Outcome, ReportFile, StageTiming};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NOT_REPRESENTABLE: i32 = 4;
pub const EXIT_NOT_ADMISSIBLE: i32 = 5;

/// Command-line values that replace the ones in the problem file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub tol: Option<f64>,
    pub feas_tol: Option<f64>,
    pub truncation_max: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, pf: &mut ProblemFile) {
        let o = &mut pf.options;
        if let Some(v) = self.epsilon {
            o.solver.epsilon = v;
        }
        if let Some(v) = self.tol {
            o.solver.tol = v;
        }
        if let Some(v) = self.feas_tol {
            o.solver.feas_tol = v;
        }
        if let Some(v) = self.truncation_max {
            o.solver.truncation_max = v;
        }
        if let Some(v) = self.seed {
            o.seed = v;
        }
    }
}

struct Clock(Vec<StageTiming>);

impl Clock {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.0.push(StageTiming {
            stage: name.into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }
}

fn failure(err: &Error) -> (Outcome, i32) {
    match err {
        Error::Infeasible { residual } => (
            Outcome::Infeasible {
                residual: *residual,
                message: err.to_string(),
            },
            EXIT_INFEASIBLE,
        ),
        Error::BudgetExceeded {
            n_max,
            best_gap,
            best_distance,
        } => (
            Outcome::BudgetExceeded {
                n_max: *n_max,
                best_gap: *best_gap,
                best_distance: *best_distance,
                message: err.to_string(),
            },
            EXIT_BUDGET,
        ),
        _ => (Outcome::Failed { message: err.to_string() }, EXIT_ERROR),
    }
}

pub fn solve(pf: &ProblemFile) -> (ReportFile, i32) {
    let mut clock = Clock(Vec::new());
    let problem = pf.problem();
    let opts = pf.options.solver;
    let solved = clock.stage("solve", || core_solve(&problem, &opts));
    let (result, code) = match solved {
        Err(e) => failure(&e),
        Ok(mut sol) => {
            if sol.certificate.is_none() {
                let cert = clock.stage("certify", || certify_exact(&sol.point, &problem.functionals, &problem.space, opts.tol));
                match cert {
                    Ok(CertifyOutcome::Exact(c)) => sol.certificate = Some(c),
                    Ok(CertifyOutcome::NotRepresentable {
                        distance,
                        coefficients,
                        witness,
                    }) => {
                        let epsilon = if distance < opts.epsilon { opts.epsilon } else { 2.0 * distance };
                        sol.warnings.push(format!("certificate distance {distance:.3e} exceeds tol; attached as approximate"));
                        sol.certificate = Some(Certificate {
                            coefficients,
                            witness,
                            distance,
                            mode: CertMode::Approx { epsilon },
                        });
                    }
                    Err(e) => sol.warnings.push(format!("no certificate: {e}")),
                }
            }
            (Outcome::Solve(sol), EXIT_OK)
        }
    };
    (ReportFile::new("solve", Some(pf.clone()), result, clock.0), code)
}

pub fn certify(pf: &ProblemFile, point: &PrimalVector) -> (ReportFile, i32) {
    let mut clock = Clock(Vec::new());
    let out = clock.stage("certify", || certify_exact(point, &pf.functionals, &pf.space, pf.options.solver.tol));
    let (result, code) = match out {
        Err(e) => failure(&e),
        Ok(outcome) => {
            let code = if outcome.is_exact() { EXIT_OK } else { EXIT_NOT_REPRESENTABLE };
            (
                Outcome::Certify {
                    point: point.clone(),
                    outcome,
                },
                code,
            )
        }
    };
    (ReportFile::new("certify", Some(pf.clone()), result, clock.0), code)
}

pub fn proximinal(pf: &ProblemFile, exec: Execution) -> (ReportFile, i32) {
    let mut clock = Clock(Vec::new());
    let o = &pf.options;
    let out = clock.stage("proximinal", || {
        if pf.functionals.len() == 1 {
            kernel_proximinal_single(&pf.space, &pf.functionals[0])
        } else {
            image_ball_closed(&pf.space, &pf.functionals, &o.hull_truncations, o.seed, exec)
        }
    });
    let (result, code) = match out {
        Err(e) => failure(&e),
        Ok(report) => (
            Outcome::Proximinal {
                report,
                reflexivity: reflexivity_note(&pf.space).into(),
            },
            EXIT_OK,
        ),
    };
    (ReportFile::new("proximinal", Some(pf.clone()), result, clock.0), code)
}

pub fn admissible(pf: &ProblemFile, exec: Execution) -> (ReportFile, i32) {
    let mut clock = Clock(Vec::new());
    let c = pf.options.checks;
    let budget = Budget {
        n_samples: c.n_samples,
        n_faces: c.n_faces,
        seed: pf.options.seed,
        tol: c.tol,
    };
    let verdict = clock.stage("admissible", || admissibility_verdict(&pf.regularizer, &pf.space, &budget, exec));
    let code = if verdict.consistent() { EXIT_OK } else { EXIT_NOT_ADMISSIBLE };
    (
        ReportFile::new("admissible", Some(pf.clone()), Outcome::Admissible(verdict), clock.0),
        code,
    )
}

pub fn counterexample(ns: &[usize], exec: Execution) -> (ReportFile, i32) {
    let mut clock = Clock(Vec::new());
    let (result, code) = match clock.stage("table", || run_counterexample(ns, exec)) {
        Ok(t) => (Outcome::Counterexample(t), EXIT_OK),
        Err(e) => failure(&e),
    };
    (ReportFile::new("counterexample", None, result, clock.0), code)
}

pub fn counterexample_csv(table: &CounterexampleTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &table.rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

/// Vertices of the truncated image hull at the largest configured truncation.
pub fn hull_csv(pf: &ProblemFile) -> Result<String, csv::Error> {
    let n = pf
        .space
        .dim()
        .or_else(|| pf.options.hull_truncations.iter().copied().max())
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["j".to_string(), "sign".to_string()];
    header.extend((1..=pf.functionals.len()).map(|i| format!("l{i}")));
    w.write_record(&header)?;
    for (j, sign, v) in hull_vertices(&pf.functionals, n) {
        let mut rec = vec![j.to_string(), sign.to_string()];
        rec.extend(v.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::parse_problem;
    use std::path::Path;

    fn pf(text: &str) -> ProblemFile {
        parse_problem(Path::new("t.json"), text).unwrap()
    }

    const L1: &str = r#"{"version": 1, "space": {"kind": "finite_lp", "p": 1.0, "dim": 3},
        "functionals": [{"prefix": [1.0, 2.0, 0.0], "tail": {"kind": "zero"}}], "targets": [2.0]}"#;

    #[test]
    fn overrides_apply() {
        let mut p = pf(L1);
        Overrides {
            epsilon: Some(0.5),
            seed: Some(9),
            ..Overrides::default()
        }
        .apply(&mut p);
        assert_eq!(p.options.solver.epsilon, 0.5);
        assert_eq!(p.options.seed, 9);
        assert_eq!(p.options.solver.tol, 1e-8);
    }

    #[test]
    fn solve_attaches_exact_certificate() {
        let (r, code) = solve(&pf(L1));
        assert_eq!(code, EXIT_OK);
        let Outcome::Solve(sol) = r.result else { panic!() };
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert_eq!(sol.certificate.unwrap().mode, CertMode::Exact);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (r, _) = counterexample(&[10, 100], Execution::Sequential);
        let Outcome::Counterexample(t) = r.result else { panic!() };
        let text = counterexample_csv(&t).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,norm,distance,bound,coefficient,exact");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("10,1.1,"));
    }
}
