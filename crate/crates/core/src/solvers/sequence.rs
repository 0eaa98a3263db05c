use crate::certificates::{certificate_distance, combination_sup, CertMode, Certificate};
use crate::error::{Error, Result};
use crate::regularizer::RegularizerKind;
use crate::spaces::{dual_norm, norm, DualFunctional, PrimalVector, SpaceSpec};

use super::min_norm::min_norm_dense;
use super::{InterpolationProblem, SolveMode, SolveResult, SolverOptions};

/// ε-approximate solve in sequence `ℓ¹` by truncation `ℓ¹_N` with doubling
/// `N`. Stops once both the optimality gap and the certificate distance are
/// within `ε`.
pub fn approx_solve_l1(problem: &InterpolationProblem, epsilon: f64, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    if problem.space != SpaceSpec::SequenceL1 {
        return Err(Error::Unsupported("approx_solve_l1 works in sequence ℓ¹".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let reg = &problem.regularizer;
    match reg.kind {
        RegularizerKind::Norm | RegularizerKind::RadialMonotone(_) => {}
        _ => {
            return Err(Error::Unsupported(
                "sequence solves need Ω = h(‖·‖) with h nondecreasing".into(),
            ))
        }
    }
    let h = |r: f64| reg.radial_value(r).expect("radial");
    let space = SpaceSpec::SequenceL1;
    let ls = &problem.functionals;
    let y = &problem.targets;
    let m = ls.len();

    if y.iter().all(|v| *v == 0.0) {
        let point = PrimalVector::zero();
        return Ok(SolveResult {
            norm: 0.0,
            objective: h(0.0),
            inf_estimate: h(0.0),
            gap: 0.0,
            mode: SolveMode::Exact,
            iterations: 0,
            truncation: Some(0),
            residual: 0.0,
            warnings: Vec::new(),
            certificate: Some(Certificate {
                coefficients: vec![0.0; m],
                witness: DualFunctional::from_rule(crate::spaces::TailRule::Zero)?,
                distance: 0.0,
                mode: CertMode::Exact,
            }),
            point,
        });
    }

    // m = 1: inf ‖f‖ = |y| / ‖L‖∞ exactly
    let mut inf_norm = if m == 1 {
        let dn = dual_norm(&ls[0]).value;
        if dn == 0.0 {
            return Err(Error::Infeasible { residual: y[0].abs() });
        }
        y[0].abs() / dn
    } else {
        0.0
    };

    let refs: Vec<&DualFunctional> = ls.iter().collect();
    let mut best: Option<(f64, f64)> = None;
    let mut last_infeasible = None;
    let mut n = opts.truncation_start.max(1).min(opts.truncation_max.max(1));
    loop {
        let attempt = if m == 1 {
            let l = &ls[0];
            let (mut k, mut v) = (0, 0.0_f64);
            for j in 1..=n {
                if l.value(j).abs() > v {
                    v = l.value(j).abs();
                    k = j;
                }
            }
            if k == 0 {
                Err(Error::Infeasible { residual: y[0].abs() })
            } else {
                Ok((PrimalVector::unit(k, y[0] / l.value(k)), 1))
            }
        } else {
            min_norm_dense(&problem.rows(n), y, n, 1.0, opts).map(|sol| {
                let sup = combination_sup(&sol.c, &refs);
                let dual_val: f64 = sol.c.iter().zip(y).map(|(c, y)| c * y).sum();
                if sup > 0.0 {
                    inf_norm = inf_norm.max(dual_val / sup);
                }
                (PrimalVector::from_dense(&sol.x), sol.iterations)
            })
        };
        match attempt {
            Err(Error::Infeasible { residual }) => last_infeasible = Some(residual),
            Err(e) => return Err(e),
            Ok((point, iterations)) => {
                let r = norm(&space, &point)?;
                let objective = h(r);
                let inf_estimate = h(inf_norm);
                let gap = objective - inf_estimate;
                let cert = certificate_distance(&point, ls, &space)?;
                log::debug!("N = {n}: objective {objective}, gap {gap:.3e}, distance {:.3e}", cert.distance);
                if best.is_none_or(|(g, _)| gap < g) {
                    best = Some((gap, cert.distance));
                }
                if gap <= epsilon && cert.distance < epsilon {
                    let exact = gap <= opts.tol && cert.distance <= opts.tol;
                    let mode = if exact {
                        SolveMode::Exact
                    } else {
                        SolveMode::Approx { epsilon }
                    };
                    let cmode = if exact { CertMode::Exact } else { CertMode::Approx { epsilon } };
                    return Ok(SolveResult {
                        norm: r,
                        objective,
                        inf_estimate,
                        gap,
                        mode,
                        iterations,
                        truncation: Some(n),
                        residual: problem.residual(&point),
                        warnings: Vec::new(),
                        certificate: Some(cert.into_certificate(cmode)),
                        point,
                    });
                }
            }
        }
        if n >= opts.truncation_max {
            break;
        }
        n = (2 * n).min(opts.truncation_max);
    }
    match best {
        Some((best_gap, best_distance)) => Err(Error::BudgetExceeded {
            n_max: opts.truncation_max,
            best_gap,
            best_distance,
        }),
        None => Err(Error::Infeasible {
            residual: last_infeasible.unwrap_or(f64::NAN),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::counterexample_functional;
    use crate::regularizer::RegularizerSpec;
    use crate::spaces::{Monotone, TailRule};

    fn cx() -> InterpolationProblem {
        InterpolationProblem::new(
            SpaceSpec::SequenceL1,
            vec![counterexample_functional()],
            vec![1.0],
            RegularizerSpec::norm(),
        )
        .unwrap()
    }

    #[test]
    fn counterexample_schedule() {
        let opts = SolverOptions::default();
        let r = approx_solve_l1(&cx(), 0.25, &opts).unwrap();
        assert_eq!(r.truncation, Some(8));
        assert!((r.objective - 9.0 / 8.0).abs() < 1e-15);
        assert_eq!(r.inf_estimate, 1.0);
        let r = approx_solve_l1(&cx(), 0.02, &opts).unwrap();
        assert_eq!(r.truncation, Some(64));
        assert!(r.gap <= 0.02);
        assert!(r.certificate.unwrap().distance < 0.02);
    }

    #[test]
    fn attaining_functional_is_exact() {
        // Lₙ = 1 for n ≤ 11 would be constant; use a peak at index 11 then 1/n decay
        let mut prefix = vec![0.5; 10];
        prefix.push(2.0);
        let l = DualFunctional::new(prefix, TailRule::rational(0.0, 1.0, 1.0, 0.0, 12, Monotone::Decreasing).unwrap()).unwrap();
        let pr = InterpolationProblem::new(SpaceSpec::SequenceL1, vec![l], vec![3.0], RegularizerSpec::norm()).unwrap();
        let r = approx_solve_l1(&pr, 1e-3, &SolverOptions::default()).unwrap();
        assert_eq!(r.truncation, Some(16));
        assert_eq!(r.mode, SolveMode::Exact);
        assert_eq!(r.point, PrimalVector::unit(11, 1.5));
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn budget_exceeded() {
        let opts = SolverOptions {
            truncation_max: 32,
            ..SolverOptions::default()
        };
        assert!(matches!(approx_solve_l1(&cx(), 1e-3, &opts), Err(Error::BudgetExceeded { n_max: 32, .. })));
    }

    #[test]
    fn two_functionals() {
        let l2 = DualFunctional::finite(vec![1.0]);
        let pr = InterpolationProblem::new(
            SpaceSpec::SequenceL1,
            vec![counterexample_functional(), l2],
            vec![1.0, 0.0],
            RegularizerSpec::norm(),
        )
        .unwrap();
        let r = approx_solve_l1(&pr, 0.1, &SolverOptions::default()).unwrap();
        assert!(r.residual < 1e-9);
        assert!(r.gap <= 0.1 && r.gap >= -1e-12);
        assert!(r.inf_estimate <= 1.0 + 1e-12);
    }
}
