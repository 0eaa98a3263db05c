use crate::error::{Error, Result};
use crate::geometry::kernel_basis;
use crate::spaces::{norm, PrimalVector};

use super::min_norm::solve_min_norm;
use super::{InterpolationProblem, SolveMode, SolveResult, SolverOptions};

/// Radial regularized interpolation `min h(‖f‖)` in a finite space: the
/// feasible norms form `[r_min, ∞)`, so the search is one-dimensional.
pub fn solve_regularized(problem: &InterpolationProblem, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    let reg = &problem.regularizer;
    if !reg.is_radial() {
        return Err(Error::NonRadialRegularizer);
    }
    let h = |r: f64| reg.radial_value(r).expect("radial");
    let base = solve_min_norm(problem, opts)?;
    let r_min = base.objective;
    let space = problem.space;
    let z = kernel_basis(&space, &problem.functionals, None)?;
    let mut warnings = Vec::new();

    let (r_star, value) = if z.basis.is_empty() {
        (r_min, h(r_min))
    } else {
        let hi = r_min.max(1.0) * opts.r_cap;
        let k = opts.grid_points.max(2);
        let radius = |i: usize| r_min + (hi - r_min) * i as f64 / (k - 1) as f64;
        let vals: Vec<f64> = (0..k).map(|i| h(radius(i))).collect();
        let mut best = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v < vals[best] {
                best = i;
            }
        }
        let (mut r_best, mut v_best) = (radius(best), vals[best]);
        if vals.windows(2).all(|w| w[1] <= w[0]) && vals[k - 1] < vals[0] {
            let msg = format!("UnboundedBelowSuspected: h is nonincreasing on [{r_min}, {hi}]");
            log::warn!("{msg}");
            warnings.push(msg);
            r_best = hi;
            v_best = vals[k - 1];
        } else {
            let lo = radius(best.saturating_sub(1));
            let up = radius((best + 1).min(k - 1));
            let (rg, vg) = golden(&h, lo, up);
            if vg < v_best {
                r_best = rg;
                v_best = vg;
            }
        }
        (r_best, v_best)
    };

    let point = if r_star <= r_min {
        base.point.clone()
    } else {
        let mut d = z.basis[0].clone();
        if d.entries()[0].1 < 0.0 {
            d = d.scale(-1.0);
        }
        point_with_norm(&base.point, &d, r_star, |f| norm(&space, f).expect("valid"))
    };
    let r = norm(&space, &point)?;
    Ok(SolveResult {
        norm: r,
        objective: value,
        inf_estimate: value,
        gap: 0.0,
        mode: SolveMode::Exact,
        iterations: opts.grid_points,
        truncation: None,
        residual: problem.residual(&point),
        warnings,
        certificate: None,
        point,
    })
}

/// `f + t d` with `‖f + t d‖ = target`, `t ≥ 0`, by bracketing and bisection
/// (the norm along the ray is convex and unbounded).
fn point_with_norm(f: &PrimalVector, d: &PrimalVector, target: f64, nrm: impl Fn(&PrimalVector) -> f64) -> PrimalVector {
    let at = |t: f64| nrm(&f.axpy(t, d));
    let mut hi = 1.0;
    while at(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if (at(lo) - target).abs() <= (at(hi) - target).abs() { lo } else { hi };
    f.axpy(t, d)
}

fn golden(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..100 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = h(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::{Profile, RegularizerSpec};
    use crate::spaces::{DualFunctional, SpaceSpec};

    fn problem(h: &str) -> InterpolationProblem {
        InterpolationProblem::new(
            SpaceSpec::finite(2.0, 2).unwrap(),
            vec![DualFunctional::finite(vec![1.0, 1.0])],
            vec![2.0],
            RegularizerSpec::radial(Profile::expr(h).unwrap()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn increasing_profile_keeps_min_norm_point() {
        let r = solve_regularized(&problem("r^2"), &SolverOptions::default()).unwrap();
        assert_eq!(r.point.to_dense(2), vec![1.0, 1.0]);
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interior_radius() {
        let r = solve_regularized(&problem("(r-5)^2"), &SolverOptions::default()).unwrap();
        assert!((r.norm - 5.0).abs() < 1e-9, "{}", r.norm);
        assert!(r.objective < 1e-12);
        let t = (23.0f64 / 2.0).sqrt();
        let x = r.point.to_dense(2);
        assert!((x[0] - (1.0 + t)).abs() < 1e-8 && (x[1] - (1.0 - t)).abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn decreasing_profile_warns() {
        let r = solve_regularized(&problem("-r"), &SolverOptions::default()).unwrap();
        assert!(r.warnings[0].starts_with("UnboundedBelowSuspected"));
        assert!((r.norm - 2f64.sqrt() * 1e3).abs() < 1e-6);
    }
}
