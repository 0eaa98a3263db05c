use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::simplex::{LinearProgram, LpError, Relation, VarKind};
use crate::spaces::{lp_norm, norm, PrimalVector};

use super::{InterpolationProblem, SolveMode, SolveResult, SolverOptions};

/// Minimal-norm interpolation in a finite `ℓᵖₙ`.
pub fn solve_min_norm(problem: &InterpolationProblem, opts: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    let n = problem
        .space
        .dim()
        .ok_or_else(|| Error::Unsupported("solve_min_norm needs a finite-dimensional space".into()))?;
    let rows = problem.rows(n);
    let sol = min_norm_dense(&rows, &problem.targets, n, problem.space.p(), opts)?;
    let (lower, iterations) = (sol.lower, sol.iterations);
    let point = PrimalVector::from_dense(&sol.x);
    let r = norm(&problem.space, &point)?;
    Ok(SolveResult {
        norm: r,
        objective: r,
        inf_estimate: lower,
        gap: r - lower,
        mode: SolveMode::Exact,
        iterations,
        truncation: None,
        residual: problem.residual(&point),
        warnings: Vec::new(),
        certificate: None,
        point,
    })
}

pub(crate) struct DenseSolution {
    pub x: Vec<f64>,
    /// Dual multipliers, one per input row (zero on dependent rows).
    pub c: Vec<f64>,
    /// Weak-duality lower bound `cᵀy / ‖Aᵀc‖_q`.
    pub lower: f64,
    pub iterations: usize,
}

/// Core routine on dense rows.
pub(crate) fn min_norm_dense(
    rows: &[Vec<f64>],
    y: &[f64],
    n: usize,
    p: f64,
    opts: &SolverOptions,
) -> Result<DenseSolution> {
    let red = linalg::reduce_rows(rows, y, n, 1e-12);
    if red.residual > opts.feas_tol {
        return Err(Error::Infeasible {
            residual: red.residual,
        });
    }
    let a: Matrix = red.independent.iter().map(|&i| rows[i][..n].to_vec()).collect();
    let b: Vec<f64> = red.independent.iter().map(|&i| y[i]).collect();
    let scale = linalg::max_abs(&b);
    if scale == 0.0 {
        return Ok(DenseSolution {
            x: vec![0.0; n],
            c: vec![0.0; rows.len()],
            lower: 0.0,
            iterations: 0,
        });
    }
    let bs: Vec<f64> = b.iter().map(|v| v / scale).collect();
    let (x, c, iters) = if p == 1.0 {
        l1_lp(&a, &bs, n)?
    } else if p == 2.0 {
        let (x, c) = gram(&a, &bs, n)?;
        (x, c, 1)
    } else {
        dual_newton(&a, &bs, n, p, opts)?
    };
    let x: Vec<f64> = x.iter().map(|v| v * scale).collect();
    // weak duality: ‖x‖ ≥ cᵀb / ‖Aᵀc‖_q for every feasible x
    let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let atc = linalg::transpose_mul(&a, &c, n);
    let dn = lp_norm(&atc, q);
    let lower = if dn > 0.0 { (linalg::dot(&c, &b) / dn).max(0.0) } else { 0.0 };
    let mut full = vec![0.0; rows.len()];
    for (k, &i) in red.independent.iter().enumerate() {
        full[i] = c[k];
    }
    Ok(DenseSolution {
        x,
        c: full,
        lower,
        iterations: iters,
    })
}

fn gram(a: &Matrix, b: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let g: Matrix = a.iter().map(|ri| a.iter().map(|rj| linalg::dot(&ri[..n], &rj[..n])).collect()).collect();
    let c = linalg::solve_square(&g, b).ok_or_else(|| Error::NotConverged("singular Gram matrix".into()))?;
    Ok((linalg::transpose_mul(a, &c, n), c))
}

fn l1_lp(a: &Matrix, b: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut lp = LinearProgram::new();
    let u: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::NonNegative, 1.0)).collect();
    let v: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::NonNegative, 1.0)).collect();
    for (row, &bi) in a.iter().zip(b) {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if row[j] != 0.0 {
                coeffs.push((u[j], row[j]));
                coeffs.push((v[j], -row[j]));
            }
        }
        lp.add_constraint(coeffs, Relation::Eq, bi);
    }
    let sol = lp.solve().map_err(|e| match e {
        LpError::Infeasible { phase_one_objective } => Error::Infeasible {
            residual: phase_one_objective,
        },
        other => Error::NotConverged(format!("simplex: {other:?}")),
    })?;
    let x = (0..n).map(|j| sol.x[u[j]] - sol.x[v[j]]).collect();
    Ok((x, sol.duals, sol.iterations))
}

fn grad_max(a: &Matrix, b: &[f64], n: usize, q: f64, c: &[f64]) -> f64 {
    let s = linalg::transpose_mul(a, c, n);
    let x: Vec<f64> = s.iter().map(|&v| phi(v, q - 1.0)).collect();
    a.iter()
        .zip(b)
        .map(|(r, bi)| (linalg::dot(&r[..n], &x) - bi).abs())
        .fold(0.0, f64::max)
}

/// Minimizer of the convex `t ↦ ψ(c + t d)`, `t ≥ 0`, by bisection on the
/// sign of its derivative `Σ (Aᵀd)ⱼ φ(sⱼ + t(Aᵀd)ⱼ) − dᵀb`.
fn line_min(a: &Matrix, b: &[f64], n: usize, q: f64, c: &[f64], d: &[f64]) -> f64 {
    let s = linalg::transpose_mul(a, c, n);
    let ad = linalg::transpose_mul(a, d, n);
    let db = linalg::dot(d, b);
    let slope = |t: f64| s.iter().zip(&ad).map(|(&sj, &aj)| aj * phi(sj + t * aj, q - 1.0)).sum::<f64>() - db;
    let mut hi = 1.0;
    while slope(hi) < 0.0 && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn phi(s: f64, e: f64) -> f64 {
    s.signum() * s.abs().powf(e)
}

/// Minimizes `ψ(c) = ‖Aᵀc‖_q^q / q − cᵀb`; the primal point is
/// `x = φ(Aᵀc)` with `φ(s) = sign(s)|s|^{q−1}`.
fn dual_newton(a: &Matrix, b: &[f64], n: usize, p: f64, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let q = p / (p - 1.0);
    let m = a.len();
    let psi = |c: &[f64]| {
        let s = linalg::transpose_mul(a, c, n);
        s.iter().map(|v| v.abs().powf(q)).sum::<f64>() / q - linalg::dot(c, b)
    };
    // start from the Gram solution's multipliers, rescaled onto the right scale
    let (_, c0) = gram(a, b, n)?;
    let mut c = c0;
    let mut val = psi(&c);
    let tol = opts.tol.min(1e-10);
    for it in 0..500 {
        let s = linalg::transpose_mul(a, &c, n);
        let x: Vec<f64> = s.iter().map(|&v| phi(v, q - 1.0)).collect();
        let grad: Vec<f64> = a.iter().zip(b).map(|(r, bi)| linalg::dot(&r[..n], &x) - bi).collect();
        if linalg::max_abs(&grad) <= tol * 1e-2 {
            return Ok((x, c, it));
        }
        let smax = linalg::max_abs(&s).max(1e-300);
        let w: Vec<f64> = s
            .iter()
            .map(|&v| {
                let v = v.abs().max(1e-12 * smax);
                (q - 1.0) * v.powf(q - 2.0)
            })
            .collect();
        let mut h: Matrix = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in 0..m {
                h[i][k] = (0..n).map(|j| a[i][j] * w[j] * a[k][j]).sum();
            }
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = match linalg::solve_square(&h, &neg) {
            Some(d) if linalg::dot(&d, &grad) < 0.0 => d,
            _ => neg.clone(),
        };
        let gmax = linalg::max_abs(&grad);
        let full: Vec<f64> = c.iter().zip(&dir).map(|(ci, di)| ci + di).collect();
        if grad_max(a, b, n, q, &full) <= 0.5 * gmax {
            val = psi(&full);
            c = full;
            continue;
        }
        // Newton overshoots where |s|^q is not C² (q < 2): minimize along the line instead
        let t = line_min(a, b, n, q, &c, &dir);
        let trial: Vec<f64> = c.iter().zip(&dir).map(|(ci, di)| ci + t * di).collect();
        let tv = psi(&trial);
        if t > 0.0 && (tv <= val || grad_max(a, b, n, q, &trial) < gmax) {
            c = trial;
            val = tv;
        } else {
            let res = grad_max(a, b, n, q, &c);
            if res <= tol {
                let s = linalg::transpose_mul(a, &c, n);
                return Ok((s.iter().map(|&v| phi(v, q - 1.0)).collect(), c, it));
            }
            return Err(Error::NotConverged(format!("dual Newton stalled with residual {res:.3e}")));
        }
    }
    let s = linalg::transpose_mul(a, &c, n);
    let x: Vec<f64> = s.iter().map(|&v| phi(v, q - 1.0)).collect();
    let res = grad_max(a, b, n, q, &c);
    if res <= tol {
        Ok((x, c, 500))
    } else {
        Err(Error::NotConverged(format!("dual Newton residual {res:.3e} after 500 steps")))
    }
}
