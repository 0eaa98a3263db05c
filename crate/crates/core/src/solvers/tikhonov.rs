use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::regularizer::{Profile, RegularizerKind, RegularizerSpec};
use crate::spaces::{lp_norm, PrimalVector};

use super::{solve, InterpolationProblem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSpec {
    /// `Σ (Lᵢ(f) − yᵢ)²`.
    #[default]
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TikhonovConfig {
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub error: ErrorSpec,
}

impl TikhonovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Precondition("λ grid must be nonempty and positive".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Precondition("λ grid must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepStatus {
    Converged,
    SolverDiverged { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub lambda: f64,
    pub point: PrimalVector,
    /// `ℰ(f) + λ Ω(f)`.
    pub objective: f64,
    pub error_value: f64,
    /// Distance to the regularized-interpolation solution.
    pub distance: f64,
    pub iterations: usize,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TikhonovPath {
    pub reference: PrimalVector,
    pub steps: Vec<PathStep>,
    /// Distances nonincreasing along the grid within `1e-8`.
    pub monotone: bool,
}

type Derivs = Box<dyn Fn(f64) -> (f64, f64, f64)>;

/// `r ↦ (h(r), h'(r), h''(r))`.
fn radial_derivatives(reg: &RegularizerSpec) -> Result<Derivs> {
    if reg.mollifier.is_some() {
        let reg = reg.clone();
        return Ok(Box::new(move |r| {
            let h = |x: f64| reg.radial_value(x).expect("radial");
            let d = 1e-5 * r.max(1.0);
            let (a, b, c) = (h((r - d).max(0.0)), h(r), h(r + d));
            (b, (c - a) / (r + d - (r - d).max(0.0)), (c - 2.0 * b + a) / (d * d))
        }));
    }
    match &reg.kind {
        RegularizerKind::Norm => Ok(Box::new(|r| (r, 1.0, 0.0))),
        RegularizerKind::RadialMonotone(h) | RegularizerKind::RadialGeneral(h) => match h {
            Profile::Expr(e) => {
                let d1 = e.derivative();
                let d2 = d1.derivative();
                let e = e.clone();
                Ok(Box::new(move |r| (e.eval_radius(r), d1.eval_radius(r), d2.eval_radius(r))))
            }
            Profile::Table(t) => {
                let t = t.clone();
                Ok(Box::new(move |r| (t.eval(r), t.slope(r), 0.0)))
            }
        },
        RegularizerKind::Custom(_) => Err(Error::NonRadialRegularizer),
    }
}

/// Solves `min ℰ(f) + λ h(‖f‖_p)` along a decreasing λ grid by damped Newton
/// with warm starts, and measures the distance of each `f_λ` to the
/// regularized-interpolation solution.
pub fn tikhonov_path(problem: &InterpolationProblem, config: &TikhonovConfig, opts: &SolverOptions) -> Result<TikhonovPath> {
    problem.validate()?;
    config.validate()?;
    let n = problem
        .space
        .dim()
        .ok_or_else(|| Error::Unsupported("the λ-path needs a finite-dimensional space".into()))?;
    let p = problem.space.p();
    if p == 1.0 {
        return Err(Error::Unsupported("the λ-path Newton solver needs p > 1".into()));
    }
    let h = radial_derivatives(&problem.regularizer)?;
    let reference = solve(problem, opts)?.point;
    let ref_dense = reference.to_dense(n);
    let a = problem.rows(n);
    let y = &problem.targets;

    let mut x = ref_dense.clone();
    let mut steps = Vec::with_capacity(config.lambdas.len());
    for &lambda in &config.lambdas {
        let (xn, iterations, status) = newton(&a, y, n, p, lambda, &h, &x);
        if status == StepStatus::Converged {
            x = xn.clone();
        }
        let err: f64 = a.iter().zip(y).map(|(r, yi)| (linalg::dot(r, &xn) - yi).powi(2)).sum();
        let diff: Vec<f64> = xn.iter().zip(&ref_dense).map(|(u, v)| u - v).collect();
        steps.push(PathStep {
            lambda,
            objective: err + lambda * h(lp_norm(&xn, p)).0,
            error_value: err,
            distance: lp_norm(&diff, p),
            point: PrimalVector::from_dense(&xn),
            iterations,
            status,
        });
    }
    let monotone = steps.windows(2).all(|w| w[1].distance <= w[0].distance + 1e-8);
    Ok(TikhonovPath {
        reference,
        steps,
        monotone,
    })
}

fn newton(a: &Matrix, y: &[f64], n: usize, p: f64, lambda: f64, h: &Derivs, start: &[f64]) -> (Vec<f64>, usize, StepStatus) {
    let phi = |x: &[f64]| -> f64 {
        let err: f64 = a.iter().zip(y).map(|(r, yi)| (linalg::dot(r, x) - yi).powi(2)).sum();
        err + lambda * h(lp_norm(x, p)).0
    };
    let mut x = start.to_vec();
    let mut val = phi(&x);
    let ata: Matrix = (0..n)
        .map(|i| (0..n).map(|j| 2.0 * a.iter().map(|r| r[i] * r[j]).sum::<f64>()).collect())
        .collect();
    let scale = 1.0 + linalg::max_abs(y) + lambda;
    for it in 0..200 {
        let res: Vec<f64> = a.iter().zip(y).map(|(r, yi)| linalg::dot(r, &x) - yi).collect();
        let mut grad = linalg::transpose_mul(a, &res, n);
        grad.iter_mut().for_each(|g| *g *= 2.0);
        let mut hess = ata.clone();
        let r = lp_norm(&x, p);
        let (_, h1, h2) = h(r);
        if r > 0.0 {
            let u: Vec<f64> = x.iter().map(|v| v.signum() * (v.abs() / r).powf(p - 1.0)).collect();
            let cap = 1e12;
            let dg: Vec<f64> = x
                .iter()
                .map(|v| ((v.abs() / r).powf(p - 2.0)).min(cap))
                .collect();
            for i in 0..n {
                grad[i] += lambda * h1 * u[i];
                for j in 0..n {
                    let d2r = (p - 1.0) / r * (if i == j { dg[i] } else { 0.0 } - u[i] * u[j]);
                    hess[i][j] += lambda * (h2 * u[i] * u[j] + h1 * d2r);
                }
            }
        } else {
            for (i, row) in hess.iter_mut().enumerate() {
                row[i] += lambda * h2;
            }
        }
        if linalg::max_abs(&grad) <= 1e-12 * scale {
            return (x, it, StepStatus::Converged);
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut mu = 0.0;
        let trace: f64 = (0..n).map(|i| hess[i][i].abs()).sum::<f64>().max(1e-12);
        let dir = loop {
            let mut hm = hess.clone();
            for (i, row) in hm.iter_mut().enumerate() {
                row[i] += mu;
            }
            match linalg::solve_square(&hm, &neg) {
                Some(d) if linalg::dot(&d, &grad) < 0.0 => break d,
                _ if mu > 1e8 * trace => break neg.clone(),
                _ => mu = if mu == 0.0 { 1e-10 * trace } else { mu * 10.0 },
            }
        };
        let slope = linalg::dot(&dir, &grad);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let tv = phi(&trial);
            if tv <= val + 1e-4 * t * slope {
                let step = linalg::max_abs(&dir) * t;
                x = trial;
                val = tv;
                moved = true;
                if step <= 1e-15 * (1.0 + linalg::max_abs(&x)) {
                    return (x, it + 1, StepStatus::Converged);
                }
                break;
            }
            t *= 0.5;
        }
        if !moved {
            let g = linalg::max_abs(&grad);
            return if g <= 1e-8 * scale {
                (x, it, StepStatus::Converged)
            } else {
                (
                    x,
                    it,
                    StepStatus::SolverDiverged {
                        reason: format!("line search stalled with gradient {g:.3e}"),
                    },
                )
            };
        }
    }
    (
        x,
        200,
        StepStatus::SolverDiverged {
            reason: "iteration limit".into(),
        },
    )
}
