use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::KernelSubspace;
use crate::linalg;
use crate::rng::stream_rng;
use crate::spaces::{lp_norm, PrimalVector, SpaceSpec};

use super::min_norm::min_norm_dense;
use super::SolverOptions;

const ITERATIONS: usize = 500;
const SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkelandReport {
    pub f_t: PrimalVector,
    /// `F(f_T) = ‖f_T − f₀‖²/2`.
    pub value: f64,
    /// Best known `inf_Z F`, from the minimal-norm solver.
    pub inf_value: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// First checkpoint iterate (0, 1, 2, 4, …) that passed every check.
    pub first_pass_iteration: Option<usize>,
    pub ekeland_samples: usize,
    pub directional_samples: usize,
}

struct Objective {
    basis: Vec<Vec<f64>>,
    f0: Vec<f64>,
    p: f64,
    n: usize,
}

impl Objective {
    fn point(&self, t: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (tj, b) in t.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += tj * bi;
            }
        }
        x
    }

    fn diff(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.f0).map(|(a, b)| a - b).collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = lp_norm(&self.diff(x), self.p);
        0.5 * r * r
    }

    /// A member of `J(d)` (zero off the support when `p = 1`).
    fn dual_member(&self, d: &[f64]) -> Vec<f64> {
        let r = lp_norm(d, self.p);
        if r == 0.0 {
            return vec![0.0; d.len()];
        }
        d.iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else if self.p == 1.0 {
                    r * v.signum()
                } else {
                    r * v.signum() * (v.abs() / r).powf(self.p - 1.0)
                }
            })
            .collect()
    }

    /// One-sided directional derivative `F'(x; h)`.
    fn directional(&self, x: &[f64], h: &[f64]) -> f64 {
        let d = self.diff(x);
        let r = lp_norm(&d, self.p);
        if r == 0.0 {
            return 0.0;
        }
        if self.p == 1.0 {
            let s: f64 = d
                .iter()
                .zip(h)
                .map(|(&di, &hi)| if di == 0.0 { hi.abs() } else { di.signum() * hi })
                .sum();
            r * s
        } else {
            linalg::dot(&self.dual_member(&d), h)
        }
    }

    fn random_direction<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = (0..self.basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        self.point(&u)
    }

    /// Runs both sampled Ekeland checks at `x`; returns a failure description.
    fn check(&self, x: &[f64], inf: f64, eps: f64, seed: u64) -> Option<String> {
        let fx = self.value(x);
        let slack = 1e-12 * (1.0 + fx.abs());
        if fx > inf + eps + slack {
            return Some(format!("F(f_T) = {fx} exceeds inf + ε = {}", inf + eps));
        }
        if self.basis.is_empty() {
            return None;
        }
        let mut rng = stream_rng(seed, 0xe7e1);
        for _ in 0..SAMPLES {
            let h = self.random_direction(&mut rng);
            let s = 10f64.powf(rng.gen_range(-3.0..0.0));
            let g: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + s * b).collect();
            let dist = lp_norm(&g.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>(), self.p);
            if dist == 0.0 {
                continue;
            }
            let fg = self.value(&g);
            if !(fx - fg < eps * dist + slack) {
                return Some(format!(
                    "Ekeland inequality fails at g = {:?}: F(f_T) − F(g) = {} ≥ ε‖f_T − g‖ = {}",
                    PrimalVector::from_dense(&g).entries(),
                    fx - fg,
                    eps * dist
                ));
            }
        }
        for _ in 0..SAMPLES {
            let h = self.random_direction(&mut rng);
            let hn = lp_norm(&h, self.p);
            let dd = self.directional(x, &h);
            if dd < -eps * hn - slack {
                return Some(format!(
                    "directional derivative {dd} < −ε‖h‖ = {} along {:?}",
                    -eps * hn,
                    PrimalVector::from_dense(&h).entries()
                ));
            }
        }
        None
    }
}

/// Minimizes `F(f_T) = ‖f_T − f₀‖²/2` over `Z` by subgradient descent and
/// verifies the Ekeland conditions a posteriori on sampled points of `Z`.
pub fn ekeland_descend(space: &SpaceSpec, f0: &PrimalVector, z: &KernelSubspace, epsilon: f64, seed: u64) -> Result<EkelandReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let n = z.dim;
    if f0.max_index() > n {
        return Err(Error::IndexOutOfRange {
            index: f0.max_index(),
            dim: n,
        });
    }
    let p = space.p();
    let obj = Objective {
        basis: z.basis.iter().map(|b| b.to_dense(n)).collect(),
        f0: f0.to_dense(n),
        p,
        n,
    };
    let rows: Vec<Vec<f64>> = z.functionals.iter().map(|l| l.to_dense(n)).collect();
    let targets: Vec<f64> = rows.iter().map(|r| linalg::dot(r, &obj.f0)).collect();
    let inf_norm = min_norm_dense(&rows, &targets, n, p, &SolverOptions::default())
        .map(|s| lp_norm(&s.x, p))
        .unwrap_or(0.0);
    let inf_value = 0.5 * inf_norm * inf_norm;

    let k = obj.basis.len();
    let trace: f64 = obj.basis.iter().map(|b| linalg::dot(b, b)).sum();
    let c = if trace > 0.0 { 1.0 / trace } else { 0.0 };
    let mut t = vec![0.0; k];
    let mut best_t = t.clone();
    let mut best_v = obj.value(&obj.point(&t));
    let mut first_pass = None;
    let mut next_checkpoint = 0;
    for it in 0..ITERATIONS {
        if it == next_checkpoint {
            if first_pass.is_none() && obj.check(&obj.point(&best_t), inf_value, epsilon, seed).is_none() {
                first_pass = Some(it);
            }
            next_checkpoint = if it == 0 { 1 } else { 2 * it };
        }
        let x = obj.point(&t);
        let g = obj.dual_member(&obj.diff(&x));
        let grad: Vec<f64> = obj.basis.iter().map(|b| linalg::dot(b, &g)).collect();
        if linalg::max_abs(&grad) == 0.0 {
            break;
        }
        let step = c / ((it + 1) as f64).sqrt();
        for (tj, gj) in t.iter_mut().zip(&grad) {
            *tj -= step * gj;
        }
        let v = obj.value(&obj.point(&t));
        if v < best_v {
            best_v = v;
            best_t = t.clone();
        }
    }
    let x = obj.point(&best_t);
    if let Some(msg) = obj.check(&x, inf_value, epsilon, seed) {
        return Err(Error::EkelandCheckFailed(msg));
    }
    Ok(EkelandReport {
        f_t: PrimalVector::from_dense(&x),
        value: best_v,
        inf_value,
        epsilon,
        iterations: ITERATIONS,
        first_pass_iteration: first_pass.or(Some(ITERATIONS)),
        ekeland_samples: SAMPLES,
        directional_samples: SAMPLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::kernel_basis;
    use crate::spaces::DualFunctional;

    #[test]
    fn hilbert_projection() {
        let s = SpaceSpec::finite(2.0, 2).unwrap();
        let z = kernel_basis(&s, &[DualFunctional::finite(vec![1.0, 0.0])], None).unwrap();
        let r = ekeland_descend(&s, &PrimalVector::from_dense(&[1.0, 1.0]), &z, 1e-6, 1).unwrap();
        let x = r.f_t.to_dense(2);
        assert!(x[0].abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
        assert!((r.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn huge_epsilon_passes_immediately() {
        let s = SpaceSpec::finite(2.0, 2).unwrap();
        let z = kernel_basis(&s, &[DualFunctional::finite(vec![1.0, 0.0])], None).unwrap();
        let r = ekeland_descend(&s, &PrimalVector::from_dense(&[1.0, 1.0]), &z, 1e6, 1).unwrap();
        assert_eq!(r.first_pass_iteration, Some(0));
    }
}
