//! Representer certificates: distance from `J(f₀)` to `span{Lᵢ}`, exact
//! certification, and the non-attaining `ℓ¹` counterexample table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::par::{self, Execution};
use crate::simplex::{LinearProgram, Relation, VarKind};
use crate::spaces::{
    dual_norm, duality_map, in_duality_set, lp_norm, DualFunctional, DualNorm, DualitySetDescriptor,
    Monotone, PrimalVector, SpaceSpec, TailRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CertMode {
    Exact,
    Approx { epsilon: f64 },
}

/// Coefficients `cᵢ`, a member `L̂` of `J(f₀)`, and `‖L̂ − Σ cᵢ Lᵢ‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub coefficients: Vec<f64>,
    pub witness: DualFunctional,
    pub distance: f64,
    pub mode: CertMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDistance {
    pub distance: f64,
    pub coefficients: Vec<f64>,
    pub witness: DualFunctional,
}

impl CertificateDistance {
    pub fn into_certificate(self, mode: CertMode) -> Certificate {
        Certificate {
            coefficients: self.coefficients,
            witness: self.witness,
            distance: self.distance,
            mode,
        }
    }
}

impl Certificate {
    /// Re-checks membership in `J(f₀)` and recomputes the distance.
    pub fn verify(&self, f0: &PrimalVector, functionals: &[DualFunctional], space: &SpaceSpec, tol: f64) -> Result<bool> {
        if self.coefficients.len() != functionals.len() {
            return Ok(false);
        }
        let desc = if f0.is_zero() {
            DualitySetDescriptor::of_zero(space)
        } else {
            duality_map(space, f0)?
        };
        if !in_duality_set(&desc, &self.witness, tol) {
            return Ok(false);
        }
        let d = combination_distance(space, &self.witness, &self.coefficients, functionals);
        let mode_ok = match self.mode {
            CertMode::Exact => d <= tol.max(1e-8),
            CertMode::Approx { epsilon } => d < epsilon,
        };
        Ok((d - self.distance).abs() <= tol && mode_ok)
    }
}

/// Scan length used when tails cannot be combined in closed form.
const SCAN_LEN: usize = 1 << 16;

/// Upper bound on `sup_n |Σ wₖ Fₖ(n)|`; exact when the tails combine into one
/// monotone rule, otherwise a finite scan plus a monotone remainder bound.
pub fn combination_sup(weights: &[f64], fs: &[&DualFunctional]) -> f64 {
    if let Some(comb) = DualFunctional::linear_combination(weights, fs) {
        return dual_norm(&comb).value;
    }
    let k = fs.iter().map(|f| f.prefix().len()).max().unwrap_or(0) + SCAN_LEN;
    let at = |n: usize| weights.iter().zip(fs).map(|(w, f)| w * f.value(n)).sum::<f64>();
    let scan = (1..=k).map(|n| at(n).abs()).fold(0.0, f64::max);
    let lim: f64 = weights.iter().zip(fs).map(|(w, f)| w * f.tail().limit()).sum();
    let rest: f64 = weights
        .iter()
        .zip(fs)
        .map(|(w, f)| w.abs() * (f.value(k + 1) - f.tail().limit()).abs())
        .sum();
    scan.max(lim.abs() + rest)
}

/// `‖witness − Σ cᵢ Lᵢ‖` in the dual norm of `space`.
pub fn combination_distance(space: &SpaceSpec, witness: &DualFunctional, c: &[f64], ls: &[DualFunctional]) -> f64 {
    match space.dim() {
        Some(d) => {
            let mut diff = witness.to_dense(d);
            for (ci, l) in c.iter().zip(ls) {
                for (x, v) in diff.iter_mut().zip(l.to_dense(d)) {
                    *x -= ci * v;
                }
            }
            lp_norm(&diff, space.conjugate())
        }
        None => {
            let mut w = vec![1.0];
            w.extend(c.iter().map(|v| -v));
            let mut fs = vec![witness];
            fs.extend(ls.iter());
            combination_sup(&w, &fs)
        }
    }
}

/// `min ‖g − Σ cᵢ Lᵢ‖` over `g ∈ J(f₀)` and `c ∈ ℝᵐ`.
pub fn certificate_distance(f0: &PrimalVector, functionals: &[DualFunctional], space: &SpaceSpec) -> Result<CertificateDistance> {
    let desc = duality_map(space, f0)?;
    for l in functionals {
        space.check_functional(l)?;
    }
    if space.is_l1() {
        l1_distance(&desc, f0, functionals, space)
    } else {
        smooth_distance(&desc, functionals, space)
    }
}

fn smooth_distance(desc: &DualitySetDescriptor, ls: &[DualFunctional], space: &SpaceSpec) -> Result<CertificateDistance> {
    let n = space.dim().expect("finite");
    let q = space.conjugate();
    let g_fn = desc.smooth_point.clone().expect("singleton");
    let g = g_fn.to_dense(n);
    let rows: Vec<Vec<f64>> = ls.iter().map(|l| l.to_dense(n)).collect();
    let red = linalg::reduce_rows(&rows, &vec![0.0; rows.len()], n, 1e-12);
    let a: Vec<Vec<f64>> = red.independent.iter().map(|&i| rows[i].clone()).collect();
    let dist_of = |c: &[f64]| {
        let ac = linalg::transpose_mul(&a, c, n);
        lp_norm(&g.iter().zip(&ac).map(|(x, y)| x - y).collect::<Vec<_>>(), q)
    };
    let mut best = linalg::project_onto_span(&a, &g);
    let mut best_d = dist_of(&best);
    if q != 2.0 && !a.is_empty() {
        let mut c = best.clone();
        for _ in 0..200 {
            if best_d <= 1e-15 * lp_norm(&g, q) {
                break;
            }
            let ac = linalg::transpose_mul(&a, &c, n);
            let r: Vec<f64> = g.iter().zip(&ac).map(|(x, y)| x - y).collect();
            let rmax = linalg::max_abs(&r);
            let w: Vec<f64> = r.iter().map(|v| v.abs().max(1e-9 * rmax).powf(q - 2.0)).collect();
            let m = a.len();
            let h: Vec<Vec<f64>> = (0..m)
                .map(|i| (0..m).map(|k| (0..n).map(|j| a[i][j] * w[j] * a[k][j]).sum()).collect())
                .collect();
            let rhs: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i][j] * w[j] * g[j]).sum()).collect();
            let Some(next) = linalg::solve_square(&h, &rhs) else { break };
            let d = dist_of(&next);
            c = next;
            if d < best_d {
                let stalled = best_d - d <= 1e-14 * best_d;
                best = c.clone();
                best_d = d;
                if stalled {
                    break;
                }
            }
        }
    }
    let mut coefficients = vec![0.0; ls.len()];
    for (k, &i) in red.independent.iter().enumerate() {
        coefficients[i] = best[k];
    }
    let distance = combination_distance(space, &g_fn, &coefficients, ls);
    Ok(CertificateDistance {
        distance,
        coefficients,
        witness: g_fn,
    })
}

/// One affine piece of the minimax objective.
struct Row {
    a: Vec<f64>,
    /// Required value for fixed coordinates; `None` for box coordinates.
    center: Option<f64>,
}

impl Row {
    fn violation(&self, c: &[f64], box_bound: f64) -> f64 {
        let v = linalg::dot(&self.a, c);
        match self.center {
            Some(s) => (s - v).abs(),
            None => (v.abs() - box_bound).max(0.0),
        }
    }
}

fn l1_distance(desc: &DualitySetDescriptor, f0: &PrimalVector, ls: &[DualFunctional], space: &SpaceSpec) -> Result<CertificateDistance> {
    let m = ls.len();
    let r = desc.box_bound;
    let last = match space.dim() {
        Some(d) => d,
        None => ls
            .iter()
            .map(|l| l.prefix().len())
            .max()
            .unwrap_or(0)
            .max(f0.max_index())
            + 1,
    };
    let mut rows: Vec<Row> = Vec::with_capacity(last + 1);
    let mut fixed = desc.fixed.iter().peekable();
    for j in 1..=last {
        let a: Vec<f64> = ls.iter().map(|l| l.value(j)).collect();
        let center = match fixed.peek() {
            Some(&&(i, v)) if i == j => {
                fixed.next();
                Some(v)
            }
            _ => None,
        };
        rows.push(Row { a, center });
    }
    if space.dim().is_none() {
        rows.push(Row {
            a: ls.iter().map(|l| l.tail().limit()).collect(),
            center: None,
        });
    }

    let mut active: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].center.is_some()).collect();
    if space.dim().is_none() {
        active.push(rows.len() - 1);
    }
    if let Some(k) = (0..rows.len())
        .filter(|&k| rows[k].center.is_none())
        .max_by(|&x, &y| {
            let nx: f64 = rows[x].a.iter().map(|v| v.abs()).sum();
            let ny: f64 = rows[y].a.iter().map(|v| v.abs()).sum();
            nx.total_cmp(&ny)
        })
    {
        if !active.contains(&k) {
            active.push(k);
        }
    }

    let mut c = vec![0.0; m];
    for _round in 0..500 {
        let (c_new, t) = solve_minimax(&rows, &active, r, m)?;
        c = c_new;
        let mut worst: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .filter(|(k, _)| !active.contains(k))
            .map(|(k, row)| (row.violation(&c, r), k))
            .filter(|(v, _)| *v > t + 1e-12 * (1.0 + r))
            .collect();
        if worst.is_empty() {
            break;
        }
        worst.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        active.extend(worst.iter().take(4).map(|w| w.1));
    }

    let witness = match space.dim() {
        Some(d) => {
            let target: Vec<f64> = (1..=d).map(|j| ls.iter().zip(&c).map(|(l, ci)| ci * l.value(j)).sum()).collect();
            desc.clamp_member(&DualFunctional::finite(target))
        }
        None => {
            let refs: Vec<&DualFunctional> = ls.iter().collect();
            let target = DualFunctional::linear_combination(&c, &refs).unwrap_or_else(|| {
                let prefix: Vec<f64> = (1..=last).map(|j| rows[j - 1].a.iter().zip(&c).map(|(a, ci)| a * ci).sum()).collect();
                let lim: f64 = ls.iter().zip(&c).map(|(l, ci)| ci * l.tail().limit()).sum();
                DualFunctional::new(prefix, TailRule::constant(lim).expect("finite")).expect("valid")
            });
            desc.clamp_member(&target)
        }
    };
    let distance = combination_distance(space, &witness, &c, ls);
    Ok(CertificateDistance {
        distance,
        coefficients: c,
        witness,
    })
}

fn solve_minimax(rows: &[Row], active: &[usize], r: f64, m: usize) -> Result<(Vec<f64>, f64)> {
    let mut lp = LinearProgram::new();
    let cv: Vec<usize> = (0..m).map(|_| lp.add_var(VarKind::Free, 0.0)).collect();
    let t = lp.add_var(VarKind::NonNegative, 1.0);
    for &k in active {
        let row = &rows[k];
        let pos: Vec<(usize, f64)> = cv.iter().zip(&row.a).map(|(&i, &a)| (i, a)).chain([(t, -1.0)]).collect();
        let neg: Vec<(usize, f64)> = cv.iter().zip(&row.a).map(|(&i, &a)| (i, -a)).chain([(t, -1.0)]).collect();
        match row.center {
            Some(s) => {
                lp.add_constraint(pos, Relation::Le, s);
                lp.add_constraint(neg, Relation::Le, -s);
            }
            None => {
                lp.add_constraint(pos, Relation::Le, r);
                lp.add_constraint(neg, Relation::Le, r);
            }
        }
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::NotConverged(format!("certificate LP: {e:?}")))?;
    Ok((cv.iter().map(|&i| sol.x[i]).collect(), sol.x[t]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertifyOutcome {
    Exact(Certificate),
    NotRepresentable {
        distance: f64,
        coefficients: Vec<f64>,
        witness: DualFunctional,
    },
}

impl CertifyOutcome {
    pub fn is_exact(&self) -> bool {
        matches!(self, CertifyOutcome::Exact(_))
    }

    pub fn distance(&self) -> f64 {
        match self {
            CertifyOutcome::Exact(c) => c.distance,
            CertifyOutcome::NotRepresentable { distance, .. } => *distance,
        }
    }
}

/// Exact certificate when the distance is at most `tol`.
pub fn certify_exact(f0: &PrimalVector, functionals: &[DualFunctional], space: &SpaceSpec, tol: f64) -> Result<CertifyOutcome> {
    space.check_vector(f0)?;
    if f0.is_zero() {
        let desc = DualitySetDescriptor::of_zero(space);
        return Ok(CertifyOutcome::Exact(Certificate {
            coefficients: vec![0.0; functionals.len()],
            witness: desc.smooth_point.expect("zero functional"),
            distance: 0.0,
            mode: CertMode::Exact,
        }));
    }
    let d = certificate_distance(f0, functionals, space)?;
    if d.distance <= tol {
        Ok(CertifyOutcome::Exact(d.into_certificate(CertMode::Exact)))
    } else {
        Ok(CertifyOutcome::NotRepresentable {
            distance: d.distance,
            coefficients: d.coefficients,
            witness: d.witness,
        })
    }
}

/// `Lₙ = n/(n+1)`.
pub fn counterexample_functional() -> DualFunctional {
    DualFunctional::from_rule(TailRule::rational(1.0, 0.0, 1.0, 1.0, 1, Monotone::Increasing).expect("valid rule"))
        .expect("valid functional")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: usize,
    /// `‖f_N‖₁ = (N+1)/N` for `f_N = ((N+1)/N) e_N`.
    pub norm: f64,
    pub distance: f64,
    /// Closed-form upper bound `(N+1)/N²` from `c = ((N+1)/N)²`.
    pub bound: f64,
    pub coefficient: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub dual_norm: DualNorm,
    pub infimum: f64,
    pub rows: Vec<CounterexampleRow>,
}

pub fn run_counterexample(ns: &[usize], exec: Execution) -> Result<CounterexampleTable> {
    let l = counterexample_functional();
    let space = SpaceSpec::SequenceL1;
    let rows = par::map_slice(exec, ns, |&n| -> Result<CounterexampleRow> {
        let nf = n as f64;
        let value = (nf + 1.0) / nf;
        let f = PrimalVector::unit(n, value);
        let out = certify_exact(&f, std::slice::from_ref(&l), &space, 1e-8)?;
        let coefficient = match &out {
            CertifyOutcome::Exact(c) => c.coefficients[0],
            CertifyOutcome::NotRepresentable { coefficients, .. } => coefficients[0],
        };
        Ok(CounterexampleRow {
            n,
            norm: value,
            distance: out.distance(),
            bound: (nf + 1.0) / (nf * nf),
            coefficient,
            exact: out.is_exact(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let dn = dual_norm(&l);
    Ok(CounterexampleTable {
        dual_norm: dn,
        // inf ‖f‖₁ subject to L(f) = 1 is 1/‖L‖∞
        infimum: 1.0 / dn.value,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_l1_example() {
        let s = SpaceSpec::finite(1.0, 3).unwrap();
        let l = DualFunctional::finite(vec![1.0, 2.0, 3.0]);
        let d = certificate_distance(&PrimalVector::unit(3, 2.0), &[l], &s).unwrap();
        assert!(d.distance < 1e-12);
        assert!((d.coefficients[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hilbert_projection() {
        let s = SpaceSpec::finite(2.0, 3).unwrap();
        let l = DualFunctional::finite(vec![1.0, 0.0, 0.0]);
        let d = certificate_distance(&PrimalVector::from_dense(&[1.0, 2.0, 0.0]), std::slice::from_ref(&l), &s).unwrap();
        assert!((d.distance - 2.0).abs() < 1e-12);
        let d = certificate_distance(&PrimalVector::from_dense(&[3.0, 0.0, 0.0]), &[l], &s).unwrap();
        assert!(d.distance < 1e-15);
    }

    #[test]
    fn counterexample_balanced_value() {
        let t = run_counterexample(&[1, 10, 100], Execution::Sequential).unwrap();
        assert_eq!(t.dual_norm.value, 1.0);
        assert!(!t.dual_norm.attained);
        for row in &t.rows {
            let n = row.n as f64;
            let balanced = (n + 1.0) / (n * (2.0 * n + 1.0));
            assert!((row.distance - balanced).abs() < 1e-12, "{row:?}");
            assert!(row.distance <= row.bound);
            assert!(!row.exact);
        }
    }

    #[test]
    fn zero_point_is_exact() {
        let s = SpaceSpec::finite(1.0, 2).unwrap();
        let out = certify_exact(&PrimalVector::zero(), &[DualFunctional::finite(vec![1.0, 1.0])], &s, 1e-8).unwrap();
        assert!(out.is_exact());
    }
}
