use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::KernelSubspace;
use crate::linalg;
use crate::simplex::{LinearProgram, Relation, VarKind};
use crate::spaces::{duality_map, in_duality_set, lp_norm, pair, DualFunctional, PrimalVector, SpaceSpec};

use super::min_norm::min_norm_dense;
use super::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extension {
    pub functional: DualFunctional,
    pub norm: f64,
    /// `‖f_T − f₀‖`.
    pub target_norm: f64,
    /// `|L(f₀) − (L(f_T) − ‖f_T − f₀‖²)|`.
    pub identity_residual: f64,
    /// Whether `−L ∈ J(f₀ − f_T)`.
    pub negation_in_duality_set: bool,
}

/// Extends `l_on_z` from `Z` to the whole (finite or truncated) space: first
/// to `span(Z ∪ {f₀})` by `L(f₀) = L(f_T) − ‖f_T − f₀‖²`, then by a
/// minimal-dual-norm completion.
pub fn hb_extend(
    space: &SpaceSpec,
    z: &KernelSubspace,
    l_on_z: &DualFunctional,
    f0: &PrimalVector,
    f_t: &PrimalVector,
    tol: f64,
) -> Result<Extension> {
    let n = z.dim;
    let p = space.p();
    let work = SpaceSpec::finite(p, n)?;
    let diff = f_t.sub(f0);
    let rho = lp_norm(&diff.to_dense(n), p);
    if rho == 0.0 {
        return Err(Error::Precondition("need ‖f_T − f₀‖ > 0".into()));
    }
    for l in &z.functionals {
        let v = pair(l, f_t);
        if v.abs() > tol.max(1e-12) * (1.0 + linalg::max_abs(&f_t.to_dense(n))) {
            return Err(Error::Precondition(format!("f_T is not in Z (L(f_T) = {v})")));
        }
    }
    let mut rows: Vec<Vec<f64>> = z.basis.iter().map(|b| b.to_dense(n)).collect();
    let mut rhs: Vec<f64> = z.basis.iter().map(|b| pair(l_on_z, b)).collect();
    let f0_value = pair(l_on_z, f_t) - rho * rho;
    rows.push(f0.to_dense(n));
    rhs.push(f0_value);

    let e = if p == 1.0 {
        linf_min(&rows, &rhs, n)?
    } else {
        let q = p / (p - 1.0);
        min_norm_dense(&rows, &rhs, n, q, &SolverOptions::default())?.x
    };
    let q = space.conjugate();
    let norm = lp_norm(&e, q);
    if norm > rho + tol * rho.max(1.0) {
        return Err(Error::NormInflation { got: norm, target: rho });
    }
    let functional = DualFunctional::finite(e);
    let neg = functional.scale(-1.0);
    let desc = duality_map(&work, &f0.sub(f_t))?;
    Ok(Extension {
        identity_residual: (pair(&functional, f0) - f0_value).abs(),
        negation_in_duality_set: in_duality_set(&desc, &neg, tol.max(1e-9) * rho.max(1.0)),
        functional,
        norm,
        target_norm: rho,
    })
}

/// `min ‖E‖∞` subject to `rows·E = rhs`, then the least `Σ|Eₖ|` among those.
fn linf_min(rows: &[Vec<f64>], rhs: &[f64], n: usize) -> Result<Vec<f64>> {
    let lp_err = |e| Error::NotConverged(format!("extension LP: {e:?}"));
    let mut lp = LinearProgram::new();
    let ev: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::Free, 0.0)).collect();
    let s = lp.add_var(VarKind::NonNegative, 1.0);
    for (row, &b) in rows.iter().zip(rhs) {
        lp.add_constraint(ev.iter().zip(row).map(|(&v, &a)| (v, a)).collect(), Relation::Eq, b);
    }
    for &v in &ev {
        lp.add_constraint(vec![(v, 1.0), (s, -1.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(v, -1.0), (s, -1.0)], Relation::Le, 0.0);
    }
    let s_star = lp.solve().map_err(lp_err)?.objective;

    let mut lp = LinearProgram::new();
    let u: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::NonNegative, 1.0)).collect();
    let v: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::NonNegative, 1.0)).collect();
    for (row, &b) in rows.iter().zip(rhs) {
        let coeffs = (0..n).flat_map(|k| [(u[k], row[k]), (v[k], -row[k])]).collect();
        lp.add_constraint(coeffs, Relation::Eq, b);
    }
    let cap = s_star * (1.0 + 1e-12) + 1e-15;
    for k in 0..n {
        lp.add_constraint(vec![(u[k], 1.0)], Relation::Le, cap);
        lp.add_constraint(vec![(v[k], 1.0)], Relation::Le, cap);
    }
    let sol = lp.solve().map_err(lp_err)?;
    Ok((0..n).map(|k| sol.x[u[k]] - sol.x[v[k]]).collect())
}
