//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum `ℓ¹` norm over `Ax = y` by enumerating basic solutions. `None` if infeasible.
pub fn l1_oracle(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<f64> {
    let rank = a.clone().svd(false, false).rank(1e-9);
    if rank == 0 {
        return (y.amax() < 1e-12).then_some(0.0);
    }
    let mut best: Option<f64> = None;
    for cols in combinations(a.ncols(), rank) {
        let sub = a.select_columns(&cols);
        let svd = sub.clone().svd(true, true);
        if svd.rank(1e-9) < rank {
            continue;
        }
        let x = svd.solve(y, 1e-12).ok()?;
        if (&sub * &x - y).amax() > 1e-9 {
            continue;
        }
        let v = x.lp_norm(1);
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    }
    best
}

/// Minimizer of a convex function on `[lo, hi]` by ternary search.
pub fn ternary(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    for _ in 0..iters {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
