//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Built for the tiny programs that show up here (a few rows, up to a few
//! hundred thousand columns). Variables are either nonnegative or free; free
//! variables are split internally.

use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    Infeasible { phase_one_objective: f64 },
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint, sign convention `c − Aᵀy ≥ 0` on the
    /// nonnegative columns (so `bᵀy` equals the optimum).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// A linear program `min cᵀx` subject to row constraints.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    kinds: Vec<VarKind>,
    cost: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Relation, f64)>,
}

const PIVOT_TOL: f64 = 1e-11;

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind, cost: f64) -> usize {
        self.kinds.push(kind);
        self.cost.push(cost);
        self.kinds.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        // Column layout: split structural columns, then one slack per
        // inequality, then one artificial per row.
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.kinds.len());
        let mut ncols = 0;
        for k in &self.kinds {
            match k {
                VarKind::NonNegative => {
                    col_of.push((ncols, None));
                    ncols += 1;
                }
                VarKind::Free => {
                    col_of.push((ncols, Some(ncols + 1)));
                    ncols += 2;
                }
            }
        }
        let n_struct = ncols;
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art0 = n_struct + n_slack;
        let width = art0 + m + 1; // + rhs
        let mut t = vec![vec![0.0; width]; m];
        let mut row_sign = vec![1.0; m];
        let mut slack = n_struct;
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            for &(v, a) in coeffs {
                let (p, q) = col_of[v];
                t[i][p] += a;
                if let Some(q) = q {
                    t[i][q] -= a;
                }
            }
            match rel {
                Relation::Le => {
                    t[i][slack] = 1.0;
                    slack += 1;
                }
                Relation::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            t[i][width - 1] = *rhs;
            if *rhs < 0.0 {
                row_sign[i] = -1.0;
                for v in t[i].iter_mut() {
                    *v = -*v;
                }
            }
            t[i][art0 + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| art0 + i).collect();
        let mut iterations = 0;

        // phase one: minimize the artificial sum
        let mut c1 = vec![0.0; width - 1];
        for c in c1.iter_mut().skip(art0) {
            *c = 1.0;
        }
        let mut active = vec![true; width - 1];
        run_phase(&mut t, &mut basis, &c1, &active, &mut iterations)?;
        let p1: f64 = basis
            .iter()
            .zip(&t)
            .filter(|(b, _)| **b >= art0)
            .map(|(_, r)| r[width - 1])
            .sum();
        let bscale = self
            .rows
            .iter()
            .map(|r| r.2.abs())
            .fold(1.0, f64::max);
        if p1 > 1e-9 * bscale {
            return Err(LpError::Infeasible {
                phase_one_objective: p1,
            });
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut keep = vec![true; m];
        for i in 0..m {
            if basis[i] < art0 {
                continue;
            }
            let entering = (0..art0).find(|&j| t[i][j].abs() > 1e-9);
            match entering {
                Some(j) => pivot(&mut t, &mut basis, i, j),
                None => keep[i] = false,
            }
        }
        for a in active.iter_mut().skip(art0) {
            *a = false;
        }
        let mut c2 = vec![0.0; width - 1];
        for (v, &(p, q)) in col_of.iter().enumerate() {
            c2[p] = self.cost[v];
            if let Some(q) = q {
                c2[q] = -self.cost[v];
            }
        }
        let kept_rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
        let mut t2: Vec<Vec<f64>> = kept_rows.iter().map(|&i| t[i].clone()).collect();
        let mut basis2: Vec<usize> = kept_rows.iter().map(|&i| basis[i]).collect();
        run_phase(&mut t2, &mut basis2, &c2, &active, &mut iterations)?;

        let mut xs = vec![0.0; width - 1];
        for (r, &b) in t2.iter().zip(&basis2) {
            xs[b] = r[width - 1];
        }
        let x: Vec<f64> = col_of
            .iter()
            .map(|&(p, q)| xs[p] - q.map_or(0.0, |q| xs[q]))
            .collect();
        let objective: f64 = x.iter().zip(&self.cost).map(|(a, b)| a * b).sum();

        // duals from Bᵀy = c_B on the original (sign-normalized) columns
        let orig = self.standard_rows(&col_of, n_struct, art0, &row_sign);
        let bt: Vec<Vec<f64>> = basis2
            .iter()
            .map(|&b| kept_rows.iter().map(|&i| orig[i][b]).collect())
            .collect();
        let cb: Vec<f64> = basis2.iter().map(|&b| c2.get(b).copied().unwrap_or(0.0)).collect();
        let y_kept = linalg::solve_square(&bt, &cb).unwrap_or_else(|| vec![0.0; kept_rows.len()]);
        let mut duals = vec![0.0; m];
        for (k, &i) in kept_rows.iter().enumerate() {
            duals[i] = y_kept[k] * row_sign[i];
        }
        Ok(LpSolution {
            x,
            objective,
            duals,
            iterations,
        })
    }

    fn standard_rows(
        &self,
        col_of: &[(usize, Option<usize>)],
        n_struct: usize,
        art0: usize,
        row_sign: &[f64],
    ) -> Vec<Vec<f64>> {
        let m = self.rows.len();
        let mut out = vec![vec![0.0; art0 + m]; m];
        let mut slack = n_struct;
        for (i, (coeffs, rel, _)) in self.rows.iter().enumerate() {
            for &(v, a) in coeffs {
                let (p, q) = col_of[v];
                out[i][p] += a * row_sign[i];
                if let Some(q) = q {
                    out[i][q] -= a * row_sign[i];
                }
            }
            match rel {
                Relation::Le => {
                    out[i][slack] = row_sign[i];
                    slack += 1;
                }
                Relation::Ge => {
                    out[i][slack] = -row_sign[i];
                    slack += 1;
                }
                Relation::Eq => {}
            }
            out[i][art0 + i] = 1.0;
        }
        out
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    t[row][col] = 1.0;
    let prow = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (x, &y) in r.iter_mut().zip(&prow) {
                *x -= f * y;
            }
            r[col] = 0.0;
        }
    }
    basis[row] = col;
}

fn run_phase(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    active: &[bool],
    iterations: &mut usize,
) -> Result<(), LpError> {
    let ncols = cost.len();
    let rhs = ncols;
    let max_iter = 50_000 + 20 * ncols;
    let cscale = cost.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    loop {
        // reduced costs d_j = c_j − c_Bᵀ T_j; Bland: first improving column
        let mut entering = None;
        for j in 0..ncols {
            if !active[j] || basis.contains(&j) {
                continue;
            }
            let mut d = cost[j];
            for (r, &b) in t.iter().zip(basis.iter()) {
                let cb = cost[b];
                if cb != 0.0 {
                    d -= cb * r[j];
                }
            }
            if d < -1e-11 * cscale {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, r) in t.iter().enumerate() {
            if r[j] > PIVOT_TOL {
                let ratio = r[rhs] / r[j];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12 * lr.abs().max(1.0)
                            || (ratio <= lr + 1e-12 * lr.abs().max(1.0) && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((i, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        pivot(t, basis, i, j);
        *iterations += 1;
        if *iterations > max_iter {
            return Err(LpError::IterationLimit);
        }
    }
}
