//! Small dense linear algebra used by the solvers.
//!
//! Every problem here has a handful of rows, so plain `Vec<Vec<f64>>` row
//! storage with partial pivoting is all that is needed.

pub type Matrix = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `Aᵀ c` for row-major `A`.
pub fn transpose_mul(a: &[Vec<f64>], c: &[f64], ncols: usize) -> Vec<f64> {
    let mut out = vec![0.0; ncols];
    for (row, &ci) in a.iter().zip(c) {
        if ci == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(row) {
            *o += ci * v;
        }
    }
    out
}

/// `A x` for row-major `A`.
pub fn mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

/// Reduced row echelon form with partial pivoting.
#[derive(Debug, Clone)]
pub struct Rref {
    pub rows: Matrix,
    pub pivots: Vec<usize>,
    pub ncols: usize,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Null-space basis: one vector per free column, with a 1 in that column.
    pub fn null_space(&self) -> Matrix {
        let mut is_pivot = vec![false; self.ncols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.ncols).filter(|&j| !is_pivot[j]) {
            let mut v = vec![0.0; self.ncols];
            v[free] = 1.0;
            for (row, &pc) in self.rows.iter().zip(&self.pivots) {
                v[pc] = -row[free];
            }
            basis.push(v);
        }
        basis
    }
}

pub fn rref(a: &[Vec<f64>], ncols: usize, tol: f64) -> Rref {
    let mut m: Matrix = a.iter().map(|r| r[..ncols].to_vec()).collect();
    let scale = m.iter().map(|r| max_abs(r)).fold(0.0, f64::max).max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        let (best, best_val) = (row..m.len())
            .map(|i| (i, m[i][col].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= tol * scale {
            continue;
        }
        m.swap(row, best);
        let piv = m[row][col];
        for v in m[row].iter_mut() {
            *v /= piv;
        }
        m[row][col] = 1.0;
        for i in 0..m.len() {
            if i == row {
                continue;
            }
            let factor = m[i][col];
            if factor != 0.0 {
                for j in 0..ncols {
                    m[i][j] -= factor * m[row][j];
                }
                m[i][col] = 0.0;
            }
        }
        pivots.push(col);
        row += 1;
    }
    m.truncate(pivots.len());
    Rref {
        rows: m,
        pivots,
        ncols,
    }
}

/// Outcome of reducing a linear system `A x = y` to independent rows.
#[derive(Debug, Clone)]
pub struct RowReduction {
    /// Indices of a maximal linearly independent subset of rows.
    pub independent: Vec<usize>,
    /// Largest inconsistency found among the dependent rows.
    pub residual: f64,
}

/// Selects a maximal independent row subset of `A` and measures how far the
/// dependent rows are from being implied by it.
pub fn reduce_rows(a: &[Vec<f64>], y: &[f64], ncols: usize, tol: f64) -> RowReduction {
    let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut independent = Vec::new();
    let mut residual = 0.0_f64;
    for (i, (row, &yi)) in a.iter().zip(y).enumerate() {
        let mut r: Vec<f64> = row[..ncols].to_vec();
        r.push(yi);
        let scale = max_abs(&r[..ncols]).max(yi.abs()).max(1.0);
        for (pc, b) in &basis {
            let f = r[*pc];
            if f != 0.0 {
                for (x, bv) in r.iter_mut().zip(b) {
                    *x -= f * bv;
                }
            }
        }
        let (pc, pv) = r[..ncols]
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
        if pv > tol * scale {
            let p = r[pc];
            for x in r.iter_mut() {
                *x /= p;
            }
            basis.push((pc, r));
            independent.push(i);
        } else {
            residual = residual.max(r[ncols].abs() / scale);
        }
    }
    RowReduction {
        independent,
        residual,
    }
}

/// Solves a square system with partial pivoting. `None` when singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Matrix = a.iter().zip(b).map(|(r, &bi)| {
        let mut row = r[..n].to_vec();
        row.push(bi);
        row
    }).collect();
    let scale = m.iter().map(|r| max_abs(&r[..n])).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let best = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[best][col].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, best);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for j in col..=n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

/// Least-squares projection of `g` onto the span of `vectors`.
///
/// Returns coefficients `c` minimizing `‖g − Σ cᵢ vᵢ‖₂`; dependent vectors get a
/// zero coefficient.
pub fn project_onto_span(vectors: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let m = vectors.len();
    // Modified Gram-Schmidt with one reorthogonalization pass, tracking the
    // triangular factor so coefficients can be recovered.
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r = vec![vec![0.0; m]; m];
    let mut kept: Vec<usize> = Vec::new();
    for (k, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        let vnorm = norm2(v);
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (qi, qv) in q.iter().enumerate() {
                let h = dot(qv, &w);
                coeffs[qi] += h;
                for (x, y) in w.iter_mut().zip(qv) {
                    *x -= h * y;
                }
            }
        }
        let wn = norm2(&w);
        if vnorm == 0.0 || wn <= 1e-12 * vnorm {
            continue;
        }
        let row = q.len();
        for (qi, c) in coeffs.into_iter().enumerate() {
            r[qi][row] = c;
        }
        r[row][row] = wn;
        for x in w.iter_mut() {
            *x /= wn;
        }
        q.push(w);
        kept.push(k);
    }
    let k = q.len();
    let mut rhs: Vec<f64> = q.iter().map(|qv| dot(qv, g)).collect();
    // second pass on the residual for accuracy
    let mut resid = g.to_vec();
    for (qv, &h) in q.iter().zip(&rhs) {
        for (x, y) in resid.iter_mut().zip(qv) {
            *x -= h * y;
        }
    }
    for (i, qv) in q.iter().enumerate() {
        rhs[i] += dot(qv, &resid);
    }
    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * z[j]).sum();
        z[i] = (rhs[i] - s) / r[i][i];
    }
    let mut c = vec![0.0; m];
    for (i, &orig) in kept.iter().enumerate() {
        c[orig] = z[i];
    }
    c
}
