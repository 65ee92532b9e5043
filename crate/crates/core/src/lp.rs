//! Dense two-phase primal simplex for equality-form programs
//! `min c.x  s.t.  A x = b, x >= 0`.
//!
//! Pivoting follows Bland's rule (lowest eligible entering column, lowest
//! basic index among tied ratios), so runs are deterministic and cannot
//! cycle on degenerate vertices.

use crate::error::{Error, Result};

/// Pivot and reduced-cost threshold.
const EPS: f64 = 1e-11;
/// Phase-one objective above this means no feasible point.
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs; last entry is minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations over columns `< allowed` until optimal.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let limit = 50 * (self.cols + self.rows.len()) + 10_000;
        for _ in 0..limit {
            let Some(col) = (0..allowed).find(|&j| self.obj[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, best)) => {
                            if ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, col),
                None => return Err(Error::Internal("linear program is unbounded".into())),
            }
        }
        Err(Error::Internal("simplex iteration limit reached".into()))
    }
}

/// Minimizes `c.x` subject to `A x = b`, `x >= 0`.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n));

    // Phase one: artificial variable per row, minimize their sum.
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; cols + 1];
        for (j, v) in row.iter().enumerate() {
            t[j] = sign * v;
        }
        t[n + i] = 1.0;
        t[cols] = sign * rhs;
        rows.push(t);
    }
    let mut obj = vec![0.0; cols + 1];
    for row in &rows {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[cols] -= row[cols];
    }
    let mut tab = Tableau { rows, obj, basis: (n..n + m).collect(), cols };
    tab.optimize(cols)?;

    if -tab.obj[cols] > FEAS_TOL {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive artificials out of the basis; rows where that is impossible are
    // linearly dependent on the others and are dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            let entering = (0..n)
                .filter(|&j| tab.rows[r][j].abs() > EPS)
                .max_by(|&x, &y| tab.rows[r][x].abs().total_cmp(&tab.rows[r][y].abs()).then(y.cmp(&x)));
            match entering {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase two with the real objective; artificial columns may not re-enter.
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(c);
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        let cb = if bv < n { c[bv] } else { 0.0 };
        if cb != 0.0 {
            for (o, v) in obj.iter_mut().zip(row) {
                *o -= cb * v;
            }
        }
    }
    for &bv in &tab.basis {
        obj[bv] = 0.0;
    }
    tab.obj = obj;
    tab.optimize(n)?;

    let mut x = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(r).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { x, value })
}

/// Maximizes `c.x` subject to `A x = b`, `x >= 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    Ok(match minimize(&neg, a, b)? {
        LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
        LpOutcome::Infeasible => LpOutcome::Infeasible,
    })
}

/// Some point of `{x >= 0 | A x = b}`, if any.
pub fn feasible_point(a: &[Vec<f64>], b: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = a.first().map_or(0, Vec::len);
    Ok(match minimize(&vec![0.0; n], a, b)? {
        LpOutcome::Optimal { x, .. } => Some(x),
        LpOutcome::Infeasible => None,
    })
}
