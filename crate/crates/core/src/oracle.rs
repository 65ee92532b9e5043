//! Brute-force checks for small constraint systems.
//!
//! Vertices of `{pi >= 0 | A pi = b}` are its basic feasible solutions, so
//! trying every basis enumerates them all. A linear objective attains its
//! extremes at a vertex, and every feasible point is a convex combination of
//! vertices. None of this shares code with the simplex solver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::explain::Direction;
use crate::system::Atom;
use crate::worlds::{ConstraintSystem, Distribution};

pub const MAX_ORACLE_WORLDS: usize = 64;
pub const MAX_ORACLE_CONSTRAINTS: usize = 16;
/// Upper bound on the number of candidate bases tried.
pub const MAX_ORACLE_BASES: u128 = 5_000_000;

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet {
    pub vertices: Vec<Distribution>,
}

impl VertexSet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone().svd(false, false).rank(1e-9)
}

/// Every basic feasible solution of `cs`, sorted by world probabilities.
pub fn enumerate_vertices(cs: &ConstraintSystem) -> Result<VertexSet> {
    let n = cs.num_worlds();
    let m = cs.constraints().len();
    if n > MAX_ORACLE_WORLDS || m > MAX_ORACLE_CONSTRAINTS {
        return Err(Error::OracleScale(format!(
            "{n} worlds and {m} constraints (limits {MAX_ORACLE_WORLDS} and {MAX_ORACLE_CONSTRAINTS})"
        )));
    }

    // Keep a maximal set of linearly independent rows.
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..m {
        let mut trial = kept.clone();
        trial.push(i);
        let sub = DMatrix::from_fn(trial.len(), n, |r, c| cs.constraints()[trial[r]].coeffs[c]);
        if rank(&sub) == trial.len() {
            kept = trial;
        }
    }
    let r = kept.len();
    let a = DMatrix::from_fn(r, n, |i, j| cs.constraints()[kept[i]].coeffs[j]);
    let b = DVector::from_fn(r, |i, _| cs.constraints()[kept[i]].rhs);

    let bases = binomial(n, r);
    if bases > MAX_ORACLE_BASES {
        return Err(Error::OracleScale(format!(
            "{bases} candidate bases exceeds the limit of {MAX_ORACLE_BASES}"
        )));
    }

    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut cols: Vec<usize> = (0..r).collect();
    loop {
        let basis = DMatrix::from_fn(r, r, |i, j| a[(i, cols[j])]);
        let lu = basis.lu();
        if let Some(xb) = lu.solve(&b) {
            if xb.iter().all(|v| v.is_finite() && *v >= -TOL) {
                let mut x = vec![0.0; n];
                for (j, &c) in cols.iter().enumerate() {
                    x[c] = xb[j].max(0.0);
                }
                if cs.max_residual(&x) <= TOL
                    && !found.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= TOL))
                {
                    found.push(x);
                }
            }
        }
        if !next_combination(&mut cols, n) {
            break;
        }
    }

    found.sort_by(|x, y| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let atoms = cs.atoms().to_vec();
    Ok(VertexSet {
        vertices: found.into_iter().map(|x| Distribution::new(atoms.clone(), x)).collect(),
    })
}

/// Advances `cols` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(cols: &mut [usize], n: usize) -> bool {
    let k = cols.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cols[i] < n - k + i {
            cols[i] += 1;
            for j in i + 1..k {
                cols[j] = cols[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact extremum of `Pr(phi)` over the vertices of `cs`.
pub fn oracle_extremal(cs: &ConstraintSystem, phi: &Atom, direction: Direction) -> Result<f64> {
    let vertices = enumerate_vertices(cs)?;
    let mask = cs.mask(std::slice::from_ref(phi))?;
    let values = vertices.vertices.iter().map(|v| {
        v.worlds().filter(|(w, _)| w.satisfies(mask)).map(|(_, p)| p).sum::<f64>()
    });
    let best = match direction {
        Direction::Maximize => values.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v)))),
        Direction::Minimize => values.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v)))),
    };
    best.ok_or(Error::Infeasible { core: Vec::new() })
}

/// `count` feasible points drawn as Dirichlet(1) mixtures of the vertices.
pub fn sample_feasible(cs: &ConstraintSystem, count: usize, seed: u64) -> Result<Vec<Distribution>> {
    let vertices = enumerate_vertices(cs)?;
    if vertices.is_empty() {
        return Err(Error::Infeasible { core: Vec::new() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cs.num_worlds();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let weights: Vec<f64> = vertices
            .vertices
            .iter()
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = vec![0.0; n];
        for (v, w) in vertices.vertices.iter().zip(&weights) {
            for (xi, p) in x.iter_mut().zip(v.probs()) {
                *xi += w / total * p;
            }
        }
        out.push(Distribution::new(cs.atoms().to_vec(), x));
    }
    Ok(out)
}
