//! Maximum-entropy distribution over a constraint polytope.
//!
//! Worlds that every feasible distribution assigns zero probability are
//! found first with linear programs. On the remaining support the feasible
//! set has a strictly positive point, so the entropy maximizer has the
//! exponential-family form `pi(w) = exp(a_w . lambda)` and `lambda` minimizes
//! the convex dual `sum_w exp(a_w . lambda) - b . lambda`. That dual is solved
//! by Newton's method with a backtracking line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::worlds::ConstraintSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntOptions {
    pub max_iterations: usize,
    /// Required max constraint residual of the result.
    pub constraint_tol: f64,
    /// Required first-order stationarity residual of the result.
    pub stationarity_tol: f64,
    /// LP optimum at or below this marks worlds as forced to zero.
    pub support_tol: f64,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        MaxEntOptions {
            max_iterations: 500,
            constraint_tol: 1e-8,
            stationarity_tol: 1e-6,
            support_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntSolution {
    pub probs: Vec<f64>,
    /// Worlds with positive probability.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
}

/// Worlds that some feasible distribution gives positive probability.
/// `None` if the system is infeasible.
pub fn positive_support(cs: &ConstraintSystem, tol: f64) -> Result<Option<Vec<usize>>> {
    support_from(cs, tol, vec![false; cs.num_worlds()])
}

/// As [`positive_support`], with worlds already known to be positive marked
/// in `positive`.
fn support_from(cs: &ConstraintSystem, tol: f64, mut positive: Vec<bool>) -> Result<Option<Vec<usize>>> {
    let (a, b) = rows(cs);
    let n = cs.num_worlds();
    loop {
        let c: Vec<f64> = positive.iter().map(|&p| if p { 0.0 } else { 1.0 }).collect();
        if c.iter().all(|v| *v == 0.0) {
            break;
        }
        match lp::maximize(&c, &a, &b)? {
            LpOutcome::Infeasible => return Ok(None),
            LpOutcome::Optimal { x, value } => {
                if value <= tol {
                    break;
                }
                let mut grew = false;
                for (w, &xw) in x.iter().enumerate() {
                    if !positive[w] && xw > tol * 1e-3 {
                        positive[w] = true;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
        }
    }
    Ok(Some((0..n).filter(|&w| positive[w]).collect()))
}

fn rows(cs: &ConstraintSystem) -> (Vec<Vec<f64>>, Vec<f64>) {
    let a = cs.constraints().iter().map(|c| c.coeffs.clone()).collect();
    let b = cs.constraints().iter().map(|c| c.rhs).collect();
    (a, b)
}

/// Worlds above this probability in a converged full-support Newton run are
/// taken as positive without an LP.
const SEED_PROB: f64 = 1e-6;

/// Newton on the dual restricted to the columns of `a`. Returns the primal
/// point, the iteration count and the final gradient norm.
fn newton(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    norm_row: usize,
    max_iterations: usize,
) -> Result<(DVector<f64>, usize, f64)> {
    let (m, k) = a.shape();
    let primal = |lambda: &DVector<f64>| -> DVector<f64> { (a.transpose() * lambda).map(f64::exp) };
    let dual = |lambda: &DVector<f64>, p: &DVector<f64>| -> f64 { p.sum() - b.dot(lambda) };

    let mut lambda = DVector::zeros(m);
    lambda[norm_row] = -(k as f64).ln();
    let mut p = primal(&lambda);
    let mut value = dual(&lambda, &p);
    let mut iterations = 0;
    let mut grad = a * &p - b;

    while iterations < max_iterations && grad.amax() > 1e-14 {
        iterations += 1;

        let scaled = DMatrix::from_fn(m, k, |i, j| a[(i, j)] * p[j]);
        let hessian = &scaled * a.transpose();
        let step = hessian
            .svd(true, true)
            .solve(&(-&grad), 1e-14)
            .map_err(|e| Error::Internal(format!("newton system: {e}")))?;
        let slope = grad.dot(&step);
        if slope >= 0.0 {
            break;
        }

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let candidate = &lambda + &step * t;
            let cp = primal(&candidate);
            let cv = dual(&candidate, &cp);
            // Near the optimum the Armijo decrease drops below the rounding
            // of the dual value; a smaller gradient still marks progress.
            let progress = cv.is_finite()
                && (cv <= value + 1e-4 * t * slope || (a * &cp - b).amax() < grad.amax());
            if progress {
                lambda = candidate;
                p = cp;
                value = cv;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        grad = a * &p - b;
    }
    Ok((p, iterations, grad.amax()))
}

/// The entropy-maximizing distribution of `cs`.
pub fn maximize_entropy(cs: &ConstraintSystem, opts: &MaxEntOptions) -> Result<MaxEntSolution> {
    let m = cs.constraints().len();
    let n = cs.num_worlds();
    let norm_row = cs
        .constraints()
        .iter()
        .position(|c| matches!(c.origin, crate::worlds::Origin::Normalization))
        .ok_or_else(|| Error::Internal("constraint system lacks normalization".into()))?;
    let b = DVector::from_iterator(m, cs.constraints().iter().map(|c| c.rhs));
    let full = DMatrix::from_fn(m, n, |i, j| cs.constraints()[i].coeffs[j]);

    // Forced-zero worlds only drift towards zero here, so a converged run
    // identifies most of the support and leaves few worlds for the LPs.
    let (p_full, it_full, grad_full) = newton(&full, &b, norm_row, opts.max_iterations)?;
    let seeded = grad_full <= 1e-12;
    let seed = (0..n).map(|w| seeded && p_full[w] > SEED_PROB).collect();
    let support = support_from(cs, opts.support_tol, seed)?
        .ok_or(Error::Infeasible { core: Vec::new() })?;
    let k = support.len();

    let a = DMatrix::from_fn(m, k, |i, j| cs.constraints()[i].coeffs[support[j]]);
    let (p, iterations) = if seeded && k == n {
        (p_full, it_full)
    } else {
        let (p, it, _) = newton(&a, &b, norm_row, opts.max_iterations)?;
        (p, it_full + it)
    };

    let mut probs = vec![0.0; cs.num_worlds()];
    for (j, &w) in support.iter().enumerate() {
        probs[w] = p[j];
    }
    let constraint_residual = cs.max_residual(&probs);
    let stationarity_residual = stationarity(&a, &p);

    if constraint_residual > opts.constraint_tol || stationarity_residual > opts.stationarity_tol {
        return Err(Error::Convergence { iterations, constraint_residual, stationarity_residual });
    }
    Ok(MaxEntSolution { probs, support, iterations, constraint_residual, stationarity_residual })
}

/// Distance of the entropy gradient `-(ln p + 1)` from the row space of `a`,
/// i.e. the part of the gradient no multiplier can explain.
fn stationarity(a: &DMatrix<f64>, p: &DVector<f64>) -> f64 {
    let g = p.map(|v| -(v.ln() + 1.0));
    let at = a.transpose();
    match at.clone().svd(true, true).solve(&g, 1e-12) {
        Ok(mu) => (g - at * mu).amax(),
        Err(_) => f64::INFINITY,
    }
}
