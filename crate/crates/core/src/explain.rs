//! Criterion-driven selection of a consistent distribution: the holistic
//! explanation of a final output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compiler::{compile, reachable_set};
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::maxent::{maximize_entropy, MaxEntOptions, MaxEntSolution};
use crate::system::{final_outputs, Atom, MultiModelSystem};
use crate::worlds::{build_constraints_capped, ConstraintSystem, Distribution, Origin, DEFAULT_ATOM_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Maximize the probability of the explanandum.
    Optimistic,
    /// Minimize the probability of the explanandum.
    Pessimistic,
    /// Maximum entropy.
    Laplace,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Optimistic, Criterion::Pessimistic, Criterion::Laplace];

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Optimistic => "optimistic",
            Criterion::Pessimistic => "pessimistic",
            Criterion::Laplace => "laplace",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "optimistic" => Ok(Criterion::Optimistic),
            "pessimistic" => Ok(Criterion::Pessimistic),
            "laplace" => Ok(Criterion::Laplace),
            other => Err(format!("unknown criterion `{other}` (expected optimistic, pessimistic or laplace)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    /// Some consistent distribution, as a witness.
    Feasible(Distribution),
    /// An irreducible set of conflicting rules.
    Infeasible { core: Vec<Origin> },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

fn rows_of(cs: &ConstraintSystem, keep: impl Fn(usize) -> bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    cs.constraints()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, c)| (c.coeffs.clone(), c.rhs))
        .unzip()
}

/// Decides whether `cs` admits a consistent distribution. When it does not,
/// a deletion filter shrinks the rule rows to an irreducible infeasible
/// subset; the normalization row is always kept and is not reported.
pub fn check_feasible(cs: &ConstraintSystem) -> Result<Feasibility> {
    let (a, b) = rows_of(cs, |_| true);
    if let Some(x) = lp::feasible_point(&a, &b)? {
        return Ok(Feasibility::Feasible(Distribution::new(cs.atoms().to_vec(), x)));
    }

    let is_rule = |i: usize| matches!(cs.constraints()[i].origin, Origin::Rule { .. });
    let mut active: Vec<bool> = vec![true; cs.constraints().len()];
    for i in 0..active.len() {
        if !is_rule(i) {
            continue;
        }
        active[i] = false;
        let (a, b) = rows_of(cs, |j| active[j]);
        if lp::feasible_point(&a, &b)?.is_some() {
            active[i] = true;
        }
    }
    let core = cs
        .constraints()
        .iter()
        .enumerate()
        .filter(|(i, _)| active[*i] && is_rule(*i))
        .map(|(_, c)| c.origin.clone())
        .collect();
    Ok(Feasibility::Infeasible { core })
}

fn infeasible(cs: &ConstraintSystem) -> Error {
    match check_feasible(cs) {
        Ok(Feasibility::Infeasible { core }) => Error::Infeasible { core },
        Ok(Feasibility::Feasible(_)) => {
            Error::Internal("solver reported infeasibility on a feasible system".into())
        }
        Err(e) => e,
    }
}

/// Optimal `Pr(phi)` over all consistent distributions, with a distribution
/// attaining it.
pub fn solve_extremal(
    cs: &ConstraintSystem,
    phi: &Atom,
    direction: Direction,
) -> Result<(f64, Distribution)> {
    let c = cs.indicator(std::slice::from_ref(phi))?;
    let (a, b) = rows_of(cs, |_| true);
    let outcome = match direction {
        Direction::Maximize => lp::maximize(&c, &a, &b)?,
        Direction::Minimize => lp::minimize(&c, &a, &b)?,
    };
    match outcome {
        LpOutcome::Optimal { x, value } => Ok((value, Distribution::new(cs.atoms().to_vec(), x))),
        LpOutcome::Infeasible => Err(infeasible(cs)),
    }
}

/// The maximum-entropy consistent distribution.
pub fn solve_maxent(cs: &ConstraintSystem) -> Result<Distribution> {
    let sol = solve_maxent_with(cs, &MaxEntOptions::default())?;
    Ok(Distribution::new(cs.atoms().to_vec(), sol.probs))
}

pub fn solve_maxent_with(cs: &ConstraintSystem, opts: &MaxEntOptions) -> Result<MaxEntSolution> {
    match maximize_entropy(cs, opts) {
        Err(Error::Infeasible { .. }) => Err(infeasible(cs)),
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplainOptions {
    pub atom_cap: usize,
    /// Restrict computation to the explanandum's reachable set.
    pub pruning: bool,
    pub maxent: MaxEntOptions,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions { atom_cap: DEFAULT_ATOM_CAP, pruning: true, maxent: MaxEntOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolisticExplanation {
    pub explanandum: Atom,
    pub criterion: Criterion,
    pub distribution: Distribution,
    /// `Pr(explanandum)` under `distribution`.
    pub objective: f64,
    /// Entropy of `distribution` in nats.
    pub entropy: f64,
    pub marginals: Vec<(Atom, f64)>,
    /// The language the distribution ranges over.
    pub pruned_language: Vec<Atom>,
    /// Largest residual of the returned distribution on the constraint rows.
    pub max_residual: f64,
}

/// Holistic explanation of `phi` under `psi` with default options.
pub fn holistic_explanation(
    s: &MultiModelSystem,
    phi: &Atom,
    psi: Criterion,
) -> Result<HolisticExplanation> {
    holistic_explanation_with(s, phi, psi, &ExplainOptions::default())
}

/// Builds the constraint system a query runs against: compiled rules,
/// pruned to the reachable set of `phi` when requested.
pub fn query_constraints(
    s: &MultiModelSystem,
    phi: &Atom,
    opts: &ExplainOptions,
) -> Result<ConstraintSystem> {
    let finals = final_outputs(s)?;
    if !finals.contains(phi) {
        return Err(Error::NotFinalOutput(phi.to_string()));
    }
    let rb = compile(s)?;
    let rb = if opts.pruning { reachable_set(phi, &rb)? } else { rb };
    build_constraints_capped(&rb, opts.atom_cap)
}

pub fn holistic_explanation_with(
    s: &MultiModelSystem,
    phi: &Atom,
    psi: Criterion,
    opts: &ExplainOptions,
) -> Result<HolisticExplanation> {
    let cs = query_constraints(s, phi, opts)?;
    let distribution = match psi {
        Criterion::Optimistic => solve_extremal(&cs, phi, Direction::Maximize)?.1,
        Criterion::Pessimistic => solve_extremal(&cs, phi, Direction::Minimize)?.1,
        Criterion::Laplace => {
            Distribution::new(cs.atoms().to_vec(), solve_maxent_with(&cs, &opts.maxent)?.probs)
        }
    };
    Ok(HolisticExplanation {
        explanandum: phi.clone(),
        criterion: psi,
        objective: distribution.probability(std::slice::from_ref(phi))?,
        entropy: distribution.entropy(),
        marginals: distribution.marginals(),
        pruned_language: cs.atoms().to_vec(),
        max_residual: cs.max_residual(distribution.probs()),
        distribution,
    })
}
