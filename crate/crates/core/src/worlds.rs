//! Possible worlds over a language and the linear constraint system a rule
//! base induces on world probabilities.
//!
//! A world over `n` atoms is an `n`-bit truth assignment. World index `k`
//! assigns atom `i` (in language order) the bit `n - 1 - i` of `k`, so the
//! first atom is the most significant bit and ascending indices list worlds
//! as `00..0, 00..1, ..., 11..1`. Bit strings stay internal: reports label
//! worlds with explicit atom assignments.

use std::fmt;

use serde::Serialize;

use crate::compiler::{PRule, RuleBase};
use crate::error::{Error, Result};
use crate::system::Atom;

pub const DEFAULT_ATOM_CAP: usize = 24;

/// Hard ceiling for any cap override; world indices are `u64` bit masks.
pub const MAX_ATOM_CAP: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct World {
    bits: u64,
    width: u32,
}

impl World {
    pub fn new(bits: u64, width: usize) -> Self {
        debug_assert!(width <= 64 && (width == 64 || bits >> width == 0));
        World { bits, width: width as u32 }
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Truth value of the atom at position `i` of the language.
    pub fn get(&self, i: usize) -> bool {
        (self.bits >> (self.width as usize - 1 - i)) & 1 == 1
    }

    /// True iff every atom selected by `mask` is true in this world.
    pub fn satisfies(&self, mask: u64) -> bool {
        self.bits & mask == mask
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyLanguage);
    }
    let cap = cap.min(MAX_ATOM_CAP);
    if n > cap {
        return Err(Error::TooManyAtoms { atoms: n, cap });
    }
    Ok(())
}

/// The complete conjunction set: all `2^n` worlds in ascending order.
pub fn cc_set(atoms: &[Atom]) -> Result<Vec<World>> {
    cc_set_capped(atoms, DEFAULT_ATOM_CAP)
}

pub fn cc_set_capped(atoms: &[Atom], cap: usize) -> Result<Vec<World>> {
    let n = atoms.len();
    check_cap(n, cap)?;
    Ok((0..1u64 << n).map(|bits| World::new(bits, n)).collect())
}

/// Bit mask selecting `conj` within `atoms`.
pub fn conjunction_mask(atoms: &[Atom], conj: &[Atom]) -> Result<u64> {
    let n = atoms.len();
    conj.iter().try_fold(0u64, |mask, a| {
        let i = atoms
            .iter()
            .position(|x| x == a)
            .ok_or_else(|| Error::UnknownAtom(a.to_string()))?;
        Ok(mask | 1 << (n - 1 - i))
    })
}

/// Whether world `w` over `atoms` entails the conjunction `conj`.
/// The empty conjunction is entailed by every world.
pub fn entails(w: &World, conj: &[Atom], atoms: &[Atom]) -> Result<bool> {
    Ok(w.satisfies(conjunction_mask(atoms, conj)?))
}

/// Where a constraint row came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Normalization,
    Rule { index: usize, rule: PRule },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Normalization => f.write_str("normalization"),
            Origin::Rule { index, rule } => write!(f, "rule #{index} ({rule})"),
        }
    }
}

/// One linear equality `sum_w coeffs[w] * pi(w) = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub origin: Origin,
}

impl Constraint {
    pub fn residual(&self, probs: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(probs).map(|(c, p)| c * p).sum();
        (lhs - self.rhs).abs()
    }
}

/// Normalization plus one row per rule, over the `2^n` world probabilities.
///
/// Facts `h <- : [t]` give `sum_{w |= h} pi(w) = t`. Conditional rules
/// `h <- b : [t]` are stored homogeneously as
/// `(t - 1) * sum_{w |= h & b} pi(w) + t * sum_{w |= b, w |/= h} pi(w) = 0`,
/// which is `t * Pr(b) = Pr(h & b)` rearranged without division.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    atoms: Vec<Atom>,
    constraints: Vec<Constraint>,
}

impl ConstraintSystem {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn num_worlds(&self) -> usize {
        1usize << self.atoms.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn worlds(&self) -> impl Iterator<Item = World> + '_ {
        let n = self.atoms.len();
        (0..self.num_worlds() as u64).map(move |b| World::new(b, n))
    }

    pub fn mask(&self, conj: &[Atom]) -> Result<u64> {
        conjunction_mask(&self.atoms, conj)
    }

    /// Indicator vector of the worlds entailing `conj`.
    pub fn indicator(&self, conj: &[Atom]) -> Result<Vec<f64>> {
        let mask = self.mask(conj)?;
        Ok(self.worlds().map(|w| if w.satisfies(mask) { 1.0 } else { 0.0 }).collect())
    }

    /// World indices entailing `conj`.
    pub fn support_of(&self, conj: &[Atom]) -> Result<Vec<usize>> {
        let mask = self.mask(conj)?;
        Ok(self.worlds().filter(|w| w.satisfies(mask)).map(|w| w.index()).collect())
    }

    pub fn rules(&self) -> impl Iterator<Item = &PRule> {
        self.constraints.iter().filter_map(|c| match &c.origin {
            Origin::Rule { rule, .. } => Some(rule),
            Origin::Normalization => None,
        })
    }

    /// Largest residual over the stored rows.
    pub fn max_residual(&self, probs: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.residual(probs)).fold(0.0, f64::max)
    }

    /// Residuals of the rules in their original, non-rearranged form:
    /// `|sum pi - 1|` for normalization, `|Pr(h) - t|` for facts and
    /// `|t * Pr(b) - Pr(h & b)|` for conditionals.
    pub fn rule_residuals(&self, probs: &[f64]) -> Vec<f64> {
        let pr = |mask: u64| -> f64 {
            self.worlds()
                .filter(|w| w.satisfies(mask))
                .map(|w| probs[w.index()])
                .sum()
        };
        self.constraints
            .iter()
            .map(|c| match &c.origin {
                Origin::Normalization => (probs.iter().sum::<f64>() - 1.0).abs(),
                Origin::Rule { rule, .. } => {
                    let head = self.mask(std::slice::from_ref(&rule.head)).unwrap();
                    let body = self.mask(&rule.body).unwrap();
                    if rule.is_fact() {
                        (pr(head) - rule.theta).abs()
                    } else {
                        (rule.theta * pr(body) - pr(head | body)).abs()
                    }
                }
            })
            .collect()
    }
}

/// Assembles the constraint system of a rule base under the default atom cap.
pub fn build_constraints(rb: &RuleBase) -> Result<ConstraintSystem> {
    build_constraints_capped(rb, DEFAULT_ATOM_CAP)
}

pub fn build_constraints_capped(rb: &RuleBase, cap: usize) -> Result<ConstraintSystem> {
    let atoms = rb.language().to_vec();
    let n = atoms.len();
    check_cap(n, cap)?;
    let num_worlds = 1usize << n;

    let mut constraints = Vec::with_capacity(rb.rules().len() + 1);
    constraints.push(Constraint {
        coeffs: vec![1.0; num_worlds],
        rhs: 1.0,
        origin: Origin::Normalization,
    });

    for (index, rule) in rb.rules().iter().enumerate() {
        let head = conjunction_mask(&atoms, std::slice::from_ref(&rule.head))?;
        let body = conjunction_mask(&atoms, &rule.body)?;
        let t = rule.theta;
        let (coeffs, rhs) = if rule.is_fact() {
            let row = (0..num_worlds as u64)
                .map(|w| if w & head == head { 1.0 } else { 0.0 })
                .collect();
            (row, t)
        } else {
            let both = head | body;
            let row = (0..num_worlds as u64)
                .map(|w| {
                    if w & both == both {
                        t - 1.0
                    } else if w & body == body {
                        t
                    } else {
                        0.0
                    }
                })
                .collect();
            (row, 0.0)
        };
        constraints.push(Constraint {
            coeffs,
            rhs,
            origin: Origin::Rule { index, rule: rule.clone() },
        });
    }

    Ok(ConstraintSystem { atoms, constraints })
}

/// A probability for every world over an ordered atom list.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    atoms: Vec<Atom>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(atoms: Vec<Atom>, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), 1usize << atoms.len(), "one probability per world");
        Distribution { atoms, probs }
    }

    pub fn uniform(atoms: Vec<Atom>) -> Self {
        let n = 1usize << atoms.len();
        Distribution::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn worlds(&self) -> impl Iterator<Item = (World, f64)> + '_ {
        let n = self.atoms.len();
        self.probs.iter().enumerate().map(move |(i, &p)| (World::new(i as u64, n), p))
    }

    /// Probability of world with the given truth assignment (missing atoms
    /// default to false).
    pub fn prob_of_assignment(&self, truth: &[(&str, bool)]) -> Result<f64> {
        let mut bits = 0u64;
        for (name, value) in truth {
            if *value {
                bits |= conjunction_mask(&self.atoms, &[Atom::from(*name)])?;
            } else {
                conjunction_mask(&self.atoms, &[Atom::from(*name)])?;
            }
        }
        Ok(self.probs[bits as usize])
    }

    /// Probability of the conjunction `conj`.
    pub fn probability(&self, conj: &[Atom]) -> Result<f64> {
        let mask = conjunction_mask(&self.atoms, conj)?;
        Ok(self.worlds().filter(|(w, _)| w.satisfies(mask)).map(|(_, p)| p).sum())
    }

    pub fn marginals(&self) -> Vec<(Atom, f64)> {
        self.atoms
            .iter()
            .map(|a| (a.clone(), self.probability(std::slice::from_ref(a)).unwrap()))
            .collect()
    }

    /// Shannon entropy in nats, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Labels of the world at `index` as `(atom, truth)` pairs.
    pub fn assignment(&self, index: usize) -> Vec<(Atom, bool)> {
        let w = World::new(index as u64, self.atoms.len());
        self.atoms.iter().enumerate().map(|(i, a)| (a.clone(), w.get(i))).collect()
    }

    /// Checks the probability axioms within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| (-tol..=1.0 + tol).contains(p))
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}
