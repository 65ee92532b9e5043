//! Seeded random multi-model systems for property testing and benchmarks.
//!
//! Every atom is the single output of its own model `m<i>`; model `i` may
//! read any earlier atom as an internal input and always has one external
//! input `E<i>`. Tables hold facts (conditioned on the external input) and
//! conditional entries over non-empty subsets of the internal inputs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::system::{Atom, Model, MultiModelSystem, ProbEntry};

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSystemConfig {
    pub max_atoms: usize,
    pub max_rules: usize,
    /// Chance that a model gets a fact entry.
    pub fact_prob: f64,
    /// Chance that an earlier atom is wired in as an internal input.
    pub link_prob: f64,
    /// Chance that a probability is exactly 0 or 1.
    pub extreme_prob: f64,
}

impl Default for RandomSystemConfig {
    fn default() -> Self {
        RandomSystemConfig {
            max_atoms: 4,
            max_rules: 6,
            fact_prob: 0.6,
            link_prob: 0.5,
            extreme_prob: 0.1,
        }
    }
}

fn theta<R: Rng>(rng: &mut R, cfg: &RandomSystemConfig) -> f64 {
    if rng.gen_bool(cfg.extreme_prob) {
        if rng.gen_bool(0.5) {
            1.0
        } else {
            0.0
        }
    } else {
        f64::from(rng.gen_range(1..100u32)) / 100.0
    }
}

/// A valid random system with at most `max_atoms` atoms and at most
/// `max_rules` table entries.
pub fn random_system<R: Rng>(rng: &mut R, cfg: &RandomSystemConfig) -> MultiModelSystem {
    let n = rng.gen_range(1..=cfg.max_atoms);
    let atoms: Vec<Atom> = (0..n).map(|i| Atom::new(format!("X{i}"))).collect();
    let mut budget = cfg.max_rules;
    let mut models = Vec::with_capacity(n);

    for i in 0..n {
        let ext = Atom::new(format!("E{i}"));
        let internal: Vec<Atom> =
            atoms[..i].iter().filter(|_| rng.gen_bool(cfg.link_prob)).cloned().collect();

        let mut candidates: Vec<Vec<Atom>> = Vec::new();
        if rng.gen_bool(cfg.fact_prob) {
            candidates.push(vec![ext.clone()]);
        }
        for mask in 1u32..(1 << internal.len()) {
            if rng.gen_bool(0.5) {
                let given = internal
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, a)| a.clone())
                    .collect();
                candidates.push(given);
            }
        }
        candidates.shuffle(rng);
        candidates.truncate(budget);
        budget -= candidates.len();

        let table = candidates
            .into_iter()
            .map(|given| ProbEntry { output: atoms[i].clone(), given, theta: theta(rng, cfg) })
            .collect();
        models.push(Model {
            id: format!("m{i}").as_str().into(),
            external_inputs: vec![ext],
            internal_inputs: internal,
            outputs: vec![atoms[i].clone()],
            table,
        });
    }
    MultiModelSystem::from_models(models).expect("generated systems are valid by construction")
}

/// Adds to one model a second external input and a fact entry conditioned
/// on it, with a probability different from an existing fact on the same
/// output. Returns the modified system and the contradicted atom.
pub fn with_contradictory_facts<R: Rng>(
    rng: &mut R,
    s: &MultiModelSystem,
) -> (MultiModelSystem, Atom) {
    let mut models = s.models().to_vec();
    let idx = rng.gen_range(0..models.len());
    let m = &mut models[idx];
    let out = m.outputs[0].clone();
    let first_ext = m.external_inputs[0].clone();

    let existing = m
        .table
        .iter()
        .find(|e| e.output == out && e.given == [first_ext.clone()])
        .map(|e| e.theta);
    let base = match existing {
        Some(t) => t,
        None => {
            let t = f64::from(rng.gen_range(0..=100u32)) / 100.0;
            m.table.push(ProbEntry { output: out.clone(), given: vec![first_ext], theta: t });
            t
        }
    };
    let shift = f64::from(rng.gen_range(5..=50u32)) / 100.0;
    let other = if base + shift <= 1.0 { base + shift } else { base - shift };

    let extra = Atom::new(format!("{}_alt", m.id));
    m.external_inputs.push(extra.clone());
    m.table.push(ProbEntry { output: out.clone(), given: vec![extra], theta: other });

    let system = MultiModelSystem::from_models(models).expect("still valid");
    (system, out)
}
