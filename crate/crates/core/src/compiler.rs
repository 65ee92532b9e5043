//! Compilation of a multi-model system into a language and a set of
//! probabilistic rules, plus rule-graph reachability and pruning.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{Atom, MultiModelSystem};

/// `head <- body : [theta]`: the probability of `head` given the conjunction
/// of `body` is `theta`. An empty body makes it a fact about `Pr(head)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PRule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub theta: f64,
}

impl PRule {
    pub fn new<I, A>(head: impl Into<Atom>, body: I, theta: f64) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        PRule {
            head: head.into(),
            body: body.into_iter().map(Into::into).collect(),
            theta,
        }
    }

    pub fn fact(head: impl Into<Atom>, theta: f64) -> Self {
        PRule::new(head, Vec::<Atom>::new(), theta)
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

impl fmt::Display for PRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<&str> = self.body.iter().map(Atom::name).collect();
        if body.is_empty() {
            write!(f, "{} <- : [{}]", self.head, self.theta)
        } else {
            write!(f, "{} <- {} : [{}]", self.head, body.join(", "), self.theta)
        }
    }
}

/// A language (ordered, duplicate-free) together with rules over it.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleBase {
    language: Vec<Atom>,
    rules: Vec<PRule>,
}

impl RuleBase {
    /// Builds a rule base, checking that the language has no duplicates, that
    /// every rule mentions only language atoms, and that each rule is well
    /// formed (head not in body, distinct body atoms, theta in [0, 1]).
    pub fn new(language: Vec<Atom>, rules: Vec<PRule>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &language {
            if !seen.insert(a) {
                return Err(Error::Internal(format!("atom `{a}` appears twice in the language")));
            }
        }
        for r in &rules {
            if !seen.contains(&r.head) {
                return Err(Error::UnknownAtom(r.head.to_string()));
            }
            let mut body = BTreeSet::new();
            for b in &r.body {
                if !seen.contains(b) {
                    return Err(Error::UnknownAtom(b.to_string()));
                }
                if *b == r.head || !body.insert(b) {
                    return Err(Error::Internal(format!("malformed rule {r}")));
                }
            }
            if !(0.0..=1.0).contains(&r.theta) {
                return Err(Error::Internal(format!("rule {r} has probability outside [0, 1]")));
            }
        }
        Ok(RuleBase { language, rules })
    }

    pub fn language(&self) -> &[Atom] {
        &self.language
    }

    pub fn rules(&self) -> &[PRule] {
        &self.rules
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.language.contains(atom)
    }

    fn require(&self, atom: &Atom) -> Result<()> {
        if self.contains(atom) {
            Ok(())
        } else {
            Err(Error::UnknownAtom(atom.to_string()))
        }
    }

    /// Atoms appearing in some body of a rule whose head is `atom`.
    fn parents<'a>(&'a self, atom: &'a Atom) -> impl Iterator<Item = &'a Atom> + 'a {
        self.rules
            .iter()
            .filter(move |r| r.head == *atom)
            .flat_map(|r| r.body.iter())
    }

    /// All atoms from which `target` is reachable.
    fn ancestors<'a>(&'a self, target: &'a Atom) -> BTreeSet<&'a Atom> {
        let mut found = BTreeSet::new();
        let mut stack: Vec<&Atom> = self.parents(target).collect();
        while let Some(a) = stack.pop() {
            if found.insert(a) {
                stack.extend(self.parents(a));
            }
        }
        found
    }
}

/// Maps a system to its language (all model outputs) and rule set (one rule
/// per table entry).
///
/// Entries conditioned only on external inputs become facts; entries with
/// internal inputs become conditional rules over those internal inputs.
/// External atoms in a mixed condition are dropped, since external inputs
/// are known facts.
pub fn compile(s: &MultiModelSystem) -> Result<RuleBase> {
    s.ensure_valid()?;

    let mut language = Vec::new();
    let mut seen = BTreeSet::new();
    for m in s.models() {
        for o in &m.outputs {
            if seen.insert(o.clone()) {
                language.push(o.clone());
            }
        }
    }

    let externals: BTreeSet<&Atom> = s
        .models()
        .iter()
        .flat_map(|m| m.external_inputs.iter())
        .collect();

    let mut rules = Vec::new();
    for m in s.models() {
        for e in &m.table {
            if externals.contains(&e.output) {
                return Err(Error::ExternalHead(e.output.to_string()));
            }
            let body: Vec<Atom> = e.given.iter().filter(|g| m.is_internal(g)).cloned().collect();
            rules.push(PRule { head: e.output.clone(), body, theta: e.theta });
        }
    }

    RuleBase::new(language, rules)
}

/// Whether `target` is reachable from `source`: some rule with head `target`
/// has `source` in its body, or transitively so.
pub fn reachable(target: &Atom, source: &Atom, rb: &RuleBase) -> Result<bool> {
    rb.require(target)?;
    rb.require(source)?;
    Ok(rb.ancestors(target).contains(source))
}

/// Two atoms are independent iff neither is reachable from the other.
pub fn independent(a: &Atom, b: &Atom, rb: &RuleBase) -> Result<bool> {
    Ok(!reachable(a, b, rb)? && !reachable(b, a, rb)?)
}

/// The sub-language of `phi` and every atom from which `phi` is reachable,
/// together with the rules whose heads lie in it. Atom and rule order are
/// inherited from `rb`.
pub fn reachable_set(phi: &Atom, rb: &RuleBase) -> Result<RuleBase> {
    rb.require(phi)?;
    let mut keep = rb.ancestors(phi);
    keep.insert(phi);
    let language: Vec<Atom> = rb.language.iter().filter(|a| keep.contains(a)).cloned().collect();
    let rules: Vec<PRule> = rb.rules.iter().filter(|r| keep.contains(&r.head)).cloned().collect();
    RuleBase::new(language, rules)
}

/// Reachability closure over the whole language, as a lookup from each atom
/// to the set of atoms it is reachable from.
pub fn reachability_closure(rb: &RuleBase) -> HashMap<&Atom, BTreeSet<&Atom>> {
    rb.language.iter().map(|a| (a, rb.ancestors(a))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::tests::brain_models;
    use crate::system::{final_outputs, Model};

    fn brain_rules() -> RuleBase {
        compile(&MultiModelSystem::from_models(brain_models()).unwrap()).unwrap()
    }

    fn a(s: &str) -> Atom {
        Atom::from(s)
    }

    fn has_rule(rb: &RuleBase, r: &PRule) -> bool {
        rb.rules().iter().any(|x| x == r)
    }

    #[test]
    fn compile_brain_system() {
        let rb = brain_rules();
        assert_eq!(rb.language(), &[a("BA"), a("CA"), a("HR"), a("AD")]);
        let expected = [
            PRule::fact("BA", 0.7),
            PRule::new("HR", ["BA"], 0.2),
            PRule::new("AD", ["BA"], 0.6),
            PRule::fact("CA", 0.6),
            PRule::new("AD", ["CA"], 0.5),
        ];
        assert_eq!(rb.rules().len(), expected.len());
        for r in &expected {
            assert!(has_rule(&rb, r), "missing {r}");
        }
    }

    #[test]
    fn compile_single_entry() {
        let s = MultiModelSystem::from_models(vec![Model::new("m")
            .external(["ext"])
            .outputs(["X"])
            .entry("X", ["ext"], 0.5)])
        .unwrap();
        let rb = compile(&s).unwrap();
        assert_eq!(rb.language(), &[a("X")]);
        assert_eq!(rb.rules(), &[PRule::fact("X", 0.5)]);
    }

    #[test]
    fn compile_certainty_chain() {
        let s = MultiModelSystem::from_models(vec![
            Model::new("a").external(["E"]).outputs(["X"]).entry("X", ["E"], 0.3),
            Model::new("b").internal(["X"]).outputs(["Y"]).entry("Y", ["X"], 1.0),
        ])
        .unwrap();
        let rb = compile(&s).unwrap();
        assert_eq!(rb.rules(), &[PRule::fact("X", 0.3), PRule::new("Y", ["X"], 1.0)]);
    }

    #[test]
    fn mixed_condition_drops_external_atoms() {
        let s = MultiModelSystem::from_models(vec![
            Model::new("a").outputs(["X"]),
            Model::new("b")
                .external(["E"])
                .internal(["X"])
                .outputs(["Y"])
                .entry("Y", ["E", "X"], 0.4),
        ])
        .unwrap();
        let rb = compile(&s).unwrap();
        assert_eq!(rb.rules(), &[PRule::new("Y", ["X"], 0.4)]);
    }

    #[test]
    fn one_rule_per_entry() {
        let s = MultiModelSystem::from_models(brain_models()).unwrap();
        let entries: usize = s.models().iter().map(|m| m.table.len()).sum();
        assert_eq!(compile(&s).unwrap().rules().len(), entries);
    }

    #[test]
    fn reachability_on_brain_rules() {
        let rb = brain_rules();
        assert!(reachable(&a("AD"), &a("BA"), &rb).unwrap());
        assert!(!reachable(&a("BA"), &a("AD"), &rb).unwrap());
        assert!(!reachable(&a("HR"), &a("CA"), &rb).unwrap());
        for x in rb.language() {
            assert!(!reachable(x, x, &rb).unwrap());
            assert!(independent(x, x, &rb).unwrap());
        }
        assert!(independent(&a("HR"), &a("AD"), &rb).unwrap());
        assert!(!independent(&a("AD"), &a("BA"), &rb).unwrap());
        assert!(matches!(reachable(&a("Q"), &a("BA"), &rb), Err(Error::UnknownAtom(_))));
    }

    #[test]
    fn self_cycle_is_not_independent() {
        // Rule graphs built by hand may be cyclic even though compiled ones are not.
        let rb = RuleBase::new(
            vec![a("X"), a("Y")],
            vec![PRule::new("X", ["Y"], 0.5), PRule::new("Y", ["X"], 0.5)],
        )
        .unwrap();
        assert!(reachable(&a("X"), &a("X"), &rb).unwrap());
        assert!(!independent(&a("X"), &a("X"), &rb).unwrap());
    }

    #[test]
    fn reachable_set_for_ad() {
        let rb = brain_rules();
        let pruned = reachable_set(&a("AD"), &rb).unwrap();
        assert_eq!(pruned.language(), &[a("BA"), a("CA"), a("AD")]);
        assert_eq!(pruned.rules().len(), 4);
        for r in [
            PRule::fact("BA", 0.7),
            PRule::new("AD", ["BA"], 0.6),
            PRule::fact("CA", 0.6),
            PRule::new("AD", ["CA"], 0.5),
        ] {
            assert!(has_rule(&pruned, &r));
        }
    }

    #[test]
    fn reachable_set_for_hr() {
        let pruned = reachable_set(&a("HR"), &brain_rules()).unwrap();
        assert_eq!(pruned.language(), &[a("BA"), a("HR")]);
        assert_eq!(pruned.rules(), &[PRule::fact("BA", 0.7), PRule::new("HR", ["BA"], 0.2)]);
    }

    #[test]
    fn reachable_set_single() {
        let rb = RuleBase::new(vec![a("X")], vec![PRule::fact("X", 0.5)]).unwrap();
        assert_eq!(reachable_set(&a("X"), &rb).unwrap(), rb);
    }

    #[test]
    fn final_outputs_are_pairwise_independent() {
        let s = MultiModelSystem::from_models(brain_models()).unwrap();
        let rb = compile(&s).unwrap();
        let finals: Vec<Atom> = final_outputs(&s).unwrap().into_iter().collect();
        for x in &finals {
            for y in &finals {
                if x != y {
                    assert!(independent(x, y, &rb).unwrap());
                }
            }
        }
    }

    #[test]
    fn closure_matches_reachable() {
        let rb = brain_rules();
        let closure = reachability_closure(&rb);
        for t in rb.language() {
            for s in rb.language() {
                assert_eq!(closure[t].contains(s), reachable(t, s, &rb).unwrap());
            }
        }
    }

    #[test]
    fn rule_base_rejects_bad_rules() {
        assert!(RuleBase::new(vec![a("X")], vec![PRule::new("X", ["X"], 0.5)]).is_err());
        assert!(RuleBase::new(vec![a("X")], vec![PRule::fact("Y", 0.5)]).is_err());
        assert!(RuleBase::new(vec![a("X"), a("X")], vec![]).is_err());
        assert!(RuleBase::new(vec![a("X")], vec![PRule::fact("X", 1.2)]).is_err());
    }
}
