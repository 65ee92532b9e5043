//! Reconciliation of probabilistic explanations produced by interconnected
//! prediction models.
//!
//! A [`MultiModelSystem`] is compiled into a language of atoms and a set of
//! probabilistic rules ([`RuleBase`]). Rules become linear equalities over the
//! probabilities of possible worlds ([`ConstraintSystem`]), and a criterion
//! picks one consistent joint distribution out of the feasible polytope:
//!
//! * [`Criterion::Optimistic`] maximizes the probability of the explanandum,
//! * [`Criterion::Pessimistic`] minimizes it,
//! * [`Criterion::Laplace`] picks the maximum-entropy distribution.
//!
//! The [`oracle`] module holds brute-force vertex enumeration used to
//! cross-check the solvers on small instances.

pub mod compiler;
pub mod error;
pub mod explain;
pub mod lp;
pub mod maxent;
pub mod oracle;
pub mod random;
pub mod system;
pub mod worlds;

pub use compiler::{compile, independent, reachable, reachable_set, PRule, RuleBase};
pub use error::{Error, Result};
pub use explain::{
    check_feasible, holistic_explanation, holistic_explanation_with, solve_extremal, solve_maxent,
    Criterion, Direction, ExplainOptions, Feasibility, HolisticExplanation,
};
pub use maxent::MaxEntOptions;
pub use system::{
    final_outputs, infer_links, validate_system, Atom, Model, ModelId, MultiModelSystem,
    ProbEntry, ValidationReport, Violation,
};
pub use worlds::{
    build_constraints, cc_set, entails, Constraint, ConstraintSystem, Distribution, Origin, World,
    DEFAULT_ATOM_CAP,
};
