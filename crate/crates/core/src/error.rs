use thiserror::Error;

use crate::system::ValidationReport;
use crate::worlds::Origin;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid system:\n{0}")]
    Validation(ValidationReport),

    #[error("internal input `{atom}` has {} producers{}", producers.len(), fmt_producers(producers))]
    AmbiguousProducer { atom: String, producers: Vec<String> },

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    #[error("rule head `{0}` is an external input; external inputs are facts from outside the system")]
    ExternalHead(String),

    #[error(
        "`{0}` is not a final output of the system; a holistic explanation requires the \
         explanandum to be the output of a model with no outgoing link"
    )]
    NotFinalOutput(String),

    #[error("the language is empty; there are no worlds to reason about")]
    EmptyLanguage,

    #[error("language has {atoms} atoms, over the cap of {cap}; prune to the explanandum's reachable set or raise the cap")]
    TooManyAtoms { atoms: usize, cap: usize },

    #[error("no consistent probability distribution exists; conflicting constraints: {}", fmt_core(core))]
    Infeasible { core: Vec<Origin> },

    #[error(
        "maximum-entropy solver did not converge after {iterations} iterations \
         (constraint residual {constraint_residual:.3e}, stationarity residual {stationarity_residual:.3e})"
    )]
    Convergence {
        iterations: usize,
        constraint_residual: f64,
        stationarity_residual: f64,
    },

    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    #[error("internal solver fault: {0}")]
    Internal(String),
}

fn fmt_producers(p: &[String]) -> String {
    if p.is_empty() {
        String::new()
    } else {
        format!(" ({})", p.join(", "))
    }
}

fn fmt_core(core: &[Origin]) -> String {
    if core.is_empty() {
        return "<unknown>".to_string();
    }
    core.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("; ")
}
