//! Command-line front end: load a system description, answer one
//! holistic-explanation query, and print a table or a JSON report.
//!
//! Exit codes: 0 success, 1 input/validation/precondition errors,
//! 2 infeasible system, 3 resource, convergence or verification failures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use holex_core::explain::query_constraints;
use holex_core::oracle::{oracle_extremal, sample_feasible};
use holex_core::worlds::entropy;
use holex_core::{
    holistic_explanation_with, Atom, Criterion, Direction, Error, ExplainOptions,
    HolisticExplanation, Model, ModelId, MultiModelSystem, Origin, ProbEntry, DEFAULT_ATOM_CAP,
};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Seed of the feasible-point sample used by `--verify` under the Laplace criterion.
const VERIFY_SEED: u64 = 0;
const VERIFY_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Optimistic,
    Pessimistic,
    Laplace,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Optimistic => Criterion::Optimistic,
            CriterionArg::Pessimistic => Criterion::Pessimistic,
            CriterionArg::Laplace => Criterion::Laplace,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

/// Compute the holistic explanation of a final output of a multi-model system.
#[derive(Clone, Debug, Parser)]
#[command(name = "holex", version)]
pub struct QuerySpec {
    /// System description (JSON).
    #[arg(long)]
    pub system: PathBuf,

    /// Final output to explain.
    #[arg(long)]
    pub explanandum: String,

    #[arg(long, value_enum)]
    pub criterion: CriterionArg,

    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,

    /// Maximum number of atoms in the (pruned) language.
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
    pub max_atoms: usize,

    /// Solve over the whole language instead of the reachable set (testing only).
    #[arg(long)]
    pub no_pruning: bool,

    /// Cross-check the result with the brute-force oracle (small systems only).
    #[arg(long)]
    pub verify: bool,

    /// Tolerance for residual checks and oracle agreement.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("`{path}`: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => EXIT_INVALID,
            CliError::Verification(_) => EXIT_RESOURCE,
            CliError::Core(e) => match e {
                Error::Infeasible { .. } => EXIT_INFEASIBLE,
                Error::TooManyAtoms { .. }
                | Error::Convergence { .. }
                | Error::OracleScale(_)
                | Error::Internal(_) => EXIT_RESOURCE,
                Error::Validation(_)
                | Error::AmbiguousProducer { .. }
                | Error::UnknownAtom(_)
                | Error::ExternalHead(_)
                | Error::NotFinalOutput(_)
                | Error::EmptyLanguage => EXIT_INVALID,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub links: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    #[serde(default)]
    pub external_inputs: Vec<String>,
    #[serde(default)]
    pub internal_inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub prob: Vec<EntrySpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub output: String,
    #[serde(default)]
    pub given: Vec<String>,
    pub theta: f64,
}

impl SystemFile {
    pub fn into_system(self) -> Result<MultiModelSystem, Error> {
        let models: Vec<Model> = self
            .models
            .into_iter()
            .map(|m| Model {
                id: ModelId::new(m.id),
                external_inputs: m.external_inputs.into_iter().map(Atom::from).collect(),
                internal_inputs: m.internal_inputs.into_iter().map(Atom::from).collect(),
                outputs: m.outputs.into_iter().map(Atom::from).collect(),
                table: m
                    .prob
                    .into_iter()
                    .map(|e| ProbEntry::new(e.output, e.given, e.theta))
                    .collect(),
            })
            .collect();
        let system = match self.links {
            Some(links) => MultiModelSystem::new(
                models,
                links.into_iter().map(|(a, b)| (ModelId::new(a), ModelId::new(b))),
            ),
            None => {
                if models.is_empty() {
                    MultiModelSystem::new(models, [])
                } else {
                    let links = holex_core::infer_links(&models)?;
                    MultiModelSystem::new(models, links)
                }
            }
        };
        system.ensure_valid()?;
        Ok(system)
    }
}

/// Reads, parses and validates a system description.
pub fn load_system(path: &Path) -> Result<MultiModelSystem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let file: SystemFile = serde_json::from_str(&text)
        .map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
    Ok(file.into_system()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldReport {
    pub assignment: BTreeMap<String, bool>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub method: String,
    /// Oracle extremum (vertex enumeration) or the largest sampled entropy.
    pub oracle_value: f64,
    pub solver_value: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub explanandum: String,
    pub criterion: Criterion,
    pub atoms: Vec<String>,
    pub worlds: Vec<WorldReport>,
    pub marginals: BTreeMap<String, f64>,
    pub objective: f64,
    pub entropy: f64,
    pub pruned_language: Vec<String>,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

impl Report {
    pub fn from_explanation(e: &HolisticExplanation, verification: Option<Verification>) -> Self {
        let d = &e.distribution;
        let worlds = (0..d.probs().len())
            .map(|i| WorldReport {
                assignment: d
                    .assignment(i)
                    .into_iter()
                    .map(|(a, v)| (a.name().to_string(), v))
                    .collect(),
                prob: d.probs()[i],
            })
            .collect();
        Report {
            explanandum: e.explanandum.to_string(),
            criterion: e.criterion,
            atoms: d.atoms().iter().map(|a| a.to_string()).collect(),
            worlds,
            marginals: e.marginals.iter().map(|(a, p)| (a.to_string(), *p)).collect(),
            objective: e.objective,
            entropy: e.entropy,
            pruned_language: e.pruned_language.iter().map(|a| a.to_string()).collect(),
            feasible: true,
            verification,
        }
    }

    /// Recomputes (objective, entropy, marginals) from the world table.
    pub fn recompute_summary(&self) -> (f64, f64, BTreeMap<String, f64>) {
        let probs: Vec<f64> = self.worlds.iter().map(|w| w.prob).collect();
        let objective = self
            .worlds
            .iter()
            .filter(|w| w.assignment.get(&self.explanandum).copied().unwrap_or(false))
            .map(|w| w.prob)
            .sum();
        let marginals = self
            .atoms
            .iter()
            .map(|a| {
                let p = self.worlds.iter().filter(|w| w.assignment[a]).map(|w| w.prob).sum();
                (a.clone(), p)
            })
            .collect();
        (objective, entropy(&probs), marginals)
    }

    /// Probability of the world with exactly the given atoms true.
    pub fn prob_of(&self, truth: &BTreeMap<&str, bool>) -> Option<f64> {
        self.worlds
            .iter()
            .find(|w| w.assignment.iter().all(|(k, v)| truth.get(k.as_str()).copied() == Some(*v)))
            .map(|w| w.prob)
    }
}

#[derive(Clone, Debug, Serialize)]
struct InfeasibleReport<'a> {
    explanandum: &'a str,
    criterion: Criterion,
    feasible: bool,
    conflicts: Vec<String>,
}

/// Formats `x` with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn render_table(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "explanandum: {}", r.explanandum);
    let _ = writeln!(s, "criterion:   {}", r.criterion);
    let _ = writeln!(s, "language:    {}", r.pruned_language.join(", "));
    let _ = writeln!(s);

    let width = r.atoms.iter().map(String::len).max().unwrap_or(0).max(4);
    let mut header = String::new();
    for a in &r.atoms {
        let _ = write!(header, "{a:>width$}  ");
    }
    let _ = writeln!(s, "{header}probability");

    let mut order: Vec<usize> = (0..r.worlds.len()).collect();
    order.sort_by(|&i, &j| r.worlds[j].prob.total_cmp(&r.worlds[i].prob).then(i.cmp(&j)));
    for i in order {
        let w = &r.worlds[i];
        let mut line = String::new();
        for a in &r.atoms {
            let v = if w.assignment[a] { "T" } else { "F" };
            let _ = write!(line, "{v:>width$}  ");
        }
        let _ = writeln!(s, "{line}{}", fmt_sig(w.prob, 6));
    }

    let _ = writeln!(s);
    let _ = writeln!(s, "marginals:");
    for a in &r.atoms {
        let _ = writeln!(s, "  Pr({a}) = {}", fmt_sig(r.marginals[a], 6));
    }
    let _ = writeln!(s, "objective: Pr({}) = {}", r.explanandum, fmt_sig(r.objective, 6));
    let _ = writeln!(s, "entropy:   {} nats", fmt_sig(r.entropy, 6));
    if let Some(v) = &r.verification {
        let verdict = if v.agrees { "agrees" } else { "DISAGREES" };
        let _ = writeln!(
            s,
            "oracle:    {} = {} ({verdict} within {:e})",
            v.method,
            fmt_sig(v.oracle_value, 6),
            v.tolerance
        );
    }
    s
}

fn verify(
    system: &MultiModelSystem,
    phi: &Atom,
    e: &HolisticExplanation,
    opts: &ExplainOptions,
    tol: f64,
) -> Result<Verification, CliError> {
    let cs = query_constraints(system, phi, opts)?;
    let v = match e.criterion {
        Criterion::Optimistic | Criterion::Pessimistic => {
            let (direction, name) = if e.criterion == Criterion::Optimistic {
                (Direction::Maximize, "vertex enumeration max")
            } else {
                (Direction::Minimize, "vertex enumeration min")
            };
            let value = oracle_extremal(&cs, phi, direction)?;
            Verification {
                method: format!("{name} Pr({phi})"),
                oracle_value: value,
                solver_value: e.objective,
                tolerance: tol,
                agrees: (value - e.objective).abs() <= tol,
            }
        }
        Criterion::Laplace => {
            let best = sample_feasible(&cs, VERIFY_SAMPLES, VERIFY_SEED)?
                .iter()
                .map(|d| d.entropy())
                .fold(f64::NEG_INFINITY, f64::max);
            Verification {
                method: format!("max entropy of {VERIFY_SAMPLES} sampled feasible points"),
                oracle_value: best,
                solver_value: e.entropy,
                tolerance: tol,
                agrees: e.entropy >= best - tol,
            }
        }
    };
    Ok(v)
}

fn execute(q: &QuerySpec, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if !(q.tol.is_finite() && q.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be a positive number, got {}", q.tol)));
    }
    let system = load_system(&q.system)?;
    let phi = Atom::from(q.explanandum.as_str());
    let opts = ExplainOptions { atom_cap: q.max_atoms, pruning: !q.no_pruning, ..Default::default() };
    let criterion: Criterion = q.criterion.into();

    let explanation = match holistic_explanation_with(&system, &phi, criterion, &opts) {
        Ok(e) => e,
        Err(Error::Infeasible { core }) => {
            if q.format == Format::Json {
                let report = InfeasibleReport {
                    explanandum: &q.explanandum,
                    criterion,
                    feasible: false,
                    conflicts: core.iter().map(Origin::to_string).collect(),
                };
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap());
            }
            return Err(Error::Infeasible { core }.into());
        }
        Err(e) => return Err(e.into()),
    };

    if explanation.max_residual > q.tol {
        return Err(CliError::Verification(format!(
            "returned distribution violates a constraint by {:e}",
            explanation.max_residual
        )));
    }

    let verification = if q.verify {
        Some(verify(&system, &phi, &explanation, &opts, q.tol)?)
    } else {
        None
    };
    let report = Report::from_explanation(&explanation, verification);

    let text = match q.format {
        Format::Json => serde_json::to_string_pretty(&report).unwrap() + "\n",
        Format::Table => render_table(&report),
    };
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;

    if let Some(v) = &report.verification {
        if !v.agrees {
            let _ = writeln!(err, "oracle disagreement: solver {} vs oracle {}", v.solver_value, v.oracle_value);
            return Err(CliError::Verification(v.method.clone()));
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` (including the program name), writing the report
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let q = match QuerySpec::try_parse_from(argv) {
        Ok(q) => q,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INVALID
                }
            };
        }
    };
    match execute(&q, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.7, 6), "0.700000");
        assert_eq!(fmt_sig(0.0579337, 6), "0.0579337");
        assert_eq!(fmt_sig(1.95267189, 6), "1.95267");
        assert_eq!(fmt_sig(0.0, 6), "0");
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: Result<SystemFile, _> = serde_json::from_str(r#"{"models": [], "extra": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(Error::Infeasible { core: vec![] }).exit_code(), 2);
        assert_eq!(CliError::Core(Error::NotFinalOutput("BA".into())).exit_code(), 1);
        assert_eq!(CliError::Core(Error::TooManyAtoms { atoms: 30, cap: 24 }).exit_code(), 3);
        assert_eq!(
            CliError::Core(Error::Convergence {
                iterations: 1,
                constraint_residual: 1.0,
                stationarity_residual: 1.0
            })
            .exit_code(),
            3
        );
    }
}
