//! Execution-time opacity analysis for (parametric) timed automata.
//!
//! Given a model with a private and a final location, the library computes
//! the exact sets of run durations that do / do not visit the private
//! location on the way to the final one, decides the existential, weak and
//! full opacity notions built on those sets (including the expiring variant
//! with a secret lifetime bound), and synthesizes timing-parameter
//! constraints under which a parametric model admits an opaque duration.
//!
//! The exact pipeline is `model` → `tickgraph` (observer + region graph +
//! unary tick automaton) → `durset` (duration-set algebra) → `opacity`
//! (verdicts). `polyparam` holds the polyhedral engine used for parameter
//! synthesis, and `oracle` is an independent brute-force ground truth used
//! for cross-checking.

pub mod durset;
pub mod model;
pub mod modelgen;
pub mod opacity;
pub mod oracle;
pub mod polyparam;
pub mod rat;
pub mod region;
pub mod tickgraph;

use std::fmt;

/// A parse/validation message with a source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn nowhere(message: String) -> Self {
        Diagnostic {
            line: 0,
            col: 0,
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}", format_diagnostics(.0))]
    Parse(Vec<Diagnostic>),
    #[error("model has unbound parameters: {}", .0.join(", "))]
    ModelHasParameters(Vec<String>),
    #[error("missing value for parameter `{0}`")]
    MissingParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("negative value for parameter `{0}`")]
    NegativeParameter(String),
    #[error("model is not lower/upper: {0}")]
    NotLowerUpper(String),
    #[error("invalid rational: {0}")]
    InvalidRational(String),
    #[error("invalid duration set: {0}")]
    InvalidDurationSet(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("state budget exceeded after {states} states")]
    BudgetExceeded { states: u64 },
    #[error("rescaling overflowed the supported range")]
    ScaleOverflow,
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Work limits for exhaustive machinery (symbolic exploration, tick-count
/// iteration, the digitized oracle). Exceeding a budget is reported, never
/// silently truncated.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub states: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { states: 5_000_000 }
    }
}

impl Budget {
    pub fn new(states: u64) -> Self {
        Budget { states }
    }
}

/// Classification of a run reaching the final location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunClass {
    /// Visited the private location (plain analysis).
    Private,
    /// Avoided the private location.
    Public,
    /// Visited the private location within the expiration bound.
    Secret,
    /// Visited the private location, but only too long before finishing.
    Late,
}

impl RunClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RunClass::Private => "private",
            RunClass::Public => "public",
            RunClass::Secret => "secret",
            RunClass::Late => "late",
        }
    }
}

impl fmt::Display for RunClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
