//! Open-world reasoning for planning states.
//!
//! The library represents what an agent knows about a world with an unknown
//! or infinite set of objects. Negative knowledge ("no box contains fragile
//! goods, except possibly box B") is held as quantified all-negative clauses
//! with exception substitutions; positive knowledge as ground atoms. On top
//! of that representation it provides:
//!
//! * a calculus of set operations between quantified forms — subset,
//!   intersection, subtraction, image (the entailed part) and e-difference
//!   (the non-entailed part) — see [`calculus`];
//! * sound and complete entailment, saturation of a state of knowledge, and
//!   state update after deterministic actions — see [`knowledge`];
//! * action schemas and conformant plan validation by state progression —
//!   see [`planning`];
//! * a brute-force grounding referee that replays every symbolic operation
//!   over a finite constant universe — see [`oracle`];
//! * a textual syntax and command-line front end — see [`text`] and [`cli`].
//!
//! Every value is immutable after construction and every operation is a pure
//! function of its inputs, so values can be shared and operations run from
//! multiple threads freely.
//!
//! The `examples/` directory of this crate walks through each capability
//! with runnable programs; start with `examples/calculus.rs`.

pub mod calculus;
pub mod cli;
pub mod knowledge;
pub mod oracle;
pub mod planning;
pub mod psiform;
pub mod terms;
pub mod text;

pub use psiform::{Limits, PsiSet, Psiform};
pub use terms::{Clause, Literal, MatchSet, Substitution, Term};

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A structurally invalid quantified form (empty or positive main
    /// clause, repeated variable inside a literal, bad exception binding).
    #[error("malformed form: {0}")]
    Malformed(String),

    /// An operation restricted to simple forms received one with exceptions.
    #[error("operand has exceptions where a simple form is required: {0}")]
    NotSimple(String),

    /// The calculus is defined for fixed-length forms only.
    #[error("operand is not fixed-length: {0}")]
    NotFixedLength(String),

    /// The hole computation requires the first operand to nearly entail the
    /// second.
    #[error("near-entailment precondition violated")]
    NotNearlyEntailing,

    /// Entailment queries against a state of knowledge require saturation.
    #[error("state of knowledge is not saturated")]
    NotSaturated,

    /// Saturation derived the empty clause.
    #[error("state of knowledge is inconsistent")]
    Inconsistent,

    /// An action was applied whose precondition the state does not entail.
    #[error("precondition not entailed: {0}")]
    PreconditionNotEntailed(String),

    /// Wrong number or kind of arguments when instantiating an action
    /// schema.
    #[error("cannot instantiate {name}: {reason}")]
    BadInstantiation { name: String, reason: String },

    /// Textual input rejected by the parser.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
