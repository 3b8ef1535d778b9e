use thiserror::Error;

use crate::dsl::ParseError;
use crate::expr::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{error}\n  {input}\n  {}^", caret(.error.offset, .input))]
    ParseInput { error: ParseError, input: String },

    #[error("index balance violated: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("commutator is not between two field operators: {0}")]
    NonPrimitiveCommutator(String),

    #[error("named operator reached lowering without being expanded: {0}")]
    UnexpandedOperator(String),

    #[error("name `{0}` is bound more than once or used more than twice")]
    Ambiguous(String),

    #[error("name `{0}` is bound but never used")]
    Unbound(String),

    #[error("term holds {0} delta functions; only a single delta can be integrated out")]
    UnsupportedShape(usize),

    #[error("delta derivative taken at free point `{0}` against an integrated point")]
    DerivativeOnFreePoint(String),

    #[error("rewriting did not reach a fixpoint within {0} passes")]
    NonTermination(usize),

    #[error("oracle precondition failed: {0}")]
    Precondition(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown rewrite rule `{0}`")]
    UnknownRule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn caret(offset: usize, input: &str) -> String {
    " ".repeat(
        input
            .get(..offset)
            .map_or(input.chars().count(), |s| s.chars().count()),
    )
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
