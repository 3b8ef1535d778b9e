//! Text grammar, printers and LaTeX output.

mod latex;
mod parse;
mod print;
mod surface;

pub use latex::{
    axiom_latex, expr_latex, sections_document, surface_latex, trace_document, LatexSection,
    LatexStep,
};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::{print_canonical, print_expr, print_surface};
pub use surface::{
    angular_momentum_definition, from_expr, lower, momentum_definition, Fresh, Surface,
};

pub(crate) use surface::{lower_with, monos_to_surface, to_monos, CommMode};

use crate::error::Result;
use crate::expr::Expr;

/// Parses and lowers a commutator-free expression in one step.
pub fn parse_expr(text: &str) -> Result<Expr> {
    lower(&parse(text)?)
}
