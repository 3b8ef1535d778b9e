//! Symbolic operator algebra for the free electromagnetic field.
//!
//! Field operators `E^i(x)`, `B^j(y)` obey a single commutator axiom. The
//! crate expands commutators of the field momentum `P` and angular momentum
//! `J`, reduces them with Levi-Civita, Kronecker and Dirac-delta calculus,
//! and checks the results against closed forms. Numeric oracles cross-check
//! the distribution identities the symbolic layer relies on.

pub mod cli;
pub mod coeff;
pub mod derivations;
pub mod dsl;
mod error;
pub mod expr;
pub mod oracle;
pub mod rewrite;

pub use coeff::Coefficient;
pub use error::{Error, Result};
pub use expr::{canonicalize, equal_canonical, Atom, Expr, FieldKind, FieldOp, Index, Point, Term};
