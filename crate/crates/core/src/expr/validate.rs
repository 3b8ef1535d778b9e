use std::fmt;

use super::{Expr, Index};

/// One broken invariant, located by term position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A non-free index used exactly once.
    DanglingIndex { term: usize, name: String },
    /// An index used more than twice.
    OverusedIndex {
        term: usize,
        name: String,
        count: usize,
    },
    /// A declared free index missing from a term or not used exactly once.
    FreeIndexMismatch {
        term: usize,
        name: String,
        count: usize,
    },
    /// An integration variable no atom mentions.
    UnreferencedIntegral { term: usize, point: String },
    /// A stored term with zero coefficient.
    ZeroTerm { term: usize },
    /// A concrete component outside `1..=3`.
    BadComponent { term: usize, value: u8 },
}

impl Violation {
    /// Index or point name the violation concerns, if any.
    pub fn name(&self) -> Option<&str> {
        match self {
            Violation::DanglingIndex { name, .. }
            | Violation::OverusedIndex { name, .. }
            | Violation::FreeIndexMismatch { name, .. } => Some(name),
            Violation::UnreferencedIntegral { point, .. } => Some(point),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingIndex { term, name } => {
                write!(f, "term {term}: summed index `{name}` appears once")
            }
            Violation::OverusedIndex { term, name, count } => {
                write!(f, "term {term}: index `{name}` appears {count} times")
            }
            Violation::FreeIndexMismatch { term, name, count } => {
                write!(f, "term {term}: free index `{name}` appears {count} times")
            }
            Violation::UnreferencedIntegral { term, point } => {
                write!(
                    f,
                    "term {term}: integrated point `{point}` is not referenced"
                )
            }
            Violation::ZeroTerm { term } => write!(f, "term {term}: zero coefficient stored"),
            Violation::BadComponent { term, value } => {
                write!(f, "term {term}: component {value} outside 1..=3")
            }
        }
    }
}

/// Checks index balance, integration references and coefficient storage.
/// An empty result means the expression is well formed.
pub fn validate(e: &Expr) -> Vec<Violation> {
    let mut out = Vec::new();
    for (ti, t) in e.terms.iter().enumerate() {
        if t.coeff.is_zero() {
            out.push(Violation::ZeroTerm { term: ti });
        }
        t.for_each_index(|ix| {
            if let Index::Fixed(v) = ix {
                if !(1..=3).contains(v) {
                    out.push(Violation::BadComponent {
                        term: ti,
                        value: *v,
                    });
                }
            }
        });
        let counts = t.index_counts();
        for free in &e.free_indices {
            let c = counts.get(free).copied().unwrap_or(0);
            if c != 1 {
                out.push(Violation::FreeIndexMismatch {
                    term: ti,
                    name: free.clone(),
                    count: c,
                });
            }
        }
        for (name, &c) in &counts {
            if e.free_indices.contains(name) {
                continue;
            }
            if c == 1 {
                out.push(Violation::DanglingIndex {
                    term: ti,
                    name: name.clone(),
                });
            } else if c > 2 {
                out.push(Violation::OverusedIndex {
                    term: ti,
                    name: name.clone(),
                    count: c,
                });
            }
        }
        let referenced = t.referenced_points();
        for p in &t.integrated {
            if !referenced.contains(p) {
                out.push(Violation::UnreferencedIntegral {
                    term: ti,
                    point: p.0.clone(),
                });
            }
        }
    }
    out
}
