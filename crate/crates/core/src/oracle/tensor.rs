use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, Index, Term};

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub assignment: BTreeMap<String, u8>,
    pub lhs: Rational64,
    pub rhs: Rational64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub holds: bool,
    pub assignments: usize,
    pub counterexample: Option<Counterexample>,
}

fn levi_civita(a: u8, b: u8, c: u8) -> i64 {
    // sign of the permutation, by counting inversions
    if a == b || b == c || a == c {
        return 0;
    }
    let inv = usize::from(a > b) + usize::from(a > c) + usize::from(b > c);
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn value(ix: &Index, env: &BTreeMap<String, u8>) -> u8 {
    match ix {
        Index::Fixed(v) => *v,
        Index::Named(n) => env[n],
    }
}

fn term_value(t: &Term, free: &BTreeMap<String, u8>) -> Rational64 {
    let mut dummies = Vec::new();
    t.for_each_index(|ix| {
        if let Index::Named(n) = ix {
            if !free.contains_key(n) && !dummies.contains(n) {
                dummies.push(n.clone());
            }
        }
    });
    let mut total = Rational64::zero();
    for code in 0..3usize.pow(dummies.len() as u32) {
        let mut env = free.clone();
        let mut c = code;
        for d in &dummies {
            env.insert(d.clone(), (c % 3) as u8 + 1);
            c /= 3;
        }
        let mut v = 1i64;
        for a in &t.cnumbers {
            v *= match a {
                Atom::Epsilon([p, q, r]) => {
                    levi_civita(value(p, &env), value(q, &env), value(r, &env))
                }
                Atom::Kronecker([p, q]) => i64::from(value(p, &env) == value(q, &env)),
                _ => unreachable!("checked by caller"),
            };
        }
        total += Rational64::from(v);
    }
    // the units must match between the two sides; only the rational part is compared
    total * t.coeff.rational()
}

fn evaluate(e: &Expr, free: &BTreeMap<String, u8>) -> Rational64 {
    e.terms.iter().map(|t| term_value(t, free)).sum()
}

/// Checks `lhs == rhs` for every assignment of the free indices over
/// `{1,2,3}`, summing internal indices by brute force.
pub fn enumerate_identity(lhs: &Expr, rhs: &Expr) -> Result<Enumeration> {
    for t in lhs.terms.iter().chain(&rhs.terms) {
        if !t.ops.is_empty()
            || !t.integrated.is_empty()
            || t.cnumbers
                .iter()
                .any(|a| !matches!(a, Atom::Epsilon(_) | Atom::Kronecker(_)))
        {
            return Err(Error::Contract(
                "enumerate_identity takes Levi-Civita and Kronecker symbols only".into(),
            ));
        }
    }
    let units: Vec<_> = lhs
        .terms
        .iter()
        .chain(&rhs.terms)
        .map(|t| t.coeff.units())
        .collect();
    if units.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Contract("terms carry different units".into()));
    }
    let free: Vec<String> = lhs.free_indices.union(&rhs.free_indices).cloned().collect();
    let total = 3usize.pow(free.len() as u32);
    for code in 0..total {
        let mut env = BTreeMap::new();
        let mut c = code;
        for f in &free {
            env.insert(f.clone(), (c % 3) as u8 + 1);
            c /= 3;
        }
        let (l, r) = (evaluate(lhs, &env), evaluate(rhs, &env));
        if l != r {
            return Ok(Enumeration {
                holds: false,
                assignments: total,
                counterexample: Some(Counterexample {
                    assignment: env,
                    lhs: l,
                    rhs: r,
                }),
            });
        }
    }
    Ok(Enumeration {
        holds: true,
        assignments: total,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expr;

    fn with_free(text: &str, free: &[&str]) -> Expr {
        let mut e = parse_expr(text).unwrap();
        e.free_indices = free.iter().map(|s| s.to_string()).collect();
        e
    }

    #[test]
    fn two_epsilon_identity() {
        let free = ["i", "l", "n", "s"];
        let lhs = with_free("eps[i,k,l]*eps[k,n,s]", &free);
        let rhs = with_free("delta[l,n]*delta[i,s] - delta[l,s]*delta[i,n]", &free);
        let r = enumerate_identity(&lhs, &rhs).unwrap();
        assert!(r.holds);
        assert_eq!(r.assignments, 81);
        let bad = with_free("delta[l,s]*delta[i,n] - delta[l,n]*delta[i,s]", &free);
        let r = enumerate_identity(&lhs, &bad).unwrap();
        assert!(!r.holds);
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn fields_refused() {
        let e = parse_expr("E[1](x)").unwrap();
        assert!(enumerate_identity(&e, &e).is_err());
    }

    #[test]
    fn permutation_sign() {
        assert_eq!(levi_civita(1, 2, 3), 1);
        assert_eq!(levi_civita(2, 1, 3), -1);
        assert_eq!(levi_civita(3, 1, 2), 1);
        assert_eq!(levi_civita(1, 1, 3), 0);
    }
}
