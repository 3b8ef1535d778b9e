use super::{Atom, Expr, Index, Term};
use crate::coeff::Coefficient;

/// Value of the Levi-Civita symbol on concrete components.
pub fn eval_epsilon(a: u8, b: u8, c: u8) -> i64 {
    match (a, b, c) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1,
        _ => 0,
    }
}

/// Expands every summed index over `{1,2,3}` and evaluates fully concrete
/// Levi-Civita and Kronecker symbols into the coefficient.
///
/// Free symbolic indices are left alone. The output is not canonicalized.
pub fn expand_concrete(e: &Expr) -> Expr {
    let mut out = Vec::new();
    for t in &e.terms {
        let dummies: Vec<String> = t
            .index_counts()
            .into_keys()
            .filter(|n| !e.free_indices.contains(n))
            .collect();
        let total = 3usize.pow(dummies.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut inst = t.clone();
            for d in &dummies {
                inst = inst.rename_index(d, &Index::Fixed((c % 3) as u8 + 1));
                c /= 3;
            }
            if let Some(done) = evaluate_symbols(inst) {
                out.push(done);
            }
        }
    }
    e.with_terms(out)
}

fn evaluate_symbols(mut t: Term) -> Option<Term> {
    let mut factor = 1i64;
    let mut kept = Vec::with_capacity(t.cnumbers.len());
    for a in t.cnumbers.drain(..) {
        match &a {
            Atom::Epsilon([Index::Fixed(p), Index::Fixed(q), Index::Fixed(r)]) => {
                factor *= eval_epsilon(*p, *q, *r);
            }
            Atom::Kronecker([Index::Fixed(p), Index::Fixed(q)]) => {
                factor *= i64::from(p == q);
            }
            _ => kept.push(a),
        }
        if factor == 0 {
            return None;
        }
    }
    t.cnumbers = kept;
    t.coeff = t.coeff * Coefficient::from_int(factor);
    Some(t)
}
