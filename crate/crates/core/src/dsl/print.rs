use super::surface::{from_expr, Surface};
use crate::coeff::Coefficient;
use crate::expr::{canonicalize, Atom, Expr, FieldOp, Index};

fn index_list(ix: &[&Index]) -> String {
    ix.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn print_atom(a: &Atom) -> String {
    match a {
        Atom::Epsilon(ix) => format!("eps[{}]", index_list(&ix.iter().collect::<Vec<_>>())),
        Atom::Kronecker(ix) => format!("delta[{}]", index_list(&ix.iter().collect::<Vec<_>>())),
        Atom::Coord { point, index } => format!("x[{index}]({point})"),
        Atom::Delta { from, to, derivs } => {
            let mut s = format!("ddelta({from},{to})");
            for d in derivs {
                s.push_str(&format!("d[{from},{d}]"));
            }
            s
        }
    }
}

pub(crate) fn print_field(op: &FieldOp) -> String {
    let mut s = format!("{}[{}]({})", op.kind, op.component, op.point);
    for d in &op.derivs {
        s.push_str(&format!("d[{},{d}]", op.point));
    }
    s
}

/// Prints an expression term by term, as stored. Use [`print_canonical`]
/// for a normal form.
pub fn print_expr(e: &Expr) -> String {
    print_surface(&from_expr(e))
}

/// Canonicalizes and prints; equal expressions give identical strings.
pub fn print_canonical(e: &Expr) -> String {
    print_expr(&canonicalize(e))
}

pub fn print_surface(s: &Surface) -> String {
    match s {
        Surface::Sum(v) if v.is_empty() => "0".into(),
        Surface::Sum(v) => {
            let mut out = String::new();
            for (n, part) in v.iter().enumerate() {
                let (neg, body) = split_sign(part);
                match (n, neg) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
            out
        }
        Surface::Product(v) if v.is_empty() => "1".into(),
        Surface::Product(v) => v.iter().map(print_factor).collect::<Vec<_>>().join("*"),
        Surface::Scaled(..) => {
            let (neg, body) = split_sign(s);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
        Surface::Comm(a, b) => format!("comm({}, {})", print_surface(a), print_surface(b)),
        Surface::Integral(p, body) => format!("int({p})({})", print_surface(body)),
        Surface::SumOver(ix, body) => format!("sum[{ix}]({})", print_surface(body)),
        Surface::Atom(a) => print_atom(a),
        Surface::Field(op) => print_field(op),
        Surface::Momentum(i) => format!("P[{i}]"),
        Surface::AngularMomentum(i) => format!("J[{i}]"),
    }
}

/// Sign and magnitude text of a summand.
fn split_sign(s: &Surface) -> (bool, String) {
    match s {
        Surface::Scaled(c, body) => {
            let mag = c.abs();
            let inner = match &**body {
                Surface::Product(v) if v.is_empty() => String::new(),
                b => print_factor(b),
            };
            let text = match (mag == Coefficient::one(), inner.is_empty()) {
                (true, true) => "1".into(),
                (true, false) => inner,
                (false, true) => mag.to_string(),
                (false, false) => format!("{mag}*{inner}"),
            };
            (c.is_negative(), text)
        }
        other => (false, print_surface(other)),
    }
}

fn print_factor(s: &Surface) -> String {
    match s {
        Surface::Sum(v) if v.len() > 1 => format!("({})", print_surface(s)),
        Surface::Scaled(c, _) if c.is_negative() => format!("({})", print_surface(s)),
        _ => print_surface(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{lower, parse};
    use crate::expr::equal_canonical;

    #[test]
    fn empty_expression_prints_zero() {
        assert_eq!(print_expr(&Expr::zero()), "0");
        assert_eq!(print_canonical(&Expr::zero()), "0");
    }

    #[test]
    fn round_trip_samples() {
        for text in [
            "-I*hbar*eps0^-1*int(x)(int(y)(eps[i,k,l]*ddelta(x,y)d[x,k]*E[m](y)*B[l](x)))",
            "1/2*x[1](x)*E[2](x)d[x,3] - 3*eps0*B[1](x)",
            "int(x)(x[n](x)*E[i](x)*B[n](x)) + int(x)(E[n](x)d[x,n]*B[i](x))",
            "2",
            "-hbar^2*delta[i,j]",
        ] {
            let a = lower(&parse(text).unwrap()).unwrap();
            let printed = print_canonical(&a);
            let b = lower(&parse(&printed).unwrap()).unwrap();
            assert!(equal_canonical(&a, &b), "{text} -> {printed}");
            assert_eq!(printed, print_canonical(&b));
        }
    }

    #[test]
    fn surface_printing_keeps_structure() {
        let text = "comm(E[i](x)*B[m](x), E[j](y)*B[n](y))";
        assert_eq!(print_surface(&parse(text).unwrap()), text);
        let text = "E[i](x)*(B[j](x) - E[j](x))";
        assert_eq!(print_surface(&parse(text).unwrap()), text);
    }
}
