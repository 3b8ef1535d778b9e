use super::surface::{from_expr, Surface};
use crate::coeff::Coefficient;
use crate::expr::{Atom, Expr, FieldOp, Index, Point};

fn point(p: &Point) -> String {
    let name = p.as_str();
    let split = name.find(|c: char| c.is_ascii_digit());
    match split {
        Some(k) if k > 0 => format!("\\mathbf{{{}}}_{{{}}}", &name[..k], &name[k..]),
        _ => format!("\\mathbf{{{name}}}"),
    }
}

fn scalar_point(p: &Point) -> String {
    let name = p.as_str();
    match name.find(|c: char| c.is_ascii_digit()) {
        Some(k) if k > 0 => format!("{}_{{{}}}", &name[..k], &name[k..]),
        _ => name.to_string(),
    }
}

fn indices(ix: &[&Index]) -> String {
    let parts: Vec<String> = ix.iter().map(|i| i.to_string()).collect();
    if parts.iter().all(|p| p.len() == 1) {
        parts.concat()
    } else {
        parts.join(",")
    }
}

fn partials(p: &Point, derivs: &[Index]) -> String {
    derivs
        .iter()
        .map(|d| format!("\\partial_{{{}^{{{d}}}}}", scalar_point(p)))
        .collect()
}

fn atom(a: &Atom) -> String {
    match a {
        Atom::Epsilon(ix) => format!("\\epsilon^{{{}}}", indices(&ix.iter().collect::<Vec<_>>())),
        Atom::Kronecker(ix) => format!("\\delta_{{{}}}", indices(&ix.iter().collect::<Vec<_>>())),
        Atom::Coord { point: p, index } => format!("{}^{{{index}}}", scalar_point(p)),
        Atom::Delta { from, to, derivs } => {
            format!(
                "{}\\delta({}-{})",
                partials(from, derivs),
                point(from),
                point(to)
            )
        }
    }
}

fn field(op: &FieldOp) -> String {
    format!(
        "{}{}^{{{}}}({})",
        partials(&op.point, &op.derivs),
        op.kind,
        op.component,
        point(&op.point)
    )
}

/// Coefficient magnitude in display style, without sign.
fn coefficient(c: &Coefficient) -> String {
    let r = c.rational();
    let u = c.units();
    let mut num = Vec::new();
    let mut den = Vec::new();
    if !r.numer().abs().eq(&1) || (u.hbar == 0 && u.eps0 == 0 && u.imag == 0) {
        num.push(r.numer().abs().to_string());
    }
    if *r.denom() != 1 {
        den.push(r.denom().to_string());
    }
    if u.imag == 1 {
        num.push("i".into());
    }
    for (sym, p) in [("\\hbar", u.hbar), ("\\varepsilon_0", u.eps0)] {
        let target = if p > 0 { &mut num } else { &mut den };
        match p.abs() {
            0 => {}
            1 => target.push(sym.into()),
            n => target.push(format!("{sym}^{{{n}}}")),
        }
    }
    let n = if num.is_empty() {
        "1".to_string()
    } else {
        num.join("")
    };
    if den.is_empty() {
        n
    } else {
        format!("\\frac{{{n}}}{{{}}}", den.join(""))
    }
}

/// LaTeX rendering of a surface tree.
pub fn surface_latex(s: &Surface) -> String {
    match s {
        Surface::Sum(v) if v.is_empty() => "0".into(),
        Surface::Sum(v) => {
            let mut out = String::new();
            for (n, part) in v.iter().enumerate() {
                let (neg, body) = signed(part);
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
        Surface::Product(v) => v.iter().map(factor).collect::<Vec<_>>().join(""),
        Surface::Scaled(..) => {
            let (neg, body) = signed(s);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
        Surface::Comm(a, b) => format!("\\left[{}, {}\\right]", surface_latex(a), surface_latex(b)),
        Surface::Integral(p, body) => {
            format!("\\int d^3{}\\, {}", scalar_point(p), factor(body))
        }
        Surface::SumOver(ix, body) => format!("\\sum_{{{ix}}} {}", factor(body)),
        Surface::Atom(a) => atom(a),
        Surface::Field(op) => field(op),
        Surface::Momentum(i) => format!("P^{{{i}}}"),
        Surface::AngularMomentum(i) => format!("J^{{{i}}}"),
    }
}

fn signed(s: &Surface) -> (bool, String) {
    match s {
        Surface::Scaled(c, body) => {
            let mag = c.abs();
            let inner = match &**body {
                Surface::Product(v) if v.is_empty() => String::new(),
                b => factor(b),
            };
            let text = if mag == Coefficient::one() {
                if inner.is_empty() {
                    "1".into()
                } else {
                    inner
                }
            } else {
                format!("{}{inner}", coefficient(&mag))
            };
            (c.is_negative(), text)
        }
        other => (false, surface_latex(other)),
    }
}

fn factor(s: &Surface) -> String {
    match s {
        Surface::Sum(v) if v.len() > 1 => format!("\\left({}\\right)", surface_latex(s)),
        Surface::Scaled(c, _) if c.is_negative() => format!("\\left({}\\right)", surface_latex(s)),
        _ => surface_latex(s),
    }
}

/// LaTeX rendering of an expression; the empty expression is `0`.
pub fn expr_latex(e: &Expr) -> String {
    surface_latex(&from_expr(e))
}

/// The field commutator axiom in display form.
pub fn axiom_latex() -> String {
    "\\left[E^{i}(\\mathbf{x}), B^{j}(\\mathbf{y})\\right] = -\\frac{i\\hbar}{\\varepsilon_0}\\, \
     \\epsilon^{ijk}\\, \\partial_{x^{k}}\\delta(\\mathbf{x}-\\mathbf{y})"
        .to_string()
}

/// One rendered rewrite step.
#[derive(Debug, Clone)]
pub struct LatexStep {
    pub rule: String,
    pub anchor: String,
    pub body: String,
}

/// One derivation in a LaTeX document.
#[derive(Debug, Clone)]
pub struct LatexSection {
    pub title: String,
    pub assumptions: Vec<String>,
    pub steps: Vec<LatexStep>,
}

/// A standalone document with one aligned block per step.
pub fn trace_document(title: &str, assumptions: &[String], steps: &[LatexStep]) -> String {
    sections_document(&[LatexSection {
        title: title.to_string(),
        assumptions: assumptions.to_vec(),
        steps: steps.to_vec(),
    }])
}

/// Several traces in one document, one section each.
pub fn sections_document(sections: &[LatexSection]) -> String {
    let mut out = String::new();
    out.push_str("\\documentclass{article}\n\\usepackage{amsmath}\n\\allowdisplaybreaks\n");
    out.push_str("\\begin{document}\n");
    for sec in sections {
        out.push_str(&format!("\\section*{{{}}}\n", escape(&sec.title)));
        if !sec.assumptions.is_empty() {
            out.push_str("\\paragraph{Assumptions}\n\\begin{itemize}\n");
            for a in &sec.assumptions {
                out.push_str(&format!("  \\item {}\n", escape(a)));
            }
            out.push_str("\\end{itemize}\n");
        }
        for (n, s) in sec.steps.iter().enumerate() {
            out.push_str(&format!(
                "% step {}: {}\n\\paragraph{{{}}} {}\n\\begin{{align*}}\n  &{}\n\\end{{align*}}\n",
                n + 1,
                s.rule,
                escape(&s.rule),
                escape(&s.anchor),
                s.body
            ));
        }
    }
    out.push_str("\\end{document}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\textbackslash{}")
        .replace('_', "\\_")
        .replace('&', "\\&")
        .replace('%', "\\%")
        .replace('#', "\\#")
}
