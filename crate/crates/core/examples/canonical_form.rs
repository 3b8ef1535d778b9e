//! Parsing, canonical printing and LaTeX for a hand-written expression.

use fieldcomm::dsl::{expr_latex, parse_expr, print_canonical};
use fieldcomm::expr::expand_concrete;

fn main() -> fieldcomm::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "eps[i,k,l]*int(y)(E[k](y)*B[l](y)) + eps[i,m,n]*int(z)(E[m](z)*B[n](z))".into()
    });
    let e = parse_expr(&text)?;
    println!("canonical: {}", print_canonical(&e));
    println!("concrete:  {}", print_canonical(&expand_concrete(&e)));
    println!("latex:     {}", expr_latex(&e));
    Ok(())
}
