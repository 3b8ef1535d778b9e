//! Brute-force check of the two-epsilon contraction, and a broken variant.

use fieldcomm::dsl::parse_expr;
use fieldcomm::oracle::enumerate_identity;

fn main() -> fieldcomm::Result<()> {
    let lhs = parse_expr("eps[i,k,l]*eps[k,n,s]")?;
    for rhs in [
        "delta[l,n]*delta[i,s] - delta[l,s]*delta[i,n]",
        "delta[l,n]*delta[i,s] + delta[l,s]*delta[i,n]",
    ] {
        let r = enumerate_identity(&lhs, &parse_expr(rhs)?)?;
        println!(
            "{rhs}: holds={} over {} assignments",
            r.holds, r.assignments
        );
        if let Some(c) = r.counterexample {
            println!(
                "  counterexample {:?}: {} vs {}",
                c.assignment, c.lhs, c.rhs
            );
        }
    }
    Ok(())
}
