//! [P^i, P^j] with symbolic indices, step by step.

use fieldcomm::derivations::{derive, Derivation};
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    let r = derive(Derivation::Pp, ConstraintSet::charge_free(), None)?;
    for s in &r.trace.steps {
        println!("{:<24} {}", s.rule.name(), s.after.text());
    }
    for m in &r.milestones {
        println!("[{}] {}", if m.matched { "x" } else { " " }, m.label);
    }
    println!("verdict: {}", r.verdict.label());
    Ok(())
}
