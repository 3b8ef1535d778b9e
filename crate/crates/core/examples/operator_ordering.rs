//! The two operator orders of the momentum density differ by a product of a
//! delta and its derivative; nascent deltas show the product integrates to 0.

use fieldcomm::derivations::{derive, Derivation};
use fieldcomm::dsl::print_canonical;
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    let r = derive(Derivation::Ordering, ConstraintSet::charge_free(), None)?;
    println!("symbolic: {}", print_canonical(&r.runs[0].result));
    for n in &r.trace.notes {
        println!("note: {n}");
    }
    for (family, a, o) in &r.oracle {
        println!(
            "{family:?} a={a}: axis {:.2e}, transverse {:.6} (expected {:.6})",
            o.axis, o.transverse, o.expected_transverse
        );
    }
    println!(
        "verdict: {}, oracle passes: {}",
        r.verdict.label(),
        r.oracle_passes()
    );
    Ok(())
}
