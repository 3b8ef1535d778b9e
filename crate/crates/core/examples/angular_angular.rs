//! [J^i, J^j]: the result and the divergence terms the constraints remove.

use fieldcomm::derivations::{derive, Derivation};
use fieldcomm::dsl::print_canonical;
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    let r = derive(Derivation::Jj, ConstraintSet::charge_free(), None)?;
    let run = r.runs.iter().find(|p| p.pair == Some((1, 2))).unwrap();
    println!("[J^1, J^2] = {}", print_canonical(&run.result));
    println!("divergence part: {}", print_canonical(&run.divergence));
    let ok = r.runs.iter().filter(|p| p.matches).count();
    println!(
        "{ok} of {} pairs match; verdict {}",
        r.runs.len(),
        r.verdict.label()
    );
    Ok(())
}
