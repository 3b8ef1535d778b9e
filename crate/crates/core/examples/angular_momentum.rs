//! [J^i, P^j] for every pair, against both closed forms.

use fieldcomm::derivations::{angular_momentum_epsilon_form, derive, Derivation};
use fieldcomm::dsl::print_canonical;
use fieldcomm::equal_canonical;
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    let r = derive(Derivation::Jp, ConstraintSet::charge_free(), None)?;
    for run in &r.runs {
        let (i, j) = run.pair.unwrap();
        let eps = equal_canonical(&run.result, &angular_momentum_epsilon_form(i, j)?);
        println!(
            "({i},{j}) {}  [matches i hbar eps P: {eps}]",
            print_canonical(&run.result)
        );
    }
    println!("verdict: {}", r.verdict.label());
    Ok(())
}
