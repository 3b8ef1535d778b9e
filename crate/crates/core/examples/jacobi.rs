//! [J^1,[J^2,P^3]] + [J^2,[P^3,J^1]] + [P^3,[J^1,J^2]] = 0.

use fieldcomm::derivations::jacobi_check;
use fieldcomm::dsl::print_canonical;

fn main() -> fieldcomm::Result<()> {
    let j = jacobi_check()?;
    for (bracket, ok) in &j.inner {
        println!("{bracket}: {ok}");
    }
    println!("outer sum: {}", print_canonical(&j.outer));
    Ok(())
}
