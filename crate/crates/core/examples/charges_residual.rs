//! Without div E = 0 and div B = 0 the momentum components stop commuting.

use fieldcomm::derivations::{derive, Derivation, Verdict};
use fieldcomm::dsl::print_canonical;
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    for c in [ConstraintSet::none(), ConstraintSet::charge_free()] {
        let r = derive(Derivation::Pp, c, None)?;
        match &r.verdict {
            Verdict::Residual(e) => println!("{c:?}: residual {}", print_canonical(e)),
            v => println!("{c:?}: {}", v.label()),
        }
    }
    Ok(())
}
