//! Nascent-delta checks of the derivative flip and of integration by parts.

use fieldcomm::oracle::{
    check_delta_flip, check_integration_by_parts, seeded_bumps, Family, GridSpec, RegularizedDelta,
    IBP_GRID,
};

fn main() -> fieldcomm::Result<()> {
    let grid = GridSpec::new(8.0, 4096);
    for family in [Family::Gaussian, Family::Rectangle] {
        let d = RegularizedDelta::new(family, 0.05);
        let flip = check_delta_flip(&d, &grid)?;
        println!("{family:?} flip: {flip:?}");
        let (f, g) = seeded_bumps(42);
        let ibp = check_integration_by_parts(&f, &g, &d, &IBP_GRID)?;
        println!(
            "{family:?} ibp: err1 {:.2e}, err2 {:.2e}",
            ibp.err1, ibp.err2
        );
    }
    Ok(())
}
