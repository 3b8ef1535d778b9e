//! Random smooth fields as a check on a delta-elimination step.

use fieldcomm::dsl::parse_expr;
use fieldcomm::oracle::{random_field_check, GridSpec};

fn main() -> fieldcomm::Result<()> {
    let grid = GridSpec::new(16.0, 128);
    let before = parse_expr("int(x)(int(y)(E[1](x)*B[2](y)*ddelta(x,y)d[x,3]))")?;
    let after = parse_expr("-int(x)(E[1](x)d[x,3]*B[2](x))")?;
    let wrong = parse_expr("int(x)(E[1](x)d[x,3]*B[2](x))")?;
    for seed in 0..5 {
        let good = random_field_check(&before, &after, seed, &grid)?;
        let bad = random_field_check(&before, &wrong, seed, &grid)?;
        println!("seed {seed}: {good:.2e} (sign flipped: {bad:.2e})");
    }
    Ok(())
}
