//! A derivation written as a JSON trace, read back, replayed and rendered.

use fieldcomm::cli::TraceDocument;
use fieldcomm::derivations::{derive, Derivation};
use fieldcomm::dsl::sections_document;
use fieldcomm::rewrite::ConstraintSet;

fn main() -> fieldcomm::Result<()> {
    let r = derive(Derivation::Jp, ConstraintSet::charge_free(), None)?;
    let json = serde_json::to_string_pretty(&TraceDocument::from_report(&r))?;
    println!("{} bytes of JSON", json.len());
    let doc: TraceDocument = serde_json::from_str(&json)?;
    println!("replay: {:?}", doc.replay()?);
    let tex = sections_document(&[doc.latex_section()?]);
    println!("{} lines of LaTeX", tex.lines().count());
    Ok(())
}
