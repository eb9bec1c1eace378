//! Runs the three decision tiers on a passing and a failing family of
//! projections in R^3.
//!
//! cargo run --release --example decide_family

use prframes::frames::{centered_nodes, vandermonde_frame};
use prframes::linalg::{nullspace_basis, RMatrix};
use prframes::projection::{decide, DecideOptions, ProjectionFamily, Tier};

fn main() -> prframes::Result<()> {
    let lines = ProjectionFamily::lines(&vandermonde_frame(3, &centered_nodes(5))?)?;
    let planes = ProjectionFamily::from_bases(
        3,
        [[1i64, 0, 0], [0, 1, 0], [1, 1, 1]].iter().map(|w| nullspace_basis(&RMatrix::from_i64_rows(&[w]))).collect(),
    )?;

    let opts = DecideOptions::default();
    for (name, f) in [("five Vandermonde lines", &lines), ("three planes", &planes)] {
        println!("{name} (dims {:?})", f.dims());
        for tier in [Tier::Falsify, Tier::Sample, Tier::Certify] {
            let d = decide(f, tier, &opts)?;
            print!("  {tier:?}: {:?}", d.verdict);
            if let Some(w) = d.certificate.witness() {
                print!(", span dim {} at x = ({})", w.span_dim, w.x.to_strings().join(", "));
            }
            if let Some(m) = &d.margin {
                print!(", margin {:.4}", m.value);
            }
            for note in &d.notes {
                print!(" [{note}]");
            }
            println!();
        }
    }
    Ok(())
}
