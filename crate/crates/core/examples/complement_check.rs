//! Checks the complement property of a few vector families and, for the
//! failing ones, prints the split and two signals with equal measurements.
//!
//! cargo run --example complement_check

use prframes::frames::{ambiguous_pair, complement_property, measurements, ComplementOutcome, VectorFamily};
use prframes::linalg::exact::format_rational;

fn main() -> prframes::Result<()> {
    let families: [(&str, &[&[i64]]); 3] = [
        ("standard basis of R^3", &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
        ("five generic vectors in R^3", &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1], &[1, 2, 3]]),
        ("five vectors, three in a plane", &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0], &[0, 0, 1], &[1, 2, 3]]),
    ];

    for (name, rows) in families {
        let f = VectorFamily::from_i64(rows)?;
        match complement_property(&f)? {
            ComplementOutcome::Pass => println!("{name}: passes"),
            ComplementOutcome::Violation(v) => {
                let pair = ambiguous_pair(&f, &v)?;
                let show = |s: &prframes::linalg::Signal| s.to_strings().join(", ");
                let meas: Vec<String> = measurements(&f, &pair.x)?.iter().map(format_rational).collect();
                println!("{name}: fails on I = {:?} (ranks {} and {})", v.subset, v.rank_i, v.rank_ic);
                println!("  x = ({}), y = ({})", show(&pair.x), show(&pair.y));
                println!("  both measure [{}]; verified: {}", meas.join(", "), pair.verify(&f));
            }
        }
    }
    Ok(())
}
