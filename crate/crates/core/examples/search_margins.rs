//! Empirical margins of hyperplane families in R^n for n = 3, 4, 5.
//!
//! With m = 2n - 2 hyperplanes the search looks for a family whose margin is
//! clearly positive. With m = 2n - 3 every family fails, so there is nothing
//! to search: a random family is falsified exactly instead. The numbers are
//! recorded, not asserted.
//!
//! cargo run --release --example search_margins [iterations]

use prframes::construct::{random_family, search_min, DimProfile, SearchOptions};
use prframes::projection::{hyperplane_falsify, margin};

fn main() -> prframes::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    println!("{:>2} {:>3} {:>12} {:>10}  note", "n", "m", "margin", "iteration");
    for n in 3..=5 {
        let m = 2 * n - 2;
        let opts = SearchOptions { iterations, stop_at: Some(1e-3), ..Default::default() };
        let s = search_min(&DimProfile::hyperplanes(n, m)?, &opts)?;
        let note = if s.succeeded(opts.margin_floor) { "passes" } else { "not found" };
        println!("{n:>2} {m:>3} {:>12.3e} {:>10}  {note}", s.margin.value, s.iteration);

        let f = random_family(&DimProfile::hyperplanes(n, m - 1)?, 0);
        let w = hyperplane_falsify(&f);
        let note = match &w {
            Some(w) => format!("fails, witness verified: {}", w.verify(&f)),
            None => "no witness".into(),
        };
        println!("{n:>2} {:>3} {:>12.3e} {:>10}  {note}", m - 1, margin(&f, 1000, 8, 0).value, "-");
    }
    Ok(())
}
