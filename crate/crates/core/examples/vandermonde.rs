//! Vandermonde frames: 2n - 1 distinct nodes always give the complement
//! property, and dropping any one node always breaks it.
//!
//! cargo run --release --example vandermonde

use prframes::frames::{centered_nodes, complement_property, is_full_spark, vandermonde_frame};

fn main() -> prframes::Result<()> {
    for n in 2..=5 {
        let m = 2 * n - 1;
        let nodes = centered_nodes(m);
        let f = vandermonde_frame(n, &nodes)?;
        let passes = complement_property(&f)?.passes();
        println!("n = {n}, m = {m}: full spark {}, complement property {passes}", is_full_spark(&f)?);

        let short = vandermonde_frame(n, &nodes[..m - 1])?;
        let v = complement_property(&short)?;
        println!("        m = {}: violation {:?}", m - 1, v.violation().map(|v| &v.subset));
    }
    Ok(())
}
