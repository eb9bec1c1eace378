//! Reads and writes family files: JSON with exact rational entries written
//! as strings such as "-3/7".
//!
//! cargo run --example family_files

use prframes::cli::family_file::{parse_family, write_family, Family};
use prframes::construct::{random_family, DimProfile};

fn main() -> prframes::Result<()> {
    let text = r#"{
        "ambient": 2,
        "kind": "vectors",
        "entries": [[1, 0], [0, 1], ["1/2", "-3/2"]]
    }"#;
    let family = parse_family(text)?;
    println!("parsed {} family in R^{}", family.kind(), family.ambient_dim());
    println!("{}", write_family(&family));

    let subspaces = Family::Subspaces(random_family(&DimProfile::new(3, vec![1, 2, 1, 2, 1])?, 4));
    let written = write_family(&subspaces);
    assert_eq!(parse_family(&written)?, subspaces);
    println!("random subspace family round-trips exactly ({} bytes)", written.len());

    match parse_family(r#"{"ambient": 2, "kind": "vectors", "entries": [[1, "x"]]}"#) {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("bad entry: {e}"),
    }
    Ok(())
}
