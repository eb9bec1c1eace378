//! Certifies a family with an interval box cover, writes the cover as text,
//! reads it back and replays it. A tampered cover is rejected.
//!
//! cargo run --release --example certify_replay

use prframes::certify::{box_cover_certify, parse_cover, replay, write_cover, CertifyOptions, CertifyOutcome};
use prframes::frames::{centered_nodes, vandermonde_frame};
use prframes::projection::ProjectionFamily;

fn main() -> prframes::Result<()> {
    let f = ProjectionFamily::lines(&vandermonde_frame(3, &centered_nodes(5))?)?;
    let CertifyOutcome::CertifiedPasses(cover) = box_cover_certify(&f, &CertifyOptions::default())? else {
        println!("not certified");
        return Ok(());
    };
    println!("certified with {} boxes, deepest split {}", cover.boxes_certified, cover.max_depth);

    let text = write_cover(&cover);
    for line in text.lines().take(5) {
        println!("  {line}");
    }
    let report = replay(&f, &parse_cover(&text)?)?;
    println!("replayed {} records over {} faces", report.records, report.faces);

    // drop one record: the remaining boxes no longer tile the faces
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(2);
    let tampered = parse_cover(&(lines.join("\n") + "\n"))?;
    match replay(&f, &tampered) {
        Ok(_) => println!("tampered cover accepted"),
        Err(e) => println!("tampered cover rejected: {e}"),
    }
    Ok(())
}
