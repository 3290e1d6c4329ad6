//! Regenerate the files under tests/fixtures.
//!
//! cargo run --example write_fixtures

use std::path::Path;

use sparse_explore::geometry::AffinePlane;
use sparse_explore::io::{format_cloud, format_plane, write_text};
use sparse_explore::sim::{planted_outlier_cloud, ring_cloud};

fn main() -> sparse_explore::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let (planted, _) = planted_outlier_cloud(0, 200, 20);
    write_text(&dir.join("planted_outliers.csv"), &format_cloud(&planted, None))?;
    write_text(&dir.join("ring_300.csv"), &format_cloud(&ring_cloud(300.0, 4, 5.0), None))?;
    write_text(&dir.join("horizontal.plane"), &format_plane(&AffinePlane::horizontal(0.0)))?;
    println!("fixtures written to {}", dir.display());
    Ok(())
}
