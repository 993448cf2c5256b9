//! Draws the first generations of the Apollonian maps.
//!
//! cargo run --release --example apollonian_figure -- [n_max] [depth] [out.svg]

use std::path::PathBuf;

use fracdim::catalog::{apollonian_system, ApollonianRange};
use fracdim::figure::emit_figure;

fn main() -> fracdim::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_max: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let depth: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("apollonian.svg"));

    let spec = apollonian_system(&[1, 2, 3, 4, 5, 6], ApollonianRange::Finite(n_max))?;
    let fig = emit_figure(&spec, depth, &path)?;
    for level in 0..=depth {
        println!("generation {level}: {} circles", fig.count(level));
    }
    println!("written to {}", path.display());
    Ok(())
}
