//! The three-disk Schottky group: first generations and a certified
//! interval.
//!
//! cargo run --release --example schottky -- [h] [figure.svg]

use std::path::PathBuf;

use fracdim::catalog::schottky2d_system;
use fracdim::figure::emit_figure;
use fracdim::record::{run, RunConfig};

fn main() -> fracdim::Result<()> {
    let mut args = std::env::args().skip(1);
    let h: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("schottky.svg"));

    let fig = emit_figure(&schottky2d_system(), 3, &path)?;
    println!("{} images over 3 generations written to {}", fig.circles() - 3, path.display());

    let mut config = RunConfig::for_system("schottky2d", h);
    config.solver.width_goal = Some(2e-3);
    let outcome = run(&config)?;
    print!("{}", outcome.record.summary());
    Ok(())
}
