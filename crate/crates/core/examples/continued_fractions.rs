//! Complex continued fractions with the four generators 1, 1+i, 1-i, 2.
//!
//! cargo run --release --example continued_fractions -- [h]

use fracdim::catalog::lookup;
use fracdim::record::{run, RunConfig};

fn main() -> fracdim::Result<()> {
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.003);
    let entry = lookup("cf2-4gen")?;
    let outcome = run(&RunConfig::for_system(entry.name, h))?;
    print!("{}", outcome.record.summary());
    println!("published {} +- {}", entry.table_value, entry.table_radius);
    println!("contains  {}", outcome.record.contains(entry.table_value));
    Ok(())
}
