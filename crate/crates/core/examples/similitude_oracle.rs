//! Certified bounds for a random planar similitude system, compared with the
//! exact dimension from `sum r_i^t = 1`.
//!
//! cargo run --release --example similitude_oracle -- [seed] [h]

use fracdim::hutchinson_dimension;
use fracdim::record::{run, RunConfig};

fn main() -> fracdim::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut state: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let h: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.02);

    // small xorshift so the example needs no extra dependencies
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    let count = 2 + (next() * 4.0) as usize % 4;
    let mut ratios: Vec<f64> = Vec::new();
    let mut centers: Vec<[f64; 2]> = Vec::new();
    let mut attempts = 0;
    while ratios.len() < count {
        attempts += 1;
        if attempts % 1000 == 0 {
            ratios.clear();
            centers.clear();
        }
        let r = 0.2 + 0.4 * next();
        let (a, s) = (2.0 * std::f64::consts::PI * next(), (1.0 - r) * next().sqrt());
        let c = [s * a.cos(), s * a.sin()];
        let clear = ratios
            .iter()
            .zip(&centers)
            .all(|(&q, d)| ((c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2)).sqrt() > r + q + 1e-3);
        if clear {
            ratios.push(r);
            centers.push(c);
        }
    }

    let exact = hutchinson_dimension(&ratios);
    println!("ratios   {ratios:.4?}");
    println!("exact    {exact:.10}");
    let outcome = run(&RunConfig::for_similitude(&ratios, &centers, h))?;
    let r = &outcome.record;
    println!("interval [{:.10}, {:.10}]  width {:.3e}", r.t_lo, r.t_hi, r.width);
    println!("contains {}", r.contains(exact));
    Ok(())
}
