//! Runs any catalog system and prints the evaluation trace.
//!
//! cargo run --release --example desk_run -- NAME H [WIDTH_GOAL] [TRUNCATION]

use fracdim::record::{run, RunConfig};

fn main() -> fracdim::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 3 {
        eprintln!("usage: desk_run NAME H [WIDTH_GOAL] [TRUNCATION]");
        std::process::exit(3);
    }
    let h: f64 = args[2].parse().map_err(|_| fracdim::Error::Config(format!("bad h {}", args[2])))?;
    let mut config = RunConfig::for_system(&args[1], h);
    config.solver.width_goal = args.get(3).and_then(|s| s.parse().ok());
    config.system.truncation = args.get(4).and_then(|s| s.parse().ok());
    let outcome = run(&config)?;
    for e in &outcome.record.trace {
        println!(
            "t = {:.9}  r(A) in [{:.9}, {:.9}]  r(B) in [{:.9}, {:.9}]  {:.2} s",
            e.t, e.a_lo, e.a_hi, e.b_lo, e.b_hi, e.seconds
        );
    }
    print!("{}", outcome.record.summary());
    Ok(())
}
