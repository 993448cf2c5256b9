//! Produces a result record, re-verifies it from the stored witnesses, and
//! shows that a tampered record is rejected.

use fracdim::record::{run, verify_record, verify_record_file, ResultRecord, RunConfig};

fn main() -> fracdim::Result<()> {
    let mut config = RunConfig::for_similitude(&[0.5, 0.25, 0.25], &[[-0.5, 0.0], [0.5, 0.4], [0.5, -0.4]], 0.04);
    let path = std::env::temp_dir().join("similitude-record.json");
    config.output.record = Some(path.clone());
    let outcome = run(&config)?;
    outcome.record.write(&path)?;
    println!("interval [{:.10}, {:.10}] written to {}", outcome.record.t_lo, outcome.record.t_hi, path.display());

    verify_record_file(&path)?;
    println!("stored record verifies");

    let mut tampered: ResultRecord = ResultRecord::load(&path)?;
    tampered.t_hi = tampered.t_lo + 0.25 * tampered.width;
    match verify_record(&tampered) {
        Ok(()) => println!("tampered record unexpectedly verified"),
        Err(e) => println!("tampered record rejected: {e}"),
    }
    Ok(())
}
