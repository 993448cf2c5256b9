//! Eigenfunction derivative constants and the resulting error factor for
//! every catalog system at a few mesh sizes.

use fracdim::catalog::CATALOG;
use fracdim::constants::ErrorBudget;
use fracdim::Error;

fn main() -> fracdim::Result<()> {
    println!("{:<18} {:>7} {:>8} {:>10} {:>10}  err at h = 0.01, 0.005, 0.0025", "system", "t", "eta", "C1", "C2");
    for e in CATALOG.iter() {
        let b = ErrorBudget::compute(e.method, e.dim, e.t_upper_hint, e.eta, 1e-9)?;
        let mut errs = Vec::new();
        for h in [0.01, 0.005, 0.0025] {
            errs.push(match ErrorBudget::compute(e.method, e.dim, e.t_upper_hint, e.eta, h) {
                Ok(b) => format!("{:.3e}", b.err_max),
                Err(Error::ErrTooLarge { .. }) => ">= 1".to_string(),
                Err(other) => return Err(other),
            });
        }
        println!(
            "{:<18} {:>7} {:>8.5} {:>10} {:>10}  {}",
            e.name,
            e.t_upper_hint,
            e.eta,
            b.c1,
            b.c2,
            errs.join(", ")
        );
    }
    Ok(())
}
