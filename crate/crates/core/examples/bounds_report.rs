//! Explicit stability constants for NEC as the noise bias grows.

use toomlab::cli::bounds_report;
use toomlab::eroder::check_eroder;
use toomlab::rule::builtin;

fn main() -> toomlab::Result<()> {
    let nec = builtin("nec")?;
    let cert = check_eroder(&nec.minimal_plus_sets()?, nec.dimension())?;

    for alpha in [0.0, 0.1, 0.2, 0.3] {
        let r = bounds_report(&nec, &cert, alpha, Some(1e-40), 0.0, 1.0);
        println!(
            "alpha={alpha:.1}  eps*={:.3e}  sigma={:?}  C={:?}  eta={:?}",
            r.epsilon_star.unwrap_or(f64::NAN),
            r.sigma,
            r.c,
            r.eta
        );
        for note in &r.notes {
            println!("    note: {note}");
        }
    }
    Ok(())
}
