//! Spatial and temporal decay of correlations for Stavskaya's rule.

use toomlab::lattice::NoiseModel;
use toomlab::rule::builtin;
use toomlab::stats;

fn main() -> toomlab::Result<()> {
    let rule = builtin("stavskaya")?;
    let noise = NoiseModel::symmetric(0.08)?;
    let dims = [1024usize];

    let (spatial, fit) = stats::spatial_correlation(&rule, &noise, &dims, &[1, 2, 3, 4, 6, 8], 4000, 200, 1)?;
    println!("spatial covariance");
    for p in &spatial.covariances {
        println!("  {:>3}  {:+.3e} ± {:.1e}", p.distance_or_lag, p.estimate, p.stderr);
    }
    println!("  rate {:.3} over {} points (valid: {})", fit.rate, fit.n_points, fit.valid);

    let (temporal, fit) = stats::temporal_autocorrelation(&rule, &noise, &dims, &[1, 2, 4, 8, 16], 4000, 200, 2)?;
    println!("temporal autocovariance");
    for p in &temporal.autocovariances {
        println!("  {:>3}  {:+.3e} ± {:.1e}", p.distance_or_lag, p.estimate, p.stderr);
    }
    println!("  rate {:.3} over {} points (valid: {})", fit.rate, fit.n_points, fit.valid);
    Ok(())
}
