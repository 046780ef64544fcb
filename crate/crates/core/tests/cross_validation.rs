//! Monte Carlo estimators against the exact oracle on tori small enough to
//! enumerate.

use toomlab::exact::{self, StateDistribution, TransferOperator};
use toomlab::lattice::NoiseModel;
use toomlab::rule::builtin;
use toomlab::stats;

fn stationary_and_burn_in(op: &TransferOperator, dims: &[usize]) -> (StateDistribution, u64) {
    let pi = exact::stationary_with(op, 1e-14, 1_000_000).unwrap().distribution;
    let curve = exact::tv_curve(op, &StateDistribution::all_plus(dims).unwrap(), &pi, 2000).unwrap();
    let burn_in = curve.iter().position(|&tv| tv < 1e-6).expect("mixes within 2000 steps") as u64;
    (pi, burn_in)
}

#[test]
fn nec_density_and_covariance_on_3x4() {
    let rule = builtin("nec").unwrap();
    let noise = NoiseModel::symmetric(0.15).unwrap();
    let dims = [3usize, 4];
    let op = TransferOperator::new(&rule, &noise, &dims).unwrap();
    let (pi, burn_in) = stationary_and_burn_in(&op, &dims);

    let mc = stats::replica_minus_density(&rule, &noise, &dims, burn_in, 40_000, 5).unwrap();
    let exact_density = pi.minus_marginal(0);
    assert!((mc.value - exact_density).abs() <= 4.0 * mc.stderr, "{mc:?} vs {exact_density}");

    let (summary, _) = stats::spatial_correlation(&rule, &noise, &dims, &[1], 40_000, burn_in, 6).unwrap();
    let p = &summary.covariances[0];
    // Distance-1 shell from site 0 in row-major order: (0, ±1), (±1, 0).
    let exact_avg = [1, 3, 4, 8].iter().map(|&b| exact::two_point_covariance(&pi, 0, b)).sum::<f64>() / 4.0;
    assert!((p.estimate - exact_avg).abs() <= 4.0 * p.stderr, "{} ± {} vs {exact_avg}", p.estimate, p.stderr);
}

#[test]
fn biased_stavskaya_density_on_ring_of_six() {
    let rule = builtin("stavskaya").unwrap();
    let noise = NoiseModel::biased(0.2, 0.05).unwrap();
    let dims = [6usize];
    let op = TransferOperator::new(&rule, &noise, &dims).unwrap();
    let (pi, burn_in) = stationary_and_burn_in(&op, &dims);
    let mc = stats::replica_minus_density(&rule, &noise, &dims, burn_in, 40_000, 8).unwrap();
    let exact_density = pi.minus_marginal(0);
    assert!((mc.value - exact_density).abs() <= 4.0 * mc.stderr, "{mc:?} vs {exact_density}");
}

#[test]
fn density_scan_is_monotone_in_noise() {
    let rule = builtin("stavskaya").unwrap();
    let grid = [0.02, 0.05, 0.1, 0.2];
    let rows = stats::density_vs_epsilon_scan(
        &rule,
        stats::NoiseFamily::Symmetric,
        &grid,
        &[256],
        400,
        100,
        1,
    )
    .unwrap();
    for w in rows.windows(2) {
        assert!(w[0].density <= w[1].density + 3.0 * (w[0].stderr + w[1].stderr), "{w:?}");
    }
}
