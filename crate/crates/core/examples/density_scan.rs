//! Stationary density of minuses against noise strength. The biased family
//! corrupts prescribed minuses twice as often, which pushes toward plus.

use toomlab::rule::builtin;
use toomlab::stats::{density_vs_epsilon_scan, NoiseFamily};

fn main() -> toomlab::Result<()> {
    let nec = builtin("nec")?;
    let grid = [0.01, 0.02, 0.04, 0.06, 0.08, 0.1];
    for family in [NoiseFamily::Symmetric, NoiseFamily::Biased { minus_ratio: 2 }] {
        println!("{family:?}");
        for row in density_vs_epsilon_scan(&nec, family, &grid, &[128, 128], 600, 200, 3)? {
            println!("  eps={:<5} density {:.4} ± {:.1e}", row.eps, row.density, row.stderr);
        }
    }
    Ok(())
}
