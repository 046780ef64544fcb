//! Pilot scan for the two-phase property of NEC: run the all-plus and
//! all-minus chains with shared noise and classify the magnetization gap.
//!
//!     cargo run --release --example phase_pilot -- 256 2000

use toomlab::lattice::NoiseModel;
use toomlab::rule::builtin;
use toomlab::stats::two_phase_divergence;

fn main() -> toomlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map(|s| s.parse().expect("side")).unwrap_or(128);
    let steps: u64 = args.next().map(|s| s.parse().expect("steps")).unwrap_or(1000);

    let nec = builtin("nec")?;
    for eps in [0.01, 0.02, 0.05, 0.08, 0.1, 0.15, 0.2, 0.5] {
        let noise = NoiseModel::symmetric(eps)?;
        let r = two_phase_divergence(&nec, &noise, &[side, side], steps, steps / 10, 1)?;
        let gap = r.gap.as_ref().map(|g| format!("{:.4} ± {:.1e}", g.value, g.stderr)).unwrap_or_default();
        println!("eps={eps:<5} {:?}  gap {gap}  coalesced at {:?}", r.class.unwrap(), r.coalesced_at);
    }
    Ok(())
}
