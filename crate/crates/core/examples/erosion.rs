//! Watch finite islands of minuses disappear under the noiseless rules.
//! Writes one PPM frame per step of the NEC square to the temp dir.

use toomlab::lattice::{self, ppm_frame};
use toomlab::rule::builtin;

fn main() -> toomlab::Result<()> {
    let stav = builtin("stavskaya")?;
    for k in [1i64, 4, 16] {
        let island: Vec<Vec<i64>> = (0..k).map(|i| vec![i]).collect();
        let cutoff = lattice::default_cutoff(lattice::island_diameter(&island));
        let dims = lattice::erosion_dims(&stav, &island, cutoff);
        println!("stavskaya interval of {k}: {:?}", lattice::erosion_time(&stav, &island, &dims, cutoff)?);
    }

    let nec = builtin("nec")?;
    let square: Vec<Vec<i64>> = (0..6).flat_map(|i| (0..6).map(move |j| vec![i, j])).collect();
    let cutoff = 200;
    let dims = lattice::erosion_dims(&nec, &square, cutoff);
    let dir = std::env::temp_dir().join("toomlab-erosion");
    std::fs::create_dir_all(&dir)?;
    let trace = lattice::erosion_trace_with(&nec, &square, &dims, cutoff, |t, state| {
        let _ = std::fs::write(dir.join(format!("nec_{t:04}.ppm")), ppm_frame(state).unwrap());
    })?;
    println!("nec 6x6 square: {:?}, sizes {:?}", trace.outcome, trace.island_sizes);
    println!("frames in {}", dir.display());

    // Majority in one dimension keeps any pair forever.
    let maj = builtin("majority1d")?;
    let pair = vec![vec![0], vec![1]];
    let dims = lattice::erosion_dims(&maj, &pair, 100);
    println!("majority1d pair: {:?}", lattice::erosion_time(&maj, &pair, &dims, 100)?);
    Ok(())
}
