// Zero-noise extrapolation of a barrier from synthetic noisy energies:
// fit-first versus difference-first, with bootstrap percentiles.

use protonpipe::zne::{
    barrier_diff_first, barrier_fit_first, bootstrap_fit_first, bootstrap_interval, bootstrap_table, FitOptions,
    ZneDataset,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> protonpipe::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shared = Normal::new(0.0, 4e-3).unwrap();
    let own = Normal::new(0.0, 1e-3).unwrap();
    let (mut left, mut middle) = (ZneDataset::new(), ZneDataset::new());
    for lambda in [1.0, 2.0, 3.0, 4.0] {
        for _ in 0..25 {
            // Both states see the same drift in a given replicate.
            let drift = shared.sample(&mut rng);
            left.push(lambda, -0.600 + 0.020 * lambda + 0.002 * lambda * lambda + drift + own.sample(&mut rng))?;
            middle.push(lambda, -0.588 + 0.024 * lambda + 0.002 * lambda * lambda + drift + own.sample(&mut rng))?;
        }
    }

    let opts = FitOptions::default();
    let ff = barrier_fit_first(&left, &middle, &opts)?;
    let df = barrier_diff_first(&left, &middle, &opts)?;
    println!("planted barrier 12.0 mHa");
    println!("fit first:  {:6.2} ± {:.2} mHa (degrees {}, {})", ff.delta * 1e3, ff.sigma * 1e3, ff.fits[0].degree, ff.fits[1].degree);
    println!("diff first: {:6.2} ± {:.2} mHa (degree {})", df.delta * 1e3, df.sigma * 1e3, df.fits[0].degree);

    let bff = bootstrap_fit_first(&left, &middle, (ff.fits[0].degree, ff.fits[1].degree), 1000, 1)?;
    let bdf = bootstrap_interval(&left.paired_difference(&middle)?, df.fits[0].degree, 1000, 1)?;
    print!("\n{}", bootstrap_table(&[("Fit first", &bff), ("Diff first", &bdf)], 1));
    Ok(())
}
