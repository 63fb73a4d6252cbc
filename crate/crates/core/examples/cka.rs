//! Linear CKA between two activation matrices (samples by features).
//!
//! ```text
//! cargo run --example cka
//! ```

use monosoup::diagnostics::{linear_cka, ActivationMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> monosoup::Result<()> {
    let (n, d) = (200, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let base = ActivationMatrix::new(n, d, x.clone())?;

    // A rescaled, shifted copy is indistinguishable to CKA.
    let shifted = ActivationMatrix::new(n, d, x.iter().map(|v| 4.0 * v - 1.0).collect())?;
    println!("scaled copy:     {:.6}", linear_cka(&base, &shifted)?);

    // Keeping a subset of features, then adding increasing noise.
    for noise in [0.0, 0.5, 1.0, 4.0] {
        let y: Vec<f64> = (0..n)
            .flat_map(|i| (0..d / 2).map(move |j| (i, j)))
            .map(|(i, j)| x[i * d + j] + noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let half = ActivationMatrix::new(n, d / 2, y)?;
        println!("half + noise {noise:<3} {:.6}", linear_cka(&base, &half)?);
    }
    Ok(())
}
