//! Spectral edit of a single fine-tuned checkpoint.
//!
//! Each matrix-shaped layer update `W = W_ft - W_0` is split by SVD into its
//! leading directions and the remaining tail, which are re-weighted with
//! coefficients derived from the layer's own spectrum.
//!
//! ```text
//! cargo run --example edit_checkpoint
//! ```

mod common;

use monosoup::edit::{edit_checkpoint, edit_checkpoint_with, RankRule, VectorPolicy};
use monosoup::{read_archive, write_archive};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = common::layout(2, 16);
    let pre = common::random_model(1, &layout);
    let ft = common::fine_tune(&pre, 7, 8, 0.002);

    let (edited, report) = edit_checkpoint(&pre, &ft, RankRule::EffectiveRank)?;
    println!("rank rule: {}, vectors: {}", report.rank_rule, report.vector_policy);
    println!("{:<26} {:>3} {:>3} {:>8} {:>8} {:>8}  status", "layer", "k", "r", "rho", "cos2", "l_low");
    for l in &report.layers {
        println!(
            "{:<26} {:>3} {:>3} {:>8.4} {:>8.4} {:>8.4}  {}",
            l.name, l.k, l.r, l.rho, l.cos2_alpha, l.lambda_low, l.status.as_str()
        );
    }

    // An explicit energy threshold, and Wise-FT interpolation for 1-D tensors.
    let rule: RankRule = "energy:0.9".parse()?;
    let vectors: VectorPolicy = "wise:0.5".parse()?;
    let (_, report) = edit_checkpoint_with(&pre, &ft, rule, vectors)?;
    println!("\nwith {rule} and {vectors}: {:?}", report.totals);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("edited.safetensors");
    write_archive(&edited, &path)?;
    assert_eq!(read_archive(&path)?, edited);
    println!("wrote and re-read {} tensors at {}", edited.len(), path.display());
    Ok(())
}
