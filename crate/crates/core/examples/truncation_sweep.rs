//! Keeps only the leading directions of each layer update, for a range of
//! energy thresholds, and writes one checkpoint per threshold.
//!
//! ```text
//! cargo run --example truncation_sweep
//! ```

mod common;

use monosoup::diagnostics::truncation_sweep;
use monosoup::read_archive;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = common::layout(2, 8);
    let pre = common::random_model(1, &layout);
    let ft = common::fine_tune(&pre, 5, 6, 0.001);
    let dir = tempfile::tempdir()?;

    let sweep = truncation_sweep(&pre, &ft, &[0.5, 0.8, 0.95, 1.0], dir.path())?;
    for row in sweep.rows.iter().filter(|r| r.layer == "blocks.0.attn.weight") {
        println!("R {:<5} k {:>2}  retained {:.4}", row.r, row.k, row.retained_energy);
    }
    for out in &sweep.outputs {
        let ckpt = read_archive(&out.path)?;
        println!("R {:<5} -> {} ({} tensors)", out.r, out.path.file_name().unwrap().to_string_lossy(), ckpt.len());
    }
    Ok(())
}
