//! Geometry of a pool of fine-tuned models: mean per-layer cosine between
//! every pair of task vectors, and histograms of the per-layer cosines.
//!
//! ```text
//! cargo run --example alignment
//! ```

mod common;

use monosoup::diagnostics::{alignment_histograms, pairwise_alignment};
use monosoup::merge::CandidatePool;

fn main() -> monosoup::Result<()> {
    let layout = common::layout(2, 8);
    let pre = common::random_model(1, &layout);
    let candidates = vec![
        ("a".to_string(), common::fine_tune(&pre, 10, 1, 0.001)),
        ("b".to_string(), common::fine_tune(&pre, 10, 2, 0.001)),
        ("c".to_string(), common::fine_tune(&pre, 20, 3, 0.001)),
    ];
    let pool = CandidatePool::new(pre, candidates)?;

    let table = pairwise_alignment(&pool)?;
    println!("     {}", table.ids.iter().map(|id| format!("{id:>7}")).collect::<String>());
    for (id, row) in table.ids.iter().zip(&table.mean_cos) {
        println!("{id:>4} {}", row.iter().map(|c| format!("{c:>7.3}")).collect::<String>());
    }

    for h in alignment_histograms(&pool, 10)? {
        let bars: Vec<String> = h.counts.iter().map(|c| c.to_string()).collect();
        println!("{} vs {}: [{}] over [-1, 1]", h.a, h.b, bars.join(" "));
    }
    Ok(())
}
