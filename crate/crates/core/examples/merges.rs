//! Multi-checkpoint merges: uniform soup, Model Stock, Wise-FT and LiNeS.
//!
//! ```text
//! cargo run --example merges
//! ```

mod common;

use monosoup::merge::{lines, model_stock, uniform_soup, wise_ft, BlockMap, CandidatePool};
use monosoup::Checkpoint;

fn distance(a: &Checkpoint, b: &Checkpoint) -> f64 {
    a.iter()
        .map(|(name, t)| {
            let u = b.get(name).unwrap().to_f64();
            t.to_f64().iter().zip(&u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

fn main() -> monosoup::Result<()> {
    let layout = common::layout(3, 8);
    let pre = common::random_model(1, &layout);
    let a = common::fine_tune(&pre, 10, 11, 0.003);
    let b = common::fine_tune(&pre, 10, 12, 0.003);
    let c = common::fine_tune(&pre, 20, 13, 0.003);

    let pool = CandidatePool::new(
        pre.clone(),
        vec![("a".into(), a.clone()), ("b".into(), b.clone()), ("c".into(), c.clone())],
    )?;
    let soup = uniform_soup(&pool)?;
    println!("uniform soup of 3: distance to pre {:.4}", distance(&soup, &pre));

    // Model Stock shrinks the average update towards pre by a per-layer
    // factor 2 cos / (1 + cos) of the two task vectors' angle.
    let stock = model_stock(&pre, &a, &b)?;
    for (name, lambda) in stock.lambdas.iter().take(4) {
        println!("model stock  {name:<26} cos {:+.3}  lambda {lambda:.3}", stock.alignment.per_layer[name]);
    }
    println!("model stock: mean cosine {:.3}, {} layers clamped", stock.alignment.mean, stock.clamped.len());

    for lambda in [0.0, 0.5, 1.0] {
        let w = wise_ft(&pre, &a, lambda)?;
        println!("wise-ft lambda {lambda}: distance to pre {:.4}, to ft {:.4}", distance(&w, &pre), distance(&w, &a));
    }

    // LiNeS: shallow blocks keep little of the update, deep blocks most of it.
    let blocks = BlockMap::detect(pre.names())?;
    println!("LiNeS block scales: {:?}", blocks.schedule(0.1, 0.9));
    let scaled = lines(&pre, &a, 0.1, 0.9, None)?;
    println!("LiNeS(0.1, 0.9): distance to pre {:.4}", distance(&scaled, &pre));
    Ok(())
}
