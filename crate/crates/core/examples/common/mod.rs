//! Synthetic checkpoints for the examples.

#![allow(dead_code)]

use monosoup::{Checkpoint, DType, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A small transformer-shaped layout: embeddings, `blocks` blocks of
/// attention and MLP weights with biases, and a head.
pub fn layout(blocks: usize, width: usize) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![
        ("embed.weight".to_string(), vec![64, width]),
        ("embed.position".to_string(), vec![16, width]),
    ];
    for b in 0..blocks {
        out.push((format!("blocks.{b}.attn.weight"), vec![3 * width, width]));
        out.push((format!("blocks.{b}.attn.bias"), vec![3 * width]));
        out.push((format!("blocks.{b}.mlp.fc.weight"), vec![4 * width, width]));
        out.push((format!("blocks.{b}.mlp.proj.weight"), vec![width, 4 * width]));
        out.push((format!("blocks.{b}.norm.weight"), vec![width]));
    }
    out.push(("head.weight".to_string(), vec![10, width]));
    out
}

pub fn random_model(seed: u64, layout: &[(String, Vec<usize>)]) -> Checkpoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    layout
        .iter()
        .map(|(name, shape)| {
            let n: usize = shape.iter().product();
            let values: Vec<f64> = (0..n).map(|_| 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
            (name.clone(), Tensor::from_f64(DType::F32, shape.clone(), &values).unwrap())
        })
        .collect()
}

/// A "fine-tuned" copy of `pre`: a shared low-rank drift along `direction_seed`
/// plus independent noise, so models made with the same direction agree more.
pub fn fine_tune(pre: &Checkpoint, direction_seed: u64, noise_seed: u64, noise: f64) -> Checkpoint {
    let mut dir_rng = ChaCha8Rng::seed_from_u64(direction_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    pre.iter()
        .map(|(name, t)| {
            let base = t.to_f64();
            let shape = t.shape();
            let rows = shape.first().copied().unwrap_or(1);
            let cols = base.len() / rows.max(1);
            // Rank-2 drift u1 v1^T + 0.5 u2 v2^T.
            let mut gauss = |len: usize| -> Vec<f64> {
                (0..len).map(|_| dir_rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let (u1, v1, u2, v2) = (gauss(rows), gauss(cols), gauss(rows), gauss(cols));
            let values: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let (r, c) = (i / cols, i % cols);
                    let drift = 0.01 * (u1[r] * v1[c] + 0.5 * u2[r] * v2[c]);
                    w + drift + noise * rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            (name.to_string(), t.with_values(&values).unwrap())
        })
        .collect()
}
