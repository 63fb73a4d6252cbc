use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{num, Tabular};
use crate::error::{Error, Result};
use crate::merge::{layer_cosine, task_vector, CandidatePool, TaskVector};

/// Mean per-layer task-vector cosine for every pair of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseAlignmentTable {
    pub ids: Vec<String>,
    /// Symmetric, indexed like `ids`.
    pub mean_cos: Vec<Vec<f64>>,
}

/// Counts of per-layer cosines in uniform bins over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineHistogram {
    pub a: String,
    pub b: String,
    pub counts: Vec<usize>,
}

pub const DEFAULT_BINS: usize = 50;

impl CosineHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Lower edge of bin `i`.
    pub fn edge(&self, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / self.bins() as f64
    }
}

fn vectors(pool: &CandidatePool) -> Result<Vec<TaskVector>> {
    if pool.len() < 2 {
        return Err(Error::EmptyPool);
    }
    let pre = pool.pre()?;
    pool.candidates()
        .par_iter()
        .map(|(_, c)| task_vector(pre, c))
        .collect()
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

pub fn pairwise_alignment(pool: &CandidatePool) -> Result<PairwiseAlignmentTable> {
    let taus = vectors(pool)?;
    let n = taus.len();
    let mut mean_cos = vec![vec![0.0; n]; n];
    for (i, row) in mean_cos.iter_mut().enumerate() {
        row[i] = layer_cosine(&taus[i], &taus[i])?.mean;
    }
    let off: Vec<f64> = pairs(n)
        .par_iter()
        .map(|&(i, j)| Ok(layer_cosine(&taus[i], &taus[j])?.mean))
        .collect::<Result<_>>()?;
    for (&(i, j), c) in pairs(n).iter().zip(off) {
        mean_cos[i][j] = c;
        mean_cos[j][i] = c;
    }
    Ok(PairwiseAlignmentTable {
        ids: pool.ids().map(str::to_string).collect(),
        mean_cos,
    })
}

/// Per-pair histograms of per-layer cosines with `bins` uniform bins.
/// Layers with an undefined cosine are not counted.
pub fn alignment_histograms(pool: &CandidatePool, bins: usize) -> Result<Vec<CosineHistogram>> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    let taus = vectors(pool)?;
    let ids: Vec<&str> = pool.ids().collect();
    pairs(taus.len())
        .par_iter()
        .map(|&(i, j)| {
            let profile = layer_cosine(&taus[i], &taus[j])?;
            let mut counts = vec![0; bins];
            for (name, &c) in &profile.per_layer {
                if profile.excluded.contains(name) {
                    continue;
                }
                let bin = (((c + 1.0) / 2.0) * bins as f64).floor() as usize;
                counts[bin.min(bins - 1)] += 1;
            }
            Ok(CosineHistogram {
                a: ids[i].to_string(),
                b: ids[j].to_string(),
                counts,
            })
        })
        .collect()
}

impl Tabular for PairwiseAlignmentTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["a", "b", "mean_cos"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let n = self.ids.len();
        (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                vec![
                    self.ids[i].clone(),
                    self.ids[j].clone(),
                    num(self.mean_cos[i][j]),
                ]
            })
            .collect()
    }
}

impl Tabular for Vec<CosineHistogram> {
    fn columns(&self) -> Vec<&'static str> {
        vec!["a", "b", "bin_low", "bin_high", "count"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.iter()
            .flat_map(|h| {
                (0..h.bins()).map(move |i| {
                    vec![
                        h.a.clone(),
                        h.b.clone(),
                        num(h.edge(i)),
                        num(h.edge(i + 1)),
                        h.counts[i].to_string(),
                    ]
                })
            })
            .collect()
    }
}
