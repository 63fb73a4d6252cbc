use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{validate_compatibility, Checkpoint, DType};
use crate::error::Result;
use crate::spectral::dot;

/// Norms below this make a layer's cosine undefined; such layers report 0.
pub const ZERO_NORM: f64 = 1e-24;

/// One tensor of a task vector, kept in `f64` with its source shape and dtype.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDelta {
    pub shape: Vec<usize>,
    pub dtype: DType,
    pub values: Vec<f64>,
}

impl LayerDelta {
    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }
}

/// `ft - pre`, tensor by tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskVector {
    pub deltas: BTreeMap<String, LayerDelta>,
}

pub fn task_vector(pre: &Checkpoint, ft: &Checkpoint) -> Result<TaskVector> {
    let schema = validate_compatibility(&[pre, ft])?;
    let deltas = schema
        .entries
        .par_iter()
        .map(|entry| {
            let a = pre.tensors()[&entry.name].to_f64();
            let b = ft.tensors()[&entry.name].to_f64();
            let values = b.iter().zip(&a).map(|(y, x)| y - x).collect();
            let delta = LayerDelta {
                shape: entry.shape.clone(),
                dtype: entry.dtype,
                values,
            };
            (entry.name.clone(), delta)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(TaskVector { deltas })
}

/// Per-layer cosine similarity between two task vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentProfile {
    pub per_layer: BTreeMap<String, f64>,
    /// Mean over layers where both deltas have nonzero norm; 0 if there are none.
    pub mean: f64,
    /// Layers whose cosine is undefined (reported as 0 and left out of the mean).
    pub excluded: Vec<String>,
}

/// Cosine of two flattened vectors, or `None` when either norm is below [`ZERO_NORM`].
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (aa, bb) = (dot(a, a), dot(b, b));
    if aa.sqrt() < ZERO_NORM || bb.sqrt() < ZERO_NORM {
        return None;
    }
    // sqrt(aa * bb) rather than |a| |b| so that a vector's cosine with itself
    // is exactly 1.
    let c = dot(a, b) / (aa * bb).sqrt();
    Some(c.clamp(-1.0, 1.0))
}

pub fn layer_cosine(a: &TaskVector, b: &TaskVector) -> Result<AlignmentProfile> {
    check_same_layers(a, b)?;
    let mut per_layer = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (name, da) in &a.deltas {
        let db = &b.deltas[name];
        match cosine(&da.values, &db.values) {
            Some(c) => {
                sum += c;
                count += 1;
                per_layer.insert(name.clone(), c);
            }
            None => {
                excluded.push(name.clone());
                per_layer.insert(name.clone(), 0.0);
            }
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(AlignmentProfile {
        per_layer,
        mean,
        excluded,
    })
}

fn check_same_layers(a: &TaskVector, b: &TaskVector) -> Result<()> {
    use crate::error::Error;
    for (name, da) in &a.deltas {
        match b.deltas.get(name) {
            None => return Err(Error::mismatch(name, "missing from the second task vector")),
            Some(db) if db.shape != da.shape => {
                return Err(Error::mismatch(
                    name,
                    format!("shapes differ: {:?} vs {:?}", da.shape, db.shape),
                ))
            }
            Some(_) => {}
        }
    }
    if let Some(name) = b.deltas.keys().find(|k| !a.deltas.contains_key(*k)) {
        return Err(Error::mismatch(name, "missing from the first task vector"));
    }
    Ok(())
}
