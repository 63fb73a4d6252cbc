use std::collections::BTreeMap;

use rayon::prelude::*;

use super::task_vector::{layer_cosine, task_vector, AlignmentProfile};
use crate::checkpoint::{validate_compatibility, Checkpoint, Tensor};
use crate::error::{Error, Result};

/// Layers whose task vectors have cosine at or below `-1 + ANTIPODAL_MARGIN`
/// cannot be merged by Model Stock.
pub const ANTIPODAL_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ModelStock {
    pub merged: Checkpoint,
    pub alignment: AlignmentProfile,
    /// Interpolation weight per layer after clamping to `[0, 1]`.
    pub lambdas: BTreeMap<String, f64>,
    /// Layers whose raw weight fell outside `[0, 1]`.
    pub clamped: Vec<String>,
}

/// `2 cos / (1 + cos)`, clamped to `[0, 1]`. Returns the weight and whether
/// it was clamped.
pub fn stock_lambda(cos: f64) -> (f64, bool) {
    let raw = 2.0 * cos / (1.0 + cos);
    let clamped = raw.clamp(0.0, 1.0);
    (clamped, clamped != raw)
}

/// Merges two fine-tuned models as `pre + lambda * (tau_1 + tau_2) / 2` per
/// layer, with `lambda` from the layer's task-vector cosine.
pub fn model_stock(pre: &Checkpoint, ft1: &Checkpoint, ft2: &Checkpoint) -> Result<ModelStock> {
    validate_compatibility(&[pre, ft1, ft2])?;
    let t1 = task_vector(pre, ft1)?;
    let t2 = task_vector(pre, ft2)?;
    let alignment = layer_cosine(&t1, &t2)?;
    let mut lambdas = BTreeMap::new();
    let mut clamped = Vec::new();
    for (name, &cos) in &alignment.per_layer {
        if cos <= -1.0 + ANTIPODAL_MARGIN {
            return Err(Error::DegenerateAngle {
                name: name.clone(),
                cos,
            });
        }
        let (lambda, was_clamped) = stock_lambda(cos);
        if was_clamped {
            log::warn!("{name}: Model Stock weight clamped (cos = {cos})");
            clamped.push(name.clone());
        }
        lambdas.insert(name.clone(), lambda);
    }
    let tensors = t1
        .deltas
        .par_iter()
        .map(|(name, d1)| {
            let d2 = &t2.deltas[name];
            let lambda = lambdas[name];
            let base = pre.tensors()[name].to_f64();
            let values: Vec<f64> = base
                .iter()
                .zip(d1.values.iter().zip(&d2.values))
                .map(|(w0, (a, b))| w0 + lambda * ((a + b) / 2.0))
                .collect();
            Ok((name.clone(), pre.tensors()[name].with_values(&values)?))
        })
        .collect::<Result<Vec<(String, Tensor)>>>()?;
    let merged = tensors
        .into_iter()
        .collect::<Checkpoint>()
        .with_metadata(pre.metadata().clone());
    Ok(ModelStock {
        merged,
        alignment,
        lambdas,
        clamped,
    })
}

/// `(1 - lambda) * pre + lambda * ft`.
pub fn wise_ft(pre: &Checkpoint, ft: &Checkpoint, lambda: f64) -> Result<Checkpoint> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            what: "Wise-FT lambda",
            value: lambda,
        });
    }
    super::combine(pre, ft, |_| lambda, |w0, wt, l| (1.0 - l) * w0 + l * wt)
}
