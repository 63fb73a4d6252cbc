//! Multi-checkpoint baselines: task vectors and their alignment, uniform and
//! greedy soups, similarity-filtered soups, Model Stock, Wise-FT and LiNeS.

mod lines;
mod pool;
mod select;
mod stock;
mod task_vector;

use rayon::prelude::*;

pub(crate) use lines::block_token;
pub use lines::{lines, BlockMap};
pub use pool::{uniform_soup, CandidatePool};
pub use select::{greedy_soup, set_key, sfgs, Evaluator, Selection, SelectionStep, SoupScorer};
pub use stock::{model_stock, stock_lambda, wise_ft, ModelStock, ANTIPODAL_MARGIN};
pub use task_vector::{
    cosine, layer_cosine, task_vector, AlignmentProfile, LayerDelta, TaskVector, ZERO_NORM,
};

use crate::checkpoint::{validate_compatibility, Checkpoint, Tensor};
use crate::error::Result;

/// Elementwise `f(pre, ft, param(name))` over every tensor, in pre's dtype
/// and with pre's metadata.
fn combine(
    pre: &Checkpoint,
    ft: &Checkpoint,
    param: impl Fn(&str) -> f64 + Sync,
    f: impl Fn(f64, f64, f64) -> f64 + Sync,
) -> Result<Checkpoint> {
    let schema = validate_compatibility(&[pre, ft])?;
    let tensors = schema
        .entries
        .par_iter()
        .map(|entry| {
            let name = &entry.name;
            let p = param(name);
            let a = pre.tensors()[name].to_f64();
            let b = ft.tensors()[name].to_f64();
            let values: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| f(x, y, p)).collect();
            Ok((name.clone(), pre.tensors()[name].with_values(&values)?))
        })
        .collect::<Result<Vec<(String, Tensor)>>>()?;
    Ok(tensors
        .into_iter()
        .collect::<Checkpoint>()
        .with_metadata(pre.metadata().clone()))
}
