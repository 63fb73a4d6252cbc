use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{num, Tabular};
use crate::edit::{EditReport, LayerStatus};
use crate::error::{Error, Result};
use crate::merge::block_token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    /// By block number (`layers.3`, `resblocks.3`, ...), across towers.
    LayerIndex,
    /// By dotted name up to and including the block number; names without a
    /// block drop their last component.
    NamePrefix,
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layer_index" | "layer-index" => Ok(Grouping::LayerIndex),
            "name_prefix" | "name-prefix" => Ok(Grouping::NamePrefix),
            other => Err(Error::InvalidArgument(format!(
                "unknown grouping {other:?} (expected layer_index or name_prefix)"
            ))),
        }
    }
}

impl Grouping {
    pub fn key(self, name: &str) -> String {
        match (self, block_token(name)) {
            (Grouping::LayerIndex, Some((_, index))) => index.to_string(),
            (Grouping::LayerIndex, None) => "none".into(),
            (Grouping::NamePrefix, Some((end, _))) => name[..end].to_string(),
            (Grouping::NamePrefix, None) => match name.rsplit_once('.') {
                Some((parent, _)) => parent.to_string(),
                None => name.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGroup {
    pub group: String,
    pub layers: usize,
    pub lambda_high: Summary,
    pub lambda_low: Summary,
    /// `lambda_high - lambda_low`
    pub gap: Summary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LambdaTable {
    pub groups: Vec<LambdaGroup>,
}

/// Statistics of the mixing coefficients of edited layers, per group.
///
/// Groups with numeric keys come first in numeric order.
pub fn lambda_distribution(report: &EditReport, grouping: Grouping) -> LambdaTable {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for layer in report
        .layers
        .iter()
        .filter(|l| l.status == LayerStatus::Edited)
    {
        groups
            .entry(grouping.key(&layer.name))
            .or_default()
            .push((layer.lambda_high, layer.lambda_low));
    }
    let mut groups: Vec<LambdaGroup> = groups
        .into_iter()
        .map(|(group, pairs)| {
            let high: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let low: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let gap: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
            LambdaGroup {
                group,
                layers: pairs.len(),
                lambda_high: Summary::of(&high),
                lambda_low: Summary::of(&low),
                gap: Summary::of(&gap),
            }
        })
        .collect();
    groups.sort_by_cached_key(|g| {
        (
            g.group.parse::<u64>().map_or(1, |_| 0),
            g.group.parse::<u64>().unwrap_or(0),
            g.group.clone(),
        )
    });
    LambdaTable { groups }
}

impl Tabular for LambdaTable {
    fn columns(&self) -> Vec<&'static str> {
        vec![
            "group",
            "layers",
            "lambda_high_mean",
            "lambda_high_min",
            "lambda_high_max",
            "lambda_low_mean",
            "lambda_low_min",
            "lambda_low_max",
            "gap_mean",
            "gap_min",
            "gap_max",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.groups
            .iter()
            .map(|g| {
                let mut row = vec![g.group.clone(), g.layers.to_string()];
                for s in [g.lambda_high, g.lambda_low, g.gap] {
                    row.extend([num(s.mean), num(s.min), num(s.max)]);
                }
                row
            })
            .collect()
    }
}
