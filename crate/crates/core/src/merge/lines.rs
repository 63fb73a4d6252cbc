use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;

use crate::checkpoint::{validate_compatibility, Checkpoint};
use crate::error::{Error, Result};

/// Numbered block containers found in common transformer and conv-net
/// naming schemes (`layers.3`, `h.3`, `resblocks.3`, `stages.3`, ...). The
/// first match in a name wins, so nested blocks inherit their outer index.
static BLOCK_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|\.)(?:layers|layer|h|blocks|resblocks|block|stages)\.(\d+)(?:\.|$)").unwrap()
});

/// The first numbered block token in `name`: the byte offset just past its
/// digits and the index.
pub(crate) fn block_token(name: &str) -> Option<(usize, u64)> {
    let c = BLOCK_PATTERN.captures(name)?;
    let digits = c.get(1)?;
    Some((digits.end(), digits.as_str().parse().ok()?))
}

/// Tensors outside every block whose name matches this sit before the first
/// block; all other unnumbered tensors are placed in the last block.
static INPUT_SIDE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(embed|patch|positional|pos_|wte|wpe|token|cls|class_|stem|conv1|ln_pre|input)",
    )
    .unwrap()
});

/// Assignment of every tensor to one of `depth` ordered blocks (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMap {
    pub assignment: BTreeMap<String, usize>,
    pub depth: usize,
}

impl BlockMap {
    /// Builds a map from arbitrary integer labels; labels are ranked so the
    /// smallest becomes block 0.
    pub fn from_labels(labels: BTreeMap<String, i64>) -> Result<Self> {
        let distinct: BTreeSet<i64> = labels.values().copied().collect();
        if distinct.is_empty() {
            return Err(Error::UnknownBlockStructure("block map is empty".into()));
        }
        let rank: BTreeMap<i64, usize> =
            distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Ok(Self {
            assignment: labels.into_iter().map(|(n, l)| (n, rank[&l])).collect(),
            depth: rank.len(),
        })
    }

    /// Infers blocks from tensor names.
    pub fn detect<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let names: Vec<&str> = names.into_iter().collect();
        let mut labels = BTreeMap::new();
        let mut loose = Vec::new();
        for name in &names {
            match BLOCK_PATTERN.captures(name) {
                Some(c) => {
                    let index: i64 = c[1].parse().map_err(|_| {
                        Error::UnknownBlockStructure(format!(
                            "block index in {name:?} is too large"
                        ))
                    })?;
                    labels.insert(name.to_string(), index);
                }
                None => loose.push(*name),
            }
        }
        let (Some(&first), Some(&last)) = (labels.values().min(), labels.values().max()) else {
            return Err(Error::UnknownBlockStructure(
                "no tensor name contains a numbered block (e.g. `layers.0`); supply a block map"
                    .into(),
            ));
        };
        for name in loose {
            let label = if INPUT_SIDE.is_match(name) {
                first
            } else {
                last
            };
            labels.insert(name.to_string(), label);
        }
        Self::from_labels(labels)
    }

    /// Scale of each block: linear from `alpha` (first) to `beta` (last), or
    /// `beta` for a single block.
    pub fn schedule(&self, alpha: f64, beta: f64) -> Vec<f64> {
        if self.depth == 1 {
            return vec![beta];
        }
        (0..self.depth)
            .map(|l| alpha + (beta - alpha) * l as f64 / (self.depth - 1) as f64)
            .collect()
    }
}

/// Scales each block's task vector by its depth-linear factor.
///
/// `blocks` overrides name-based detection and must cover every tensor.
pub fn lines(
    pre: &Checkpoint,
    ft: &Checkpoint,
    alpha: f64,
    beta: f64,
    blocks: Option<&BlockMap>,
) -> Result<Checkpoint> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "LiNeS alpha",
            value: alpha,
        });
    }
    if !(alpha..=1.0).contains(&beta) {
        return Err(Error::OutOfRange {
            what: "LiNeS beta",
            value: beta,
        });
    }
    validate_compatibility(&[pre, ft])?;
    let detected;
    let map = match blocks {
        Some(map) => map,
        None => {
            detected = BlockMap::detect(pre.names())?;
            &detected
        }
    };
    if let Some(name) = pre.names().find(|n| !map.assignment.contains_key(*n)) {
        return Err(Error::UnknownBlockStructure(format!(
            "block map does not assign {name:?}"
        )));
    }
    let scales = map.schedule(alpha, beta);
    super::combine(
        pre,
        ft,
        |name| scales[map.assignment[name]],
        |w0, wt, s| (1.0 - s) * w0 + s * wt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::{DType, Tensor};

    fn model(names: &[&str], value: f64) -> Checkpoint {
        names
            .iter()
            .map(|n| {
                (
                    n.to_string(),
                    Tensor::from_f64(DType::F64, vec![2], &[value, -value]).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn detects_common_layouts() {
        let vit = BlockMap::detect([
            "visual.conv1.weight",
            "visual.positional_embedding",
            "visual.transformer.resblocks.0.attn.in_proj_weight",
            "visual.transformer.resblocks.1.mlp.c_fc.weight",
            "visual.transformer.resblocks.10.ln_1.weight",
            "visual.ln_post.weight",
            "visual.proj",
        ])
        .unwrap();
        assert_eq!(vit.depth, 3);
        assert_eq!(vit.assignment["visual.conv1.weight"], 0);
        assert_eq!(vit.assignment["visual.positional_embedding"], 0);
        assert_eq!(
            vit.assignment["visual.transformer.resblocks.10.ln_1.weight"],
            2
        );
        assert_eq!(vit.assignment["visual.proj"], 2);

        let convnext = BlockMap::detect([
            "stem.0.weight",
            "stages.0.blocks.2.weight",
            "stages.1.blocks.0.weight",
            "head.fc.weight",
        ])
        .unwrap();
        assert_eq!(convnext.assignment["stages.0.blocks.2.weight"], 0);
        assert_eq!(convnext.assignment["head.fc.weight"], 1);

        assert!(matches!(
            BlockMap::detect(["a.weight", "b.bias"]),
            Err(Error::UnknownBlockStructure(_))
        ));
    }

    #[test]
    fn linear_schedule_over_three_blocks() {
        let names = ["layers.0.w", "layers.1.w", "layers.2.w"];
        let pre = model(&names, 0.0);
        let ft = model(&names, 1.0);
        let out = lines(&pre, &ft, 0.1, 0.9, None).unwrap();
        for (name, s) in names.iter().zip([0.1, 0.5, 0.9]) {
            let got = out.get(name).unwrap().to_f64();
            assert!(
                (got[0] - s).abs() < 1e-15 && (got[1] + s).abs() < 1e-15,
                "{name}"
            );
        }
    }

    #[test]
    fn unit_and_zero_scaling() {
        let names = ["h.0.w", "h.1.w", "wte.weight"];
        let pre = model(&names, 0.3);
        let ft = model(&names, 1.7);
        assert_eq!(lines(&pre, &ft, 1.0, 1.0, None).unwrap(), ft);
        assert_eq!(lines(&pre, &ft, 0.0, 0.0, None).unwrap(), pre);
        assert!(lines(&pre, &ft, 0.5, 0.2, None).is_err());
    }

    #[test]
    fn explicit_map_overrides_detection() {
        let names = ["a", "b"];
        let pre = model(&names, 0.0);
        let ft = model(&names, 1.0);
        let map =
            BlockMap::from_labels([("a".to_string(), 7), ("b".to_string(), 3)].into()).unwrap();
        let out = lines(&pre, &ft, 0.2, 0.6, Some(&map)).unwrap();
        assert_eq!(out.get("b").unwrap().to_f64()[0], 0.2);
        assert_eq!(out.get("a").unwrap().to_f64()[0], 0.6);
        let partial = BlockMap::from_labels([("a".to_string(), 0)].into()).unwrap();
        assert!(matches!(
            lines(&pre, &ft, 0.2, 0.6, Some(&partial)),
            Err(Error::UnknownBlockStructure(_))
        ));
        let single =
            BlockMap::from_labels([("a".to_string(), 0), ("b".to_string(), 0)].into()).unwrap();
        assert_eq!(single.schedule(0.1, 0.9), vec![0.9]);
    }
}
