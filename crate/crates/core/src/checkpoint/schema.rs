use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, DType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
}

/// The tensor layout shared by a set of checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSchema {
    pub entries: Vec<SchemaEntry>,
}

impl LayerSchema {
    pub fn of(ckpt: &Checkpoint) -> Self {
        Self {
            entries: ckpt
                .iter()
                .map(|(name, t)| SchemaEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    dtype: t.dtype(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Checks that every checkpoint has the same tensor names, shapes and dtypes.
///
/// The reported mismatch is the lexicographically first offending name, so the
/// outcome does not depend on the order of `ckpts`.
pub fn validate_compatibility(ckpts: &[&Checkpoint]) -> Result<LayerSchema> {
    let Some(first) = ckpts.first() else {
        return Err(Error::mismatch("", "no checkpoints to compare"));
    };
    let names: BTreeSet<&str> = ckpts.iter().flat_map(|c| c.names()).collect();
    for name in names {
        let present: Vec<_> = ckpts.iter().map(|c| c.get(name)).collect();
        let missing = present.iter().filter(|t| t.is_none()).count();
        if missing > 0 {
            return Err(Error::mismatch(
                name,
                format!("missing from {missing} of {} checkpoints", ckpts.len()),
            ));
        }
        let tensors: Vec<_> = present.into_iter().flatten().collect();
        let shapes: BTreeSet<&[usize]> = tensors.iter().map(|t| t.shape()).collect();
        if shapes.len() > 1 {
            return Err(Error::mismatch(name, format!("shapes differ: {shapes:?}")));
        }
        let dtypes: BTreeSet<DType> = tensors.iter().map(|t| t.dtype()).collect();
        if dtypes.len() > 1 {
            return Err(Error::mismatch(name, format!("dtypes differ: {dtypes:?}")));
        }
    }
    Ok(LayerSchema::of(first))
}
