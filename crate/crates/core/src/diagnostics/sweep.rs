use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{num, Tabular};
use crate::checkpoint::{validate_compatibility, write_archive, Checkpoint};
use crate::error::{Error, Result};
use crate::spectral::{check_nondegenerate, energy_rank, flatten_to_matrix, thin_svd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub layer: String,
    pub k: usize,
    /// Fraction of the update's squared energy kept by the top `k` directions.
    pub retained_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    #[serde(rename = "R")]
    pub r: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TruncationSweep {
    pub outputs: Vec<SweepOutput>,
    pub rows: Vec<SweepRow>,
}

/// File name used for the checkpoint truncated at `r`.
pub fn sweep_file_name(r: f64) -> String {
    format!("truncated_R{r}.safetensors")
}

/// For each `R`, writes `out_dir/truncated_R<R>.safetensors` in which every
/// matrix layer is `W_0` plus the top-`k` part of its update, `k` being the
/// energy rank at `R`. Degenerate layers and tensors without a matrix view are
/// copied from `ft`.
pub fn truncation_sweep(
    pre: &Checkpoint,
    ft: &Checkpoint,
    rs: &[f64],
    out_dir: impl AsRef<Path>,
) -> Result<TruncationSweep> {
    if let Some(&r) = rs.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::OutOfRange {
            what: "energy fraction R",
            value: r,
        });
    }
    let schema = validate_compatibility(&[pre, ft])?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut outputs: Vec<Checkpoint> = rs
        .iter()
        .map(|_| Checkpoint::new().with_metadata(ft.metadata().clone()))
        .collect();
    let mut rows = Vec::new();
    // One decomposition per layer, shared by every R.
    for entry in &schema.entries {
        let name = &entry.name;
        let target = &ft.tensors()[name];
        let matrices = flatten_to_matrix(&pre.tensors()[name]).zip(flatten_to_matrix(target));
        let Some((w0, wft)) = matrices else {
            outputs.iter_mut().for_each(|o| {
                o.insert(name.clone(), target.clone());
            });
            continue;
        };
        let svd = thin_svd(&wft.sub(&w0)?)?;
        match check_nondegenerate(&svd) {
            Err(Error::AllZeroSpectrum) => {
                outputs.iter_mut().for_each(|o| {
                    o.insert(name.clone(), target.clone());
                });
                continue;
            }
            other => other?,
        }
        let total = svd.energy();
        for (&r, out) in rs.iter().zip(outputs.iter_mut()) {
            let k = energy_rank(&svd.s, r)?;
            let kept: f64 = svd.s[..k].iter().map(|s| s * s).sum();
            let mut w = svd.partial_sum(0..k);
            for (x, base) in w.as_mut_slice().iter_mut().zip(w0.as_slice()) {
                *x += base;
            }
            out.insert(name.clone(), target.with_values(w.as_slice())?);
            rows.push(SweepRow {
                r,
                layer: name.clone(),
                k,
                retained_energy: kept / total,
            });
        }
    }
    rows.sort_by(|a, b| a.r.total_cmp(&b.r).then_with(|| a.layer.cmp(&b.layer)));

    let mut written = Vec::with_capacity(rs.len());
    for (&r, ckpt) in rs.iter().zip(&outputs) {
        let path = out_dir.join(sweep_file_name(r));
        write_archive(ckpt, &path)?;
        log::info!("R = {r}: wrote {}", path.display());
        written.push(SweepOutput { r, path });
    }
    Ok(TruncationSweep {
        outputs: written,
        rows,
    })
}

impl Tabular for TruncationSweep {
    fn columns(&self) -> Vec<&'static str> {
        vec!["R", "layer", "k", "retained_energy"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    num(r.r),
                    r.layer.clone(),
                    r.k.to_string(),
                    num(r.retained_energy),
                ]
            })
            .collect()
    }
}
