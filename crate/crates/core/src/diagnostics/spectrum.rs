use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{num, opt, Tabular};
use crate::checkpoint::{validate_compatibility, Checkpoint};
use crate::error::{Error, Result};
use crate::spectral::{
    check_nondegenerate, effective_rank, energy_rank, flatten_to_matrix, split_signals, thin_svd,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankAtEnergy {
    pub r: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpectrum {
    /// Descending singular values of the layer update.
    pub singulars: Vec<f64>,
    pub degenerate: bool,
    pub k_effective: Option<usize>,
    pub k_at_r: Vec<RankAtEnergy>,
    pub rho_at_keff: Option<f64>,
    pub cos2_alpha_at_keff: Option<f64>,
}

/// Spectra of every matrix-shaped layer update. Tensors without a matrix view
/// are omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub per_layer: BTreeMap<String, LayerSpectrum>,
}

pub fn spectrum_report(pre: &Checkpoint, ft: &Checkpoint, rs: &[f64]) -> Result<SpectrumReport> {
    if let Some(&r) = rs.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::OutOfRange {
            what: "energy fraction R",
            value: r,
        });
    }
    let schema = validate_compatibility(&[pre, ft])?;
    let layers = schema
        .entries
        .par_iter()
        .filter_map(|entry| {
            let w0 = flatten_to_matrix(&pre.tensors()[&entry.name])?;
            let wft = flatten_to_matrix(&ft.tensors()[&entry.name])?;
            Some(layer_spectrum(&w0, &wft, rs).map(|s| (entry.name.clone(), s)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumReport {
        per_layer: layers.into_iter().collect(),
    })
}

fn layer_spectrum(
    w0: &crate::spectral::Matrix,
    wft: &crate::spectral::Matrix,
    rs: &[f64],
) -> Result<LayerSpectrum> {
    let svd = thin_svd(&wft.sub(w0)?)?;
    let mut out = LayerSpectrum {
        singulars: svd.s.clone(),
        degenerate: true,
        k_effective: None,
        k_at_r: Vec::new(),
        rho_at_keff: None,
        cos2_alpha_at_keff: None,
    };
    match check_nondegenerate(&svd) {
        Err(Error::AllZeroSpectrum) => return Ok(out),
        other => other?,
    }
    let k = effective_rank(&svd.s)?;
    let signals = split_signals(&svd.s, k)?;
    out.degenerate = false;
    out.k_effective = Some(k);
    out.rho_at_keff = Some(signals.rho);
    out.cos2_alpha_at_keff = Some(signals.cos2_alpha);
    out.k_at_r = rs
        .iter()
        .map(|&r| {
            Ok(RankAtEnergy {
                r,
                k: energy_rank(&svd.s, r)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(out)
}

impl Tabular for SpectrumReport {
    /// One row per layer and requested R; layers without R values (or
    /// degenerate ones) get a single row with an empty R.
    fn columns(&self) -> Vec<&'static str> {
        vec![
            "layer",
            "rank",
            "degenerate",
            "k_effective",
            "rho_at_keff",
            "cos2_alpha_at_keff",
            "R",
            "k_at_R",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (name, layer) in &self.per_layer {
            let base = vec![
                name.clone(),
                layer.singulars.len().to_string(),
                layer.degenerate.to_string(),
                layer.k_effective.map(|k| k.to_string()).unwrap_or_default(),
                opt(layer.rho_at_keff),
                opt(layer.cos2_alpha_at_keff),
            ];
            if layer.k_at_r.is_empty() {
                let mut row = base.clone();
                row.extend([String::new(), String::new()]);
                rows.push(row);
            }
            for at in &layer.k_at_r {
                let mut row = base.clone();
                row.extend([num(at.r), at.k.to_string()]);
                rows.push(row);
            }
        }
        rows
    }
}
