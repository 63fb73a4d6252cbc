//! Analysis reports: spectra and rank statistics, pairwise alignment,
//! truncation sweeps, linear CKA and mixing-coefficient distributions, with
//! JSON and CSV emitters.

mod alignment;
mod cka;
mod lambdas;
mod report;
mod spectrum;
mod sweep;

pub use alignment::{
    alignment_histograms, pairwise_alignment, CosineHistogram, PairwiseAlignmentTable, DEFAULT_BINS,
};
pub use cka::{linear_cka, read_activations, ActivationMatrix, ACTIVATIONS};
pub use lambdas::{lambda_distribution, Grouping, LambdaGroup, LambdaTable, Summary};
pub use report::{emit_report, read_json_report, render_report, ReportFormat, Tabular};
pub use spectrum::{spectrum_report, LayerSpectrum, RankAtEnergy, SpectrumReport};
pub use sweep::{sweep_file_name, truncation_sweep, SweepOutput, SweepRow, TruncationSweep};

use report::{num, opt};

use crate::edit::EditReport;
use crate::merge::AlignmentProfile;

impl Tabular for EditReport {
    fn columns(&self) -> Vec<&'static str> {
        vec![
            "name",
            "k",
            "r",
            "rho",
            "cos2_alpha",
            "lambda_low",
            "lambda_high",
            "energy_total",
            "status",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.layers
            .iter()
            .map(|l| {
                vec![
                    l.name.clone(),
                    l.k.to_string(),
                    l.r.to_string(),
                    num(l.rho),
                    num(l.cos2_alpha),
                    num(l.lambda_low),
                    num(l.lambda_high),
                    num(l.energy_total),
                    l.status.as_str().to_string(),
                ]
            })
            .collect()
    }
}

impl Tabular for AlignmentProfile {
    fn columns(&self) -> Vec<&'static str> {
        vec!["layer", "cos", "excluded"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.per_layer
            .iter()
            .map(|(name, &c)| {
                let excluded = self.excluded.contains(name);
                vec![
                    name.clone(),
                    opt((!excluded).then_some(c)),
                    excluded.to_string(),
                ]
            })
            .collect()
    }
}
