//! The spectral edit of a single fine-tuned checkpoint.
//!
//! For every matrix-shaped layer the update `W = W_ft - W_0` is decomposed,
//! split at a rank `k` chosen by a [`RankRule`], and rebuilt as
//! `W_0 + lambda_high * W_high + lambda_low * W_low`. The two coefficients
//! come from the spectrum alone, so the edit has no tunable parameters under
//! [`RankRule::EffectiveRank`].

use std::fmt;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{validate_compatibility, Checkpoint, Tensor};
use crate::error::{Error, Result};
use crate::spectral::{
    check_nondegenerate, effective_rank, energy_rank, flatten_to_matrix, split_spectrum, thin_svd,
    Matrix, DEGENERATE_ENERGY_PER_ENTRY,
};

/// How the split index `k` is chosen from a layer's singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RankRule {
    /// `ceil(exp(entropy))` of the normalized singular values.
    EffectiveRank,
    /// Smallest `k` retaining at least this fraction of the squared energy.
    FixedEnergy(f64),
}

impl RankRule {
    pub fn fixed_energy(r: f64) -> Result<Self> {
        let rule = RankRule::FixedEnergy(r);
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RankRule::FixedEnergy(r) if !(r > 0.0 && r < 1.0) => Err(Error::OutOfRange {
                what: "energy fraction R",
                value: r,
            }),
            _ => Ok(()),
        }
    }

    pub fn select(&self, s: &[f64]) -> Result<usize> {
        match *self {
            RankRule::EffectiveRank => effective_rank(s),
            RankRule::FixedEnergy(r) => {
                self.validate()?;
                energy_rank(s, r)
            }
        }
    }
}

impl fmt::Display for RankRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankRule::EffectiveRank => f.write_str("effective"),
            RankRule::FixedEnergy(r) => write!(f, "energy:{r}"),
        }
    }
}

impl FromStr for RankRule {
    type Err = Error;

    /// Parses `effective` or `energy:<R>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "effective" => Ok(RankRule::EffectiveRank),
            Some(("energy", r)) => {
                let value = r.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("energy fraction {r:?} is not a number"))
                })?;
                RankRule::fixed_energy(value)
            }
            _ => Err(Error::InvalidArgument(format!(
                "rank rule {s:?} is neither `effective` nor `energy:<R>`"
            ))),
        }
    }
}

impl From<RankRule> for String {
    fn from(rule: RankRule) -> Self {
        rule.to_string()
    }
}

impl TryFrom<String> for RankRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Treatment of tensors without a matrix view (scalars, biases, norms).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum VectorPolicy {
    /// Copy the fine-tuned tensor verbatim.
    #[default]
    PassThrough,
    /// `(1 - lambda) * pre + lambda * ft`.
    Wise(f64),
}

impl VectorPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VectorPolicy::Wise(l) if !(0.0..=1.0).contains(&l) => Err(Error::OutOfRange {
                what: "vector interpolation lambda",
                value: l,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for VectorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorPolicy::PassThrough => f.write_str("pass"),
            VectorPolicy::Wise(l) => write!(f, "wise:{l}"),
        }
    }
}

impl FromStr for VectorPolicy {
    type Err = Error;

    /// Parses `pass` or `wise:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        let policy = match s.split_once(':') {
            None if s == "pass" => VectorPolicy::PassThrough,
            Some(("wise", l)) => VectorPolicy::Wise(l.trim().parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("vector lambda {l:?} is not a number"))
            })?),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "vector policy {s:?} is neither `pass` nor `wise:<lambda>`"
                )))
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl From<VectorPolicy> for String {
    fn from(policy: VectorPolicy) -> Self {
        policy.to_string()
    }
}

impl TryFrom<String> for VectorPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerStatus {
    Edited,
    PassThroughVector,
    DegenerateZeroDelta,
}

impl LayerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerStatus::Edited => "Edited",
            LayerStatus::PassThroughVector => "PassThroughVector",
            LayerStatus::DegenerateZeroDelta => "DegenerateZeroDelta",
        }
    }
}

/// Per-tensor outcome of an edit.
///
/// Layers that were not edited report `k = 0`, `rho = cos2_alpha = 0` and the
/// coefficient actually applied to their update in both lambda fields (1 for
/// an untouched update, the interpolation weight for `wise` vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEditReport {
    pub name: String,
    pub k: usize,
    /// Smaller side of the layer matrix; 0 for tensors without a matrix view.
    pub r: usize,
    pub rho: f64,
    pub cos2_alpha: f64,
    pub lambda_low: f64,
    pub lambda_high: f64,
    /// Squared Frobenius norm of the update.
    pub energy_total: f64,
    pub status: LayerStatus,
}

impl LayerEditReport {
    fn untouched(r: usize, energy_total: f64, lambda: f64, status: LayerStatus) -> Self {
        Self {
            name: String::new(),
            k: 0,
            r,
            rho: 0.0,
            cos2_alpha: 0.0,
            lambda_low: lambda,
            lambda_high: lambda,
            energy_total,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusTotals {
    pub edited: usize,
    pub pass_through_vector: usize,
    pub degenerate_zero_delta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditReport {
    pub rank_rule: RankRule,
    pub vector_policy: VectorPolicy,
    pub totals: StatusTotals,
    pub layers: Vec<LayerEditReport>,
}

impl EditReport {
    pub fn new(
        rank_rule: RankRule,
        vector_policy: VectorPolicy,
        layers: Vec<LayerEditReport>,
    ) -> Self {
        let mut totals = StatusTotals::default();
        for layer in &layers {
            match layer.status {
                LayerStatus::Edited => totals.edited += 1,
                LayerStatus::PassThroughVector => totals.pass_through_vector += 1,
                LayerStatus::DegenerateZeroDelta => totals.degenerate_zero_delta += 1,
            }
        }
        Self {
            rank_rule,
            vector_policy,
            totals,
            layers,
        }
    }
}

/// `lambda_low = rho + (1 - rho) * cos_alpha`, `lambda_high = 1 - lambda_low`.
///
/// Returned as `(lambda_low, lambda_high)`. The boundary values
/// `f(0, 0) = 0`, `f(1, c) = 1`, `f(rho, 1) = 1`, `f(rho, 0) = rho` and
/// `f(0, c) = c` hold exactly in floating point.
pub fn mixing_coefficients(rho: f64, cos_alpha: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutOfRange {
            what: "rho",
            value: rho,
        });
    }
    if !(0.0..=1.0).contains(&cos_alpha) {
        return Err(Error::OutOfRange {
            what: "cos alpha",
            value: cos_alpha,
        });
    }
    let lambda_low = rho + (1.0 - rho) * cos_alpha;
    Ok((lambda_low, 1.0 - lambda_low))
}

/// Edits one layer; the returned report has an empty `name`.
pub fn edit_layer(w0: &Matrix, wft: &Matrix, rule: RankRule) -> Result<(Matrix, LayerEditReport)> {
    rule.validate()?;
    let delta = wft.sub(w0)?;
    let (m, n) = delta.shape();
    let r = m.min(n);
    let energy = delta.frobenius_norm_sq();
    if !energy.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let degenerate = || {
        Ok((
            wft.clone(),
            LayerEditReport::untouched(r, energy, 1.0, LayerStatus::DegenerateZeroDelta),
        ))
    };
    if energy < DEGENERATE_ENERGY_PER_ENTRY * (m * n) as f64 {
        return degenerate();
    }
    let svd = thin_svd(&delta)?;
    match check_nondegenerate(&svd) {
        Err(Error::AllZeroSpectrum) => return degenerate(),
        other => other?,
    }
    let k = rule.select(&svd.s)?;
    let split = split_spectrum(svd, k)?;
    let signals = split.signals;
    let (lambda_low, lambda_high) = mixing_coefficients(signals.rho, signals.cos2_alpha.sqrt())?;
    let mut edited = split.mix(&delta, lambda_high, lambda_low)?;
    for (e, base) in edited.as_mut_slice().iter_mut().zip(w0.as_slice()) {
        *e += base;
    }
    let report = LayerEditReport {
        name: String::new(),
        k,
        r,
        rho: signals.rho,
        cos2_alpha: signals.cos2_alpha,
        lambda_low,
        lambda_high,
        energy_total: signals.energy_total,
        status: LayerStatus::Edited,
    };
    Ok((edited, report))
}

/// [`edit_checkpoint_with`] using [`VectorPolicy::PassThrough`].
pub fn edit_checkpoint(
    pre: &Checkpoint,
    ft: &Checkpoint,
    rule: RankRule,
) -> Result<(Checkpoint, EditReport)> {
    edit_checkpoint_with(pre, ft, rule, VectorPolicy::PassThrough)
}

/// Edits every tensor with a matrix view and applies `vectors` to the rest.
///
/// Layers are processed on the current rayon pool. Each layer is computed
/// independently and sequentially, so the output does not depend on the
/// number of threads. The edited checkpoint carries `ft`'s metadata.
pub fn edit_checkpoint_with(
    pre: &Checkpoint,
    ft: &Checkpoint,
    rule: RankRule,
    vectors: VectorPolicy,
) -> Result<(Checkpoint, EditReport)> {
    rule.validate()?;
    vectors.validate()?;
    let schema = validate_compatibility(&[pre, ft])?;
    let results: Vec<(String, Tensor, LayerEditReport)> = schema
        .entries
        .par_iter()
        .map(|entry| {
            let name = &entry.name;
            let (a, b) = (&pre.tensors()[name], &ft.tensors()[name]);
            let (tensor, mut report) =
                edit_tensor(a, b, rule, vectors).map_err(|e| with_layer(e, name))?;
            report.name = name.clone();
            debug!(
                "{name}: {:?} k={} r={} lambda_low={:.6}",
                report.status, report.k, report.r, report.lambda_low
            );
            Ok((name.clone(), tensor, report))
        })
        .collect::<Result<_>>()?;

    let mut edited = Checkpoint::new().with_metadata(ft.metadata().clone());
    let mut layers = Vec::with_capacity(results.len());
    for (name, tensor, report) in results {
        edited.insert(name, tensor);
        layers.push(report);
    }
    Ok((edited, EditReport::new(rule, vectors, layers)))
}

fn edit_tensor(
    pre: &Tensor,
    ft: &Tensor,
    rule: RankRule,
    vectors: VectorPolicy,
) -> Result<(Tensor, LayerEditReport)> {
    let (Some(w0), Some(wft)) = (flatten_to_matrix(pre), flatten_to_matrix(ft)) else {
        return edit_vector(pre, ft, vectors);
    };
    let (edited, report) = edit_layer(&w0, &wft, rule)?;
    if report.status == LayerStatus::DegenerateZeroDelta {
        return Ok((ft.clone(), report));
    }
    Ok((ft.with_values(edited.as_slice())?, report))
}

fn edit_vector(
    pre: &Tensor,
    ft: &Tensor,
    vectors: VectorPolicy,
) -> Result<(Tensor, LayerEditReport)> {
    let (a, b) = (pre.to_f64(), ft.to_f64());
    let energy: f64 = a.iter().zip(&b).map(|(x, y)| (y - x) * (y - x)).sum();
    match vectors {
        VectorPolicy::PassThrough => Ok((
            ft.clone(),
            LayerEditReport::untouched(0, energy, 1.0, LayerStatus::PassThroughVector),
        )),
        VectorPolicy::Wise(lambda) => {
            let values: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (1.0 - lambda) * x + lambda * y)
                .collect();
            Ok((
                ft.with_values(&values)?,
                LayerEditReport::untouched(0, energy, lambda, LayerStatus::PassThroughVector),
            ))
        }
    }
}

fn with_layer(err: Error, name: &str) -> Error {
    match err {
        Error::SchemaMismatch { .. } | Error::Layer { .. } => err,
        other => Error::Layer {
            name: name.to_string(),
            source: Box::new(other),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoint::DType;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::new(m, n, data).unwrap()
    }

    /// Orthonormal columns by modified Gram-Schmidt on a random matrix.
    fn orthonormal_columns(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        while cols.len() < k {
            let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            for _ in 0..2 {
                for c in &cols {
                    let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        cols
    }

    fn from_triplets(s: &[f64], u: &[Vec<f64>], v: &[Vec<f64>]) -> Matrix {
        let (m, n) = (u[0].len(), v[0].len());
        let mut out = Matrix::zeros(m, n);
        for ((sl, ul), vl) in s.iter().zip(u).zip(v) {
            for (i, ui) in ul.iter().enumerate() {
                for (j, vj) in vl.iter().enumerate() {
                    out.set(i, j, out.get(i, j) + sl * ui * vj);
                }
            }
        }
        out
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(mixing_coefficients(0.0, 0.0).unwrap(), (0.0, 1.0));
        assert_eq!(mixing_coefficients(0.3, 0.0).unwrap(), (0.3, 0.7));
        let (low, high) = mixing_coefficients(0.25, 0.4).unwrap();
        assert!((low - 0.55).abs() < 1e-15 && (high - 0.45).abs() < 1e-15);
        assert!(matches!(
            mixing_coefficients(1.5, 0.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            mixing_coefficients(0.5, -0.1),
            Err(Error::OutOfRange { .. })
        ));
        assert!(mixing_coefficients(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn boundary_values_are_exact_on_a_grid() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert_eq!(mixing_coefficients(1.0, x).unwrap().0, 1.0);
            assert_eq!(mixing_coefficients(x, 1.0).unwrap().0, 1.0);
            assert_eq!(mixing_coefficients(x, 0.0).unwrap().0, x);
            assert_eq!(mixing_coefficients(0.0, x).unwrap().0, x);
        }
    }

    #[test]
    fn rule_strings_round_trip() {
        for text in ["effective", "energy:0.8", "energy:0.95"] {
            let rule: RankRule = text.parse().unwrap();
            assert_eq!(rule.to_string(), text);
        }
        assert!("energy:1".parse::<RankRule>().is_err());
        assert!("energy:0".parse::<RankRule>().is_err());
        assert!("energy".parse::<RankRule>().is_err());
        assert_eq!(
            "wise:0.5".parse::<VectorPolicy>().unwrap(),
            VectorPolicy::Wise(0.5)
        );
        assert_eq!(
            "pass".parse::<VectorPolicy>().unwrap(),
            VectorPolicy::PassThrough
        );
        assert!("wise:2".parse::<VectorPolicy>().is_err());
    }

    #[test]
    fn zero_delta_returns_the_fine_tuned_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_matrix(&mut rng, 5, 4);
        let (edited, report) = edit_layer(&w, &w, RankRule::EffectiveRank).unwrap();
        assert_eq!(edited, w);
        assert_eq!(report.status, LayerStatus::DegenerateZeroDelta);
    }

    #[test]
    fn rank_one_delta_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w0 = random_matrix(&mut rng, 70, 90);
        let u = orthonormal_columns(&mut rng, 70, 1);
        let v = orthonormal_columns(&mut rng, 90, 1);
        let wft = w0.add(&from_triplets(&[3.0], &u, &v)).unwrap();
        let (edited, report) = edit_layer(&w0, &wft, RankRule::EffectiveRank).unwrap();
        assert_eq!((report.k, report.rho, report.cos2_alpha), (1, 0.0, 0.0));
        assert_eq!((report.lambda_low, report.lambda_high), (0.0, 1.0));
        let err = edited.sub(&wft).unwrap().frobenius_norm() / wft.frobenius_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn tied_tail_example_has_the_expected_spectrum() {
        // S = (2, 1, 1) with W0 = 0. The tie between the last two singular
        // values leaves the split direction free, so compare spectra: the
        // edited update must have singular values
        // (2 lambda_high, lambda_high, lambda_low).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = orthonormal_columns(&mut rng, 5, 3);
        let v = orthonormal_columns(&mut rng, 4, 3);
        let wft = from_triplets(&[2.0, 1.0, 1.0], &u, &v);
        let w0 = Matrix::zeros(5, 4);
        let (edited, report) = edit_layer(&w0, &wft, RankRule::FixedEnergy(0.8)).unwrap();
        assert_eq!(report.k, 2);
        assert!((report.rho - 0.25).abs() < 1e-14);
        assert!((report.cos2_alpha - 1.0 / 6.0).abs() < 1e-14);
        let lambda_low = 0.25 + 0.75 * (1.0f64 / 6.0).sqrt();
        assert!((report.lambda_low - lambda_low).abs() < 1e-14);
        assert!((report.lambda_low - 0.5562).abs() < 1e-4);
        let lambda_high = 1.0 - lambda_low;
        let got = thin_svd(&edited).unwrap().s;
        let mut want = vec![2.0 * lambda_high, lambda_high, lambda_low];
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13, "{got:?} vs {want:?}");
        }
        // The top direction is unique and carries 2 lambda_high.
        let along: f64 = (0..5)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| u[0][i] * edited.get(i, j) * v[0][j])
            .sum();
        assert!((along - 2.0 * lambda_high).abs() < 1e-13);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(
            edit_layer(&a, &b, RankRule::EffectiveRank),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::from_f64(DType::F32, shape.to_vec(), &values).unwrap()
    }

    fn small_model(rng: &mut ChaCha8Rng) -> Checkpoint {
        let mut c = Checkpoint::new();
        c.insert("blocks.0.weight", tensor(rng, &[6, 4]));
        c.insert("blocks.0.bias", tensor(rng, &[6]));
        c.insert("blocks.1.weight", tensor(rng, &[3, 6]));
        c.insert("conv.weight", tensor(rng, &[4, 2, 3, 3]));
        c.insert("scale", tensor(rng, &[]));
        c
    }

    #[test]
    fn identical_checkpoints_are_returned_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pre = small_model(&mut rng);
        let (edited, report) = edit_checkpoint(&pre, &pre, RankRule::EffectiveRank).unwrap();
        assert_eq!(edited, pre);
        assert_eq!(report.totals.degenerate_zero_delta, 3);
        assert_eq!(report.totals.pass_through_vector, 2);
        assert_eq!(report.layers.len(), pre.len());
    }

    #[test]
    fn vectors_pass_through_and_matrices_are_edited() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pre = small_model(&mut rng);
        let ft = small_model(&mut rng);
        let (edited, report) = edit_checkpoint(&pre, &ft, RankRule::FixedEnergy(0.8)).unwrap();
        assert_eq!(edited.get("blocks.0.bias"), ft.get("blocks.0.bias"));
        assert_eq!(edited.get("scale"), ft.get("scale"));
        let names: Vec<&str> = report.layers.iter().map(|l| l.name.as_str()).collect();
        assert_eq!(names, pre.names().collect::<Vec<_>>());
        for layer in &report.layers {
            let want = if layer.name.ends_with("weight") {
                LayerStatus::Edited
            } else {
                LayerStatus::PassThroughVector
            };
            assert_eq!(layer.status, want, "{}", layer.name);
            assert!((0.0..=1.0).contains(&layer.lambda_low));
            if want == LayerStatus::Edited {
                assert!((layer.lambda_low + layer.lambda_high - 1.0).abs() < 1e-12);
            }
        }
        let conv = report
            .layers
            .iter()
            .find(|l| l.name == "conv.weight")
            .unwrap();
        assert_eq!(conv.r, 4);
        assert_eq!(edited.get("conv.weight").unwrap().shape(), &[4, 2, 3, 3]);

        let (wise, _) =
            edit_checkpoint_with(&pre, &ft, RankRule::EffectiveRank, VectorPolicy::Wise(0.5))
                .unwrap();
        let mid: Vec<f64> = pre
            .get("blocks.0.bias")
            .unwrap()
            .to_f64()
            .iter()
            .zip(ft.get("blocks.0.bias").unwrap().to_f64())
            .map(|(a, b)| 0.5 * a + 0.5 * b)
            .collect();
        let got = wise.get("blocks.0.bias").unwrap().to_f64();
        for (g, w) in got.iter().zip(&mid) {
            assert!((g - w).abs() <= 1e-7 * w.abs().max(1.0));
        }
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pre = small_model(&mut rng);
        let mut ft = small_model(&mut rng);
        ft.insert("blocks.1.weight", tensor(&mut rng, &[6, 3]));
        match edit_checkpoint(&pre, &ft, RankRule::EffectiveRank) {
            Err(Error::SchemaMismatch { name, .. }) => assert_eq!(name, "blocks.1.weight"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_json_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pre = small_model(&mut rng);
        let ft = small_model(&mut rng);
        let (_, report) = edit_checkpoint(&pre, &ft, RankRule::FixedEnergy(0.9)).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"rank_rule\":\"energy:0.9\""));
        let back: EditReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn coefficients_are_bounded_and_lipschitz(rho in 0.0..=1.0f64, c in 0.0..=1.0f64, h in 0.0..1e-1f64) {
            let (low, high) = mixing_coefficients(rho, c).unwrap();
            prop_assert!((0.0..=1.0).contains(&low) && (0.0..=1.0).contains(&high));
            prop_assert!((low + high - 1.0).abs() < 1e-15);
            if rho + h <= 1.0 {
                let (l2, _) = mixing_coefficients(rho + h, c).unwrap();
                prop_assert!((l2 - low).abs() <= h + 1e-15);
            }
            if c + h <= 1.0 {
                let (l2, _) = mixing_coefficients(rho, c + h).unwrap();
                prop_assert!((l2 - low).abs() <= h + 1e-15);
            }
        }

        #[test]
        fn edited_update_never_grows(seed in any::<u64>(), m in 1usize..12, n in 1usize..12, energy in 0.05..0.99f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0 = random_matrix(&mut rng, m, n);
            let wft = random_matrix(&mut rng, m, n);
            for rule in [RankRule::EffectiveRank, RankRule::FixedEnergy(energy)] {
                let (edited, report) = edit_layer(&w0, &wft, rule).unwrap();
                let before = wft.sub(&w0).unwrap().frobenius_norm();
                let after = edited.sub(&w0).unwrap().frobenius_norm();
                prop_assert!(after <= before * (1.0 + 1e-12));
                prop_assert!(report.k >= 1 && report.k <= m.min(n));
            }
        }
    }
}
