//! Rank selection rules and scalar spectrum signals.
//!
//! All ranks are 1-based counts of leading singular values.

use crate::error::{Error, Result};

/// Relative distance to an integer under which `exp(entropy)` is snapped to it
/// before taking the ceiling, so that exactly uniform spectra are not pushed
/// up by a single rounding error.
const INTEGER_SNAP: f64 = 1e-12;

fn check_spectrum(s: &[f64]) -> Result<()> {
    if s.is_empty() || !s.iter().any(|&x| x > 0.0) {
        return Err(Error::AllZeroSpectrum);
    }
    if s.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Sum of squares in index order.
pub(crate) fn energy(s: &[f64]) -> f64 {
    s.iter().map(|x| x * x).sum()
}

/// Smallest `k` whose leading squared singular values hold at least a
/// fraction `r` of the total energy.
pub fn energy_rank(s: &[f64], r: f64) -> Result<usize> {
    check_spectrum(s)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::OutOfRange {
            what: "energy fraction",
            value: r,
        });
    }
    let total = energy(s);
    let target = r * total;
    let mut cumulative = 0.0;
    for (i, x) in s.iter().enumerate() {
        cumulative += x * x;
        if cumulative >= target {
            return Ok(i + 1);
        }
    }
    Ok(s.len())
}

/// Shannon entropy of the singular values normalized to sum to one, with
/// `0 ln 0 = 0`.
pub fn spectral_entropy(s: &[f64]) -> Result<f64> {
    check_spectrum(s)?;
    let total: f64 = s.iter().sum();
    Ok(s.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / total;
            -p * p.ln()
        })
        .sum())
}

/// `ceil(exp(entropy))`, the entropy-based effective rank, clamped to `1..=len`.
pub fn effective_rank(s: &[f64]) -> Result<usize> {
    let perplexity = spectral_entropy(s)?.exp();
    let nearest = perplexity.round();
    let snapped = if (perplexity - nearest).abs() <= INTEGER_SNAP * nearest {
        nearest
    } else {
        perplexity
    };
    Ok((snapped.ceil() as usize).clamp(1, s.len()))
}

/// `(s[k] / s[0])^2` in 0-based terms, i.e. the squared ratio of the first
/// discarded singular value to the largest. Zero when nothing is discarded.
pub fn spectral_decay(s: &[f64], k: usize) -> Result<f64> {
    check_spectrum(s)?;
    if k == 0 || k > s.len() {
        return Err(Error::IndexOutOfRange { k, r: s.len() });
    }
    if k == s.len() {
        return Ok(0.0);
    }
    let ratio = s[k] / s[0];
    Ok(ratio * ratio)
}
