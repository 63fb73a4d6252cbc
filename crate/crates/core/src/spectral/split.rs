use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::rank::{energy, spectral_decay};
use super::svd::ThinSvd;
use crate::error::{Error, Result};

/// Updates whose energy is below `DEGENERATE_ENERGY_PER_ENTRY * m * n` are
/// treated as zero.
pub const DEGENERATE_ENERGY_PER_ENTRY: f64 = 1e-24;

/// Scalars describing how a rank-`k` split divides a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSignals {
    pub k: usize,
    pub energy_high: f64,
    pub energy_total: f64,
    /// Squared ratio of the first tail singular value to the largest.
    pub rho: f64,
    /// Fraction of the energy carried by the tail.
    pub cos2_alpha: f64,
}

/// A thin SVD partitioned into its leading `k` directions (the high-energy
/// part) and the remainder.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub svd: ThinSvd,
    pub signals: SplitSignals,
}

/// Fails with `AllZeroSpectrum` when the decomposed matrix is numerically zero.
pub fn check_nondegenerate(svd: &ThinSvd) -> Result<()> {
    let entries = (svd.u.rows() * svd.v.rows()) as f64;
    if svd.energy() < DEGENERATE_ENERGY_PER_ENTRY * entries
        || svd.s.first().is_none_or(|&s| s <= 0.0)
    {
        return Err(Error::AllZeroSpectrum);
    }
    Ok(())
}

/// Computes the split scalars from singular values alone.
///
/// The tail fraction comes from summing the tail's squared singular values,
/// which equals `||W_low||^2 / ||W||^2` by orthogonality of the two parts.
pub fn split_signals(s: &[f64], k: usize) -> Result<SplitSignals> {
    if k == 0 || k > s.len() {
        return Err(Error::IndexOutOfRange { k, r: s.len() });
    }
    let energy_high = energy(&s[..k]);
    let energy_low = energy(&s[k..]);
    let energy_total = energy(s);
    if energy_total <= 0.0 {
        return Err(Error::AllZeroSpectrum);
    }
    Ok(SplitSignals {
        k,
        energy_high,
        energy_total,
        rho: spectral_decay(s, k)?,
        cos2_alpha: energy_low / energy_total,
    })
}

pub fn split_spectrum(svd: ThinSvd, k: usize) -> Result<SpectralSplit> {
    if k == 0 || k > svd.rank() {
        return Err(Error::IndexOutOfRange { k, r: svd.rank() });
    }
    check_nondegenerate(&svd)?;
    let signals = split_signals(&svd.s, k)?;
    Ok(SpectralSplit { svd, signals })
}

impl SpectralSplit {
    pub fn k(&self) -> usize {
        self.signals.k
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    /// `sum_{i <= k} s_i u_i v_i^T`
    pub fn high(&self) -> Matrix {
        self.svd.partial_sum(0..self.k())
    }

    /// `sum_{i > k} s_i u_i v_i^T`
    pub fn low(&self) -> Matrix {
        self.svd.partial_sum(self.k()..self.rank())
    }

    /// `lambda_high * W_high + lambda_low * W_low` where `W_low = delta - W_high`.
    ///
    /// Only the smaller of the two parts is materialized from singular
    /// triplets; the other is taken as the remainder of `delta`.
    pub fn mix(&self, delta: &Matrix, lambda_high: f64, lambda_low: f64) -> Result<Matrix> {
        if delta.shape() != (self.svd.u.rows(), self.svd.v.rows()) {
            return Err(Error::ShapeMismatch(format!(
                "delta is {:?}, decomposition is {}x{}",
                delta.shape(),
                self.svd.u.rows(),
                self.svd.v.rows()
            )));
        }
        let (part, base, part_coef) = if self.k() <= self.rank() - self.k() {
            // lh*H + ll*(D - H) = ll*D + (lh - ll)*H
            (self.high(), lambda_low, lambda_high - lambda_low)
        } else {
            // lh*(D - L) + ll*L = lh*D + (ll - lh)*L
            (self.low(), lambda_high, lambda_low - lambda_high)
        };
        let mut out = part;
        for (o, d) in out.as_mut_slice().iter_mut().zip(delta.as_slice()) {
            *o = base * d + part_coef * *o;
        }
        Ok(out)
    }
}
