use std::path::Path;

use crate::checkpoint::{read_archive, Tensor};
use crate::error::{Error, Result};
use crate::spectral::dot;

/// Name of the tensor holding activations in an activation archive.
pub const ACTIVATIONS: &str = "activations";

/// `n` samples by `d` features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    n: usize,
    d: usize,
    entries: Vec<f64>,
}

impl ActivationMatrix {
    pub fn new(n: usize, d: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 || d == 0 || entries.len() != n * d {
            return Err(Error::InvalidTensor {
                name: ACTIVATIONS.into(),
                detail: format!(
                    "need at least 2 samples and {n} x {d} = {} entries, got {}",
                    n * d,
                    entries.len()
                ),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { n, d, entries })
    }

    pub fn from_tensor(tensor: &Tensor) -> Result<Self> {
        match *tensor.shape() {
            [n, d] => Self::new(n, d, tensor.to_f64()),
            ref other => Err(Error::InvalidTensor {
                name: ACTIVATIONS.into(),
                detail: format!("expected a 2-D tensor, got shape {other:?}"),
            }),
        }
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn features(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Columns after subtracting each column's mean.
    fn centered_columns(&self) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|j| {
                let col: Vec<f64> = (0..self.n).map(|i| self.entries[i * self.d + j]).collect();
                let mean = col.iter().sum::<f64>() / self.n as f64;
                col.into_iter().map(|x| x - mean).collect()
            })
            .collect()
    }
}

/// Loads the `activations` tensor from an archive.
pub fn read_activations(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let ckpt = read_archive(path)?;
    let tensor = ckpt.get(ACTIVATIONS).ok_or_else(|| Error::InvalidTensor {
        name: ACTIVATIONS.into(),
        detail: format!("{} has no tensor named {ACTIVATIONS:?}", path.display()),
    })?;
    ActivationMatrix::from_tensor(tensor)
}

/// Squared Frobenius norm of `A^T B` for column lists `A`, `B`.
fn cross_norm_sq(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| dot(x, y)))
        .map(|v| v * v)
        .sum()
}

/// Linear CKA: `|Y_c^T X_c|_F^2 / (|X_c^T X_c|_F |Y_c^T Y_c|_F)` on
/// column-centered inputs, or 0 when either centered matrix is numerically
/// zero.
pub fn linear_cka(x: &ActivationMatrix, y: &ActivationMatrix) -> Result<f64> {
    if x.n != y.n {
        return Err(Error::SampleCountMismatch {
            left: x.n,
            right: y.n,
        });
    }
    let (xc, yc) = (x.centered_columns(), y.centered_columns());
    let norm = |cols: &[Vec<f64>]| cols.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
    if norm(&xc) < 1e-24 || norm(&yc) < 1e-24 {
        return Ok(0.0);
    }
    let cross = cross_norm_sq(&xc, &yc);
    let denom = cross_norm_sq(&xc, &xc).sqrt() * cross_norm_sq(&yc, &yc).sqrt();
    Ok((cross / denom).clamp(0.0, 1.0))
}
