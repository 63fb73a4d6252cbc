use super::matrix::{axpy, Matrix};
use super::{bidiag, jacobi};
use crate::error::{Error, Result};

/// Matrices whose smaller side is at most this use one-sided Jacobi;
/// larger ones go through Golub-Kahan bidiagonalization.
pub const JACOBI_MAX_DIM: usize = 64;

/// Raw factors from either backend, as column lists.
pub(super) struct Factors {
    pub u_cols: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub v_cols: Vec<Vec<f64>>,
}

/// Thin singular value decomposition `W = U diag(S) V^T` with `r = min(m, n)`.
///
/// `s` is non-increasing and non-negative. Singular values below
/// `max(m, n) * eps * s[0]` are indistinguishable from rounding noise and are
/// stored as exact zeros. Each pair `(u_i, v_i)` is signed so that the
/// largest-magnitude entry of `u_i` (lowest index on ties) is positive.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `m x r`
    pub u: Matrix,
    pub s: Vec<f64>,
    /// `n x r`
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn energy(&self) -> f64 {
        self.s.iter().map(|s| s * s).sum()
    }

    /// `sum_{i in range} s_i u_i v_i^T`.
    pub fn partial_sum(&self, range: std::ops::Range<usize>) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = Matrix::zeros(m, n);
        if range.is_empty() {
            return out;
        }
        // Rows of V^T restricted to the range, pre-scaled by s.
        let scaled_vt: Vec<Vec<f64>> = range
            .clone()
            .map(|l| (0..n).map(|j| self.s[l] * self.v.get(j, l)).collect())
            .collect();
        for i in 0..m {
            let urow = &self.u.row(i)[range.clone()];
            let dst = out.row_mut(i);
            for (coef, vt) in urow.iter().zip(&scaled_vt) {
                if *coef != 0.0 {
                    axpy(dst, *coef, vt);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.partial_sum(0..self.rank())
    }
}

pub fn thin_svd(w: &Matrix) -> Result<ThinSvd> {
    if !w.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let (m, n) = w.shape();
    let transposed = m < n;
    let tall = if transposed { w.transpose() } else { w.clone() };
    let factors = if tall.cols() <= JACOBI_MAX_DIM {
        jacobi::svd(&tall)?
    } else {
        bidiag::svd(&tall)?
    };
    let Factors { u_cols, s, v_cols } = factors;
    let (u_cols, v_cols) = if transposed {
        (v_cols, u_cols)
    } else {
        (u_cols, v_cols)
    };
    Ok(finalize(m, n, u_cols, s, v_cols))
}

fn finalize(
    m: usize,
    n: usize,
    mut u_cols: Vec<Vec<f64>>,
    s: Vec<f64>,
    mut v_cols: Vec<Vec<f64>>,
) -> ThinSvd {
    let r = s.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let s_max = order.first().map_or(0.0, |&i| s[i]);
    let cutoff = m.max(n) as f64 * f64::EPSILON * s_max;

    let mut u = Matrix::zeros(m, r);
    let mut v = Matrix::zeros(n, r);
    let mut sorted = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = if s[src] < cutoff { 0.0 } else { s[src] };
        sorted.push(sigma);
        let ucol = &mut u_cols[src];
        let vcol = &mut v_cols[src];
        let pivot = ucol
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |(bi, bv), (i, x)| {
                if x.abs() > bv {
                    (i, x.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        let sign = if ucol[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (i, x) in ucol.iter().enumerate() {
            u.set(i, dst, sign * x);
        }
        for (i, x) in vcol.iter().enumerate() {
            v.set(i, dst, sign * x);
        }
    }
    ThinSvd { u, s: sorted, v }
}
