//! One-sided (Hestenes) Jacobi SVD for tall matrices with few columns.

use super::matrix::{dot, Matrix};
use super::svd::Factors;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Requires `a.rows() >= a.cols()`.
pub(super) fn svd(a: &Matrix) -> Result<Factors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * m as f64;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt())
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1f64.hypot(zeta));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                rotate(&mut left[p], &mut right[0], c, s);
                let (left, right) = v.split_at_mut(q);
                rotate(&mut left[p], &mut right[0], c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(MAX_SWEEPS));
    }

    let mut s = Vec::with_capacity(n);
    let mut u_cols = Vec::with_capacity(n);
    for col in cols {
        let norm = dot(&col, &col).sqrt();
        s.push(norm);
        if norm > 0.0 {
            u_cols.push(col.into_iter().map(|x| x / norm).collect());
        } else {
            u_cols.push(vec![0.0; m]);
        }
    }
    complete_basis(&mut u_cols, &s);
    Ok(Factors {
        u_cols,
        s,
        v_cols: v,
    })
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Replaces the left vectors of exactly-zero singular values with unit vectors
/// orthogonal to every other column.
fn complete_basis(u_cols: &mut [Vec<f64>], s: &[f64]) {
    let m = u_cols.first().map_or(0, Vec::len);
    for j in 0..u_cols.len() {
        if s[j] > 0.0 {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for candidate in 0..m {
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            // Two rounds of Gram-Schmidt against everything already in place.
            for _ in 0..2 {
                for (i, u) in u_cols.iter().enumerate() {
                    if i != j {
                        let proj = dot(&w, u);
                        w.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, w));
            }
            if norm > 0.5 {
                break;
            }
        }
        if let Some((norm, w)) = best {
            u_cols[j] = w.into_iter().map(|x| x / norm).collect();
        }
    }
}
