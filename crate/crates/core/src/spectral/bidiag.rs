//! Golub-Kahan SVD: Householder bidiagonalization followed by implicit-shift
//! QR sweeps on the bidiagonal (the LINPACK `dsvdc` iteration).
//!
//! Rotations from the QR phase are accumulated into `n x n` factors of the
//! bidiagonal, and the Householder reflectors are applied to those afterwards,
//! which keeps the expensive inner loops on contiguous rows.

use super::matrix::{axpy, dot, multiversion, Matrix};
use super::svd::Factors;
use crate::error::{Error, Result};

const MAX_STEPS_PER_VALUE: usize = 100;

struct Reflector {
    /// Householder vector with implicit leading 1 stored explicitly.
    v: Vec<f64>,
    tau: f64,
}

/// Computes `(v, tau, beta)` with `(I - tau v v^T) x = beta e_1` and `v[0] = 1`.
fn householder(x: &[f64]) -> (Reflector, f64) {
    let alpha = x[0];
    let tail = &x[1..];
    let scale = tail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xnorm = if scale == 0.0 {
        0.0
    } else {
        let ss: f64 = tail.iter().map(|v| (v / scale) * (v / scale)).sum();
        scale * ss.sqrt()
    };
    let mut v = vec![0.0; x.len()];
    v[0] = 1.0;
    if xnorm == 0.0 {
        return (Reflector { v, tau: 0.0 }, alpha);
    }
    let beta = -alpha.hypot(xnorm).copysign(alpha);
    let tau = (beta - alpha) / beta;
    let inv = 1.0 / (alpha - beta);
    for (dst, src) in v[1..].iter_mut().zip(tail) {
        *dst = src * inv;
    }
    (Reflector { v, tau }, beta)
}

/// Requires `a.rows() >= a.cols()`.
pub(super) fn svd(a: &Matrix) -> Result<Factors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let (d, e, left, right) = bidiagonalize(a.clone());

    let mut d = d;
    let mut e = e;
    // ut[j] / vt[j] hold column j of the bidiagonal's singular vector factors.
    let mut ut = identity_rows(n);
    let mut vt = identity_rows(n);
    bidiagonal_qr(&mut d, &mut e, &mut ut, &mut vt)?;

    // U = H_0 ... H_{n-1} [U_B; 0]
    let mut u = Matrix::zeros(m, n);
    for (j, col) in ut.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u.set(i, j, x);
        }
    }
    apply_reflectors(&mut u, 0, &left, 0..n);

    // V = G_0 ... G_{n-2} V_B, where G_k acts on indices k+1..n.
    let mut v = Matrix::zeros(n, n);
    for (j, col) in vt.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            v.set(i, j, x);
        }
    }
    apply_reflectors(&mut v, 1, &right, 0..n);

    let u_cols = (0..n).map(|j| u.column(j)).collect();
    let v_cols = (0..n).map(|j| v.column(j)).collect();
    Ok(Factors {
        u_cols,
        s: d,
        v_cols,
    })
}

/// Householder reduction `A = Q B P^T` with `B` upper bidiagonal.
///
/// Returns the diagonal, the superdiagonal (padded with a trailing zero), the
/// left reflectors (reflector `k` acts on rows `k..m`) and the right
/// reflectors (reflector `k` acts on columns `k+1..n`).
fn bidiagonalize(mut a: Matrix) -> (Vec<f64>, Vec<f64>, Vec<Reflector>, Vec<Reflector>) {
    let (m, n) = a.shape();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n.saturating_sub(1));
    let mut w = vec![0.0; n];

    for k in 0..n {
        let column: Vec<f64> = (k..m).map(|i| a.get(i, k)).collect();
        let (refl, beta) = householder(&column);
        d[k] = beta;
        if k + 1 == n {
            left.push(refl);
            break;
        }
        let w = &mut w[k + 1..n];
        w.fill(0.0);
        if refl.tau != 0.0 {
            for (i, &vi) in (k..m).zip(&refl.v) {
                if vi != 0.0 {
                    axpy(w, vi, &a.row(i)[k + 1..]);
                }
            }
        }
        // Row k is final once the left reflector has touched it, which fixes
        // the right reflector; the remaining rows then take both updates in
        // a single pass.
        axpy(&mut a.row_mut(k)[k + 1..], -refl.tau, w);
        let (rrefl, rbeta) = householder(&a.row(k)[k + 1..]);
        e[k] = rbeta;
        for (i, &vi) in (k + 1..m).zip(&refl.v[1..]) {
            let row = &mut a.row_mut(i)[k + 1..];
            let f = refl.tau * vi;
            if f != 0.0 {
                axpy(row, -f, w);
            }
            if rrefl.tau != 0.0 {
                let s = dot(row, &rrefl.v);
                if s != 0.0 {
                    axpy(row, -rrefl.tau * s, &rrefl.v);
                }
            }
        }
        left.push(refl);
        right.push(rrefl);
    }
    (d, e, left, right)
}

fn identity_rows(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            r
        })
        .collect()
}

const BLOCK: usize = 16;

/// Computes `H_0 H_1 ... H_{len-1} X` for the rows of `x`, where reflector `j`
/// acts on rows `first_row + j ..`, restricted to columns `cols`.
///
/// Reflectors are grouped into blocks of `BLOCK` and each block is applied as
/// `I - Y T Y^T` (compact WY), which streams `x` twice per block instead of
/// twice per reflector.
fn apply_reflectors(
    x: &mut Matrix,
    first_row: usize,
    reflectors: &[Reflector],
    cols: std::ops::Range<usize>,
) {
    let starts: Vec<usize> = (0..reflectors.len()).step_by(BLOCK).collect();
    for &start in starts.iter().rev() {
        let end = (start + BLOCK).min(reflectors.len());
        apply_block(
            x,
            first_row + start,
            &reflectors[start..end],
            cols.clone(),
            false,
        );
    }
}

/// Applies `I - Y T Y^T` (or `I - Y T^T Y^T` when `transpose_t`) to rows
/// `row0..` of `x` over columns `cols`, where reflector `j` of the block
/// starts at row `row0 + j`.
fn apply_block(
    x: &mut Matrix,
    row0: usize,
    block: &[Reflector],
    cols: std::ops::Range<usize>,
    transpose_t: bool,
) {
    let b = block.len();
    let rows = x.rows() - row0;
    let width = cols.len();
    if b == 0 || width == 0 {
        return;
    }
    // Y as rows x b, zero above each reflector's leading 1.
    let mut y = vec![0.0; rows * b];
    for (j, refl) in block.iter().enumerate() {
        for (i, &vi) in refl.v.iter().enumerate() {
            y[(j + i) * b + j] = vi;
        }
    }
    // Upper-triangular T with H_0 ... H_{b-1} = I - Y T Y^T.
    let mut t = vec![0.0; b * b];
    for j in 0..b {
        let tau = block[j].tau;
        t[j * b + j] = tau;
        if tau == 0.0 {
            continue;
        }
        let mut tmp = vec![0.0; j];
        for (i, slot) in tmp.iter_mut().enumerate() {
            // Overlap of reflectors i < j starts at row j.
            let mut acc = 0.0;
            for r in j..rows {
                acc += y[r * b + i] * y[r * b + j];
            }
            *slot = -tau * acc;
        }
        for i in 0..j {
            let mut acc = 0.0;
            for l in i..j {
                acc += t[i * b + l] * tmp[l];
            }
            t[i * b + j] = acc;
        }
    }
    if transpose_t {
        for i in 0..b {
            for j in i + 1..b {
                t.swap(i * b + j, j * b + i);
            }
        }
    }

    // W = Y^T X
    let mut w = vec![0.0; b * width];
    for r in 0..rows {
        let xr = &x.row(row0 + r)[cols.clone()];
        for j in 0..b {
            let yj = y[r * b + j];
            if yj != 0.0 {
                axpy(&mut w[j * width..(j + 1) * width], yj, xr);
            }
        }
    }
    // Z = T W
    let mut z = vec![0.0; b * width];
    for i in 0..b {
        let (zi, _) = z[i * width..].split_at_mut(width);
        for l in 0..b {
            let til = t[i * b + l];
            if til != 0.0 {
                axpy(zi, til, &w[l * width..(l + 1) * width]);
            }
        }
    }
    // X -= Y Z
    for r in 0..rows {
        let xr = &mut x.row_mut(row0 + r)[cols.clone()];
        for j in 0..b {
            let yj = y[r * b + j];
            if yj != 0.0 {
                axpy(xr, -yj, &z[j * width..(j + 1) * width]);
            }
        }
    }
}

#[inline]
fn rotate_pair(rows: &mut [Vec<f64>], i: usize, j: usize, cs: f64, sn: f64) {
    debug_assert!(i != j);
    let (a, b) = if i < j {
        let (lo, hi) = rows.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    };
    rotate(a, b, cs, sn);
}

multiversion! {
    /// `a <- cs a + sn b ; b <- -sn a + cs b`
    fn rotate(a: &mut [f64], b: &mut [f64], cs: f64, sn: f64) {
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            let t = cs * *x + sn * *y;
            *y = -sn * *x + cs * *y;
            *x = t;
        }
    }
}

/// Diagonalizes the upper bidiagonal `(s, e)` in place, with `e[k]` coupling
/// `s[k]` and `s[k+1]`. Rotations are accumulated into the column lists `u`
/// and `v`. On return `s` is non-negative and sorted descending.
fn bidiagonal_qr(
    s: &mut [f64],
    e: &mut [f64],
    u: &mut [Vec<f64>],
    v: &mut [Vec<f64>],
) -> Result<()> {
    let n = s.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let tiny = 2f64.powi(-966);
    let mut p = n;
    let pp = n - 1;
    let mut steps = 0usize;

    while p > 0 {
        // Find k such that e[k] is negligible, or k = -1 (encoded as None).
        let mut k: isize = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }

        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks: isize = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = (if ksu != p { e[ksu].abs() } else { 0.0 })
                    + (if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 });
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            // Deflate a negligible s[p-1].
            1 => {
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                for j in (k..=p - 2).rev() {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    rotate_pair(v, j, p - 1, cs, sn);
                }
            }
            // Split at a negligible s[k-1].
            2 => {
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                    rotate_pair(u, j, k - 1, cs, sn);
                }
            }
            // One implicit-shift QR step.
            3 => {
                steps += 1;
                if steps > MAX_STEPS_PER_VALUE * n {
                    return Err(Error::ConvergenceFailure(steps));
                }
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = (b * b + c).sqrt();
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;

                for j in k..p - 1 {
                    let t = f.hypot(g);
                    let cs = f / t;
                    let sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;
                    rotate_pair(v, j, j + 1, cs, sn);

                    let t = f.hypot(g);
                    let cs = f / t;
                    let sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                    rotate_pair(u, j, j + 1, cs, sn);
                }
                e[p - 2] = f;
            }
            // Convergence of s[k]: make it non-negative and bubble it into place.
            _ => {
                let mut k = k;
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                    v[k].iter_mut().for_each(|x| *x = -*x);
                }
                while k < pp {
                    if s[k] >= s[k + 1] {
                        break;
                    }
                    s.swap(k, k + 1);
                    v.swap(k, k + 1);
                    u.swap(k, k + 1);
                    k += 1;
                }
                p -= 1;
            }
        }
    }
    Ok(())
}
