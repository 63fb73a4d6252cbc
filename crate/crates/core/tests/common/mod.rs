//! Seeded generators and independent reference implementations shared by the
//! integration tests. The references use nalgebra and straight-line formulas
//! and never call into the library's numerics.

#![allow(dead_code)]

use monosoup::{Checkpoint, DType, Tensor};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(m, n, &gaussian(rng, m * n, 1.0))
}

/// `m x k` with orthonormal columns (`k <= m`), from the QR of a Gaussian matrix.
pub fn orthonormal(rng: &mut ChaCha8Rng, m: usize, k: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, m, k).qr().q();
    q.columns(0, k).into_owned()
}

/// `U diag(s) V^T` with random orthonormal factors.
pub fn with_spectrum(rng: &mut ChaCha8Rng, m: usize, n: usize, s: &[f64]) -> DMatrix<f64> {
    let k = s.len();
    let u = orthonormal(rng, m, k);
    let v = orthonormal(rng, n, k);
    u * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s)) * v.transpose()
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn to_dmatrix(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Eigenvalues of `W^T W` (or `W W^T`, whichever is smaller), descending.
pub fn gram_eigenvalues(w: &DMatrix<f64>) -> Vec<f64> {
    let gram = if w.nrows() >= w.ncols() {
        w.transpose() * w
    } else {
        w * w.transpose()
    };
    let mut ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn tensor(dtype: DType, shape: &[usize], values: &[f64]) -> Tensor {
    Tensor::from_f64(dtype, shape.to_vec(), values).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dtype: DType, shape: &[usize], scale: f64) -> Tensor {
    let n: usize = shape.iter().product();
    tensor(dtype, shape, &gaussian(rng, n, scale))
}

/// A checkpoint with the given names and shapes filled with Gaussian values.
pub fn random_checkpoint(rng: &mut ChaCha8Rng, dtype: DType, layout: &[(&str, Vec<usize>)], scale: f64) -> Checkpoint {
    layout
        .iter()
        .map(|(name, shape)| (name.to_string(), random_tensor(rng, dtype, shape, scale)))
        .collect()
}

/// `base` plus Gaussian noise of the given scale on every tensor.
pub fn perturb(rng: &mut ChaCha8Rng, base: &Checkpoint, scale: f64) -> Checkpoint {
    base.iter()
        .map(|(name, t)| {
            let values: Vec<f64> = t.to_f64().iter().map(|x| x + scale * rng.sample::<f64, _>(StandardNormal)).collect();
            (name.to_string(), t.with_values(&values).unwrap())
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Rows and columns of the matrix view of a shape: first extent by the rest.
pub fn matrix_dims(shape: &[usize]) -> Option<(usize, usize)> {
    if shape.len() < 2 {
        return None;
    }
    Some((shape[0], shape[1..].iter().product()))
}

/// Reference layer edit with an energy threshold, written straight from the
/// method description.
///
/// Returns the edited layer (row-major) and `(k, rho, cos2_alpha, lambda_low)`.
pub fn reference_edit_layer(w0: &DMatrix<f64>, wft: &DMatrix<f64>, energy: f64) -> (Vec<f64>, (usize, f64, f64, f64)) {
    let delta = wft - w0;
    let svd = delta.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let r = s.len();

    // Smallest k whose leading squared singular values reach the fraction.
    let total: f64 = s.iter().map(|x| x * x).sum();
    let mut k = r;
    let mut acc = 0.0;
    for (i, x) in s.iter().enumerate() {
        acc += x * x;
        if acc / total >= energy {
            k = i + 1;
            break;
        }
    }

    let mut high = DMatrix::zeros(delta.nrows(), delta.ncols());
    for &i in &order[..k] {
        high += svd.singular_values[i] * u.column(i) * vt.row(i);
    }
    let low = &delta - &high;

    let rho = if k < r { (s[k] / s[0]).powi(2) } else { 0.0 };
    let cos2 = low.norm_squared() / delta.norm_squared();
    let cos = cos2.sqrt();
    let lambda_low = rho + (1.0 - rho) * cos;
    let lambda_high = 1.0 - lambda_low;
    let edited = w0 + lambda_high * &high + lambda_low * &low;
    (row_major(&edited), (k, rho, cos2, lambda_low))
}

/// Reference edit of a whole checkpoint pair: matrices through
/// [`reference_edit_layer`], everything else copied from `ft`.
pub fn reference_edit_checkpoint(pre: &Checkpoint, ft: &Checkpoint, energy: f64) -> Vec<(String, Vec<f64>)> {
    pre.iter()
        .map(|(name, t0)| {
            let tf = ft.get(name).unwrap();
            let values = match matrix_dims(t0.shape()) {
                Some((m, n)) => {
                    let w0 = to_dmatrix(m, n, &t0.to_f64());
                    let wf = to_dmatrix(m, n, &tf.to_f64());
                    reference_edit_layer(&w0, &wf, energy).0
                }
                None => tf.to_f64(),
            };
            (name.to_string(), values)
        })
        .collect()
}

/// Reference Model Stock on flattened layers.
pub fn reference_model_stock(pre: &Checkpoint, a: &Checkpoint, b: &Checkpoint) -> Vec<(String, Vec<f64>)> {
    pre.iter()
        .map(|(name, t0)| {
            let w0 = t0.to_f64();
            let t1: Vec<f64> = a.get(name).unwrap().to_f64().iter().zip(&w0).map(|(x, y)| x - y).collect();
            let t2: Vec<f64> = b.get(name).unwrap().to_f64().iter().zip(&w0).map(|(x, y)| x - y).collect();
            let dot: f64 = t1.iter().zip(&t2).map(|(x, y)| x * y).sum();
            let n1: f64 = t1.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n2: f64 = t2.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cos = dot / (n1 * n2);
            let lambda = (2.0 * cos / (1.0 + cos)).clamp(0.0, 1.0);
            let merged = w0
                .iter()
                .zip(t1.iter().zip(&t2))
                .map(|(w, (x, y))| w + lambda * (x + y) / 2.0)
                .collect();
            (name.to_string(), merged)
        })
        .collect()
}

/// Direct linear CKA on `n x d` row-major inputs.
pub fn reference_cka(n: usize, dx: usize, x: &[f64], dy: usize, y: &[f64]) -> f64 {
    let center = |d: usize, v: &[f64]| {
        let m = DMatrix::from_row_slice(n, d, v);
        let means = m.row_mean();
        DMatrix::from_fn(n, d, |i, j| m[(i, j)] - means[j])
    };
    let xc = center(dx, x);
    let yc = center(dy, y);
    let cross = (yc.transpose() * &xc).norm_squared();
    let xx = (xc.transpose() * &xc).norm();
    let yy = (yc.transpose() * &yc).norm();
    cross / (xx * yy)
}

/// Candidates whose task vectors sit at fixed angles in a plane, with
/// different lengths: `(id, degrees, length, ranking score)`.
pub const PLANAR_CANDIDATES: [(&str, f64, f64, f64); 4] = [
    ("p", 0.0, 1.0, 0.9),
    ("q", 30.0, 2.0, 0.8),
    ("r", 100.0, 0.5, 0.7),
    ("s", 45.0, 1.5, 0.6),
];

/// Pre-trained model and the [`PLANAR_CANDIDATES`] as checkpoints with two
/// tensors each. The second tensor's task vector is the first rotated by a
/// fixed angle, so every pair has the same cosine on both layers.
pub fn planar_pool() -> (Checkpoint, Vec<(String, Checkpoint)>, std::collections::BTreeMap<String, f64>) {
    let base_w = [0.5, -0.25];
    let base_u = [1.0, 2.0];
    let pre: Checkpoint = [
        ("w".to_string(), tensor(DType::F64, &[2], &base_w)),
        ("u".to_string(), tensor(DType::F64, &[1, 2], &base_u)),
    ]
    .into_iter()
    .collect();
    let mut candidates = Vec::new();
    let mut ranking = std::collections::BTreeMap::new();
    for (id, degrees, length, score) in PLANAR_CANDIDATES {
        let a = degrees.to_radians();
        let b = (degrees + 17.0).to_radians();
        let w = [base_w[0] + length * a.cos(), base_w[1] + length * a.sin()];
        let u = [base_u[0] + length * b.cos(), base_u[1] + length * b.sin()];
        let ckpt: Checkpoint = [
            ("w".to_string(), tensor(DType::F64, &[2], &w)),
            ("u".to_string(), tensor(DType::F64, &[1, 2], &u)),
        ]
        .into_iter()
        .collect();
        candidates.push((id.to_string(), ckpt));
        ranking.insert(id.to_string(), score);
    }
    (pre, candidates, ranking)
}

/// Elementwise mean of checkpoints, summed in the given order.
pub fn reference_mean(members: &[&Checkpoint]) -> Vec<(String, Vec<f64>)> {
    members[0]
        .iter()
        .map(|(name, t)| {
            let mut acc = vec![0.0; t.numel()];
            for m in members {
                for (a, v) in acc.iter_mut().zip(m.get(name).unwrap().to_f64()) {
                    *a += v;
                }
            }
            (name.to_string(), acc.iter().map(|a| a / members.len() as f64).collect())
        })
        .collect()
}

/// Largest elementwise difference between a checkpoint and reference values.
pub fn max_diff_to(ckpt: &Checkpoint, reference: &[(String, Vec<f64>)]) -> f64 {
    assert_eq!(ckpt.len(), reference.len());
    reference
        .iter()
        .map(|(name, values)| max_abs_diff(&ckpt.get(name).unwrap().to_f64(), values))
        .fold(0.0, f64::max)
}
