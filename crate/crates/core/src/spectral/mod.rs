//! Dense linear algebra for layer updates: thin SVD, rank selection and the
//! high/low spectral partition.

mod bidiag;
mod jacobi;
mod matrix;
mod rank;
mod split;
mod svd;

pub use matrix::{flatten_to_matrix, matrix_shape, Matrix};
pub use rank::{effective_rank, energy_rank, spectral_decay, spectral_entropy};
pub use split::{
    check_nondegenerate, split_signals, split_spectrum, SpectralSplit, SplitSignals,
    DEGENERATE_ENERGY_PER_ENTRY,
};
pub use svd::{thin_svd, ThinSvd, JACOBI_MAX_DIM};

pub(crate) use matrix::dot;
