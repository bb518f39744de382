//! Semicircle-law experiments for symmetric random matrices whose diagonals
//! are independent stationary processes.
//!
//! The matrix `X_n(p, q) = a(p, q) / sqrt(n)` is filled diagonal by diagonal:
//! offset `r` carries a stationary, standardized path `(a(p, p + r))_p`, and
//! distinct offsets are independent. When the diagonal correlations decay,
//! the empirical spectral distribution approaches the semicircle law on
//! `[-2, 2]`; when they stay positive and bounded away from zero, the fourth
//! moment stays above the Catalan value 2.
//!
//! - [`process`]: the diagonal processes and their covariance functions.
//! - [`ensemble`]: matrix construction.
//! - [`spectra`]: eigenvalues, ESD statistics, the semicircle reference law.
//! - [`partitions`]: set and pair partitions, consistent index sequences.
//! - [`moment_oracle`]: exact Wick-formula moments, Monte Carlo, fluctuations.
//! - [`cli`]: the `ewig` command-line driver.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod moment_oracle;
pub mod partitions;
pub mod process;
mod seed;
pub mod spectra;

pub use ensemble::{build_matrix, entry_seed, EnsembleConfig, Matrix};
pub use error::{Error, Result};
pub use process::{sample_diagonal, CovarianceModel, DiagonalPath, ProcessKind, ProcessSpec};
pub use seed::trial_seed;
pub use spectra::{eigenvalues, Esd, SemicircleRef};
