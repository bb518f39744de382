//! Symmetric random matrices with independent stationary diagonals.
//!
//! Entry `a(p, p + r)` is the `p`-th value of the path on offset `r`, and the
//! matrix entry is `a(p, q) / sqrt(n)` mirrored across the main diagonal.
//! Indices are 0-based here; offset `r` of an `n x n` matrix holds `n - r`
//! entries.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::process::{sample_diagonal, CovarianceModel, ProcessSpec};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub model: CovarianceModel,
    pub base_seed: u64,
}

impl EnsembleConfig {
    pub fn new(n: usize, spec: ProcessSpec, base_seed: u64) -> Self {
        EnsembleConfig {
            n,
            model: CovarianceModel::new(spec),
            base_seed,
        }
    }

    pub fn with_override(mut self, offset: usize, spec: ProcessSpec) -> Self {
        self.model = self.model.with_override(offset, spec);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("matrix dimension must be at least 1".into()));
        }
        if let Some(&r) = self.model.overrides().keys().find(|&&r| r >= self.n) {
            return Err(Error::Domain(format!(
                "override for offset {r} lies outside a {n}x{n} matrix",
                n = self.n
            )));
        }
        Ok(())
    }
}

/// Seed of the path on diagonal `offset`. SplitMix64-mixed, so distinct
/// offsets under one base seed always get distinct seeds.
pub fn entry_seed(base_seed: u64, offset: usize) -> u64 {
    seed::derive(base_seed, seed::DOMAIN_OFFSET, offset as u64)
}

/// Dense symmetric matrix. Symmetry is exact: both triangles are written from
/// the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    /// Wraps a square matrix, rejecting anything that is not exactly symmetric.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Input(format!("matrix is {}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        for q in 0..n {
            for p in 0..q {
                if m[(p, q)].to_bits() != m[(q, p)].to_bits() {
                    return Err(Error::Input(format!("matrix not symmetric at ({p}, {q})")));
                }
            }
        }
        Ok(Matrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("rows must form a square matrix".into()));
        }
        Self::from_dmatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Matrix(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.0[(p, q)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Sum of squared entries over both triangles.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    /// `tr(X^k)` by repeated multiplication. O(k n^3); meant for checks.
    pub fn trace_power(&self, k: u32) -> f64 {
        match k {
            0 => self.n() as f64,
            1 => self.trace(),
            _ => {
                let mut acc = self.0.clone();
                for _ in 1..k {
                    acc = &acc * &self.0;
                }
                acc.trace()
            }
        }
    }

    /// Plain-text dump: one row per line, space-separated, round-trip precision.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.0.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Builds `X_n`. Offset `r` is sampled as one path of length `n - r` with seed
/// `entry_seed(base_seed, r)`.
pub fn build_matrix(config: &EnsembleConfig) -> Result<Matrix> {
    config.validate()?;
    let n = config.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        let spec = config.model.spec_for(r);
        let path = sample_diagonal(spec, n - r, entry_seed(config.base_seed, r))?;
        for (p, &a) in path.values().iter().enumerate() {
            let x = a * scale;
            m[(p, p + r)] = x;
            m[(p + r, p)] = x;
        }
    }
    Ok(Matrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_matrix_is_the_first_sample() {
        let config = EnsembleConfig::new(1, ProcessSpec::iid_gaussian(), 99);
        let m = build_matrix(&config).unwrap();
        let path = sample_diagonal(ProcessSpec::iid_gaussian(), 1, entry_seed(99, 0)).unwrap();
        assert_eq!(m.get(0, 0), path.values()[0]);
    }

    #[test]
    fn zero_dimension_rejected() {
        let config = EnsembleConfig::new(0, ProcessSpec::iid_gaussian(), 1);
        assert!(matches!(build_matrix(&config), Err(Error::Domain(_))));
    }

    #[test]
    fn override_outside_matrix_rejected() {
        let config = EnsembleConfig::new(4, ProcessSpec::iid_gaussian(), 1)
            .with_override(4, ProcessSpec::iid_rademacher());
        assert!(matches!(build_matrix(&config), Err(Error::Domain(_))));
    }

    #[test]
    fn overrides_change_only_their_offset() {
        let base = EnsembleConfig::new(6, ProcessSpec::iid_gaussian(), 5);
        let over = base.clone().with_override(2, ProcessSpec::iid_rademacher());
        let (a, b) = (build_matrix(&base).unwrap(), build_matrix(&over).unwrap());
        let scale = (6f64).sqrt();
        for p in 0..6 {
            for q in p..6 {
                if q - p == 2 {
                    assert_eq!((b.get(p, q) * scale).abs(), 1.0);
                } else {
                    assert_eq!(a.get(p, q), b.get(p, q));
                }
            }
        }
    }

    #[test]
    fn entries_follow_diagonal_paths() {
        let spec = ProcessSpec::ar1(0.3).unwrap();
        let config = EnsembleConfig::new(5, spec, 11);
        let m = build_matrix(&config).unwrap();
        let path = sample_diagonal(spec, 3, entry_seed(11, 2)).unwrap();
        for p in 0..3 {
            assert_eq!(m.get(p, p + 2), path.values()[p] / 5f64.sqrt());
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn trace_power_small_case() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.trace_power(0), 2.0);
        assert_eq!(m.trace_power(1), 0.0);
        assert_eq!(m.trace_power(2), 2.0);
        assert_eq!(m.trace_power(3), 0.0);
        assert_eq!(m.trace_power(4), 2.0);
    }

    #[test]
    fn dump_round_trips() {
        let m = build_matrix(&EnsembleConfig::new(4, ProcessSpec::iid_gaussian(), 3)).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split(' ').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(Matrix::from_rows(&rows).unwrap(), m);
    }
}
