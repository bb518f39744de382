//! Eigenvalues, empirical spectral distributions and the semicircle law.

use std::f64::consts::PI;
use std::io::Write;

use crate::ensemble::Matrix;
use crate::error::{Error, Result};

/// Empirical spectral distribution: eigenvalues in ascending order, each with
/// mass `1 / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Esd {
    eigenvalues: Vec<f64>,
}

impl Esd {
    /// Sorts `values` ascending. Fails on non-finite entries or an empty list.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("spectral distribution needs at least one point".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite eigenvalue {v}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Esd { eigenvalues: values })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `(1/n) * sum(lambda^k)`, which equals `(1/n) tr(X^k)`.
    pub fn moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let exp = k as i32;
        self.eigenvalues.iter().map(|x| x.powi(exp)).sum::<f64>() / self.len() as f64
    }

    /// Kolmogorov distance to the semicircle law, evaluated at the jumps of the
    /// empirical CDF: `max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)`.
    pub fn ks_distance(&self) -> f64 {
        let n = self.len() as f64;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = semicircle_cdf(x);
                let above = (i + 1) as f64 / n - f;
                let below = f - i as f64 / n;
                above.max(below)
            })
            .fold(0.0, f64::max)
    }

    /// `max_{1 <= k <= max_order} |m_k(esd) - m_k(semicircle)|`; 0 for `max_order == 0`.
    pub fn moment_distance(&self, max_order: u32) -> f64 {
        (1..=max_order)
            .map(|k| (self.moment(k) - semicircle_moment(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// All eigenvalues of a symmetric matrix, ascending.
///
/// Uses Householder tridiagonalization followed by implicit symmetric QR
/// with Wilkinson shifts.
pub fn eigenvalues(m: &Matrix) -> Result<Esd> {
    if let Some(x) = m.as_dmatrix().iter().find(|x| !x.is_finite()) {
        return Err(Error::Input(format!("matrix has non-finite entry {x}")));
    }
    let values = m.as_dmatrix().symmetric_eigenvalues();
    if let Some(bad) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "eigensolver produced non-finite value at index {bad} for n = {}",
            m.n()
        )));
    }
    Esd::from_values(values.iter().copied().collect())
}

pub fn esd_moment(esd: &Esd, k: u32) -> f64 {
    esd.moment(k)
}

pub fn ks_distance(esd: &Esd) -> f64 {
    esd.ks_distance()
}

pub fn moment_distance(esd: &Esd, max_order: u32) -> f64 {
    esd.moment_distance(max_order)
}

/// `C_m = (2m)! / (m! (m+1)!)` in exact integer arithmetic; `None` once it
/// no longer fits in `u128`.
pub fn catalan(m: u32) -> Option<u128> {
    // C_{j+1} = C_j * 2(2j+1) / (j+2), and the division is exact.
    let mut c: u128 = 1;
    for j in 0..m as u128 {
        c = c.checked_mul(2 * (2 * j + 1))? / (j + 2);
    }
    Some(c)
}

/// k-th moment of the semicircle law: 0 for odd k, `C_{k/2}` for even k.
pub fn semicircle_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    match catalan(k / 2) {
        Some(c) => c as f64,
        None => {
            let mut c = 1.0;
            for j in 0..(k / 2) {
                c = c * (2.0 * (2.0 * j as f64 + 1.0)) / (j as f64 + 2.0);
            }
            c
        }
    }
}

/// `sqrt(4 - x^2) / (2 pi)` on `[-2, 2]`, zero elsewhere.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Inverse of [`semicircle_cdf`] by bisection, accurate to ~1e-15.
pub fn semicircle_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return -2.0;
    }
    if u >= 1.0 {
        return 2.0;
    }
    let (mut lo, mut hi) = (-2.0_f64, 2.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The semicircle law as a value, for callers that want an object.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemicircleRef;

impl SemicircleRef {
    pub fn density(&self, x: f64) -> f64 {
        semicircle_density(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        semicircle_cdf(x)
    }

    pub fn moment(&self, k: u32) -> f64 {
        semicircle_moment(k)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        semicircle_quantile(u)
    }
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("bad histogram range [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut total = 0;
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
            total += 1;
        }
        Ok(Histogram { lo, hi, counts, total })
    }

    /// Range covering both the data and the semicircle support `[-2, 2]`.
    pub fn covering_semicircle(values: &[f64], bins: usize) -> Result<Self> {
        let lo = values.iter().copied().fold(-2.0, f64::min);
        let hi = values.iter().copied().fold(2.0, f64::max);
        Self::new(values, bins, lo, hi)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        let left = self.lo + width * i as f64;
        let right = if i + 1 == self.counts.len() { self.hi } else { left + width };
        (left, right)
    }

    /// Normalized so the histogram integrates to 1 over the counted values.
    pub fn density(&self, i: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let (l, r) = self.bin_edges(i);
        self.counts[i] as f64 / (self.total as f64 * (r - l))
    }

    /// CSV with header `bin_left,bin_right,count,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,count,density")?;
        for (i, count) in self.counts.iter().enumerate() {
            let (l, r) = self.bin_edges(i);
            writeln!(out, "{l},{r},{count},{}", self.density(i))?;
        }
        Ok(())
    }
}
