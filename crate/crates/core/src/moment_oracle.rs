//! Expected trace moments: exact sums over consistent sequences for Gaussian
//! diagonals, Monte Carlo for every process, and the fourth-moment
//! fluctuation scan of `tr(X^k)`.

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::{build_matrix, EnsembleConfig, Matrix};
use crate::error::{Error, Result};
use crate::partitions::{
    check_budget, enumerate_partitions, for_each_walk, walk_is_consistent_with, walk_is_star,
    PairPartition, Partition, CONSISTENT_BUDGET,
};
use crate::process::{CovarianceModel, ProcessSpec};
use crate::seed;
use crate::spectra::{eigenvalues, semicircle_moment, Esd};

const DOMAIN_GRID: u64 = 0x6772_6964_0000_0004;
const BOOTSTRAP_RESAMPLES: usize = 500;

/// An upper-triangle entry `a(p, q)`, stored with `p <= q` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EntryLabel {
    p: usize,
    q: usize,
}

impl EntryLabel {
    pub fn new(p: usize, q: usize) -> Self {
        EntryLabel {
            p: p.min(q),
            q: p.max(q),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn offset(&self) -> usize {
        self.q - self.p
    }
}

/// Covariance between two matrix entries under a diagonal model: zero across
/// offsets, `R(r, |p - p'|)` along offset `r`.
#[derive(Debug, Clone, Copy)]
pub struct EntryCovariance<'a> {
    model: &'a CovarianceModel,
}

impl<'a> EntryCovariance<'a> {
    pub fn new(model: &'a CovarianceModel) -> Self {
        EntryCovariance { model }
    }

    pub fn model(&self) -> &CovarianceModel {
        self.model
    }

    pub fn cov(&self, a: EntryLabel, b: EntryLabel) -> f64 {
        let r = a.offset();
        if r != b.offset() {
            return 0.0;
        }
        self.model.covariance(r, a.p.abs_diff(b.p))
    }
}

/// `E[a(P_1) ... a(P_k)]` for jointly Gaussian, centered entries: the sum over
/// all perfect matchings of the labels of the product of pairwise covariances.
pub fn wick_product_expectation(labels: &[EntryLabel], cov: &EntryCovariance<'_>) -> Result<f64> {
    if let Some(spec) = cov.model.non_gaussian_spec() {
        return Err(Error::UnsupportedOracle(spec.to_string()));
    }
    Ok(wick_sum(labels, cov))
}

fn wick_sum(labels: &[EntryLabel], cov: &EntryCovariance<'_>) -> f64 {
    if labels.len() % 2 == 1 {
        return 0.0;
    }
    // Entries on different offsets are independent, so every offset must
    // appear an even number of times for a nonzero expectation.
    let mut parity = 0u64;
    let mut spill = Vec::new();
    for l in labels {
        let r = l.offset();
        if r < 64 {
            parity ^= 1 << r;
        } else {
            spill.push(r);
        }
    }
    if parity != 0 {
        return 0.0;
    }
    if !spill.is_empty() {
        spill.sort_unstable();
        if spill.chunk_by(|a, b| a == b).any(|c| c.len() % 2 == 1) {
            return 0.0;
        }
    }
    let mut remaining: Vec<EntryLabel> = labels.to_vec();
    matchings(&mut remaining, cov)
}

fn matchings(remaining: &mut Vec<EntryLabel>, cov: &EntryCovariance<'_>) -> f64 {
    let Some(first) = remaining.pop() else {
        return 1.0;
    };
    let m = remaining.len();
    let mut total = 0.0;
    for i in 0..m {
        let c = cov.cov(first, remaining[i]);
        if c == 0.0 {
            continue;
        }
        // pair `first` with `remaining[i]`, recurse on the rest, then restore
        remaining.swap(i, m - 1);
        let partner = remaining.pop().unwrap();
        total += c * matchings(remaining, cov);
        remaining.push(partner);
        remaining.swap(i, m - 1);
    }
    remaining.push(first);
    total
}

fn walk_labels(walk: &[usize], out: &mut Vec<EntryLabel>) {
    out.clear();
    let k = walk.len();
    out.extend((0..k).map(|j| EntryLabel::new(walk[j], walk[(j + 1) % k])));
}

fn require_gaussian(model: &CovarianceModel) -> Result<()> {
    match model.non_gaussian_spec() {
        Some(spec) => Err(Error::UnsupportedOracle(spec.to_string())),
        None => Ok(()),
    }
}

fn trace_normalizer(n: usize, k: usize) -> f64 {
    (n as f64).powf(1.0 + (k / 2) as f64)
}

/// Exact `(1/n) E[tr X_n^k]` for a single process on every diagonal.
pub fn expected_trace_moment(n: usize, k: usize, spec: ProcessSpec) -> Result<f64> {
    expected_trace_moment_with(n, k, &CovarianceModel::new(spec), CONSISTENT_BUDGET)
}

/// Exact `(1/n) E[tr X_n^k] = n^{-(1 + k/2)} * sum over T_n(k) of the Wick
/// expectation`, with an explicit enumeration budget on `n^k`.
pub fn expected_trace_moment_with(
    n: usize,
    k: usize,
    model: &CovarianceModel,
    budget: u128,
) -> Result<f64> {
    require_gaussian(model)?;
    if k == 0 {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        return Ok(1.0);
    }
    check_budget(n, k, budget)?;
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let cov = EntryCovariance::new(model);
    let mut labels = Vec::with_capacity(k);
    let mut total = 0.0;
    for_each_walk(n, k, |w| {
        walk_labels(w, &mut labels);
        total += wick_sum(&labels, &cov);
    });
    Ok(total / trace_normalizer(n, k))
}

/// Contribution of the sequences in `S_n(pi)` for one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionContribution {
    pub partition: Partition,
    pub sequences: u64,
    /// Unnormalized sum of expectations over `S_n(pi)`.
    pub sum: f64,
}

/// The same expected moment regrouped by `pi` in `P(k)`. Each partition is a
/// separate pass over `T_n(k)` that keeps only its own sequences.
pub fn trace_moment_by_partition(
    n: usize,
    k: usize,
    model: &CovarianceModel,
) -> Result<Vec<PartitionContribution>> {
    require_gaussian(model)?;
    check_budget(n, k, CONSISTENT_BUDGET)?;
    let cov = EntryCovariance::new(model);
    let mut labels = Vec::with_capacity(k);
    let mut out = Vec::new();
    for partition in enumerate_partitions(k)? {
        let class = partition.class_vector().to_vec();
        let (mut sequences, mut sum) = (0u64, 0.0);
        for_each_walk(n, k, |w| {
            if walk_is_consistent_with(w, &class) {
                sequences += 1;
                walk_labels(w, &mut labels);
                sum += wick_sum(&labels, &cov);
            }
        });
        out.push(PartitionContribution {
            partition,
            sequences,
            sum,
        });
    }
    Ok(out)
}

/// Wick expectations over `S_n*(pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarContribution {
    pub count: u64,
    pub sum: f64,
    pub abs_sum: f64,
    /// Extremes of the per-sequence expectation; `None` when the set is empty.
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn star_contribution(
    n: usize,
    pi: &PairPartition,
    model: &CovarianceModel,
) -> Result<StarContribution> {
    require_gaussian(model)?;
    let k = pi.k();
    check_budget(n, k, CONSISTENT_BUDGET)?;
    let cov = EntryCovariance::new(model);
    let class = pi.partition().class_vector().to_vec();
    let mut labels = Vec::with_capacity(k);
    let mut acc = StarContribution {
        count: 0,
        sum: 0.0,
        abs_sum: 0.0,
        min: None,
        max: None,
    };
    for_each_walk(n, k, |w| {
        if walk_is_consistent_with(w, &class) && walk_is_star(w, pi) {
            walk_labels(w, &mut labels);
            let e = wick_sum(&labels, &cov);
            acc.count += 1;
            acc.sum += e;
            acc.abs_sum += e.abs();
            acc.min = Some(acc.min.map_or(e, |m| m.min(e)));
            acc.max = Some(acc.max.map_or(e, |m| m.max(e)));
        }
    });
    Ok(acc)
}

/// Builds `trials` independent matrices (trial `i` uses
/// `trial_seed(base_seed, i)`) and maps each spectrum through `f`. Results
/// come back in trial order regardless of the thread pool.
pub fn map_trials<T, F>(
    n: usize,
    model: &CovarianceModel,
    trials: usize,
    base_seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Esd) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let config = EnsembleConfig {
                n,
                model: model.clone(),
                base_seed: seed::trial_seed(base_seed, i as u64),
            };
            let esd = eigenvalues(&build_matrix(&config)?)?;
            Ok(f(i, &esd))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub n: usize,
    pub k: u32,
    pub spec: ProcessSpec,
    /// Exact value when the oracle applies (Gaussian spec, within budget).
    pub exact_value: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub trials: usize,
    pub semicircle_target: f64,
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Monte Carlo estimate of `(1/n) E[tr X_n^k]` from the eigenvalues of
/// `trials` independent matrices.
pub fn mc_trace_moment(
    n: usize,
    k: u32,
    spec: ProcessSpec,
    trials: usize,
    base_seed: u64,
) -> Result<MomentReport> {
    Ok(mc_trace_moments(n, &[k], spec, trials, base_seed)?.remove(0))
}

/// [`mc_trace_moment`] for several `k` from the same matrices.
pub fn mc_trace_moments(
    n: usize,
    ks: &[u32],
    spec: ProcessSpec,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<MomentReport>> {
    if trials < 2 {
        return Err(Error::Domain(format!("need at least 2 trials, got {trials}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if ks.is_empty() {
        return Err(Error::Domain("no moment orders requested".into()));
    }
    let model = CovarianceModel::new(spec);
    let per_trial = map_trials(n, &model, trials, base_seed, |_, esd| {
        ks.iter().map(|&k| esd.moment(k)).collect::<Vec<_>>()
    })?;
    ks.iter()
        .enumerate()
        .map(|(j, &k)| {
            let moments: Vec<f64> = per_trial.iter().map(|m| m[j]).collect();
            let (mc_mean, mc_stderr) = mean_stderr(&moments);
            let exact_value = match expected_trace_moment(n, k as usize, spec) {
                Ok(v) => Some(v),
                Err(Error::UnsupportedOracle(_) | Error::Resource { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(MomentReport {
                n,
                k,
                spec,
                exact_value,
                mc_mean,
                mc_stderr,
                trials,
                semicircle_target: semicircle_moment(k),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationRow {
    pub n: usize,
    /// Estimate of `E[(tr X^k - E tr X^k)^4]`.
    pub a4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationReport {
    pub k: u32,
    pub trials: usize,
    pub rows: Vec<FluctuationRow>,
    /// Least-squares slope of `ln a4` against `ln n`; `None` if any estimate is 0.
    pub slope: Option<f64>,
    /// Percentile bootstrap 95% interval for the slope.
    pub slope_ci: Option<(f64, f64)>,
}

/// Fourth central moment of `tr(X_n^k)` on each `n` of the grid, with a
/// log-log slope. Growth no faster than `n^2` is the concentration bound.
pub fn fluctuation_scan(
    spec: ProcessSpec,
    k: u32,
    n_grid: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<FluctuationReport> {
    let model = CovarianceModel::new(spec);
    fluctuation_scan_with(
        |n, seed| build_matrix(&EnsembleConfig { n, model: model.clone(), base_seed: seed }),
        k,
        n_grid,
        trials,
        base_seed,
    )
}

/// [`fluctuation_scan`] over an arbitrary matrix sampler `(n, seed) -> Matrix`.
pub fn fluctuation_scan_with<S>(
    sampler: S,
    k: u32,
    n_grid: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<FluctuationReport>
where
    S: Fn(usize, u64) -> Result<Matrix> + Sync,
{
    let mut distinct = n_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Domain("fluctuation scan needs at least two distinct n".into()));
    }
    if distinct[0] == 0 {
        return Err(Error::Domain("grid values must be at least 1".into()));
    }
    if trials < 100 {
        return Err(Error::Domain(format!("fluctuation scan needs >= 100 trials, got {trials}")));
    }
    let mut traces = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let grid_seed = seed::derive(base_seed, DOMAIN_GRID, n as u64);
        let t: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let m = sampler(n, seed::trial_seed(grid_seed, i as u64))?;
                let esd = eigenvalues(&m)?;
                Ok(esd.moment(k) * n as f64)
            })
            .collect::<Result<_>>()?;
        traces.push(t);
    }
    let a4: Vec<f64> = traces.iter().map(|t| fourth_central_moment(t)).collect();
    let slope = log_log_slope(n_grid, &a4);
    let slope_ci = slope.and_then(|_| bootstrap_slope_ci(n_grid, &traces, base_seed));
    Ok(FluctuationReport {
        k,
        trials,
        rows: n_grid
            .iter()
            .zip(&a4)
            .map(|(&n, &a4)| FluctuationRow { n, a4 })
            .collect(),
        slope,
        slope_ci,
    })
}

fn fourth_central_moment(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m
}

/// OLS slope of `ln y` on `ln n`.
pub fn log_log_slope(ns: &[usize], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ls.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn bootstrap_slope_ci(ns: &[usize], traces: &[Vec<f64>], base_seed: u64) -> Option<(f64, f64)> {
    let mut rng = seed::rng(seed::derive(base_seed, seed::DOMAIN_BOOTSTRAP, 0));
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let a4: Vec<f64> = traces
            .iter()
            .map(|t| {
                resample.clear();
                resample.extend((0..t.len()).map(|_| t[rng.random_range(0..t.len())]));
                fourth_central_moment(&resample)
            })
            .collect();
        if let Some(s) = log_log_slope(ns, &a4) {
            slopes.push(s);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(f64::total_cmp);
    let at = |q: f64| slopes[((slopes.len() - 1) as f64 * q).round() as usize];
    Some((at(0.025), at(0.975)))
}
