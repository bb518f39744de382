//! Stationary processes that fill the matrix diagonals.
//!
//! Every process is standardized to mean 0 and variance 1, so the lag-0
//! autocovariance is always 1 and the lag-`t` autocovariance is also the
//! autocorrelation.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// The process families available for a diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    IidGaussian,
    /// i.i.d. fair signs.
    IidRademacher,
    /// `x[t+1] = phi * x[t] + sqrt(1 - phi^2) * eps[t+1]`, started in its stationary law.
    Ar1 { phi: f64 },
    /// Symmetric chain on {+1, -1} that keeps its state with probability `stay_prob`.
    MarkovTwoState { stay_prob: f64 },
    /// `x[p] = sqrt(rho) * z + sqrt(1 - rho) * eps[p]` with one shared `z` per path.
    EquiCorrelated { rho: f64 },
}

/// A validated process description. Construct through [`ProcessSpec::new`] or
/// the named constructors; invalid parameters never make it into a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ProcessSpec(ProcessKind);

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Result<Self> {
        match kind {
            ProcessKind::IidGaussian | ProcessKind::IidRademacher => {}
            ProcessKind::Ar1 { phi } => {
                if !(phi.is_finite() && phi.abs() < 1.0) {
                    return Err(Error::Parameter(format!("ar1 requires |phi| < 1, got {phi}")));
                }
            }
            ProcessKind::MarkovTwoState { stay_prob } => {
                if !(stay_prob > 0.0 && stay_prob < 1.0) {
                    return Err(Error::Parameter(format!(
                        "markov_two_state requires 0 < stay_prob < 1, got {stay_prob}"
                    )));
                }
            }
            ProcessKind::EquiCorrelated { rho } => {
                if !(rho >= 0.0 && rho < 1.0) {
                    return Err(Error::Parameter(format!(
                        "equicorrelated requires 0 <= rho < 1, got {rho}"
                    )));
                }
            }
        }
        Ok(ProcessSpec(kind))
    }

    pub fn iid_gaussian() -> Self {
        ProcessSpec(ProcessKind::IidGaussian)
    }

    pub fn iid_rademacher() -> Self {
        ProcessSpec(ProcessKind::IidRademacher)
    }

    pub fn ar1(phi: f64) -> Result<Self> {
        Self::new(ProcessKind::Ar1 { phi })
    }

    pub fn markov_two_state(stay_prob: f64) -> Result<Self> {
        Self::new(ProcessKind::MarkovTwoState { stay_prob })
    }

    pub fn equicorrelated(rho: f64) -> Result<Self> {
        Self::new(ProcessKind::EquiCorrelated { rho })
    }

    /// Parses the `{kind, param}` pair used by config files and CLI flags.
    /// The i.i.d. kinds take no parameter; any supplied value is ignored.
    pub fn from_kind_param(kind: &str, param: Option<f64>) -> Result<Self> {
        let need = |name: &str| {
            param.ok_or_else(|| Error::Parameter(format!("process {name} requires a param")))
        };
        match kind {
            "iid_gaussian" | "gaussian" => Ok(Self::iid_gaussian()),
            "iid_rademacher" | "rademacher" => Ok(Self::iid_rademacher()),
            "ar1" => Self::ar1(need("ar1")?),
            "markov_two_state" | "markov" => Self::markov_two_state(need("markov_two_state")?),
            "equicorrelated" | "equi" => Self::equicorrelated(need("equicorrelated")?),
            other => Err(Error::Parameter(format!("unknown process kind `{other}`"))),
        }
    }

    pub fn kind(&self) -> ProcessKind {
        self.0
    }

    pub fn kind_name(&self) -> &'static str {
        match self.0 {
            ProcessKind::IidGaussian => "iid_gaussian",
            ProcessKind::IidRademacher => "iid_rademacher",
            ProcessKind::Ar1 { .. } => "ar1",
            ProcessKind::MarkovTwoState { .. } => "markov_two_state",
            ProcessKind::EquiCorrelated { .. } => "equicorrelated",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match self.0 {
            ProcessKind::IidGaussian | ProcessKind::IidRademacher => None,
            ProcessKind::Ar1 { phi } => Some(phi),
            ProcessKind::MarkovTwoState { stay_prob } => Some(stay_prob),
            ProcessKind::EquiCorrelated { rho } => Some(rho),
        }
    }

    /// True when every finite-dimensional marginal of the path is jointly Gaussian.
    pub fn is_gaussian(&self) -> bool {
        matches!(
            self.0,
            ProcessKind::IidGaussian | ProcessKind::Ar1 { .. } | ProcessKind::EquiCorrelated { .. }
        )
    }

    /// True when the autocovariance tends to 0 with the lag.
    pub fn has_decaying_correlations(&self) -> bool {
        !matches!(self.0, ProcessKind::EquiCorrelated { rho } if rho > 0.0)
    }

    /// Exact lag-`t` autocovariance of the standardized process.
    pub fn theoretical_covariance(&self, t: usize) -> f64 {
        if t == 0 {
            return 1.0;
        }
        match self.0 {
            ProcessKind::IidGaussian | ProcessKind::IidRademacher => 0.0,
            ProcessKind::Ar1 { phi } => phi.powi(lag_exponent(t)),
            ProcessKind::MarkovTwoState { stay_prob } => (2.0 * stay_prob - 1.0).powi(lag_exponent(t)),
            ProcessKind::EquiCorrelated { rho } => rho,
        }
    }

    /// Strongly mixing processes used for cross-validation of the sampler.
    /// Equi-correlated paths are not ergodic, so they are not in this list.
    pub fn mixing_gallery() -> Vec<ProcessSpec> {
        vec![
            Self::iid_gaussian(),
            Self::iid_rademacher(),
            ProcessSpec(ProcessKind::Ar1 { phi: 0.5 }),
            ProcessSpec(ProcessKind::Ar1 { phi: -0.5 }),
            ProcessSpec(ProcessKind::MarkovTwoState { stay_prob: 0.8 }),
            ProcessSpec(ProcessKind::MarkovTwoState { stay_prob: 0.3 }),
        ]
    }
}

fn lag_exponent(t: usize) -> i32 {
    // powi saturates to 0 long before i32::MAX for |base| < 1
    i32::try_from(t).unwrap_or(i32::MAX)
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({})", self.kind_name(), p),
            None => f.write_str(self.kind_name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<f64>,
}

impl TryFrom<RawSpec> for ProcessSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ProcessSpec::from_kind_param(&raw.kind, raw.param)
    }
}

impl From<ProcessSpec> for RawSpec {
    fn from(spec: ProcessSpec) -> Self {
        RawSpec {
            kind: spec.kind_name().to_string(),
            param: spec.param(),
        }
    }
}

/// A sampled stretch of one diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPath {
    values: Vec<f64>,
    spec: ProcessSpec,
    seed: u64,
}

impl DiagonalPath {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spec(&self) -> ProcessSpec {
        self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn empirical_covariance(&self, t: usize) -> Result<f64> {
        empirical_covariance(&self.values, t)
    }
}

/// Draws a stationary path of `length` values. The same `(spec, length, seed)`
/// always yields the same path.
///
/// Gaussian kinds consume one standard normal per index in order, so
/// `Ar1 { phi: 0 }` and `EquiCorrelated { rho: 0 }` reproduce the
/// `IidGaussian` path for the same seed exactly. The shared component of the
/// equi-correlated process is drawn after the innovations.
pub fn sample_diagonal(spec: ProcessSpec, length: usize, seed: u64) -> Result<DiagonalPath> {
    if length == 0 {
        return Err(Error::Domain("diagonal path length must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let mut values = Vec::with_capacity(length);
    match spec.kind() {
        ProcessKind::IidGaussian => {
            values.extend((0..length).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        ProcessKind::IidRademacher => {
            values.extend((0..length).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
        }
        ProcessKind::Ar1 { phi } => {
            let innovation_scale = (1.0 - phi * phi).sqrt();
            // x[0] ~ N(0, 1) is the stationary law of the standardized recursion.
            let mut x: f64 = rng.sample(StandardNormal);
            values.push(x);
            for _ in 1..length {
                let eps: f64 = rng.sample(StandardNormal);
                x = phi * x + innovation_scale * eps;
                values.push(x);
            }
        }
        ProcessKind::MarkovTwoState { stay_prob } => {
            let mut x = if rng.random::<bool>() { 1.0 } else { -1.0 };
            values.push(x);
            for _ in 1..length {
                if !rng.random_bool(stay_prob) {
                    x = -x;
                }
                values.push(x);
            }
        }
        ProcessKind::EquiCorrelated { rho } => {
            values.extend((0..length).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let shared: f64 = rng.sample(StandardNormal);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            for v in &mut values {
                *v = a * shared + b * *v;
            }
        }
    }
    Ok(DiagonalPath { values, spec, seed })
}

/// Mean-corrected lag-`t` sample autocovariance, dividing by the number of
/// summed products (`len - t`).
pub fn empirical_covariance(values: &[f64], t: usize) -> Result<f64> {
    if t >= values.len() {
        return Err(Error::Domain(format!(
            "lag {t} needs a path longer than {}",
            values.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let terms = values.len() - t;
    let sum: f64 = values[..terms]
        .iter()
        .zip(&values[t..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    Ok(sum / terms as f64)
}

/// Per-offset diagonal laws: a default process plus optional overrides.
///
/// `covariance(r, t)` is `Cov(a(p, p + r), a(p + t, p + t + r))`. Entries on
/// different offsets are independent, so there is no cross-offset term.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    default_spec: ProcessSpec,
    overrides: BTreeMap<usize, ProcessSpec>,
}

impl CovarianceModel {
    pub fn new(default_spec: ProcessSpec) -> Self {
        CovarianceModel {
            default_spec,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, offset: usize, spec: ProcessSpec) -> Self {
        self.overrides.insert(offset, spec);
        self
    }

    pub fn default_spec(&self) -> ProcessSpec {
        self.default_spec
    }

    pub fn overrides(&self) -> &BTreeMap<usize, ProcessSpec> {
        &self.overrides
    }

    pub fn spec_for(&self, offset: usize) -> ProcessSpec {
        self.overrides
            .get(&offset)
            .copied()
            .unwrap_or(self.default_spec)
    }

    pub fn covariance(&self, offset: usize, lag: usize) -> f64 {
        self.spec_for(offset).theoretical_covariance(lag)
    }

    /// `sup_r |R(r, lag)|` over offsets `0..offsets`.
    pub fn sup_covariance(&self, lag: usize, offsets: usize) -> f64 {
        (0..offsets)
            .map(|r| self.covariance(r, lag).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_gaussian(&self) -> bool {
        self.default_spec.is_gaussian() && self.overrides.values().all(ProcessSpec::is_gaussian)
    }

    /// First non-Gaussian spec in the model, if any.
    pub(crate) fn non_gaussian_spec(&self) -> Option<ProcessSpec> {
        std::iter::once(&self.default_spec)
            .chain(self.overrides.values())
            .find(|s| !s.is_gaussian())
            .copied()
    }
}

impl From<ProcessSpec> for CovarianceModel {
    fn from(spec: ProcessSpec) -> Self {
        CovarianceModel::new(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(matches!(ProcessSpec::ar1(1.0), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::ar1(-1.2), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::ar1(f64::NAN), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::equicorrelated(1.0), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::equicorrelated(-0.1), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::markov_two_state(0.0), Err(Error::Parameter(_))));
        assert!(matches!(ProcessSpec::markov_two_state(1.0), Err(Error::Parameter(_))));
        assert!(ProcessSpec::equicorrelated(0.0).is_ok());
    }

    #[test]
    fn zero_length_is_a_domain_error() {
        let err = sample_diagonal(ProcessSpec::iid_gaussian(), 0, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn closed_form_covariances() {
        let ar = ProcessSpec::ar1(0.5).unwrap();
        assert_eq!(ar.theoretical_covariance(2), 0.25);
        let eq = ProcessSpec::equicorrelated(0.3).unwrap();
        assert_eq!(eq.theoretical_covariance(7), 0.3);
        let mk = ProcessSpec::markov_two_state(0.8).unwrap();
        assert!((mk.theoretical_covariance(3) - 0.216).abs() < 1e-15);
        for spec in ProcessSpec::mixing_gallery().into_iter().chain([eq]) {
            assert_eq!(spec.theoretical_covariance(0), 1.0);
        }
    }

    #[test]
    fn decaying_class_falls_below_threshold() {
        let spec = ProcessSpec::ar1(0.9).unwrap();
        assert!(spec.has_decaying_correlations());
        for t in 44..2000 {
            assert!(spec.theoretical_covariance(t).abs() < 0.01, "t = {t}");
        }
        assert!(!ProcessSpec::equicorrelated(0.2).unwrap().has_decaying_correlations());
    }

    #[test]
    fn degenerate_parameters_reduce_to_iid_gaussian() {
        let iid = sample_diagonal(ProcessSpec::iid_gaussian(), 100, 42).unwrap();
        let ar0 = sample_diagonal(ProcessSpec::ar1(0.0).unwrap(), 100, 42).unwrap();
        let eq0 = sample_diagonal(ProcessSpec::equicorrelated(0.0).unwrap(), 100, 42).unwrap();
        assert_eq!(iid.values(), ar0.values());
        assert_eq!(iid.values(), eq0.values());
    }

    #[test]
    fn two_state_paths_take_unit_values() {
        for spec in [ProcessSpec::iid_rademacher(), ProcessSpec::markov_two_state(0.7).unwrap()] {
            let path = sample_diagonal(spec, 500, 3).unwrap();
            assert!(path.values().iter().all(|v| v.abs() == 1.0));
        }
    }

    #[test]
    fn empirical_covariance_of_zero_path() {
        let zeros = vec![0.0; 10];
        for t in 0..10 {
            assert_eq!(empirical_covariance(&zeros, t).unwrap(), 0.0);
        }
        assert!(matches!(empirical_covariance(&zeros, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = ProcessSpec::ar1(0.5).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"kind":"ar1","param":0.5}"#);
        assert_eq!(serde_json::from_str::<ProcessSpec>(&text).unwrap(), spec);
        assert_eq!(
            serde_json::from_str::<ProcessSpec>(r#"{"kind":"iid_gaussian"}"#).unwrap(),
            ProcessSpec::iid_gaussian()
        );
        assert!(serde_json::from_str::<ProcessSpec>(r#"{"kind":"ar1","param":1.5}"#).is_err());
        assert!(serde_json::from_str::<ProcessSpec>(r#"{"kind":"ar1"}"#).is_err());
    }

    #[test]
    fn overrides_apply_per_offset() {
        let model = CovarianceModel::new(ProcessSpec::iid_gaussian())
            .with_override(2, ProcessSpec::equicorrelated(0.4).unwrap());
        assert_eq!(model.covariance(1, 3), 0.0);
        assert_eq!(model.covariance(2, 3), 0.4);
        assert_eq!(model.sup_covariance(3, 5), 0.4);
        assert!(model.is_gaussian());
        let mixed = model.with_override(1, ProcessSpec::iid_rademacher());
        assert!(!mixed.is_gaussian());
    }
}
