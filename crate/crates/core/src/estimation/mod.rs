//! Likelihood-based estimation for GPS models.
//!
//! Direct maximisation ([`mle_direct`]) works for complete and right-censored
//! data; the EM algorithm ([`em_fit`]) covers complete data with the mixing
//! variable `N` treated as missing. Observed information comes either from the
//! closed-form second derivatives ([`observed_information`]) or from Louis'
//! identity ([`louis_information`]).

mod diagnostics;
mod direct;
mod em;
mod intervals;
mod likelihood;
pub(crate) mod optim;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::distribution::GpsParams;
use crate::error::{GpsError, Result};
use crate::power_series::PowerSeriesFamily;

pub use diagnostics::{beta_bracket, existence_flags, ExistenceFlags};
pub use direct::{mle_direct, DirectOptions, BOUNDARY_THETA};
pub use em::{em_fit, louis_information, louis_parts, EmOptions};
pub use intervals::{confidence_intervals, normal_critical_value, ConfidenceInterval};
pub use likelihood::{
    censored_information, censored_log_likelihood, censored_score, log_likelihood, observed_information, score,
    ScoreWorkspace,
};

/// 3×3 matrix in `(β, γ, θ)` order.
pub type Matrix3 = [[f64; 3]; 3];

/// Complete sample `x₁, …, x_n`, all positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSample {
    values: Vec<f64>,
}

impl ObservedSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GpsError::InvalidData("sample is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(GpsError::InvalidData(format!("observation {bad} is not a positive finite number")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// Right-censored sample: `events[i]` is true for an observed failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    values: Vec<f64>,
    events: Vec<bool>,
}

impl CensoredSample {
    pub fn new(values: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        if values.len() != events.len() {
            return Err(GpsError::InvalidData(format!(
                "{} values but {} censoring indicators",
                values.len(),
                events.len()
            )));
        }
        let base = ObservedSample::new(values)?;
        if !events.iter().any(|&e| e) {
            return Err(GpsError::InvalidData("censored sample has no observed events".into()));
        }
        Ok(Self { values: base.values, events })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.len() as f64
    }
}

impl From<ObservedSample> for CensoredSample {
    fn from(s: ObservedSample) -> Self {
        let events = vec![true; s.len()];
        Self { values: s.values, events }
    }
}

/// Anything the likelihood can be evaluated on.
pub trait LifetimeData {
    fn values(&self) -> &[f64];
    /// `None` for complete data.
    fn events(&self) -> Option<&[bool]>;
}

impl LifetimeData for ObservedSample {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn events(&self) -> Option<&[bool]> {
        None
    }
}

impl LifetimeData for CensoredSample {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn events(&self) -> Option<&[bool]> {
        if self.events.iter().all(|&e| e) {
            None
        } else {
            Some(&self.events)
        }
    }
}

/// Which GPS member is fitted.
///
/// `extended_gg` selects the geometric family in the `θ* = 1 - θ > 0`
/// parametrization, which lets the fitted θ go below zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: PowerSeriesFamily,
    pub extended_gg: bool,
}

impl ModelSpec {
    pub fn gompertz() -> Self {
        Self { family: PowerSeriesFamily::identity(), extended_gg: false }
    }
    pub fn gg() -> Self {
        Self { family: PowerSeriesFamily::Geometric, extended_gg: true }
    }
    pub fn gg_classic() -> Self {
        Self { family: PowerSeriesFamily::Geometric, extended_gg: false }
    }
    pub fn gp() -> Self {
        Self::gps(PowerSeriesFamily::Poisson)
    }
    pub fn gb(m: u32) -> Result<Self> {
        Ok(Self::gps(PowerSeriesFamily::binomial(m)?))
    }
    pub fn gl() -> Self {
        Self::gps(PowerSeriesFamily::Logarithmic)
    }
    pub fn gps(family: PowerSeriesFamily) -> Self {
        Self { family, extended_gg: false }
    }

    /// `gompertz`, `gg`, `gg-classic`, `gp`, `gb(m)` / `gb` (m = 5), `gl`, or
    /// any family spec accepted by [`PowerSeriesFamily::parse`].
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim().to_ascii_lowercase();
        match s.as_str() {
            "gompertz" => return Ok(Self::gompertz()),
            "gg" => return Ok(Self::gg()),
            "gg-classic" | "gg_classic" => return Ok(Self::gg_classic()),
            "gp" => return Ok(Self::gp()),
            "gl" => return Ok(Self::gl()),
            "gb" => return Self::gb(5),
            _ => {}
        }
        if let Some(m) = s.strip_prefix("gb(").and_then(|r| r.strip_suffix(')')) {
            let m = m.trim().parse().map_err(|_| GpsError::InvalidSpec(format!("bad replica count in '{spec}'")))?;
            return Self::gb(m);
        }
        Ok(Self::gps(PowerSeriesFamily::parse(spec)?))
    }

    pub fn name(&self) -> String {
        if self.extended_gg {
            return "gg".into();
        }
        match &self.family {
            PowerSeriesFamily::Geometric => "gg-classic".into(),
            PowerSeriesFamily::Poisson => "gp".into(),
            PowerSeriesFamily::Binomial { m } => format!("gb({m})"),
            PowerSeriesFamily::Logarithmic => "gl".into(),
            f if *f == PowerSeriesFamily::identity() => "gompertz".into(),
            f => f.to_string(),
        }
    }

    /// True when θ is not identifiable and stays fixed.
    pub fn fixes_theta(&self) -> bool {
        !self.extended_gg && self.family.is_theta_free()
    }

    /// Number of free parameters `k`.
    pub fn free_parameters(&self) -> usize {
        if self.fixes_theta() {
            2
        } else {
            3
        }
    }

    /// Validated parameters for this model; θ is ignored when fixed.
    pub fn params(&self, beta: f64, gamma: f64, theta: f64) -> Result<GpsParams> {
        if self.extended_gg {
            GpsParams::extended_gg(beta, gamma, 1.0 - theta)
        } else if self.fixes_theta() {
            GpsParams::new(beta, gamma, 1.0, self.family.clone())
        } else {
            GpsParams::new(beta, gamma, theta, self.family.clone())
        }
    }

    /// True when `params` belongs to this model.
    pub fn matches(&self, params: &GpsParams) -> bool {
        params.family() == &self.family && params.is_extended_gg() == self.extended_gg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    DirectNewton,
    Em,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DirectNewton => "direct-newton",
            Self::Em => "em",
        }
    }
}

/// Diagnostics attached to a fit; none of them aborts fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitDiagnostics {
    /// Root interval for `∂l/∂β = 0` at the fitted `(γ, θ)`.
    pub beta_bracket: Option<(f64, f64)>,
    pub existence: Option<ExistenceFlags>,
    /// θ̂ below `1e-6`: the fit has reduced to Gompertz(cβ, γ).
    pub boundary: bool,
    /// Direct search replaced Newton after repeated domain failures.
    pub fallback_used: bool,
    /// `‖∇l‖∞` on the optimisation scale at the returned estimate.
    pub score_norm: f64,
    /// EM iteration at which the `1e-4` successive-difference rule was met.
    pub coarse_stop_iteration: Option<usize>,
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub params: GpsParams,
    pub loglik: f64,
    pub n: usize,
    pub k: usize,
    /// `sqrt(diag(I⁻¹))` on the natural scale; `None` if `I` is singular.
    /// The θ entry is NaN when θ is fixed.
    pub std_errors: Option<[f64; 3]>,
    pub info_matrix: Matrix3,
    pub iterations: usize,
    pub converged: bool,
    pub method: FitMethod,
    pub diagnostics: FitDiagnostics,
    /// Observed-data log-likelihood after every EM iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn estimates(&self) -> [f64; 3] {
        [self.params.beta(), self.params.gamma(), self.params.theta()]
    }

    /// Flat JSON object with estimates, errors, log-likelihood and diagnostics.
    pub fn to_record(&self) -> Value {
        let mut m = Map::new();
        let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        m.insert("model".into(), json!(self.model.name()));
        m.insert("method".into(), json!(self.method.as_str()));
        m.insert("n".into(), json!(self.n));
        m.insert("k".into(), json!(self.k));
        m.insert("beta".into(), num(self.params.beta()));
        m.insert("gamma".into(), num(self.params.gamma()));
        if !self.model.fixes_theta() {
            m.insert("theta".into(), num(self.params.theta()));
        }
        if self.model.extended_gg {
            m.insert("theta_star".into(), num(self.params.theta_star()));
        }
        let se = self.std_errors.unwrap_or([f64::NAN; 3]);
        m.insert("se_beta".into(), num(se[0]));
        m.insert("se_gamma".into(), num(se[1]));
        if !self.model.fixes_theta() {
            m.insert("se_theta".into(), num(se[2]));
        }
        m.insert("loglik".into(), num(self.loglik));
        m.insert("neg_loglik".into(), num(-self.loglik));
        m.insert("iterations".into(), json!(self.iterations));
        m.insert("converged".into(), json!(self.converged));
        let d = &self.diagnostics;
        m.insert("boundary".into(), json!(d.boundary));
        m.insert("fallback_used".into(), json!(d.fallback_used));
        m.insert("score_norm".into(), num(d.score_norm));
        if let Some((lo, hi)) = d.beta_bracket {
            m.insert("beta_bracket_lo".into(), num(lo));
            m.insert("beta_bracket_hi".into(), num(hi));
        }
        if let Some(e) = &d.existence {
            m.insert("gamma_root_condition".into(), json!(e.gamma_root));
            m.insert("theta_root_condition".into(), json!(e.theta_root));
            if let Some(b) = e.theta_root_binomial {
                m.insert("theta_root_condition_binomial".into(), json!(b));
            }
        }
        if let Some(it) = d.coarse_stop_iteration {
            m.insert("coarse_stop_iteration".into(), json!(it));
        }
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_validation() {
        assert!(ObservedSample::new(vec![]).is_err());
        assert!(ObservedSample::new(vec![1.0, -2.0]).is_err());
        assert!(ObservedSample::new(vec![1.0, f64::NAN]).is_err());
        assert!(CensoredSample::new(vec![1.0, 2.0], vec![true]).is_err());
        assert!(CensoredSample::new(vec![1.0, 2.0], vec![false, false]).is_err());
        let c = CensoredSample::new(vec![1.0, 2.0], vec![true, false]).unwrap();
        assert_eq!(c.n_events(), 1);
        assert!((c.censoring_fraction() - 0.5).abs() < 1e-15);
        let full: CensoredSample = ObservedSample::new(vec![1.0, 2.0]).unwrap().into();
        assert!(LifetimeData::events(&full).is_none());
    }

    #[test]
    fn model_names_round_trip() {
        for s in ["gompertz", "gg", "gg-classic", "gp", "gb(7)", "gl", "poly(1:1,20:1)"] {
            let m = ModelSpec::parse(s).unwrap();
            assert_eq!(ModelSpec::parse(&m.name()).unwrap(), m, "{s}");
        }
        assert_eq!(ModelSpec::parse("gb").unwrap(), ModelSpec::gb(5).unwrap());
        assert_eq!(ModelSpec::gompertz().free_parameters(), 2);
        assert_eq!(ModelSpec::gg().free_parameters(), 3);
        assert!(ModelSpec::parse("weibull").is_err());
    }

    #[test]
    fn extended_model_accepts_negative_theta() {
        let p = ModelSpec::gg().params(0.8, 1.3, -58.9).unwrap();
        assert!((p.theta_star() - 59.9).abs() < 1e-12);
        assert!(ModelSpec::gg_classic().params(0.8, 1.3, -58.9).is_err());
    }
}
