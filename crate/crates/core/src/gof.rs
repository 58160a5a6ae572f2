//! Goodness of fit and model selection.

use serde::{Deserialize, Serialize};

use crate::distribution::GpsParams;
use crate::estimation::{FitResult, ObservedSample};

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(data: &[f64]) -> Self {
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    /// `#{xᵢ ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn empirical_cdf(data: &ObservedSample) -> EmpiricalCdf {
    EmpiricalCdf::new(data.values())
}

/// `D_n = max_i max(i/n - uᵢ, uᵢ - (i-1)/n)` over sorted model probabilities `uᵢ = F(x₍ᵢ₎)`.
pub fn ks_statistic_uniform(u: &[f64]) -> f64 {
    let mut u = u.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

/// `P(√n D_n > t)` from the limiting Kolmogorov law.
pub fn kolmogorov_pvalue(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.0 {
        // K(t) = √(2π)/t Σ_{j≥1} exp(-(2j-1)²π²/(8t²))
        let pi2 = std::f64::consts::PI.powi(2);
        let mut sum = 0.0;
        for j in 1..100 {
            let k = (2 * j - 1) as f64;
            let term = (-k * k * pi2 / (8.0 * t * t)).exp();
            sum += term;
            if term < 1e-16 * sum.max(1e-300) {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * t * t).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov–Smirnov test of `data` against the fitted law.
pub fn ks_test(params: &GpsParams, data: &ObservedSample) -> KsResult {
    let u: Vec<f64> = data.values().iter().map(|&x| params.cdf(x)).collect();
    let d = ks_statistic_uniform(&u);
    KsResult { statistic: d, p_value: kolmogorov_pvalue((data.len() as f64).sqrt() * d) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    /// `None` when `n ≤ k + 1`.
    pub aicc: Option<f64>,
    pub bic: f64,
}

/// AIC `= -2l + 2k`, AICC `= AIC + 2k(k+1)/(n-k-1)`, BIC `= -2l + k ln n`.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> InformationCriteria {
    let kf = k as f64;
    let aic = -2.0 * loglik + 2.0 * kf;
    let aicc = (n > k + 1).then(|| aic + 2.0 * kf * (kf + 1.0) / (n - k - 1) as f64);
    InformationCriteria { aic, aicc, bic: -2.0 * loglik + kf * (n as f64).ln() }
}

/// Fit summary as reported for model comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub model: String,
    pub loglik: f64,
    pub k: usize,
    pub n: usize,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub aic: f64,
    pub aicc: Option<f64>,
    pub bic: f64,
}

impl GofReport {
    pub fn new(model: impl Into<String>, params: &GpsParams, data: &ObservedSample, loglik: f64, k: usize) -> Self {
        let ks = ks_test(params, data);
        let ic = information_criteria(loglik, k, data.len());
        Self {
            model: model.into(),
            loglik,
            k,
            n: data.len(),
            ks_stat: ks.statistic,
            ks_pvalue: ks.p_value,
            aic: ic.aic,
            aicc: ic.aicc,
            bic: ic.bic,
        }
    }

    pub fn from_fit(fit: &FitResult, data: &ObservedSample) -> Self {
        Self::new(fit.model.name(), &fit.params, data, fit.loglik, fit.k)
    }

    pub const CSV_HEADER: &'static str = "model,neg_loglik,k,n,ks_stat,ks_pvalue,aic,aicc,bic";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{},{},{:.4},{:.4},{:.4},{},{:.4}",
            self.model,
            -self.loglik,
            self.k,
            self.n,
            self.ks_stat,
            self.ks_pvalue,
            self.aic,
            self.aicc.map_or(String::new(), |v| format!("{v:.4}")),
            self.bic
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_series::PowerSeriesFamily;

    #[test]
    fn empirical_cdf_steps() {
        let e = EmpiricalCdf::new(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(2.5), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
        assert_eq!(e.eval(10.0), 1.0);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // both series are valid near t = 1
        let t = 1.0;
        let pi2 = std::f64::consts::PI.powi(2);
        let theta: f64 = (1..50)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * pi2 / (8.0 * t * t)).exp()
            })
            .sum();
        let via_theta = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * theta;
        assert!((kolmogorov_pvalue(t) - via_theta).abs() < 1e-12);
        assert!((kolmogorov_pvalue(1.3581) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_pvalue(0.0), 1.0);
        assert!(kolmogorov_pvalue(0.2) > 0.999_99);
    }

    #[test]
    fn information_criteria_by_hand() {
        let ic = information_criteria(-12.2288, 3, 63);
        assert!((ic.aic - 30.4576).abs() < 1e-4);
        assert!((ic.aicc.unwrap() - 30.8644).abs() < 1e-4);
        assert!((ic.bic - 36.8870).abs() < 1e-4);
        let ic = information_criteria(-3.0, 0, 10);
        assert_eq!(ic.aic, 6.0);
        assert_eq!(ic.bic, 6.0);
        assert!(information_criteria(-1.0, 3, 4).aicc.is_none());
    }

    #[test]
    fn ks_is_invariant_under_probability_transform() {
        let p = GpsParams::new(0.5, 2.0, 0.9, PowerSeriesFamily::Geometric).unwrap();
        let data = ObservedSample::new(p.sample_seeded(200, 3)).unwrap();
        let u: Vec<f64> = data.values().iter().map(|&x| p.cdf(x)).collect();
        assert_eq!(ks_test(&p, &data).statistic, ks_statistic_uniform(&u));
    }
}
