//! Root-location results for the likelihood equations.

use serde::{Deserialize, Serialize};

use crate::distribution::GpsParams;
use crate::power_series::PowerSeriesFamily;

/// Interval containing a root of `∂l/∂β = 0` for fixed `(γ, θ)`:
/// `(n / ((1 + θC''(θ)/C'(θ)) S), n / S)` with `S = Σ (e^{γxᵢ}-1)/γ`.
///
/// Endpoints come back sorted. `None` when `1 + θC''(θ)/C'(θ) ≤ 0`, which can
/// only happen for the extended geometric form with θ < -1.
pub fn beta_bracket(gamma: f64, theta: f64, family: &PowerSeriesFamily, xs: &[f64]) -> Option<(f64, f64)> {
    let s: f64 = xs.iter().map(|&x| super::likelihood::kernel_gamma_derivs(gamma, x)[0]).sum();
    assert!(s > 0.0, "beta bracket needs positive data");
    let n = xs.len() as f64;
    let factor = 1.0 + theta * family.a2(theta);
    if !(factor > 0.0) || !factor.is_finite() {
        return None;
    }
    let (a, b) = (n / (factor * s), n / s);
    Some((a.min(b), a.max(b)))
}

/// Sufficient conditions for the γ- and θ-likelihood equations to have roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceFlags {
    /// `n x̄ - (β/2) Σ xᵢ² (1 + θe^{-βxᵢ} C''(θe^{-βxᵢ}) / C'(θe^{-βxᵢ})) > 0`
    pub gamma_root: bool,
    /// `Σ tᵢ > n/2`
    pub theta_root: bool,
    /// Binomial only: `Σ tᵢ > n/2` and `Σ 1/tᵢ > nm/(1-m)`. The right-hand
    /// side is negative for `m > 1`, so the second part always holds there.
    pub theta_root_binomial: Option<bool>,
}

pub fn existence_flags(params: &GpsParams, xs: &[f64]) -> ExistenceFlags {
    let (b, th) = (params.beta(), params.theta());
    let fam = params.family();
    let n = xs.len() as f64;
    let sum_x: f64 = xs.iter().sum();
    let quad: f64 = xs
        .iter()
        .map(|&x| {
            let y = th * (-b * x).exp();
            x * x * (1.0 + y * fam.a2(y))
        })
        .sum();
    let gamma_root = sum_x - 0.5 * b * quad > 0.0;
    let base = params.base();
    let ln_t: Vec<f64> = xs.iter().map(|&x| base.ln_tail(x)).collect();
    let sum_t: f64 = ln_t.iter().map(|s| s.exp()).sum();
    let theta_root = sum_t > n / 2.0;
    let theta_root_binomial = match fam {
        PowerSeriesFamily::Binomial { m } => {
            let m = *m as f64;
            let sum_inv: f64 = ln_t.iter().map(|s| (-s).exp()).sum();
            let rhs = if m == 1.0 { f64::INFINITY } else { n * m / (1.0 - m) };
            Some(theta_root && sum_inv > rhs)
        }
        _ => None,
    };
    ExistenceFlags { gamma_root, theta_root, theta_root_binomial }
}
