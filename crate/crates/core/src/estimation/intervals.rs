//! Standard errors and Wald confidence intervals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{FitResult, Matrix3};
use crate::error::{GpsError, Result};

/// `sqrt(diag(I⁻¹))` over the leading `k × k` block; `None` if that block is
/// not positive definite. Entries beyond `k` are NaN.
pub(crate) fn std_errors(info: &Matrix3, k: usize) -> Option<[f64; 3]> {
    let m = DMatrix::from_fn(k, k, |i, j| info[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let inv = m.cholesky()?.inverse();
    let mut out = [f64::NAN; 3];
    for (i, o) in out.iter_mut().enumerate().take(k) {
        let v = inv[(i, i)];
        if !(v > 0.0) {
            return None;
        }
        *o = v.sqrt();
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `Θ̂ᵣ ± z_{α/2} · se(Θ̂ᵣ)` for each free parameter, on the natural scale.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<ConfidenceInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(GpsError::Domain(format!("confidence level {level} outside (0, 1)")));
    }
    let se = fit
        .std_errors
        .ok_or_else(|| GpsError::Numerical("information matrix is singular; standard errors unavailable".into()))?;
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let est = fit.estimates();
    Ok((0..fit.k)
        .map(|i| ConfidenceInterval { estimate: est[i], lower: est[i] - z * se[i], upper: est[i] + z * se[i] })
        .collect())
}

/// Standard normal quantile used for a two-sided interval at `level`.
pub fn normal_critical_value(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}
