//! Raw moments and the moment generating function.
//!
//! Conditionally on `N = n` the lifetime is Gompertz(nβ, γ), whose moments are
//! integro-exponential functions of `nβ/γ`; the GPS value is their mixture
//! over the power-series law of `N`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::GpsParams;
use crate::error::{domain, Result};
use crate::quadrature::Quadrature;
use crate::special::{scaled_gen_integro_exponential, scaled_integro_exponential};

/// A value plus whether it came from the quadrature fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub via_quadrature: bool,
}

fn moment_quad() -> Quadrature {
    Quadrature::with_tol(1e-14, 1e-11)
}

impl GpsParams {
    /// `E(X^r)`, from the mixture series when the power-series law exists and
    /// by quadrature of `x^r f(x)` otherwise.
    pub fn moment(&self, r: u32) -> Result<SeriesValue> {
        if r == 0 {
            return Ok(SeriesValue { value: 1.0, via_quadrature: false });
        }
        if let Some(value) = self.moment_series(r) {
            if value.is_finite() {
                return Ok(SeriesValue { value, via_quadrature: false });
            }
        }
        Ok(SeriesValue { value: self.moment_quadrature(r), via_quadrature: true })
    }

    /// `Σ_n P(N=n) · r!/γ^r · e^{z} W_1^{r-1}(z)` evaluated with `e^{-z}` kept
    /// inside the Gompertz(nβ, γ) moment, `z = nβ/γ`.
    fn moment_series(&self, r: u32) -> Option<f64> {
        let weights = self.mixture_weights()?;
        let ln_scale = ln_gamma(r as f64 + 1.0) - r as f64 * self.gamma.ln();
        let mut sum = 0.0;
        for (n, w) in weights {
            let z = n as f64 * self.beta / self.gamma;
            let term = scaled_gen_integro_exponential(r, z).ok()?;
            sum += w * (ln_scale + term.ln()).exp();
        }
        Some(sum)
    }

    pub(crate) fn moment_quadrature(&self, r: u32) -> f64 {
        let r = r as i32;
        self.integrate(|x| if x <= 0.0 { 0.0 } else { (r as f64 * x.ln() + self.ln_pdf(x)).exp() }, &moment_quad())
    }

    /// `M_X(t) = E(e^{tX})` for `t < γ`.
    ///
    /// Each Gompertz(nβ, γ) component contributes `z e^{z} W_{-t/γ}(z)`.
    pub fn mgf(&self, t: f64) -> Result<SeriesValue> {
        if !t.is_finite() || t >= self.gamma {
            return domain(format!("mgf requires t < γ = {}, got {t}", self.gamma));
        }
        if t == 0.0 {
            return Ok(SeriesValue { value: 1.0, via_quadrature: false });
        }
        if let Some(weights) = self.mixture_weights() {
            let f = -t / self.gamma;
            let mut sum = 0.0;
            for (n, w) in weights {
                let z = n as f64 * self.beta / self.gamma;
                sum += w * z * scaled_integro_exponential(f, z)?;
            }
            if sum.is_finite() {
                return Ok(SeriesValue { value: sum, via_quadrature: false });
            }
        }
        let value = self.integrate(|x| (t * x + self.ln_pdf(x)).exp(), &moment_quad());
        Ok(SeriesValue { value, via_quadrature: true })
    }
}

/// Small-β approximation of `E(Y_(1))` for the minimum of `n` Gompertz lifetimes,
/// `(1/γ) e^{z} (z - ln z - 0.57722)` with `z = nβ/γ`.
pub fn mean_small_beta_approx(n: u32, beta: f64, gamma: f64) -> Result<f64> {
    if n == 0 || !(beta > 0.0 && gamma > 0.0) {
        return domain("small-β approximation needs n ≥ 1 and β, γ > 0");
    }
    let z = n as f64 * beta / gamma;
    Ok(z.exp() * (z - z.ln() - 0.57722) / gamma)
}
