//! Integro-exponential functions
//!
//! ```text
//! W_f(z)       = ∫_1^∞ e^{-zu} u^{-f} du
//! W_1^{r-1}(z) = 1/(r-1)! ∫_1^∞ (ln u)^{r-1} e^{-zu} / u du
//! ```
//!
//! Both are evaluated in scaled form `e^z W(z)` after the substitution
//! `u = 1 + v/z`, which turns them into `e^{-v}`-weighted integrals over
//! `[0, ∞)` and keeps the Gompertz moment series free of `e^{nβ/γ}` overflow.

use crate::error::{domain, Result};
use crate::quadrature::Quadrature;
use statrs::function::gamma::ln_gamma;

/// Beyond this `v` the `e^{-v}` weight is below 1e-34.
const V_MAX: f64 = 80.0;

fn breakpoints(z: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut p = z.min(1.0);
    while p < 1.0 {
        pts.push(p);
        p *= 2.0;
    }
    let mut p = 1.0;
    while p <= V_MAX {
        pts.push(p);
        p *= 2.0;
    }
    pts
}

fn quad() -> Quadrature {
    Quadrature::with_tol(1e-14, 1e-13)
}

/// `e^z W_f(z)`.
pub fn scaled_integro_exponential(f: f64, z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return domain(format!("integro-exponential needs z > 0, got {z}"));
    }
    if f == 0.0 {
        return Ok(1.0 / z);
    }
    let g = |v: f64| (-v - f * (v / z).ln_1p()).exp();
    Ok(quad().integrate_pieces(&g, &breakpoints(z)).value / z)
}

/// `W_f(z) = ∫_1^∞ e^{-zu} u^{-f} du`.
pub fn integro_exponential(f: f64, z: f64) -> Result<f64> {
    if f == 0.0 && z > 0.0 {
        return Ok((-z).exp() / z);
    }
    Ok((-z).exp() * scaled_integro_exponential(f, z)?)
}

/// `e^z W_1^{r-1}(z)`.
pub fn scaled_gen_integro_exponential(r: u32, z: f64) -> Result<f64> {
    if r == 0 {
        return domain("generalised integro-exponential needs r >= 1");
    }
    if !(z > 0.0 && z.is_finite()) {
        return domain(format!("generalised integro-exponential needs z > 0, got {z}"));
    }
    if r == 1 {
        return scaled_integro_exponential(1.0, z);
    }
    let k = (r - 1) as i32;
    let ln_fact = ln_gamma(r as f64);
    let g = |v: f64| {
        let l = (v / z).ln_1p();
        if l <= 0.0 {
            return 0.0;
        }
        (k as f64 * l.ln() - v - ln_fact).exp() / (z + v)
    };
    Ok(quad().integrate_pieces(&g, &breakpoints(z)).value)
}

/// `W_1^{r-1}(z)`; `W_1^0 = W_1`.
pub fn gen_integro_exponential(r: u32, z: f64) -> Result<f64> {
    Ok((-z).exp() * scaled_gen_integro_exponential(r, z)?)
}
