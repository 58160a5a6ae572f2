//! The Gompertz power-series (GPS) lifetime distribution.
//!
//! With Gompertz tail `t(x) = exp(-(β/γ)(e^{γx} - 1))` and mixing family `C`,
//!
//! ```text
//! S(x) = C(θ t(x)) / C(θ)
//! f(x) = θ β e^{γx} t(x) C'(θ t(x)) / C(θ)
//! ```
//!
//! `X` is the minimum of `N` i.i.d. Gompertz(β, γ) lifetimes with `N` drawn
//! from the zero-truncated power series law. Internally everything is carried
//! in log space through `s = ln t(x)` and the smooth companions `P`, `R` of
//! [`PowerSeriesFamily`].

mod entropy;
mod moments;
mod order_stats;

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, GpsError, Result};
use crate::power_series::PowerSeriesFamily;
use crate::quadrature::Quadrature;

pub use entropy::entropy_a_term;
pub use moments::{mean_small_beta_approx, SeriesValue};

/// Below this shape the `(e^{γx}-1)/γ` kernel switches to its second-order series.
pub const SMALL_GAMMA: f64 = 1e-8;

/// Probability mass left beyond the upper integration limit.
pub const UPPER_TAIL: f64 = 1e-12;

/// `(e^{γx} - 1)/γ`, continuous as γ → 0⁺.
pub(crate) fn gompertz_kernel(gamma: f64, x: f64) -> f64 {
    if gamma < SMALL_GAMMA {
        x + 0.5 * gamma * x * x
    } else {
        (gamma * x).exp_m1() / gamma
    }
}

/// Base Gompertz law `G(β, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    pub beta: f64,
    pub gamma: f64,
}

impl GompertzParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("Gompertz parameters must be positive, got β={beta}, γ={gamma}"));
        }
        Ok(Self { beta, gamma })
    }

    /// `ln(1 - G(x)) = -(β/γ)(e^{γx} - 1)`.
    pub fn ln_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.beta * gompertz_kernel(self.gamma, x)
    }

    /// `1 - G(x)`.
    pub fn tail(&self, x: f64) -> f64 {
        self.ln_tail(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -self.ln_tail(x).exp_m1()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (self.beta.ln() + self.gamma * x + self.ln_tail(x)).exp()
    }

    /// Inverse of `ln t(x)`: the `x` with `ln(1 - G(x)) = s`, `s ≤ 0`.
    pub(crate) fn x_from_ln_tail(&self, s: f64) -> f64 {
        let y = -s / self.beta;
        if self.gamma < SMALL_GAMMA {
            y - 0.5 * self.gamma * y * y
        } else {
            (self.gamma * y).ln_1p() / self.gamma
        }
    }
}

/// Return `1 - G(x)` for the Gompertz law.
pub fn gompertz_tail(p: &GompertzParams, x: f64) -> f64 {
    p.tail(x)
}

/// Parameters of `GPS(β, γ, θ)` bound to a mixing family.
///
/// With `extended_gg` the family is geometric and θ may be any value below 1
/// (`θ* = 1 - θ > 0`); the geometric closed forms remain valid there even
/// though `N` is no longer a random variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsParams {
    beta: f64,
    gamma: f64,
    theta: f64,
    family: PowerSeriesFamily,
    extended_gg: bool,
}

impl GpsParams {
    pub fn new(beta: f64, gamma: f64, theta: f64, family: PowerSeriesFamily) -> Result<Self> {
        GompertzParams::new(beta, gamma)?;
        family.check_theta(theta)?;
        Ok(Self { beta, gamma, theta, family, extended_gg: false })
    }

    /// Gompertz–geometric in the `θ* = 1 - θ > 0` parametrization.
    pub fn extended_gg(beta: f64, gamma: f64, theta_star: f64) -> Result<Self> {
        GompertzParams::new(beta, gamma)?;
        if !(theta_star > 0.0 && theta_star.is_finite()) {
            return domain(format!("θ* must be positive, got {theta_star}"));
        }
        Ok(Self { beta, gamma, theta: 1.0 - theta_star, family: PowerSeriesFamily::Geometric, extended_gg: true })
    }

    /// Plain Gompertz as the member with `C(θ) = θ`.
    pub fn gompertz(beta: f64, gamma: f64) -> Result<Self> {
        Self::new(beta, gamma, 1.0, PowerSeriesFamily::identity())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn theta_star(&self) -> f64 {
        1.0 - self.theta
    }
    pub fn family(&self) -> &PowerSeriesFamily {
        &self.family
    }
    pub fn is_extended_gg(&self) -> bool {
        self.extended_gg
    }
    pub fn base(&self) -> GompertzParams {
        GompertzParams { beta: self.beta, gamma: self.gamma }
    }

    /// Same family and flag with new `(β, γ, θ)`, validated.
    pub fn with_values(&self, beta: f64, gamma: f64, theta: f64) -> Result<Self> {
        if self.extended_gg {
            Self::extended_gg(beta, gamma, 1.0 - theta)
        } else {
            Self::new(beta, gamma, theta, self.family.clone())
        }
    }

    /// True when the power-series mixture representation holds (θ inside the
    /// family domain, or the Gompertz point θ* = 1 of the extended form).
    pub(crate) fn mixture_weights(&self) -> Option<Vec<(u32, f64)>> {
        if self.extended_gg && self.theta == 0.0 {
            return Some(vec![(1, 1.0)]);
        }
        if !self.family.contains(self.theta) {
            return None;
        }
        self.family.pmf_weights(self.theta, crate::power_series::PMF_TAIL).ok()
    }

    /// `s = ln t(x)`.
    pub(crate) fn ln_tail(&self, x: f64) -> f64 {
        self.base().ln_tail(x)
    }

    /// `ln S` expressed through `s = ln t`.
    pub(crate) fn ln_survival_at(&self, s: f64) -> f64 {
        let c = self.family.min_power() as f64;
        let y = self.theta * s.exp();
        c * s + self.family.ln_p(y).value - self.family.ln_p(self.theta).value
    }

    /// `ln f(x)`; `-inf` for negative `x`.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = self.ln_tail(x);
        let c = self.family.min_power() as f64;
        let y = self.theta * s.exp();
        self.beta.ln() + self.gamma * x + c * s + self.family.ln_r(y).value - self.family.ln_p(self.theta).value
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }

    /// `ln S(x)`.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.ln_survival_at(self.ln_tail(x))
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.ln_survival(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.ln_survival(x).exp_m1()
    }

    /// `h(x) = f(x)/S(x)`.
    pub fn hazard(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (self.ln_pdf(x) - self.ln_survival(x)).exp()
    }

    /// `x_q = G⁻¹(1 - C⁻¹((1-q) C(θ))/θ)`; `q = 1` maps to `+∞`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) || q.is_nan() {
            return domain(format!("quantile level {q} outside [0, 1)"));
        }
        if q == 0.0 {
            return Ok(0.0);
        }
        if q == 1.0 {
            return Ok(f64::INFINITY);
        }
        let s = match &self.family {
            PowerSeriesFamily::Geometric => {
                // S = θ* t / (1 - (1-θ*) t)  ⇒  t = (1-q) / (θ* + (1-q)(1-θ*))
                let ts = 1.0 - self.theta;
                let surv = 1.0 - q;
                surv.ln() - (ts + surv * self.theta).ln()
            }
            fam if fam.is_theta_free() => {
                let c = fam.min_power() as f64;
                (-q).ln_1p() / c
            }
            fam => {
                let target = (1.0 - q) * fam.c_raw(self.theta, 0);
                (fam.inverse_c(target)? / self.theta).ln()
            }
        };
        Ok(self.base().x_from_ln_tail(s.min(0.0)))
    }

    /// `x` with `ln S(x) = target` (`target ≤ 0`), by bracketed bisection.
    pub(crate) fn x_at_ln_survival(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0 / (self.beta + self.gamma);
        while self.ln_survival(hi) > target {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.ln_survival(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// Upper integration limit `quantile(1 - 1e-12)`.
    pub fn upper_limit(&self) -> f64 {
        self.x_at_ln_survival(UPPER_TAIL.ln())
    }

    /// Breakpoints on `[0, upper_limit]` at a few quantiles, which keeps
    /// adaptive quadrature honest on sharply peaked densities.
    pub(crate) fn quad_points(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for q in [0.1f64, 0.5, 0.9, 0.999] {
            let x = self.x_at_ln_survival((1.0 - q).ln());
            if x > *pts.last().unwrap() {
                pts.push(x);
            }
        }
        let u = self.upper_limit();
        if u > *pts.last().unwrap() {
            pts.push(u);
        }
        pts
    }

    pub(crate) fn integrate<F: Fn(f64) -> f64>(&self, f: F, quad: &Quadrature) -> f64 {
        quad.integrate_pieces(&f, &self.quad_points()).value
    }

    /// Inverse-transform draws `quantile(U)`, `U ~ Uniform(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(u).expect("u in (0,1)")
            })
            .collect()
    }

    /// Deterministic sample from a ChaCha8 generator seeded with `seed`.
    pub fn sample_seeded(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(count, &mut rng)
    }

    /// Rows `(x, pdf, cdf, survival, hazard)` over a grid.
    pub fn curve(&self, grid: &[f64]) -> Vec<[f64; 5]> {
        grid.iter()
            .map(|&x| [x, self.pdf(x), self.cdf(x), self.survival(x), self.hazard(x)])
            .collect()
    }
}

/// Tab-separated curve table with a header line.
pub fn write_curve_tsv<W: Write>(params: &GpsParams, grid: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "x\tpdf\tcdf\tsurvival\thazard")?;
    for row in params.curve(grid) {
        writeln!(out, "{}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}", row[0], row[1], row[2], row[3], row[4])?;
    }
    Ok(())
}

/// Evenly spaced grid `from..=to` with `points` nodes.
pub fn linear_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(to > from) || !from.is_finite() || !to.is_finite() || from < 0.0 {
        return Err(GpsError::InvalidSpec(format!("invalid grid {from}..{to} with {points} points")));
    }
    let h = (to - from) / (points - 1) as f64;
    Ok((0..points).map(|i| from + h * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gg(b: f64, g: f64, t: f64) -> GpsParams {
        GpsParams::new(b, g, t, PowerSeriesFamily::Geometric).unwrap()
    }

    #[test]
    fn gompertz_tail_examples() {
        let p = GompertzParams::new(1.0, 1.0).unwrap();
        assert!((gompertz_tail(&p, 2f64.ln()) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(gompertz_tail(&p, 0.0), 1.0);
        let p = GompertzParams::new(2.0, 1e-12).unwrap();
        assert!((gompertz_tail(&p, 1.0) - (-2f64).exp()).abs() < 1e-10);
        assert!(GompertzParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn small_gamma_kernel_is_continuous() {
        let a = gompertz_kernel(SMALL_GAMMA * 0.999_999, 3.0);
        let b = gompertz_kernel(SMALL_GAMMA * 1.000_001, 3.0);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn identity_family_is_gompertz() {
        let p = GpsParams::gompertz(1.0, 1.0).unwrap();
        let x = 2f64.ln();
        assert!((p.cdf(x) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((p.hazard(0.7) - 0.7f64.exp()).abs() < 1e-13);
        assert!((p.quantile(1.0 - (-1f64).exp()).unwrap() - x).abs() < 1e-14);
    }

    #[test]
    fn endpoint_values() {
        let p = gg(1.0, 1.0, 0.5);
        assert_eq!(p.cdf(0.0), 0.0);
        assert_eq!(p.cdf(-1.0), 0.0);
        assert_eq!(p.pdf(-0.1), 0.0);
        assert_eq!(p.survival(0.0), 1.0);
        assert!((p.pdf(0.0) - 2.0).abs() < 1e-14);
        assert!((p.hazard(0.0) - 2.0).abs() < 1e-14);
        assert_eq!(p.quantile(0.0).unwrap(), 0.0);
        assert_eq!(p.quantile(1.0).unwrap(), f64::INFINITY);
        assert!(p.quantile(1.5).is_err());
        assert!(p.quantile(-0.1).is_err());
    }

    #[test]
    fn geometric_hazard_closed_form() {
        let p = gg(1.0, 1.0, 0.5);
        let e = std::f64::consts::E;
        let want = e / (1.0 - 0.5 * (1.0 - e).exp());
        assert!((p.hazard(1.0) - want).abs() < 1e-12 * want);
        // -d/dx log S by central differences
        let h = 1e-5;
        let fd = -(p.ln_survival(1.0 + h) - p.ln_survival(1.0 - h)) / (2.0 * h);
        assert!((fd - want).abs() < 1e-6 * want);
    }

    #[test]
    fn extended_gg_at_unit_theta_star_is_gompertz() {
        let ext = GpsParams::extended_gg(0.7, 1.3, 1.0).unwrap();
        let gz = GompertzParams::new(0.7, 1.3).unwrap();
        for x in [0.0, 0.1, 0.5, 1.0, 2.0] {
            assert!((ext.cdf(x) - gz.cdf(x)).abs() < 1e-15);
            assert!((ext.pdf(x) - gz.pdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn extended_gg_matches_closed_form_density() {
        let ts = 59.89;
        let p = GpsParams::extended_gg(0.8, 1.3, ts).unwrap();
        for x in [0.2, 1.0, 1.7] {
            let t = (-(0.8 / 1.3) * ((1.3f64 * x).exp() - 1.0)).exp();
            let want = ts * 0.8 * (1.3f64 * x).exp() * t / (1.0 - (1.0 - ts) * t).powi(2);
            assert!((p.pdf(x) - want).abs() < 1e-12 * want);
        }
        assert!(GpsParams::extended_gg(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_nonnegative() {
        let p = gg(0.5, 2.0, 0.9);
        let a = p.sample_seeded(5, 42);
        assert_eq!(a, p.sample_seeded(5, 42));
        assert_ne!(a, p.sample_seeded(5, 43));
        assert!(p.sample_seeded(1000, 7).iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(linear_grid(0.0, 1.0, 1).is_err());
        assert!(linear_grid(1.0, 0.5, 10).is_err());
        assert_eq!(linear_grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
