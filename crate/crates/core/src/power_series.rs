//! Zero-truncated power series mixing families.
//!
//! A family is described by its generating function `C(θ) = Σ_{n≥1} a_n θⁿ`.
//! Besides the closed-form presets (geometric, Poisson, binomial, logarithmic)
//! arbitrary sparse polynomials such as `θ + θ²⁰` are supported.
//!
//! Most of the likelihood machinery works with two smooth, strictly positive
//! companions of `C` that stay well conditioned as the argument goes to zero:
//!
//! ```text
//! P(y) = C(y)  / y^c        P(0) = a_c
//! R(y) = C'(y) / y^(c-1)    R(0) = c·a_c
//! ```
//!
//! where `c = min{n : a_n > 0}`. Log-derivatives of `P` and `R` are exposed
//! crate-internally through [`LogDerivs`].

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, GpsError, Result};

/// Distance from a θ-domain endpoint below which evaluation is refused.
pub const ENDPOINT_GUARD: f64 = 1e-12;

/// Tail mass at which series over `N` are truncated.
pub const PMF_TAIL: f64 = 1e-12;

/// Below this argument `P` and its derivatives are summed as a power series.
const SMALL_ARG: f64 = 0.1;

/// Sparse polynomial generating function: `(n, a_n)` pairs, sorted by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePolynomial {
    terms: Vec<(u32, f64)>,
}

impl SparsePolynomial {
    pub fn new(mut terms: Vec<(u32, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(GpsError::InvalidSpec("polynomial family needs at least one term".into()));
        }
        terms.sort_by_key(|&(n, _)| n);
        for w in terms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(GpsError::InvalidSpec(format!("duplicate power {}", w[0].0)));
            }
        }
        for &(n, a) in &terms {
            if n == 0 {
                return Err(GpsError::InvalidSpec("power 0 is excluded (zero-truncated series)".into()));
            }
            if !(a > 0.0 && a.is_finite()) {
                return Err(GpsError::InvalidSpec(format!("coefficient a_{n} = {a} must be positive")));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// Parse `"n1:a1,n2:a2,..."`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (n, a) = part
                .split_once(':')
                .ok_or_else(|| GpsError::InvalidSpec(format!("term '{part}' is not of the form n:a")))?;
            let n: u32 = n
                .trim()
                .parse()
                .map_err(|_| GpsError::InvalidSpec(format!("bad power in '{part}'")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| GpsError::InvalidSpec(format!("bad coefficient in '{part}'")))?;
            terms.push((n, a));
        }
        Self::new(terms)
    }

    fn min_power(&self) -> u32 {
        self.terms[0].0
    }

    /// `Σ a_n (n)_k y^(n-k)` with `(n)_k` the falling factorial.
    fn derivative(&self, y: f64, k: u32) -> f64 {
        self.terms
            .iter()
            .filter(|&&(n, _)| n >= k)
            .map(|&(n, a)| a * falling(n, k) * y.powi((n - k) as i32))
            .sum()
    }

    /// `Σ a_n (n)_k y^(n-shift-k)` for the factored companions `P` (shift = c)
    /// and `R` (shift = c-1, applied to `C'`).
    fn shifted(&self, y: f64, shift: u32, k: u32) -> f64 {
        self.terms
            .iter()
            .map(|&(n, a)| {
                let e = n - shift;
                if e < k {
                    0.0
                } else {
                    a * falling(e, k) * y.powi((e - k) as i32)
                }
            })
            .sum()
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|j| (n - j) as f64).product()
}

/// Value and first two derivatives of a log-transformed function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Zero-truncated power series distribution family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum PowerSeriesFamily {
    /// `C(θ) = θ/(1-θ)`, `0 < θ < 1`.
    Geometric,
    /// `C(θ) = e^θ - 1`, `θ > 0`.
    Poisson,
    /// `C(θ) = (1+θ)^m - 1`, `θ > 0`.
    Binomial { m: u32 },
    /// `C(θ) = -log(1-θ)`, `0 < θ < 1`.
    Logarithmic,
    /// User-supplied sparse polynomial, `θ > 0`.
    Polynomial(SparsePolynomial),
}

impl PowerSeriesFamily {
    pub fn binomial(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(GpsError::InvalidSpec("binomial family needs m >= 1".into()));
        }
        Ok(Self::Binomial { m })
    }

    pub fn polynomial(terms: Vec<(u32, f64)>) -> Result<Self> {
        Ok(Self::Polynomial(SparsePolynomial::new(terms)?))
    }

    /// The degenerate family `C(θ) = θ`, under which the compound law is plain Gompertz.
    pub fn identity() -> Self {
        Self::Polynomial(SparsePolynomial { terms: vec![(1, 1.0)] })
    }

    /// Parse a family spec: `geometric`, `poisson`, `binomial(m)`, `logarithmic`,
    /// `poly(n1:a1,...)` or a bare `n1:a1,...` term list.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "geometric" => return Ok(Self::Geometric),
            "poisson" => return Ok(Self::Poisson),
            "logarithmic" => return Ok(Self::Logarithmic),
            _ => {}
        }
        if let Some(inner) = strip_call(&lower, "binomial") {
            let m: u32 = inner
                .trim()
                .parse()
                .map_err(|_| GpsError::InvalidSpec(format!("bad binomial replica count in '{spec}'")))?;
            return Self::binomial(m);
        }
        if let Some(inner) = strip_call(&lower, "poly").or_else(|| strip_call(&lower, "polynomial")) {
            return Ok(Self::Polynomial(SparsePolynomial::parse(inner)?));
        }
        if s.contains(':') {
            return Ok(Self::Polynomial(SparsePolynomial::parse(s)?));
        }
        Err(GpsError::InvalidSpec(format!("unknown power series family '{spec}'")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Geometric => "geometric",
            Self::Poisson => "poisson",
            Self::Binomial { .. } => "binomial",
            Self::Logarithmic => "logarithmic",
            Self::Polynomial(_) => "polynomial",
        }
    }

    /// Upper end `s` of the open θ-domain `(0, s)`.
    pub fn theta_upper(&self) -> f64 {
        match self {
            Self::Geometric | Self::Logarithmic => 1.0,
            _ => f64::INFINITY,
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta.is_finite() && theta > ENDPOINT_GUARD && theta < self.theta_upper() - ENDPOINT_GUARD
    }

    pub(crate) fn check_theta(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            domain(format!("theta = {theta} outside (0, {}) for {} family", self.theta_upper(), self.name()))
        }
    }

    /// Smallest power with a positive coefficient.
    pub fn min_power(&self) -> u32 {
        match self {
            Self::Polynomial(p) => p.min_power(),
            _ => 1,
        }
    }

    /// Largest power with a positive coefficient, if finite.
    pub fn max_power(&self) -> Option<u32> {
        match self {
            Self::Binomial { m } => Some(*m),
            Self::Polynomial(p) => p.terms.last().map(|&(n, _)| n),
            _ => None,
        }
    }

    /// True when `N` is degenerate and θ is not identifiable (single-term polynomial).
    pub fn is_theta_free(&self) -> bool {
        matches!(self, Self::Polynomial(p) if p.terms.len() == 1)
    }

    /// `ln a_n`, `-inf` when the coefficient vanishes.
    pub fn ln_coefficient(&self, n: u32) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Self::Geometric => 0.0,
            Self::Poisson => -ln_gamma(n as f64 + 1.0),
            Self::Binomial { m } => {
                if n > *m {
                    f64::NEG_INFINITY
                } else {
                    let (m, n) = (*m as f64, n as f64);
                    ln_gamma(m + 1.0) - ln_gamma(n + 1.0) - ln_gamma(m - n + 1.0)
                }
            }
            Self::Logarithmic => -(n as f64).ln(),
            Self::Polynomial(p) => p
                .terms
                .iter()
                .find(|&&(k, _)| k == n)
                .map_or(f64::NEG_INFINITY, |&(_, a)| a.ln()),
        }
    }

    pub fn coefficient(&self, n: u32) -> f64 {
        self.ln_coefficient(n).exp()
    }

    /// `C(θ)` and its first three derivatives.
    pub fn eval_c(&self, theta: f64, order: u8) -> Result<f64> {
        self.check_theta(theta)?;
        if order > 3 {
            return domain(format!("derivative order {order} not in 0..=3"));
        }
        Ok(self.c_raw(theta, order))
    }

    /// Unchecked `C^(k)(y)`; the geometric closed form is valid for every `y < 1`.
    pub(crate) fn c_raw(&self, y: f64, order: u8) -> f64 {
        match self {
            Self::Geometric => {
                let r = 1.0 / (1.0 - y);
                match order {
                    0 => y * r,
                    1 => r * r,
                    2 => 2.0 * r.powi(3),
                    _ => 6.0 * r.powi(4),
                }
            }
            Self::Poisson => match order {
                0 => y.exp_m1(),
                _ => y.exp(),
            },
            Self::Binomial { m } => {
                let mf = *m as f64;
                let l = y.ln_1p();
                match order {
                    0 => (mf * l).exp_m1(),
                    k => {
                        let k = k as u32;
                        if k > *m {
                            0.0
                        } else {
                            falling(*m, k) * ((mf - k as f64) * l).exp()
                        }
                    }
                }
            }
            Self::Logarithmic => {
                let r = 1.0 / (1.0 - y);
                match order {
                    0 => -(-y).ln_1p(),
                    1 => r,
                    2 => r * r,
                    _ => 2.0 * r.powi(3),
                }
            }
            Self::Polynomial(p) => p.derivative(y, order as u32),
        }
    }

    /// Inverse of `C` on the θ-domain.
    pub fn inverse_c(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(GpsError::Range(format!("C^-1 undefined at {y}")));
        }
        let theta = match self {
            Self::Geometric => y / (1.0 + y),
            Self::Poisson => y.ln_1p(),
            Self::Binomial { m } => (y.ln_1p() / *m as f64).exp_m1(),
            Self::Logarithmic => -(-y).exp_m1(),
            Self::Polynomial(p) => {
                let mut hi = 1.0;
                while p.derivative(hi, 0) < y {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(GpsError::Range(format!("C(θ) = {y} unattainable")));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..2000 {
                    let mid = 0.5 * (lo + hi);
                    if p.derivative(mid, 0) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        if theta > 0.0 && theta < self.theta_upper() {
            Ok(theta)
        } else {
            Err(GpsError::Range(format!("C(θ) = {y} unattainable for {} family", self.name())))
        }
    }

    /// `P(N = n) = a_n θⁿ / C(θ)`.
    pub fn pmf(&self, theta: f64, n: u32) -> Result<f64> {
        self.check_theta(theta)?;
        let c = self.min_power();
        if n < c {
            return Ok(0.0);
        }
        let la = self.ln_coefficient(n);
        if la == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok((la + (n - c) as f64 * theta.ln() - self.ln_p(theta).value).exp())
    }

    /// `E(N) = θ C'(θ) / C(θ)`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.mean_raw(theta))
    }

    pub(crate) fn mean_raw(&self, theta: f64) -> f64 {
        self.min_power() as f64 + theta * self.ln_p(theta).d1
    }

    /// Non-negligible pmf weights `(n, P(N=n))`, truncated once the remaining
    /// mass falls below `tail`.
    pub fn pmf_weights(&self, theta: f64, tail: f64) -> Result<Vec<(u32, f64)>> {
        self.check_theta(theta)?;
        let c = self.min_power();
        let ln_theta = theta.ln();
        let ln_p0 = self.ln_p(theta).value;
        let weight = |n: u32| {
            let la = self.ln_coefficient(n);
            if la == f64::NEG_INFINITY {
                0.0
            } else {
                (la + (n - c) as f64 * ln_theta - ln_p0).exp()
            }
        };
        let mut out = Vec::new();
        match self {
            Self::Polynomial(p) => {
                for &(n, _) in &p.terms {
                    out.push((n, weight(n)));
                }
            }
            _ => {
                let last = self.max_power().unwrap_or(u32::MAX);
                let mean = self.mean_raw(theta);
                let mut cum = 0.0;
                let mut comp = 0.0;
                let mut n = c;
                loop {
                    let w = weight(n);
                    out.push((n, w));
                    // Neumaier summation keeps `1 - cum` meaningful near 1e-12.
                    let t = cum + w;
                    if cum.abs() >= w.abs() {
                        comp += (cum - t) + w;
                    } else {
                        comp += (w - t) + cum;
                    }
                    cum = t;
                    if n >= last || 1.0 - (cum + comp) <= tail {
                        break;
                    }
                    if (n as f64) > mean && w < tail * 1e-6 {
                        break;
                    }
                    if n >= 5_000_000 {
                        break;
                    }
                    n += 1;
                }
            }
        }
        Ok(out)
    }

    // ----- smooth companions -------------------------------------------------

    /// `ln P(y)` and derivatives, `P(y) = C(y) / y^c`.
    pub(crate) fn ln_p(&self, y: f64) -> LogDerivs {
        match self {
            Self::Geometric => {
                let r = 1.0 / (1.0 - y);
                LogDerivs { value: -(-y).ln_1p(), d1: r, d2: r * r }
            }
            Self::Polynomial(p) => {
                let c = p.min_power();
                log_derivs(p.shifted(y, c, 0), p.shifted(y, c, 1), p.shifted(y, c, 2))
            }
            _ if y.abs() * self.max_power().unwrap_or(1) as f64 <= SMALL_ARG => self.small_arg_ln_p(y),
            _ => {
                let c0 = self.c_raw(y, 0);
                let r1 = self.c_raw(y, 1) / c0;
                let r2 = self.c_raw(y, 2) / c0;
                LogDerivs {
                    value: c0.ln() - y.ln(),
                    d1: r1 - 1.0 / y,
                    d2: r2 - r1 * r1 + 1.0 / (y * y),
                }
            }
        }
    }

    /// Power-series evaluation of `P, P', P''` for the infinite presets near zero.
    fn small_arg_ln_p(&self, y: f64) -> LogDerivs {
        let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
        let mut k = 0u32;
        loop {
            let a = self.coefficient(k + 1);
            if a == 0.0 {
                break;
            }
            let kf = k as f64;
            let yk = y.powi(k as i32);
            let t0 = a * yk;
            p0 += t0;
            if k >= 1 {
                p1 += a * kf * y.powi(k as i32 - 1);
            }
            if k >= 2 {
                p2 += a * kf * (kf - 1.0) * y.powi(k as i32 - 2);
            }
            if k > 3 && t0.abs() < 1e-18 * p0.abs() {
                break;
            }
            k += 1;
            if k > 400 {
                break;
            }
        }
        log_derivs(p0, p1, p2)
    }

    /// `ln R(y)` and derivatives, `R(y) = C'(y) / y^(c-1)`.
    pub(crate) fn ln_r(&self, y: f64) -> LogDerivs {
        match self {
            Self::Geometric => {
                let r = 1.0 / (1.0 - y);
                LogDerivs { value: -2.0 * (-y).ln_1p(), d1: 2.0 * r, d2: 2.0 * r * r }
            }
            Self::Poisson => LogDerivs { value: y, d1: 1.0, d2: 0.0 },
            Self::Binomial { m } => {
                let mf = *m as f64;
                let r = 1.0 / (1.0 + y);
                LogDerivs { value: mf.ln() + (mf - 1.0) * y.ln_1p(), d1: (mf - 1.0) * r, d2: -(mf - 1.0) * r * r }
            }
            Self::Logarithmic => {
                let r = 1.0 / (1.0 - y);
                LogDerivs { value: -(-y).ln_1p(), d1: r, d2: r * r }
            }
            Self::Polynomial(p) => {
                let c = p.min_power();
                // R(y) = Σ n a_n y^(n-c)
                let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
                for &(n, a) in &p.terms {
                    let e = (n - c) as f64;
                    let na = n as f64 * a;
                    r0 += na * y.powi((n - c) as i32);
                    if n > c {
                        r1 += na * e * y.powi((n - c) as i32 - 1);
                    }
                    if n > c + 1 {
                        r2 += na * e * (e - 1.0) * y.powi((n - c) as i32 - 2);
                    }
                }
                log_derivs(r0, r1, r2)
            }
        }
    }

    /// `A₂(y) = C''(y)/C'(y)`.
    pub(crate) fn a2(&self, y: f64) -> f64 {
        match self {
            Self::Polynomial(p) if p.min_power() > 1 => p.derivative(y, 2) / p.derivative(y, 1),
            _ => self.ln_r(y).d1,
        }
    }

    /// `A₃(y) = C'''(y)/C'(y)`.
    pub(crate) fn a3(&self, y: f64) -> f64 {
        match self {
            Self::Polynomial(p) if p.min_power() > 1 => p.derivative(y, 3) / p.derivative(y, 1),
            _ => {
                let r = self.ln_r(y);
                r.d2 + r.d1 * r.d1
            }
        }
    }

    /// `ln(θ/C(θ))` with its first two derivatives, i.e. `n⁻¹` times the
    /// `n log θ - n log C(θ)` part of the log-likelihood.
    pub(crate) fn ln_theta_over_c(&self, theta: f64) -> LogDerivs {
        let c = self.min_power() as f64;
        let p = self.ln_p(theta);
        if c == 1.0 {
            LogDerivs { value: -p.value, d1: -p.d1, d2: -p.d2 }
        } else {
            LogDerivs {
                value: (1.0 - c) * theta.ln() - p.value,
                d1: (1.0 - c) / theta - p.d1,
                d2: (c - 1.0) / (theta * theta) - p.d2,
            }
        }
    }
}

fn log_derivs(f0: f64, f1: f64, f2: f64) -> LogDerivs {
    let r1 = f1 / f0;
    LogDerivs { value: f0.ln(), d1: r1, d2: f2 / f0 - r1 * r1 }
}

fn strip_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')
}

impl fmt::Display for PowerSeriesFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Binomial { m } => write!(f, "binomial({m})"),
            Self::Polynomial(p) => {
                let parts: Vec<String> = p.terms.iter().map(|(n, a)| format!("{n}:{a}")).collect();
                write!(f, "poly({})", parts.join(","))
            }
            other => f.write_str(other.name()),
        }
    }
}
