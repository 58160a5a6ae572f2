//! Log-likelihood, score and observed information.
//!
//! Per observation, with `s = ln t(x)` and `y = θ e^s`,
//!
//! ```text
//! ln f = ln β + γx + s + (c-1)s + ln R(y) - ln P(θ)
//! ln S = c s + ln P(y) - ln P(θ)
//! ```
//!
//! Derivatives in `(β, γ, θ)` follow by the chain rule through `s`, whose
//! derivatives are `∂s/∂β = s/β`, `∂s/∂γ = d`, `∂²s/∂β∂γ = d/β`, `∂²s/∂γ² = q`.

use super::{CensoredSample, LifetimeData, Matrix3, ObservedSample};
use crate::distribution::{GpsParams, SMALL_GAMMA};

/// Switch to the power series for `(e^{γx}-1)/γ` and its γ-derivatives below this `γx`.
const SERIES_GX: f64 = 0.5;

/// `k = (e^{γx}-1)/γ` with `∂k/∂γ` and `∂²k/∂γ²`.
pub(crate) fn kernel_gamma_derivs(gamma: f64, x: f64) -> [f64; 3] {
    let gx = gamma * x;
    if gx.abs() < SERIES_GX || gamma < SMALL_GAMMA {
        // k^{(m)} = Σ_{j≥m} j!/(j-m)! γ^{j-m} x^{j+1}/(j+1)!
        let (mut k0, mut k1, mut k2) = (0.0, 0.0, 0.0);
        let mut f = x;
        let mut gp = [1.0, 1.0, 1.0];
        for j in 0..48u32 {
            if j > 0 {
                f *= x / (j + 1) as f64;
            }
            let jf = j as f64;
            k0 += f * gp[0];
            gp[0] *= gamma;
            if j >= 1 {
                k1 += jf * f * gp[1];
                gp[1] *= gamma;
            }
            if j >= 2 {
                k2 += jf * (jf - 1.0) * f * gp[2];
                gp[2] *= gamma;
            }
        }
        return [k0, k1, k2];
    }
    let e = gx.exp();
    let em1 = gx.exp_m1();
    let g2 = gamma * gamma;
    [em1 / gamma, x * e / gamma - em1 / g2, x * x * e / gamma - 2.0 * x * e / g2 + 2.0 * em1 / (g2 * gamma)]
}

/// Log-likelihood with gradient and Hessian in `(β, γ, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Derivs {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: Matrix3,
}

/// Assembles value, score and Hessian from the density and survival kernels.
/// `events = None` means every observation is a failure.
pub(crate) fn derivs(params: &GpsParams, xs: &[f64], events: Option<&[bool]>, order: u8) -> Derivs {
    let fam = params.family();
    let (b, g, th) = (params.beta(), params.gamma(), params.theta());
    let c = fam.min_power() as f64;
    let p0 = fam.ln_p(th);
    let ln_b = b.ln();
    let mut value = 0.0;
    let mut gr = [0.0; 3];
    let mut h = [[0.0; 3]; 3];
    for (i, &x) in xs.iter().enumerate() {
        let event = events.is_none_or(|e| e[i]);
        let [k0, k1, k2] = kernel_gamma_derivs(g, x);
        let s = -b * k0;
        let t = s.exp();
        let y = th * t;
        let (ks, kss, kt, kst, ktt);
        if event {
            let r = fam.ln_r(y);
            value += ln_b + g * x + s + (c - 1.0) * s + r.value - p0.value;
            ks = c + y * r.d1;
            kss = y * r.d1 + y * y * r.d2;
            kt = t * r.d1;
            kst = t * (r.d1 + y * r.d2);
            ktt = t * t * r.d2;
        } else {
            let p = fam.ln_p(y);
            value += c * s + p.value - p0.value;
            ks = c + y * p.d1;
            kss = y * p.d1 + y * y * p.d2;
            kt = t * p.d1;
            kst = t * (p.d1 + y * p.d2);
            ktt = t * t * p.d2;
        }
        if order == 0 {
            continue;
        }
        let delta = if event { 1.0 } else { 0.0 };
        let (sb, sg) = (-k0, -b * k1);
        gr[0] += delta / b + ks * sb;
        gr[1] += delta * x + ks * sg;
        gr[2] += kt - p0.d1;
        if order < 2 {
            continue;
        }
        let (sbg, sgg) = (-k1, -b * k2);
        h[0][0] += -delta / (b * b) + kss * sb * sb;
        h[0][1] += kss * sb * sg + ks * sbg;
        h[1][1] += kss * sg * sg + ks * sgg;
        h[0][2] += kst * sb;
        h[1][2] += kst * sg;
        h[2][2] += ktt - p0.d2;
    }
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];
    Derivs { value, grad: gr, hess: h }
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// `l(Θ) = Σ ln f(xᵢ)`; `-∞` if it cannot be evaluated.
pub fn log_likelihood(params: &GpsParams, data: &ObservedSample) -> f64 {
    finite_or_neg_inf(derivs(params, data.values(), None, 0).value)
}

/// `Σ δᵢ ln f(xᵢ) + (1-δᵢ) ln S(xᵢ)`.
pub fn censored_log_likelihood(params: &GpsParams, data: &CensoredSample) -> f64 {
    finite_or_neg_inf(derivs(params, data.values(), LifetimeData::events(data), 0).value)
}

/// Score of the censored log-likelihood.
pub fn censored_score(params: &GpsParams, data: &CensoredSample) -> [f64; 3] {
    derivs(params, data.values(), LifetimeData::events(data), 1).grad
}

/// Negative Hessian of the censored log-likelihood.
pub fn censored_information(params: &GpsParams, data: &CensoredSample) -> Matrix3 {
    negate(derivs(params, data.values(), LifetimeData::events(data), 2).hess)
}

pub(crate) fn negate(m: Matrix3) -> Matrix3 {
    let mut out = m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    out
}

/// Per-observation quantities shared by the score and the information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreWorkspace {
    /// `tᵢ = exp(-(β/γ)(e^{γxᵢ}-1))`
    pub t: Vec<f64>,
    /// `ln tᵢ`
    pub log_t: Vec<f64>,
    /// `dᵢ = ∂ ln tᵢ / ∂γ`
    pub d: Vec<f64>,
    /// `bᵢ = tᵢ dᵢ`
    pub b: Vec<f64>,
    /// `qᵢ = ∂dᵢ/∂γ`
    pub q: Vec<f64>,
    /// `C''(θtᵢ)/C'(θtᵢ)`
    pub a2: Vec<f64>,
    /// `C'''(θtᵢ)/C'(θtᵢ)`
    pub a3: Vec<f64>,
}

impl ScoreWorkspace {
    pub fn new(params: &GpsParams, xs: &[f64]) -> Self {
        let (b, g, th) = (params.beta(), params.gamma(), params.theta());
        let fam = params.family();
        let n = xs.len();
        let mut ws = Self {
            t: Vec::with_capacity(n),
            log_t: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            a2: Vec::with_capacity(n),
            a3: Vec::with_capacity(n),
        };
        for &x in xs {
            let [k0, k1, k2] = kernel_gamma_derivs(g, x);
            let s = -b * k0;
            let t = s.exp();
            let d = -b * k1;
            ws.t.push(t);
            ws.log_t.push(s);
            ws.d.push(d);
            ws.b.push(t * d);
            ws.q.push(-b * k2);
            ws.a2.push(fam.a2(th * t));
            ws.a3.push(fam.a3(th * t));
        }
        ws
    }
}

/// Score `(∂l/∂β, ∂l/∂γ, ∂l/∂θ)` for complete data.
pub fn score(params: &GpsParams, data: &ObservedSample) -> [f64; 3] {
    let xs = data.values();
    let ws = ScoreWorkspace::new(params, xs);
    let n = xs.len() as f64;
    let (b, th) = (params.beta(), params.theta());
    let xbar_n: f64 = xs.iter().sum();
    let tc = params.family().ln_theta_over_c(th);
    let mut sb = 0.0;
    let mut sb_a = 0.0;
    let mut sg = 0.0;
    let mut sg_a = 0.0;
    let mut st = 0.0;
    for i in 0..xs.len() {
        sb += ws.log_t[i];
        sb_a += ws.t[i] * ws.log_t[i] * ws.a2[i];
        sg += ws.d[i];
        sg_a += ws.b[i] * ws.a2[i];
        st += ws.t[i] * ws.a2[i];
    }
    [n / b + sb / b + th / b * sb_a, xbar_n + sg + th * sg_a, n * tc.d1 + st]
}

/// Observed information `-∂²l/∂Θ∂Θᵀ` for complete data from the explicit
/// second derivatives in `A₂ = C''/C'` and `A₃ = C'''/C'`.
pub fn observed_information(params: &GpsParams, data: &ObservedSample) -> Matrix3 {
    explicit_information(params, data.values())
}

pub(crate) fn explicit_information(params: &GpsParams, xs: &[f64]) -> Matrix3 {
    let ws = ScoreWorkspace::new(params, xs);
    let n = xs.len() as f64;
    let (b, th) = (params.beta(), params.theta());
    let tc = params.family().ln_theta_over_c(th);
    let mut h = [[0.0; 3]; 3];
    for i in 0..xs.len() {
        let (t, lt, d, bi, q) = (ws.t[i], ws.log_t[i], ws.d[i], ws.b[i], ws.q[i]);
        let (a2, a3) = (ws.a2[i], ws.a3[i]);
        let a32 = a3 - a2 * a2;
        h[0][0] += th / (b * b) * t * lt * lt * a2 + th * th / (b * b) * t * t * lt * lt * a32;
        h[0][1] += d / b + th / b * bi * lt * a2 + th / b * bi * a2 + th * th / b * bi * t * lt * a32;
        h[0][2] += t * lt * a2 / b + th / b * t * t * lt * a32;
        h[1][1] += q + th * (bi * d + t * q) * a2 + th * th * bi * bi * a32;
        h[1][2] += bi * a2 + th * t * bi * a32;
        h[2][2] += t * t * a32;
    }
    h[0][0] -= n / (b * b);
    // -n/θ² - nC''/C + n(C'/C)² = n (ln θ/C)''
    h[2][2] += n * tc.d2;
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];
    negate(h)
}
