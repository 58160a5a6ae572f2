//! EM algorithm with the mixing count `N` as missing data, and Louis'
//! observed-information identity.

use super::direct::{assemble, default_init};
use super::likelihood::{derivs, kernel_gamma_derivs};
use super::optim::{brent, newton, Problem, ThetaMap};
use super::{FitMethod, FitResult, Matrix3, ModelSpec, ObservedSample};
use crate::distribution::GpsParams;
use crate::error::{GpsError, Result};
use crate::power_series::{PowerSeriesFamily, ENDPOINT_GUARD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Successive-difference threshold reported as the coarse stopping point.
    pub coarse_tol: f64,
    /// Successive-difference threshold for convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// After the coarse stop, finish with Newton steps on the observed-data
    /// likelihood instead of further EM sweeps.
    pub newton_polish: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { coarse_tol: 1e-4, tol: 1e-8, max_iter: 5000, newton_polish: true }
    }
}

const GAMMA_FLOOR: f64 = 1e-10;
/// EM sweeps spent on each default start before committing to one.
const SCREEN_SWEEPS: usize = 30;

/// `(e^{γx}-1-γx)/γ²`, the second-order remainder of `k`.
fn remainder(gamma: f64, x: f64, k0: f64) -> f64 {
    let gx = gamma * x;
    if gx.abs() < 0.5 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for j in 2..40 {
            term *= gx / (j + 1) as f64;
            sum += term;
        }
        sum
    } else {
        (k0 - x) / gamma
    }
}

/// Root in γ of `1/γ + x̄ - Σzᵢxᵢe^{γxᵢ} / Σzᵢ(e^{γxᵢ}-1)`, the profile score
/// of the complete-data log-likelihood after substituting `β = nγ/Σzᵢ(e^{γxᵢ}-1)`.
///
/// Falls back to `GAMMA_FLOOR` when the profile is decreasing all the way to 0.
pub(crate) fn profile_gamma(xs: &[f64], z: Option<&[f64]>, start: f64) -> f64 {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let h = |gamma: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            let w = z.map_or(1.0, |z| z[i]);
            let k0 = kernel_gamma_derivs(gamma, x)[0];
            num += w * (remainder(gamma, x, k0) - x * k0);
            den += w * k0;
        }
        num / den + xbar
    };
    let mut lo = start.max(GAMMA_FLOOR);
    let mut hi = lo;
    if h(lo) > 0.0 {
        for _ in 0..200 {
            hi *= 2.0;
            if h(hi) <= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        loop {
            lo /= 2.0;
            if lo < GAMMA_FLOOR {
                return GAMMA_FLOOR;
            }
            if h(lo) > 0.0 {
                break;
            }
            hi = lo;
        }
    }
    brent(|lg: f64| h(lg.exp()), lo.ln(), hi.ln(), 1e-14, 200).map_or(lo, f64::exp)
}

/// θ solving `E(N; θ) = z̄`.
fn solve_theta(family: &PowerSeriesFamily, zbar: f64, current: f64) -> f64 {
    let c = family.min_power() as f64;
    let floor = 10.0 * ENDPOINT_GUARD;
    if zbar - c <= 1e-14 * c {
        return floor;
    }
    if matches!(family, PowerSeriesFamily::Geometric) {
        return (1.0 - 1.0 / zbar).clamp(floor, 1.0 - floor);
    }
    if let Some(top) = family.max_power() {
        if zbar >= top as f64 {
            return current;
        }
    }
    let map = if family.theta_upper().is_finite() { ThetaMap::Logit } else { ThetaMap::Log };
    let g = |u: f64| family.mean_raw(map.theta(u)) - zbar;
    let mut lo = map.to_u(current);
    let mut hi = lo;
    if g(lo) < 0.0 {
        while g(hi) < 0.0 {
            hi += 1.0;
            if hi > 700.0 {
                return current;
            }
        }
    } else {
        while g(lo) > 0.0 {
            lo -= 1.0;
            if map.theta(lo) < floor {
                return floor;
            }
        }
    }
    let u = brent(g, lo, hi, 1e-14, 200).unwrap_or(lo);
    map.theta(u).clamp(floor, family.theta_upper() - floor)
}

/// EM for complete data. The M-step maximises the expected complete-data
/// log-likelihood jointly in `(β, γ)` through its profile in γ, and in θ by
/// matching `E(N)` to the mean of the imputed counts. Sweeps run until
/// successive estimates differ by less than `coarse_tol`; the fit is then
/// refined to `tol` (see [`EmOptions::newton_polish`]).
pub fn em_fit(
    model: &ModelSpec,
    data: &ObservedSample,
    init: Option<&GpsParams>,
    opts: &EmOptions,
) -> Result<FitResult> {
    if model.extended_gg {
        return Err(GpsError::InvalidSpec(
            "EM needs a genuine power-series law for N; fit the extended geometric model directly".into(),
        ));
    }
    let xs = data.values();
    let fam = model.family.clone();
    let mut z = vec![0.0; xs.len()];
    let mut p = match init {
        Some(p) if model.matches(p) => p.clone(),
        Some(_) => return Err(GpsError::InvalidSpec("initial parameters belong to a different model".into())),
        None => {
            // a short burst from every start, keep the most likely
            let mut best: Option<(f64, GpsParams)> = None;
            for mut q in default_init(model, xs) {
                for _ in 0..SCREEN_SWEEPS {
                    q = sweep(model, &fam, xs, &q, &mut z)?.0;
                }
                let v = derivs(&q, xs, None, 0).value;
                if v.is_finite() && best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, q));
                }
            }
            best.ok_or_else(|| GpsError::Numerical("likelihood could not be evaluated at any start".into()))?.1
        }
    };
    let mut trace = vec![derivs(&p, xs, None, 0).value];
    let mut coarse = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (next, diff) = sweep(model, &fam, xs, &p, &mut z)?;
        p = next;
        trace.push(derivs(&p, xs, None, 0).value);
        if coarse.is_none() && diff < opts.coarse_tol {
            coarse = Some(iterations);
            if opts.newton_polish {
                let problem = Problem::new(model, xs, None);
                let out = newton(&problem, problem.to_u(&p), 500, 5);
                let last = *trace.last().unwrap();
                if let (true, Some(q)) = (out.converged && out.value >= last, problem.params(out.u.as_slice())) {
                    p = q;
                    trace.push(out.value);
                    iterations += out.iterations;
                    converged = true;
                    break;
                }
            }
        }
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    let info = louis_information(&p, data);
    let mut fit = assemble(model, p, xs, None, info, FitMethod::Em, iterations, converged);
    fit.diagnostics.coarse_stop_iteration = coarse;
    fit.trace = trace;
    Ok(fit)
}

/// One E-step and M-step; returns the update and the largest absolute
/// parameter change.
fn sweep(
    model: &ModelSpec,
    fam: &PowerSeriesFamily,
    xs: &[f64],
    p: &GpsParams,
    z: &mut [f64],
) -> Result<(GpsParams, f64)> {
    let n = xs.len() as f64;
    let (b, g, th) = (p.beta(), p.gamma(), p.theta());
    for (zi, &x) in z.iter_mut().zip(xs) {
        let y = th * (-b * kernel_gamma_derivs(g, x)[0]).exp();
        *zi = 1.0 + y * fam.a2(y);
    }
    let g_new = profile_gamma(xs, Some(z), g);
    let s: f64 = xs.iter().zip(z.iter()).map(|(&x, &w)| w * kernel_gamma_derivs(g_new, x)[0]).sum();
    let b_new = n / s;
    let th_new = if model.fixes_theta() { th } else { solve_theta(fam, z.iter().sum::<f64>() / n, th) };
    let diff = (b_new - b).abs().max((g_new - g).abs()).max((th_new - th).abs());
    Ok((model.params(b_new, g_new, th_new)?, diff))
}

/// `(I_c, I_m)`: conditional expectation of the complete-data information and
/// conditional variance of the complete-data score, both given `x`.
pub fn louis_parts(params: &GpsParams, data: &ObservedSample) -> (Matrix3, Matrix3) {
    let (b, g, th) = (params.beta(), params.gamma(), params.theta());
    let fam = params.family();
    let xs = data.values();
    let n = xs.len() as f64;
    let mut ic = [[0.0; 3]; 3];
    let mut im = [[0.0; 3]; 3];
    let mut sum_ez_minus_1 = 0.0;
    for &x in xs {
        let [k0, k1, k2] = kernel_gamma_derivs(g, x);
        let y = th * (-b * k0).exp();
        let a2 = fam.a2(y);
        let a3 = fam.a3(y);
        let ez = 1.0 + y * a2;
        let var = y * a2 + y * y * (a3 - a2 * a2);
        sum_ez_minus_1 += y * a2;
        // -(1/γ²)(e^{γx}-1) + (1/γ) x e^{γx} = k'
        ic[0][1] += ez * k1;
        // (2β/γ³)(e^{γx}-1) - (2β/γ²) x e^{γx} + (β/γ) x² e^{γx} = β k''
        ic[1][1] += ez * b * k2;
        // score coefficients of Z: (-k, -βk', 1/θ)
        let coef = [-k0, -b * k1, 1.0 / th];
        for r in 0..3 {
            for c in r..3 {
                im[r][c] += var * coef[r] * coef[c];
            }
        }
    }
    ic[0][0] = n / (b * b);
    // Σ E(Z)/θ² + nC''/C - n(C'/C)²
    ic[2][2] = sum_ez_minus_1 / (th * th) - n * fam.ln_theta_over_c(th).d2;
    ic[1][0] = ic[0][1];
    for r in 0..3 {
        for c in 0..r {
            im[r][c] = im[c][r];
        }
    }
    (ic, im)
}

/// Observed information `I_c - I_m`.
pub fn louis_information(params: &GpsParams, data: &ObservedSample) -> Matrix3 {
    let (ic, im) = louis_parts(params, data);
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = ic[r][c] - im[r][c];
        }
    }
    out
}
