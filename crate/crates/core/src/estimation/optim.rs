//! Unconstrained maximisation on the transformed scale.
//!
//! `u = (ln β, ln γ, g(θ))` with `g` a logit on `(0, 1)`, a log on `(0, ∞)`, or
//! `ln θ*` for the extended geometric form. Single-term families keep θ fixed
//! and drop the third coordinate.

use nalgebra::{DMatrix, DVector};

use super::likelihood::derivs;
use super::ModelSpec;
use crate::distribution::GpsParams;
use crate::power_series::PowerSeriesFamily;

pub(crate) const GRAD_TOL: f64 = 1e-8;
pub(crate) const STEP_TOL: f64 = 1e-10;
/// Gradient bound accepted when the line search can no longer make progress.
pub(crate) const STALL_GRAD_TOL: f64 = 1e-6;
const MAX_STEP: f64 = 3.0;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ThetaMap {
    Logit,
    Log,
    /// θ = 1 - e^u
    OneMinusExp,
    Fixed(f64),
}

impl ThetaMap {
    pub fn for_model(model: &ModelSpec) -> Self {
        if model.extended_gg {
            return Self::OneMinusExp;
        }
        if model.fixes_theta() {
            return Self::Fixed(1.0);
        }
        match model.family {
            PowerSeriesFamily::Geometric | PowerSeriesFamily::Logarithmic => Self::Logit,
            _ => Self::Log,
        }
    }

    pub fn theta(&self, u: f64) -> f64 {
        match *self {
            Self::Logit => 1.0 / (1.0 + (-u).exp()),
            Self::Log => u.exp(),
            Self::OneMinusExp => -u.exp_m1(),
            Self::Fixed(t) => t,
        }
    }

    pub fn to_u(&self, theta: f64) -> f64 {
        match *self {
            Self::Logit => (theta / (1.0 - theta)).ln(),
            Self::Log => theta.ln(),
            Self::OneMinusExp => (1.0 - theta).ln(),
            Self::Fixed(_) => 0.0,
        }
    }

    /// `(dθ/du, d²θ/du²)` expressed through θ.
    fn derivs(&self, theta: f64) -> (f64, f64) {
        match *self {
            Self::Logit => {
                let d = theta * (1.0 - theta);
                (d, d * (1.0 - 2.0 * theta))
            }
            Self::Log => (theta, theta),
            Self::OneMinusExp => (-(1.0 - theta), -(1.0 - theta)),
            Self::Fixed(_) => (0.0, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        if matches!(self, Self::Fixed(_)) {
            2
        } else {
            3
        }
    }
}

pub(crate) struct Problem<'a> {
    pub model: &'a ModelSpec,
    pub xs: &'a [f64],
    pub events: Option<&'a [bool]>,
    pub map: ThetaMap,
}

pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(model: &'a ModelSpec, xs: &'a [f64], events: Option<&'a [bool]>) -> Self {
        Self { model, xs, events, map: ThetaMap::for_model(model) }
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn params(&self, u: &[f64]) -> Option<GpsParams> {
        let theta = if self.dim() == 3 { self.map.theta(u[2]) } else { 1.0 };
        self.model.params(u[0].exp(), u[1].exp(), theta).ok()
    }

    pub fn to_u(&self, p: &GpsParams) -> DVector<f64> {
        let mut v = vec![p.beta().ln(), p.gamma().ln()];
        if self.dim() == 3 {
            v.push(self.map.to_u(p.theta()));
        }
        DVector::from_vec(v)
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        match self.params(u) {
            Some(p) => {
                let v = derivs(&p, self.xs, self.events, 0).value;
                if v.is_finite() {
                    v
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => f64::NEG_INFINITY,
        }
    }

    /// Value, gradient and Hessian on the `u` scale:
    /// `H_u = J H_p J + diag(g_p ⊙ map'')`.
    pub fn evaluate(&self, u: &[f64]) -> Option<Evaluation> {
        let p = self.params(u)?;
        let d = derivs(&p, self.xs, self.events, 2);
        if !d.value.is_finite() {
            return None;
        }
        let dim = self.dim();
        let (t1, t2) = self.map.derivs(p.theta());
        let jac = [p.beta(), p.gamma(), t1];
        let second = [p.beta(), p.gamma(), t2];
        let grad = DVector::from_fn(dim, |i, _| d.grad[i] * jac[i]);
        let mut hess = DMatrix::from_fn(dim, dim, |i, j| jac[i] * d.hess[i][j] * jac[j]);
        for i in 0..dim {
            hess[(i, i)] += d.grad[i] * second[i];
        }
        if grad.iter().chain(hess.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        Some(Evaluation { value: d.value, grad, hess })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub u: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub domain_failures: usize,
}

/// Ascent direction `M⁻¹ g` with `M = -H` made positive definite by
/// reflecting and flooring its eigenvalues.
fn ascent_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> DVector<f64> {
    let m = -hess.clone();
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = (lmax * 1e-10).max(1e-300);
    let v = &eig.eigenvectors;
    let coef = v.transpose() * grad;
    let scaled = DVector::from_fn(coef.len(), |i, _| coef[i] / eig.eigenvalues[i].abs().max(floor));
    v * scaled
}

/// Safeguarded Newton ascent; stops early after `max_domain_failures`
/// rejected trial points that left the parameter domain.
pub(crate) fn newton(problem: &Problem, u0: DVector<f64>, max_iter: usize, max_domain_failures: usize) -> NewtonOutcome {
    let mut u = u0;
    let mut domain_failures = 0;
    let mut eval = match problem.evaluate(u.as_slice()) {
        Some(e) => e,
        None => {
            return NewtonOutcome {
                u,
                value: f64::NEG_INFINITY,
                grad_norm: f64::INFINITY,
                iterations: 0,
                converged: false,
                domain_failures: 1,
            }
        }
    };
    let mut iterations = 0;
    loop {
        let grad_norm = eval.grad.amax();
        if grad_norm < GRAD_TOL {
            return NewtonOutcome { u, value: eval.value, grad_norm, iterations, converged: true, domain_failures };
        }
        if iterations >= max_iter || domain_failures >= max_domain_failures {
            return NewtonOutcome { u, value: eval.value, grad_norm, iterations, converged: false, domain_failures };
        }
        iterations += 1;
        let mut dir = ascent_direction(&eval.grad, &eval.hess);
        let big = dir.amax();
        if big > MAX_STEP {
            dir *= MAX_STEP / big;
        }
        let slope = eval.grad.dot(&dir);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &u + &dir * alpha;
            match problem.evaluate(trial.as_slice()) {
                Some(e) if e.value >= eval.value + ARMIJO * alpha * slope => {
                    accepted = Some((trial, e));
                    break;
                }
                Some(_) => {}
                None => domain_failures += 1,
            }
            alpha *= 0.5;
            if (&dir * alpha).amax() < STEP_TOL * 1e-3 {
                break;
            }
        }
        match accepted {
            Some((trial, e)) => {
                let step = (&trial - &u).amax();
                u = trial;
                eval = e;
                if step < STEP_TOL {
                    let grad_norm = eval.grad.amax();
                    let converged = grad_norm < STALL_GRAD_TOL;
                    return NewtonOutcome { u, value: eval.value, grad_norm, iterations, converged, domain_failures };
                }
            }
            None => {
                let converged = grad_norm < STALL_GRAD_TOL;
                return NewtonOutcome { u, value: eval.value, grad_norm, iterations, converged, domain_failures };
            }
        }
    }
}

/// Nelder–Mead minimisation of `f`; returns the best vertex, its value and the
/// number of evaluations.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let mut vals: Vec<f64> = pts.iter().map(|p| clean(f(p))).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = pts[1..].iter().flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
        if spread <= 1e-13 * (1.0 + vals[0].abs()) && size < 1e-9 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |coef: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + coef * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = clean(f(&xr));
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = clean(f(&xe));
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = clean(f(&xc));
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = clean(f(&xc));
                (xc, fc)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    for j in 0..n {
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    }
                    vals[i] = clean(f(&pts[i]));
                }
                evals += n;
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (pts[best].clone(), vals[best], evals)
}

/// Brent's root finder on a sign-changing bracket `[a, b]`.
pub(crate) fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    #[test]
    fn brent_roots() {
        let r = brent(|x: f64| x * x - 2.0, 0.0, 3.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let r = brent(|x: f64| x.cos() - x, 0.0, 1.0, 1e-15, 200).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
        assert!(brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    use super::*;

    #[test]
    fn theta_maps_invert() {
        for (map, th) in [(ThetaMap::Logit, 0.3), (ThetaMap::Log, 4.2), (ThetaMap::OneMinusExp, -12.0)] {
            let u = map.to_u(th);
            assert!((map.theta(u) - th).abs() < 1e-12 * th.abs().max(1.0));
            let h = 1e-6;
            let fd = (map.theta(u + h) - map.theta(u - h)) / (2.0 * h);
            let fd2 = (map.theta(u + h) - 2.0 * map.theta(u) + map.theta(u - h)) / (h * h);
            let (d1, d2) = map.derivs(th);
            assert!((fd - d1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((fd2 - d2).abs() < 1e-3 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v, _) = nelder_mead(f, &[-1.2, 1.0], 0.5, 20_000);
        assert!(v < 1e-12, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn transformed_gradient_matches_differences() {
        let model = ModelSpec::gg();
        let truth = model.params(0.8, 1.3, -5.0).unwrap();
        let xs = truth.sample_seeded(40, 3);
        let prob = Problem::new(&model, &xs, None);
        let u = prob.to_u(&truth);
        let e = prob.evaluate(u.as_slice()).unwrap();
        for i in 0..3 {
            let h = 1e-5;
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (prob.value(up.as_slice()) - prob.value(dn.as_slice())) / (2.0 * h);
            assert!((fd - e.grad[i]).abs() < 1e-5 * (1.0 + fd.abs()));
            let gu = prob.evaluate(up.as_slice()).unwrap().grad;
            let gd = prob.evaluate(dn.as_slice()).unwrap().grad;
            for j in 0..3 {
                let fdh = (gu[j] - gd[j]) / (2.0 * h);
                assert!((fdh - e.hess[(j, i)]).abs() < 1e-4 * (1.0 + fdh.abs()));
            }
        }
    }
}
