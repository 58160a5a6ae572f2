//! Shannon entropy and mean residual life.

use super::GpsParams;
use crate::error::{domain, Result};
use crate::power_series::PowerSeriesFamily;
use crate::quadrature::Quadrature;

/// Offset below γ at which the closed-form entropy reads the MGF.
pub const ENTROPY_MGF_EPS: f64 = 1e-6;

fn quad() -> Quadrature {
    Quadrature::with_tol(1e-13, 1e-11)
}

fn ln_c_prime(family: &PowerSeriesFamily, y: f64) -> f64 {
    let c = family.min_power();
    let base = family.ln_r(y).value;
    if c == 1 {
        base
    } else {
        (c - 1) as f64 * y.ln() + base
    }
}

/// `A(n, θ) = ∫₀¹ n u^{n-1} ln C'(θu) du`.
pub fn entropy_a_term(family: &PowerSeriesFamily, n: u32, theta: f64) -> Result<f64> {
    if n == 0 {
        return domain("A(n, θ) needs n ≥ 1");
    }
    family.check_theta(theta)?;
    let nf = n as f64;
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let w = nf * (u.ln() * (nf - 1.0)).exp();
        if w == 0.0 {
            0.0
        } else {
            w * ln_c_prime(family, theta * u)
        }
    };
    let pts: Vec<f64> = [0.0, 0.5, 0.9, 0.99, 1.0].into_iter().collect();
    Ok(quad().integrate_pieces(&g, &pts).value)
}

impl GpsParams {
    /// `H(X) = -E ln f(X)` by quadrature.
    pub fn shannon_entropy(&self) -> f64 {
        self.integrate(
            |x| {
                let lf = self.ln_pdf(x);
                if lf == f64::NEG_INFINITY {
                    0.0
                } else {
                    -lf.exp() * lf
                }
            },
            &quad(),
        )
    }

    /// Mixture decomposition
    /// `-ln(θβ) - γμ₁ - β/γ + (β/γ) M_X(γ-ε) + ln C(θ) - E_N[A(N, θ)]`.
    ///
    /// Needs the power-series law of `N`, so θ must be positive.
    pub fn shannon_entropy_closed_form(&self) -> Result<f64> {
        let weights = match self.mixture_weights() {
            Some(w) if self.theta > 0.0 => w,
            _ => return domain("closed-form entropy needs θ inside the family domain"),
        };
        let (b, g, th) = (self.beta, self.gamma, self.theta);
        let mu1 = self.moment(1)?.value;
        let m = self.mgf(g - ENTROPY_MGF_EPS)?.value;
        let ln_c = self.family.min_power() as f64 * th.ln() + self.family.ln_p(th).value;
        let mut ea = 0.0;
        for (n, w) in weights {
            ea += w * entropy_a_term(&self.family, n, th)?;
        }
        Ok(-(th * b).ln() - g * mu1 - b / g + (b / g) * m + ln_c - ea)
    }

    /// `m(t) = E(X - t | X > t) = ∫_t^∞ S(x) dx / S(t)`.
    pub fn mean_residual_life(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("mean residual life needs t ≥ 0, got {t}"));
        }
        let ls_t = self.ln_survival(t);
        let mut pts = vec![t];
        for drop in [0.5f64, 1e-2, 1e-5, 1e-9, 1e-14] {
            let x = self.x_at_ln_survival(ls_t + drop.ln());
            if x > *pts.last().unwrap() && x.is_finite() {
                pts.push(x);
            }
        }
        let r = quad().integrate_pieces(&|x: f64| (self.ln_survival(x) - ls_t).exp(), &pts);
        Ok(r.value.max(0.0))
    }

    /// `m(t) = E_N[B(t, N)] / S(t) - t` with
    /// `B(t, n) = ∫_t^∞ x nβ e^{γx} t(x)^n dx`.
    pub fn mean_residual_life_series(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("mean residual life needs t ≥ 0, got {t}"));
        }
        let weights = self.mixture_weights().ok_or_else(|| {
            crate::error::GpsError::Domain("series form needs θ inside the family domain".into())
        })?;
        let base = self.base();
        let ls_t = self.ln_survival(t);
        let s_t = self.ln_tail(t);
        let mut sum = 0.0;
        for (n, w) in weights {
            let nf = n as f64;
            let mut pts = vec![t];
            for k in [1.0, 4.0, 16.0, 48.0] {
                let x = base.x_from_ln_tail(s_t - k / nf);
                if x > *pts.last().unwrap() {
                    pts.push(x);
                }
            }
            let f = |x: f64| {
                (x.ln() + (nf * self.beta).ln() + self.gamma * x + nf * self.ln_tail(x) - ls_t).exp()
            };
            sum += w * quad().integrate_pieces(&f, &pts).value;
        }
        Ok(sum - t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_series::SparsePolynomial;

    #[test]
    fn gompertz_entropy() {
        let p = GpsParams::gompertz(1.0, 1.0).unwrap();
        // 1 - e E1(1)
        let want = 1.0 - 1f64.exp() * 0.219_383_934_395_520_3;
        assert!((p.shannon_entropy() - want).abs() < 1e-8);
        assert!((p.shannon_entropy_closed_form().unwrap() - want).abs() < 1e-4);
        assert_eq!(entropy_a_term(p.family(), 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn representation_invariance() {
        let geo = GpsParams::new(0.7, 1.2, 0.3, PowerSeriesFamily::Geometric).unwrap();
        let poly = SparsePolynomial::new((1..=60).map(|n| (n, 1.0)).collect()).unwrap();
        let tr = GpsParams::new(0.7, 1.2, 0.3, PowerSeriesFamily::Polynomial(poly)).unwrap();
        assert!((geo.shannon_entropy() - tr.shannon_entropy()).abs() < 1e-6);
    }

    #[test]
    fn closed_form_tracks_quadrature() {
        for fam in [PowerSeriesFamily::Geometric, PowerSeriesFamily::Poisson, PowerSeriesFamily::Logarithmic] {
            let p = GpsParams::new(0.5, 2.0, 0.6, fam).unwrap();
            let q = p.shannon_entropy();
            let c = p.shannon_entropy_closed_form().unwrap();
            assert!((q - c).abs() < 1e-3, "{q} vs {c}");
        }
        assert!(GpsParams::extended_gg(1.0, 1.0, 3.0).unwrap().shannon_entropy_closed_form().is_err());
    }

    #[test]
    fn mean_residual_life_paths() {
        let p = GpsParams::new(0.5, 2.0, 0.9, PowerSeriesFamily::Geometric).unwrap();
        let m0 = p.mean_residual_life(0.0).unwrap();
        assert!((m0 - p.moment(1).unwrap().value).abs() < 1e-9);
        let q = p.mean_residual_life(0.5).unwrap();
        let s = p.mean_residual_life_series(0.5).unwrap();
        assert!((q - s).abs() < 1e-6, "{q} vs {s}");
        let top = p.quantile(0.999).unwrap();
        for k in 0..=20 {
            assert!(p.mean_residual_life(top * k as f64 / 20.0).unwrap() >= 0.0);
        }
        assert!(p.mean_residual_life(-1.0).is_err());
    }
}
