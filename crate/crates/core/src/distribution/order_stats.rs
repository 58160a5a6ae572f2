//! Order statistics of an i.i.d. GPS sample.

use statrs::function::factorial::ln_binomial;

use super::GpsParams;
use crate::error::{domain, Result};
use crate::quadrature::Quadrature;

fn check_rank(n: u32, i: u32) -> Result<()> {
    if n == 0 || i == 0 || i > n {
        return domain(format!("order statistic rank {i} out of range for n = {n}"));
    }
    Ok(())
}

impl GpsParams {
    /// Density of `X_(i:n)`: `n!/((i-1)!(n-i)!) f F^{i-1} S^{n-i}`.
    pub fn order_stat_pdf(&self, n: u32, i: u32, x: f64) -> Result<f64> {
        check_rank(n, i)?;
        if x < 0.0 {
            return Ok(0.0);
        }
        let ln_s = self.ln_survival(x);
        let ln_f_cdf = (-ln_s.exp_m1()).ln();
        let ln_coef = (n as f64).ln() + ln_binomial((n - 1) as u64, (i - 1) as u64);
        let mut v = ln_coef + self.ln_pdf(x) + (n - i) as f64 * ln_s;
        if i > 1 {
            v += (i - 1) as f64 * ln_f_cdf;
        }
        Ok(v.exp())
    }

    /// `P(X_(i:n) ≤ x) = Σ_{j=i}^{n} C(n,j) F^j S^{n-j}`.
    pub fn order_stat_cdf(&self, n: u32, i: u32, x: f64) -> Result<f64> {
        check_rank(n, i)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        let ln_s = self.ln_survival(x);
        let ln_f_cdf = (-ln_s.exp_m1()).ln();
        let sum: f64 = (i..=n)
            .map(|j| (ln_binomial(n as u64, j as u64) + j as f64 * ln_f_cdf + (n - j) as f64 * ln_s).exp())
            .sum();
        Ok(sum.min(1.0))
    }

    /// `E(X_(i:n)^r)` by the alternating sum
    /// `Σ_{k=n-i+1}^{n} r(-1)^{k-n+i-1} C(k-1, n-i) C(n, k) ∫ x^{r-1} S(x)^k dx`.
    pub fn order_stat_moment(&self, n: u32, i: u32, r: u32) -> Result<f64> {
        check_rank(n, i)?;
        if r == 0 {
            return domain("order statistic moment needs r ≥ 1");
        }
        let quad = Quadrature::with_tol(1e-14, 1e-12);
        let mut sum = 0.0;
        for k in (n - i + 1)..=n {
            let sign = if (k + i - n - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let ln_c = ln_binomial((k - 1) as u64, (n - i) as u64) + ln_binomial(n as u64, k as u64);
            let kf = k as f64;
            let integral = self.integrate(
                |x| {
                    if x <= 0.0 && r > 1 {
                        return 0.0;
                    }
                    let ln_pow = if r == 1 { 0.0 } else { (r - 1) as f64 * x.ln() };
                    (ln_pow + kf * self.ln_survival(x)).exp()
                },
                &quad,
            );
            sum += sign * r as f64 * ln_c.exp() * integral;
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use crate::distribution::GpsParams;
    use crate::power_series::PowerSeriesFamily;
    use crate::quadrature::Quadrature;

    fn gg() -> GpsParams {
        GpsParams::new(0.5, 2.0, 0.9, PowerSeriesFamily::Geometric).unwrap()
    }

    #[test]
    fn single_draw_is_the_parent() {
        let p = gg();
        for x in [0.05, 0.4, 1.2] {
            assert!((p.order_stat_pdf(1, 1, x).unwrap() - p.pdf(x)).abs() < 1e-14);
            assert!((p.order_stat_cdf(1, 1, x).unwrap() - p.cdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let p = gg();
        let q = Quadrature::with_tol(1e-13, 1e-12);
        for i in [1, 3, 5] {
            let v = p.integrate(|x| p.order_stat_pdf(5, i, x).unwrap(), &q);
            assert!((v - 1.0).abs() < 1e-7, "i={i}: {v}");
        }
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        let p = gg();
        let q = Quadrature::with_tol(1e-14, 1e-12);
        let x = 0.6;
        let v = q.integrate(|u| p.order_stat_pdf(5, 2, u).unwrap(), 0.0, x).value;
        assert!((v - p.order_stat_cdf(5, 2, x).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn minimum_and_maximum_closed_forms() {
        let p = gg();
        let x = 0.7;
        let s = p.survival(x);
        assert!((p.order_stat_cdf(4, 1, x).unwrap() - (1.0 - s.powi(4))).abs() < 1e-14);
        assert!((p.order_stat_cdf(4, 4, x).unwrap() - p.cdf(x).powi(4)).abs() < 1e-14);
    }

    #[test]
    fn moments_against_density_quadrature() {
        let p = gg();
        let q = Quadrature::with_tol(1e-14, 1e-12);
        for (n, i, r) in [(3, 1, 1), (5, 3, 1), (4, 4, 2)] {
            let direct = p.integrate(|x| x.powi(r as i32) * p.order_stat_pdf(n, i, x).unwrap(), &q);
            let got = p.order_stat_moment(n, i, r).unwrap();
            assert!((got - direct).abs() < 1e-8, "({n},{i},{r}): {got} vs {direct}");
        }
    }

    #[test]
    fn rank_validation() {
        let p = gg();
        assert!(p.order_stat_pdf(3, 0, 1.0).is_err());
        assert!(p.order_stat_cdf(3, 4, 1.0).is_err());
        assert!(p.order_stat_moment(0, 1, 1).is_err());
    }
}
