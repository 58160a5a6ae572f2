//! Evaluates one member of each mixing family: density, quantiles, moments,
//! entropy, mean residual life and order statistics.

use gompertz_ps::{GpsParams, PowerSeriesFamily};

fn main() -> gompertz_ps::Result<()> {
    let families = [
        ("geometric", PowerSeriesFamily::Geometric, 0.6),
        ("poisson", PowerSeriesFamily::Poisson, 1.5),
        ("binomial(5)", PowerSeriesFamily::Binomial { m: 5 }, 0.4),
        ("logarithmic", PowerSeriesFamily::Logarithmic, 0.7),
    ];
    for (name, family, theta) in families {
        let p = GpsParams::new(0.5, 1.5, theta, family)?;
        let median = p.quantile(0.5)?;
        let mean = p.moment(1)?.value;
        let var = p.moment(2)?.value - mean * mean;
        println!("{name} (beta 0.5, gamma 1.5, theta {theta})");
        println!("  pdf(1) {:.6}  cdf(1) {:.6}  hazard(0) {:.6}", p.pdf(1.0), p.cdf(1.0), p.hazard(0.0));
        println!("  median {median:.6}  mean {mean:.6}  variance {var:.6}");
        println!("  entropy {:.6}  mrl(0.5) {:.6}", p.shannon_entropy(), p.mean_residual_life(0.5)?);
        println!("  E[min of 5] {:.6}  E[max of 5] {:.6}", p.order_stat_moment(5, 1, 1)?, p.order_stat_moment(5, 5, 1)?);
        let xs = p.sample_seeded(10_000, 42);
        println!("  sample mean of 10000 draws {:.6}", xs.iter().sum::<f64>() / xs.len() as f64);
    }
    Ok(())
}
