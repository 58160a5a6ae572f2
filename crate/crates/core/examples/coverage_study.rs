//! Scaled estimation study: EM fits on complete GG samples, then direct fits
//! with 30% exponential censoring. Prints the readable tables.

use gompertz_ps::simlab::{run_estimation_study, StudyConfig, StudyKind, StudyMethod};

fn main() -> gompertz_ps::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let complete = StudyConfig {
        kind: StudyKind::Estimation,
        model: "gg".into(),
        params: vec![[0.5, 2.0, 0.9], [0.5, 2.0, 0.1]],
        sample_sizes: vec![50, 100],
        replicates,
        method: StudyMethod::Em,
        seed: 1,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    print!("{}", run_estimation_study(&complete)?.to_table());
    eprintln!("complete data: {:.1?}", t.elapsed());

    let censored = StudyConfig { method: StudyMethod::Direct, censoring_fraction: 0.3, ..complete };
    let t = std::time::Instant::now();
    let report = run_estimation_study(&censored)?;
    print!("\ncensored (30%)\n{}", report.to_table());
    for c in &report.cells {
        eprintln!("n={} rate={:?} observed censoring {:.3}", c.n, c.censoring_rate, c.observed_censoring);
    }
    eprintln!("censored data: {:.1?}", t.elapsed());
    Ok(())
}
