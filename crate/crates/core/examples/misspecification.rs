//! How often do information criteria pick the wrong model? Generates from
//! GG with θ near zero and from plain Gompertz, then counts preferences.

use gompertz_ps::simlab::{run_misspecification_study, StudyConfig, StudyKind};

fn main() -> gompertz_ps::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let from_gg = StudyConfig {
        kind: StudyKind::Misspecification,
        model: "gg".into(),
        params: vec![[1.0, 2.0, 0.1]],
        sample_sizes: vec![200],
        replicates,
        seed: 3,
        competitors: ["gompertz", "gp", "gb(5)", "gl"].map(String::from).to_vec(),
        ..Default::default()
    };
    let t = std::time::Instant::now();
    print!("{}", run_misspecification_study(&from_gg)?.to_table());
    eprintln!("{:.1?}", t.elapsed());

    let from_gompertz = StudyConfig {
        model: "gompertz".into(),
        params: vec![[1.0, 2.0, 1.0]],
        competitors: ["gg", "gp", "gb(5)", "gl"].map(String::from).to_vec(),
        ..from_gg
    };
    let t = std::time::Instant::now();
    print!("\n{}", run_misspecification_study(&from_gompertz)?.to_table());
    eprintln!("{:.1?}", t.elapsed());
    Ok(())
}
