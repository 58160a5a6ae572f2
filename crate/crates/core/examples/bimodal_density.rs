//! A sparse mixing polynomial `y + y^20` gives a density with two modes.
//! Writes the curve table to stdout and reports the local maxima.

use gompertz_ps::distribution::{linear_grid, write_curve_tsv};
use gompertz_ps::{GpsParams, PowerSeriesFamily};

fn main() -> gompertz_ps::Result<()> {
    let family = PowerSeriesFamily::parse("1:1,20:1")?;
    let p = GpsParams::new(0.1, 3.0, 1.0, family)?;
    let grid = linear_grid(0.0, 2.0, 2001)?;
    let pdf: Vec<f64> = grid.iter().map(|&x| p.pdf(x)).collect();
    for i in 1..grid.len() - 1 {
        if pdf[i] > pdf[i - 1] && pdf[i] > pdf[i + 1] {
            eprintln!("local maximum near x = {:.4} (pdf {:.4})", grid[i], pdf[i]);
        }
    }
    write_curve_tsv(&p, &linear_grid(0.0, 2.0, 41)?, std::io::stdout().lock())
}
