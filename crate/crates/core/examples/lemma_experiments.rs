//! The full residual-versus-ε suite, written as CSV tables.

use ifsk::lemmas::{run_lemma, slope_summary, write_samples_csv, write_slopes_csv, Lemma, COMMUTATOR_EPS_GRID, DEFAULT_EPS_GRID};

fn main() -> ifsk::Result<()> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let mut samples = Vec::new();
    for d in 2..=3 {
        for lemma in Lemma::ALL.into_iter().filter(|l| l.applies_to(d)) {
            let grid: &[f64] = match lemma {
                Lemma::Commutator | Lemma::CommutatorScale => &COMMUTATOR_EPS_GRID,
                _ => &DEFAULT_EPS_GRID,
            };
            samples.extend(run_lemma(lemma, d, grid, 20, 5)?);
        }
    }
    let slopes = slope_summary(&samples);
    write_samples_csv(&dir.join("lemmas.csv"), &samples)?;
    write_slopes_csv(&dir.join("slopes.csv"), &slopes)?;
    for s in &slopes {
        println!("{:<16} d={} slope {:.3} threshold {:.2}", s.lemma.name(), s.d, s.slope, s.threshold);
    }
    println!("tables in {}", dir.display());
    Ok(())
}
