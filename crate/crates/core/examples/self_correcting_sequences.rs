//! Residuals of the self-correcting Pauli sequences shrink quadratically in the input error.

use ifsk::lemmas::{run_lemma, slope_summary, Lemma, DEFAULT_EPS_GRID};

fn main() -> ifsk::Result<()> {
    let mut samples = run_lemma(Lemma::J2, 2, &DEFAULT_EPS_GRID, 20, 1)?;
    for d in 2..=4 {
        samples.extend(run_lemma(Lemma::Jd, d, &DEFAULT_EPS_GRID, 20, 1)?);
        samples.extend(run_lemma(Lemma::JdAlt, d, &DEFAULT_EPS_GRID, 20, 1)?);
    }
    for &eps in &DEFAULT_EPS_GRID {
        let worst = samples
            .iter()
            .filter(|s| s.lemma == Lemma::Jd && s.d == 3 && s.eps == eps)
            .map(|s| s.residual)
            .fold(0.0, f64::max);
        println!("J_3 at eps {eps:.0e}: worst residual {worst:.3e}");
    }
    for s in slope_summary(&samples) {
        println!("{:<7} d={} log-log slope {:.3}", s.lemma.name(), s.d, s.slope);
    }
    Ok(())
}
