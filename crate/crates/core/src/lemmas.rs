//! Residual-versus-ε experiments for the commutator, twirl and self-correction results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::{balanced_commutator, commutator_generators};
use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::focus::{
    irrep_inverse, jd_alt_sequence, jd_sequence, j2_sequence, qubit_inverse, sud_inverse, twirl_sum,
    ImplementedOperator, IrrepElement,
};
use crate::matcore::{
    distance, exp_skew, expm, inverse, op_norm, random_traceless, random_traceless_hermitian, su_normalize,
    SpecialUnitary, SquareMatrix, C64,
};
use crate::pauli::{pauli_decompose, pauli_group, su_generators, su_y};

/// Default ε grid of the quadratic experiments.
pub const DEFAULT_EPS_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Default ε grid of the commutator experiment.
pub const COMMUTATOR_EPS_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `‖VWV†W† − Δ‖` for the balanced commutator.
    Commutator,
    /// `‖V − I‖/√ε` for the balanced commutator.
    CommutatorScale,
    /// `‖Σ R A R† − (|G|/d) tr A · I‖` for random `A` of norm ε.
    Twirl,
    /// `‖∏ R I′ R† − I‖` for `I′ ∈ SL(d)` within ε of `I`.
    Focusing,
    IrrepInverse,
    J2,
    QubitInverse,
    /// Component of `X′ − X̃` along `X̃`.
    Suppression,
    Jd,
    JdAlt,
    SudInverse,
    /// `sud_inverse` with `V = exp(M)`, `M` traceless and non-Hermitian.
    SudInverseSl,
}

impl Lemma {
    pub const ALL: [Lemma; 12] = [
        Lemma::Commutator,
        Lemma::CommutatorScale,
        Lemma::Twirl,
        Lemma::Focusing,
        Lemma::IrrepInverse,
        Lemma::J2,
        Lemma::QubitInverse,
        Lemma::Suppression,
        Lemma::Jd,
        Lemma::JdAlt,
        Lemma::SudInverse,
        Lemma::SudInverseSl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::Commutator => "commutator",
            Lemma::CommutatorScale => "commutator_scale",
            Lemma::Twirl => "twirl",
            Lemma::Focusing => "focusing",
            Lemma::IrrepInverse => "irrep_inverse",
            Lemma::J2 => "j2",
            Lemma::QubitInverse => "qubit_inverse",
            Lemma::Suppression => "suppression",
            Lemma::Jd => "jd",
            Lemma::JdAlt => "jd_alt",
            Lemma::SudInverse => "sud_inverse",
            Lemma::SudInverseSl => "sud_inverse_sl",
        }
    }

    /// Minimum accepted log-log slope, `None` for experiments that are not slope fits.
    pub fn slope_threshold(self) -> Option<f64> {
        match self {
            Lemma::Commutator => Some(1.45),
            Lemma::CommutatorScale | Lemma::Twirl => None,
            _ => Some(1.9),
        }
    }

    pub fn applies_to(self, d: usize) -> bool {
        match self {
            Lemma::J2 | Lemma::QubitInverse => d == 2,
            _ => d >= 2,
        }
    }
}

impl std::str::FromStr for Lemma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown lemma {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    pub lemma: Lemma,
    pub d: usize,
    pub eps: f64,
    pub trial: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub lemma: Lemma,
    pub d: usize,
    pub slope: f64,
    pub slope_stderr: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Independent stream for one trial.
fn trial_rng(seed: u64, lemma: Lemma, d: usize, eps_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = ((lemma as u64) << 56) ^ ((d as u64) << 48) ^ ((eps_index as u64) << 32) ^ trial as u64;
    rng.set_stream(stream);
    rng
}

/// Symbolic operator for experiments where the word is irrelevant.
fn op(value: SquareMatrix, letter: u32) -> ImplementedOperator {
    ImplementedOperator::letter(letter, value, 0)
}

/// `U·exp(iE)` with `E` a random traceless Hermitian of norm ε.
fn perturb(u: &SpecialUnitary, eps: f64, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let e = random_traceless_hermitian(u.dim(), eps, rng);
    u.matrix() * exp_skew(&e).matrix()
}

/// Exact Pauli irrep with its daggers, identity last.
pub fn pauli_irrep(d: usize) -> Vec<IrrepElement> {
    pauli_group(d)
        .into_iter()
        .map(|p| {
            let m = p.matrix();
            IrrepElement { rep: op(m.clone(), 10), rep_dagger: op(m.dagger(), 11) }
        })
        .collect()
}

fn residual_to_identity(m: &SquareMatrix) -> Result<f64> {
    distance(m, &SquareMatrix::identity(m.dim()))
}

/// One residual draw.
pub fn sample(lemma: Lemma, d: usize, eps: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !lemma.applies_to(d) {
        return Err(Error::InvalidInput(format!("{} does not apply to d = {d}", lemma.name())));
    }
    let (xt, zt) = su_generators(d)?;
    match lemma {
        Lemma::Commutator | Lemma::CommutatorScale => {
            let h = random_traceless_hermitian(d, eps, rng);
            let delta = exp_skew(&h);
            let pair = balanced_commutator(&delta)?;
            if lemma == Lemma::Commutator {
                Ok(pair.predicted_residual)
            } else {
                let actual = residual_to_identity(delta.matrix())?;
                Ok(residual_to_identity(pair.v.matrix())? / actual.sqrt())
            }
        }
        Lemma::Twirl => {
            let a = random_traceless(d, eps, rng);
            let shift = C64::new(eps, -0.5 * eps);
            let a = &a + &SquareMatrix::scalar(d, shift);
            let reps: Vec<SpecialUnitary> =
                pauli_group(d).iter().map(|p| su_normalize(&p.matrix())).collect::<Result<_>>()?;
            let lhs = twirl_sum(&reps, &a);
            let g = reps.len() as f64;
            let rhs = SquareMatrix::scalar(d, a.trace() * (g / d as f64));
            op_norm(&(&lhs - &rhs))
        }
        Lemma::Focusing => {
            let ip = expm(&random_traceless(d, eps, rng));
            let mut prod = SquareMatrix::identity(d);
            for p in pauli_group(d) {
                let r = p.matrix();
                prod = &(&(&prod * &r) * &ip) * &r.dagger();
            }
            residual_to_identity(&prod)
        }
        Lemma::IrrepInverse => {
            let v = crate::matcore::haar_special_unitary(d, rng);
            let vbar = perturb(&v.dagger(), eps, rng);
            let v = op(v.into_matrix(), 0);
            let out = irrep_inverse(&v, &op(vbar, 1), &pauli_irrep(d))?;
            residual_to_identity(&(&out.value * &v.value))
        }
        Lemma::J2 => {
            let xp = op(perturb(&xt, eps, rng), 0);
            let yp = op(perturb(&su_y(), eps, rng), 1);
            residual_to_identity(&j2_sequence(&xp, &yp)?.value)
        }
        Lemma::QubitInverse => {
            let v = crate::matcore::haar_special_unitary(2, rng);
            let vbar = perturb(&v.dagger(), eps, rng);
            let xp = op(perturb(&xt, eps, rng), 2);
            let yp = op(perturb(&su_y(), eps, rng), 3);
            let v = op(v.into_matrix(), 0);
            let out = qubit_inverse(&v, &op(vbar, 1), &xp, &yp)?;
            residual_to_identity(&(&out.value * &v.value))
        }
        Lemma::Suppression => {
            let xp = perturb(&xt, eps, rng);
            let diff = &xp - xt.matrix();
            let along = pauli_decompose(&diff)?.get(1, 0);
            let own = pauli_decompose(xt.matrix())?.get(1, 0);
            Ok((along / own).norm())
        }
        Lemma::Jd | Lemma::JdAlt => {
            let xp = op(perturb(&xt, eps, rng), 0);
            let zp = op(perturb(&zt, eps, rng), 1);
            let out = if lemma == Lemma::Jd { jd_sequence(&xp, &zp, d)? } else { jd_alt_sequence(&zp, &xp, d)? };
            residual_to_identity(&out.value)
        }
        Lemma::SudInverse => {
            let v = crate::matcore::haar_special_unitary(d, rng);
            let vbar = perturb(&v.dagger(), eps, rng);
            let xp = op(perturb(&xt, eps, rng), 2);
            let zp = op(perturb(&zt, eps, rng), 3);
            let v = op(v.into_matrix(), 0);
            let out = sud_inverse(&v, &op(vbar, 1), &xp, &zp, d)?;
            residual_to_identity(&(&out.value * &v.value))
        }
        Lemma::SudInverseSl => {
            let v = expm(&random_traceless(d, 0.3, rng));
            let vinv = inverse(&v)?;
            let vbar = &vinv * &expm(&random_traceless(d, eps, rng));
            let xp = op(perturb(&xt, eps, rng), 2);
            let zp = op(perturb(&zt, eps, rng), 3);
            let v = op(v, 0);
            let out = sud_inverse(&v, &op(vbar, 1), &xp, &zp, d)?;
            residual_to_identity(&(&out.value * &v.value))
        }
    }
}

/// All `(ε, trial)` draws of one experiment, seeded per trial and run in parallel.
pub fn run_lemma(lemma: Lemma, d: usize, eps_grid: &[f64], trials: usize, seed: u64) -> Result<Vec<LemmaSample>> {
    let jobs: Vec<(usize, usize)> =
        (0..eps_grid.len()).flat_map(|e| (0..trials).map(move |t| (e, t))).collect();
    jobs.par_iter()
        .map(|&(e, trial)| {
            let mut rng = trial_rng(seed, lemma, d, e, trial);
            let eps = eps_grid[e];
            Ok(LemmaSample { lemma, d, eps, trial, residual: sample(lemma, d, eps, &mut rng)? })
        })
        .collect()
}

/// Pooled log-log slope per `(lemma, d)` over every sample.
pub fn slope_summary(samples: &[LemmaSample]) -> Vec<SlopeSummary> {
    let mut keys: Vec<(Lemma, usize)> = Vec::new();
    for s in samples {
        if s.lemma.slope_threshold().is_some() && !keys.contains(&(s.lemma, s.d)) {
            keys.push((s.lemma, s.d));
        }
    }
    keys.into_iter()
        .map(|(lemma, d)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .filter(|s| s.lemma == lemma && s.d == d)
                .map(|s| (s.eps, s.residual))
                .unzip();
            let threshold = lemma.slope_threshold().unwrap_or(f64::NAN);
            let fit = loglog_fit(&xs, &ys);
            let slope = fit.map(|f| f.slope).unwrap_or(f64::NAN);
            SlopeSummary {
                lemma,
                d,
                slope,
                slope_stderr: fit.map(|f| f.slope_stderr).unwrap_or(f64::NAN),
                threshold,
                pass: slope >= threshold,
            }
        })
        .collect()
}

/// Mean of `‖V − I‖/√ε` per grid point; the experiment passes when max/min ≤ 2.
pub fn scale_band(samples: &[LemmaSample], d: usize) -> Option<f64> {
    let mut grid: Vec<f64> = samples
        .iter()
        .filter(|s| s.lemma == Lemma::CommutatorScale && s.d == d)
        .map(|s| s.eps)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let means: Vec<f64> = grid
        .iter()
        .map(|&e| {
            let v: Vec<f64> = samples
                .iter()
                .filter(|s| s.lemma == Lemma::CommutatorScale && s.d == d && s.eps == e)
                .map(|s| s.residual)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    (!means.is_empty()).then(|| max / min)
}

/// Residuals of every construction on exact inputs; each should vanish.
pub fn exact_input_residuals(d: usize) -> Result<Vec<(Lemma, f64)>> {
    let (xt, zt) = su_generators(d)?;
    let x = op(xt.matrix().clone(), 0);
    let z = op(zt.matrix().clone(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
    let vu = crate::matcore::haar_special_unitary(d, &mut rng);
    let v = op(vu.matrix().clone(), 2);
    let vbar = op(vu.dagger().into_matrix(), 3);
    let mut out = vec![
        (Lemma::Jd, residual_to_identity(&jd_sequence(&x, &z, d)?.value)?),
        (Lemma::JdAlt, residual_to_identity(&jd_alt_sequence(&z, &x, d)?.value)?),
        (Lemma::SudInverse, residual_to_identity(&(&sud_inverse(&v, &vbar, &x, &z, d)?.value * &v.value))?),
        (
            Lemma::IrrepInverse,
            residual_to_identity(&(&irrep_inverse(&v, &vbar, &pauli_irrep(d))?.value * &v.value))?,
        ),
    ];
    if d == 2 {
        let y = op(su_y().into_matrix(), 4);
        out.push((Lemma::J2, residual_to_identity(&j2_sequence(&x, &y)?.value)?));
        out.push((Lemma::QubitInverse, residual_to_identity(&(&qubit_inverse(&v, &vbar, &x, &y)?.value * &v.value))?));
    }
    Ok(out)
}

/// `max ‖[A,B] − iH‖` over random `H` of norm at most `max_norm`.
pub fn commutator_exactness(d: usize, samples: usize, max_norm: f64, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..samples {
        let mut rng = trial_rng(seed, Lemma::Commutator, d, 99, t);
        let norm = max_norm * (0.01 + 0.99 * (t as f64 + 0.5) / samples as f64);
        let h = random_traceless_hermitian(d, norm, &mut rng);
        let (a, b) = commutator_generators(&h)?;
        let comm = SquareMatrix::commutator(a.matrix(), b.matrix());
        let ih = h.matrix().scale(C64::new(0.0, 1.0));
        worst = worst.max(op_norm(&(&comm - &ih))?);
    }
    Ok(worst)
}

/// Distance between `jd_alt` with one generator exact and the evaluated
/// single-generator curing sequence: `s·[Z′ᵈX̃]ᵈ` (X exact) or `s·[Z̃X′ᵈ]ᵈ` (Z exact),
/// where `s = (−1)^{d−1}` is the scalar left by collapsing `X̃ᵈ = Z̃ᵈ = (−1)^{d−1} I`.
pub fn reduction_residuals(d: usize, draws: usize, eps: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let (xt, zt) = su_generators(d)?;
    let sign = if d.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut out = Vec::with_capacity(draws);
    for t in 0..draws {
        let mut rng = trial_rng(seed, Lemma::JdAlt, d, 77, t);
        let zp = perturb(&zt, eps, &mut rng);
        let xp = perturb(&xt, eps, &mut rng);
        let x_exact = jd_alt_sequence(&op(zp.clone(), 0), &op(xt.matrix().clone(), 1), d)?.value;
        let cure_z = (&zp.pow(d) * xt.matrix()).pow(d).scale_re(sign);
        let z_exact = jd_alt_sequence(&op(zt.matrix().clone(), 0), &op(xp.clone(), 1), d)?.value;
        let cure_x = (zt.matrix() * &xp.pow(d)).pow(d).scale_re(sign);
        out.push((distance(&x_exact, &cure_z)?, distance(&z_exact, &cure_x)?));
    }
    Ok(out)
}

/// Writes the `lemma,d,eps,trial,residual` table.
pub fn write_samples_csv(path: &std::path::Path, samples: &[LemmaSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lemma", "d", "eps", "trial", "residual"])?;
    for s in samples {
        w.write_record([
            s.lemma.name().to_string(),
            s.d.to_string(),
            format!("{:e}", s.eps),
            s.trial.to_string(),
            format!("{:.6e}", s.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slopes_csv(path: &std::path::Path, summaries: &[SlopeSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lemma", "d", "slope", "slope_stderr", "threshold", "pass"])?;
    for s in summaries {
        w.write_record([
            s.lemma.name().to_string(),
            s.d.to_string(),
            format!("{:.4}", s.slope),
            format!("{:.4}", s.slope_stderr),
            format!("{:.2}", s.threshold),
            s.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
