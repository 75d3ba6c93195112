//! Balanced group-commutator factorization of near-identity special unitaries.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::matcore::{
    distance, eigh, exp_skew, log_unitary, op_norm, SpecialUnitary, SquareMatrix, TracelessHermitian, C64,
};

/// Default largest `‖Δ − I‖` accepted by [`balanced_commutator`].
pub const DEFAULT_EPS_MAX: f64 = 0.5;

/// `V`, `W` with `VWV†W† ≈ Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorPair {
    pub v: SpecialUnitary,
    pub w: SpecialUnitary,
    /// Generators with `[A, B] = iH`, `V = e^{iB}`, `W = e^{iA}`.
    pub a: TracelessHermitian,
    pub b: TracelessHermitian,
    /// `‖VWV†W† − Δ‖` for the returned pair.
    pub predicted_residual: f64,
}

/// `diag(−(d−1)/2, …, (d−1)/2)`.
pub fn diagonal_generator(d: usize) -> SquareMatrix {
    let half = (d as f64 - 1.0) / 2.0;
    let entries: Vec<C64> = (0..d).map(|j| C64::new(j as f64 - half, 0.0)).collect();
    SquareMatrix::diag(&entries)
}

/// Unitary DFT, `F_{jk} = ω^{jk}/√d`.
pub fn dft(d: usize) -> SquareMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    SquareMatrix::from_fn(d, |j, k| C64::from_polar(norm, TAU * ((j * k) % d) as f64 / d as f64))
}

/// Hermitian `A`, `B` of balanced norm with `[A, B] = iH`.
pub fn commutator_generators(h: &TracelessHermitian) -> Result<(TracelessHermitian, TracelessHermitian)> {
    let d = h.dim();
    let hm = h.matrix();
    let h_norm = op_norm(hm)?;
    if h_norm == 0.0 {
        return Ok((TracelessHermitian::zero(d), TracelessHermitian::zero(d)));
    }
    let (_, q) = eigh(hm)?;
    // In the basis M = QF† the traceless H has zero diagonal.
    let m = &q * &dft(d).dagger();
    let mut hp = &(&m.dagger() * hm) * &m;
    let diag_residual = (0..d).map(|j| hp[(j, j)].norm()).fold(0.0, f64::max);
    if diag_residual > 1e-8 * h_norm.max(1.0) {
        return Err(Error::CommutatorBasis(diag_residual));
    }
    for j in 0..d {
        hp[(j, j)] = C64::new(0.0, 0.0);
    }
    let bp = diagonal_generator(d);
    let ap = SquareMatrix::from_fn(d, |j, k| {
        if j == k {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, 1.0) * hp[(j, k)] / (k as f64 - j as f64)
        }
    });
    let s = (op_norm(&bp)? / op_norm(&ap)?).sqrt();
    let a = &(&m * &ap.scale_re(s)) * &m.dagger();
    let b = &(&m * &bp.scale_re(1.0 / s)) * &m.dagger();
    let tol = 1e-9 * h_norm.max(1.0) * (d as f64);
    Ok((
        TracelessHermitian::with_tolerance(a.hermitian_part(), tol)?,
        TracelessHermitian::with_tolerance(b.hermitian_part(), tol)?,
    ))
}

pub fn balanced_commutator(delta: &SpecialUnitary) -> Result<CommutatorPair> {
    balanced_commutator_with(delta, DEFAULT_EPS_MAX)
}

/// Factors `Δ ≈ VWV†W†` with `‖V − I‖, ‖W − I‖ = O(√ε)`, `ε = ‖Δ − I‖`.
pub fn balanced_commutator_with(delta: &SpecialUnitary, eps_max: f64) -> Result<CommutatorPair> {
    let d = delta.dim();
    let eps = distance(delta.matrix(), &SquareMatrix::identity(d))?;
    if eps > eps_max {
        return Err(Error::CommutatorDomain { distance: eps, max: eps_max });
    }
    let h = log_unitary(delta)?;
    let (a, b) = commutator_generators(&h)?;
    // e^{iX}e^{iY}e^{−iX}e^{−iY} ≈ I − [X, Y], so the first factor carries B.
    let v = exp_skew(&b);
    let w = exp_skew(&a);
    let c = group_commutator(v.matrix(), w.matrix());
    let predicted_residual = distance(&c, delta.matrix())?;
    Ok(CommutatorPair { v, w, a, b, predicted_residual })
}

/// `VWV†W†`.
pub fn group_commutator(v: &SquareMatrix, w: &SquareMatrix) -> SquareMatrix {
    &(&(v * w) * &v.dagger()) * &w.dagger()
}
