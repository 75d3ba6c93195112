//! Generalized Pauli (Weyl) group over `C^d`: clock `Z`, shift `X`, and
//! symbolic arithmetic on phased products `X^n Z^m`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::matcore::{su_normalize, SpecialUnitary, SquareMatrix, C64};

/// `(n, m)` labelling `σ(n, m) = X^n Z^m`, both reduced mod `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliIndex {
    n: usize,
    m: usize,
    d: usize,
}

impl PauliIndex {
    pub fn new(n: usize, m: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension {d} < 2")));
        }
        Ok(Self { n: n % d, m: m % d, d })
    }

    pub fn identity(d: usize) -> Self {
        Self { n: 0, m: 0, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_identity(&self) -> bool {
        self.n == 0 && self.m == 0
    }
}

/// Unit-modulus scalar, exact as a power of `e^{2πi/(4d²)}` when possible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phase {
    /// `e^{2πi k / modulus}`.
    Root { k: u64, modulus: u64 },
    Scalar(C64),
}

impl Phase {
    pub fn one(d: usize) -> Self {
        Phase::Root { k: 0, modulus: root_modulus(d) }
    }

    /// `ω^p` with `ω = e^{2πi/d}`.
    pub fn omega_pow(d: usize, p: usize) -> Self {
        let modulus = root_modulus(d);
        let step = modulus / d as u64;
        Phase::Root { k: (step * p as u64) % modulus, modulus }
    }

    pub fn value(&self) -> C64 {
        match *self {
            Phase::Root { k, modulus } => C64::from_polar(1.0, TAU * k as f64 / modulus as f64),
            Phase::Scalar(z) => z,
        }
    }

    pub fn conj(self) -> Phase {
        match self {
            Phase::Root { k, modulus } => Phase::Root { k: (modulus - k) % modulus, modulus },
            Phase::Scalar(z) => Phase::Scalar(z.conj()),
        }
    }

    pub fn is_one(&self) -> bool {
        match *self {
            Phase::Root { k, .. } => k == 0,
            Phase::Scalar(z) => (z - 1.0).norm() < 1e-12,
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, other: Phase) -> Phase {
        match (self, other) {
            (Phase::Root { k: a, modulus: ma }, Phase::Root { k: b, modulus: mb }) if ma == mb => {
                Phase::Root { k: (a + b) % ma, modulus: ma }
            }
            (a, b) => Phase::Scalar(a.value() * b.value()),
        }
    }
}

fn root_modulus(d: usize) -> u64 {
    4 * (d as u64) * (d as u64)
}

/// `phase · σ(index)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasedPauli {
    pub index: PauliIndex,
    pub phase: Phase,
}

impl PhasedPauli {
    pub fn new(index: PauliIndex, phase: Phase) -> Result<Self> {
        if let Phase::Scalar(z) = phase {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("phase modulus {} is not 1", z.norm())));
            }
        }
        Ok(Self { index, phase })
    }

    pub fn plain(index: PauliIndex) -> Self {
        Self { index, phase: Phase::one(index.d) }
    }

    pub fn matrix(&self) -> SquareMatrix {
        sigma(self.index).scale(self.phase.value())
    }
}

/// Coefficients `c_{a,b}` in `M = Σ c_{a,b} σ(a,b)`, stored at `a·d + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliBasisVector {
    d: usize,
    coeffs: Vec<C64>,
}

impl PauliBasisVector {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.coeffs[(a % self.d) * self.d + (b % self.d)]
    }

    pub fn reconstruct(&self) -> SquareMatrix {
        let d = self.d;
        let mut out = SquareMatrix::zeros(d);
        for a in 0..d {
            for b in 0..d {
                let c = self.coeffs[a * d + b];
                if c.norm() == 0.0 {
                    continue;
                }
                out = &out + &sigma(PauliIndex { n: a, m: b, d }).scale(c);
            }
        }
        out
    }
}

/// `Z = Σ_j ω^j |j⟩⟨j|`.
pub fn clock_z(d: usize) -> SquareMatrix {
    let w = TAU / d as f64;
    let diag: Vec<C64> = (0..d).map(|j| C64::from_polar(1.0, w * j as f64)).collect();
    SquareMatrix::diag(&diag)
}

/// `X = Σ_j |j+1 mod d⟩⟨j|`.
pub fn shift_x(d: usize) -> SquareMatrix {
    SquareMatrix::from_fn(d, |i, j| {
        if i == (j + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `σ(n, m) = X^n Z^m`, built entrywise: `(X^n Z^m)_{ij} = ω^{mj}` when `i = j + n`.
pub fn sigma(p: PauliIndex) -> SquareMatrix {
    let d = p.d;
    let w = TAU / d as f64;
    SquareMatrix::from_fn(d, |i, j| {
        if i == (j + p.n) % d {
            C64::from_polar(1.0, w * ((p.m * j) % d) as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `σ(n₁,m₁)σ(n₂,m₂) = ω^{n₂m₁} σ(n₁+n₂, m₁+m₂)`.
pub fn pauli_mul(p: &PhasedPauli, q: &PhasedPauli) -> Result<PhasedPauli> {
    let d = p.index.d;
    if q.index.d != d {
        return Err(Error::DimensionMismatch { expected: d, got: q.index.d });
    }
    let index = PauliIndex { n: (p.index.n + q.index.n) % d, m: (p.index.m + q.index.m) % d, d };
    let w = Phase::omega_pow(d, (q.index.n * p.index.m) % d);
    Ok(PhasedPauli { index, phase: p.phase * q.phase * w })
}

/// `(X^n Z^m)† = ω^{nm} X^{d−n} Z^{d−m}`, with the phase conjugated.
pub fn pauli_dagger(p: &PhasedPauli) -> PhasedPauli {
    let d = p.index.d;
    let index = PauliIndex { n: (d - p.index.n) % d, m: (d - p.index.m) % d, d };
    let w = Phase::omega_pow(d, (p.index.n * p.index.m) % d);
    PhasedPauli { index, phase: p.phase.conj() * w }
}

/// SU-normalized shift and clock `(X̃, Z̃)`.
pub fn su_generators(d: usize) -> Result<(SpecialUnitary, SpecialUnitary)> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension {d} < 2")));
    }
    Ok((su_normalize(&shift_x(d))?, su_normalize(&clock_z(d))?))
}

/// SU-normalized qubit `Y`, which equals `XZ = σ(1,1)`.
pub fn su_y() -> SpecialUnitary {
    let y = SquareMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => C64::new(0.0, 0.0),
    });
    su_normalize(&y).expect("Pauli Y is unitary")
}

/// All `d²` group elements with unit phase, `n`-major, identity last.
pub fn pauli_group(d: usize) -> Vec<PhasedPauli> {
    let mut out: Vec<PhasedPauli> = (0..d)
        .flat_map(|n| (0..d).map(move |m| (n, m)))
        .filter(|&(n, m)| n != 0 || m != 0)
        .map(|(n, m)| PhasedPauli::plain(PauliIndex { n, m, d }))
        .collect();
    out.push(PhasedPauli::plain(PauliIndex::identity(d)));
    out
}

/// `c_{a,b} = tr(σ(a,b)† M)/d`.
pub fn pauli_decompose(m: &SquareMatrix) -> Result<PauliBasisVector> {
    m.check_finite()?;
    let d = m.dim();
    if d > crate::matcore::MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {d} exceeds {}", crate::matcore::MAX_DIM)));
    }
    let w = TAU / d as f64;
    let mut coeffs = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // σ(a,b) has entry ω^{bj} at (j+a, j); tr(σ†M) = Σ_j conj(ω^{bj}) M_{j+a, j}.
            let s: C64 = (0..d)
                .map(|j| C64::from_polar(1.0, -w * ((b * j) % d) as f64) * m[((j + a) % d, j)])
                .sum();
            coeffs.push(s / d as f64);
        }
    }
    Ok(PauliBasisVector { d, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{determinant, distance, exp_skew, random_traceless_hermitian};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx(n: usize, m: usize, d: usize) -> PauliIndex {
        PauliIndex::new(n, m, d).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn clock_and_shift() {
        let z2 = SquareMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(distance(&clock_z(2), &z2).unwrap() < 1e-15);
        let x2 = shift_x(2);
        assert_eq!(x2[(0, 1)], c(1.0, 0.0));
        assert_eq!(x2[(1, 0)], c(1.0, 0.0));
        assert_eq!(x2[(0, 0)], c(0.0, 0.0));
        let x3 = shift_x(3);
        // X e₀ = e₁: column 0 has its one in row 1.
        assert_eq!(x3[(1, 0)], c(1.0, 0.0));
        let z3 = clock_z(3);
        let w = C64::from_polar(1.0, TAU / 3.0);
        assert!((z3[(1, 1)] - w).norm() < 1e-15 && (z3[(2, 2)] - w * w).norm() < 1e-15);
        for d in 2..=5 {
            let id = SquareMatrix::identity(d);
            assert!(distance(&clock_z(d).pow(d), &id).unwrap() < 1e-12);
            assert!(distance(&shift_x(d).pow(d), &id).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(idx(0, 0, 3)), SquareMatrix::identity(3));
        let xz = sigma(idx(1, 1, 2));
        let expected = SquareMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(distance(&xz, &expected).unwrap() < 1e-15);
        let x = shift_x(3);
        let oracle = &(&x * &x) * &clock_z(3);
        assert!(distance(&sigma(idx(2, 1, 3)), &oracle).unwrap() < 1e-14);
    }

    #[test]
    fn pauli_mul_examples() {
        let z = PhasedPauli::plain(idx(0, 1, 3));
        let x = PhasedPauli::plain(idx(1, 0, 3));
        let zx = pauli_mul(&z, &x).unwrap();
        assert_eq!(zx.index, idx(1, 1, 3));
        assert_eq!(zx.phase, Phase::omega_pow(3, 1));

        let p = PhasedPauli::plain(idx(2, 1, 3));
        let r = pauli_mul(&p, &PhasedPauli::plain(PauliIndex::identity(3))).unwrap();
        assert_eq!(r.index, p.index);
        assert!(r.phase.is_one());

        let group: Vec<PhasedPauli> = pauli_group(3);
        let mut count = 0;
        for p in &group {
            for q in &group {
                let sym = pauli_mul(p, q).unwrap().matrix();
                let num = &p.matrix() * &q.matrix();
                assert!(distance(&sym, &num).unwrap() < 1e-12);
                count += 1;
            }
        }
        assert_eq!(count, 81);

        let bad = pauli_mul(&p, &PhasedPauli::plain(PauliIndex::identity(2)));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pauli_dagger_examples() {
        let id = PhasedPauli::plain(PauliIndex::identity(2));
        assert_eq!(pauli_dagger(&id).index, id.index);
        let xz = PhasedPauli::plain(idx(1, 1, 2));
        let dag = pauli_dagger(&xz);
        assert_eq!(dag.index, idx(1, 1, 2));
        assert!((dag.phase.value() + 1.0).norm() < 1e-15);
        assert!(distance(&(&dag.matrix() * &xz.matrix()), &SquareMatrix::identity(2)).unwrap() < 1e-14);
        for d in 2..=5 {
            for p in pauli_group(d) {
                let dag = pauli_dagger(&p);
                assert!(distance(&dag.matrix(), &p.matrix().dagger()).unwrap() < 1e-12);
                let prod = pauli_mul(&p, &dag).unwrap();
                assert!(prod.index.is_identity() && prod.phase.is_one());
            }
        }
    }

    #[test]
    fn su_generator_examples() {
        for d in 2..=5 {
            let (x, z) = su_generators(d).unwrap();
            assert!((determinant(x.matrix()).unwrap() - 1.0).norm() < 1e-12);
            assert!((determinant(z.matrix()).unwrap() - 1.0).norm() < 1e-12);
            let w = C64::from_polar(1.0, TAU / d as f64);
            let zx = z.matrix() * x.matrix();
            let xz = x.matrix() * z.matrix();
            assert!(distance(&zx, &xz.scale(w)).unwrap() < 1e-12);
            if d % 2 == 1 {
                assert!(distance(x.matrix(), &shift_x(d)).unwrap() < 1e-15);
            }
        }
        let (x2, _) = su_generators(2).unwrap();
        let zeta = x2.matrix()[(1, 0)];
        assert!((zeta * zeta + 1.0).norm() < 1e-15);
        let y = su_y();
        assert!(distance(y.matrix(), &sigma(idx(1, 1, 2))).unwrap() < 1e-15);
    }

    #[test]
    fn pauli_group_order() {
        let g = pauli_group(2);
        let got: Vec<(usize, usize)> = g.iter().map(|p| (p.index.n, p.index.m)).collect();
        assert_eq!(got, vec![(0, 1), (1, 0), (1, 1), (0, 0)]);
        for (d, len) in [(2, 4), (3, 9), (4, 16), (5, 25)] {
            let g = pauli_group(d);
            assert_eq!(g.len(), len);
            assert!(g.last().unwrap().index.is_identity());
        }
    }

    #[test]
    fn decompose_examples() {
        let v = pauli_decompose(&SquareMatrix::identity(3)).unwrap();
        assert!((v.get(0, 0) - 1.0).norm() < 1e-15);
        assert!(v.coeffs().iter().skip(1).all(|z| z.norm() < 1e-15));
        let m = &shift_x(2) + &clock_z(2).scale_re(0.1);
        let v = pauli_decompose(&m).unwrap();
        assert!((v.get(1, 0) - 1.0).norm() < 1e-15);
        assert!((v.get(0, 1) - 0.1).norm() < 1e-15);
        assert!(v.get(1, 1).norm() < 1e-15 && v.get(0, 0).norm() < 1e-15);
    }

    #[test]
    fn error_direction_suppressed_along_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=5 {
            let (x, z) = su_generators(d).unwrap();
            for eps in [1e-2, 1e-3] {
                for (g, (a, b)) in [(&x, (1, 0)), (&z, (0, 1))] {
                    for _ in 0..20 {
                        let e = random_traceless_hermitian(d, eps, &mut rng);
                        let gp = g.matrix() * exp_skew(&e).matrix();
                        let v = pauli_decompose(&(&gp - g.matrix())).unwrap();
                        assert!(v.get(a, b).norm() <= 5.0 * eps * eps, "d={d} eps={eps}");
                    }
                }
            }
        }
    }

    fn random_matrix(d: usize, seed: u64) -> SquareMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SquareMatrix::from_fn(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    proptest! {
        #[test]
        fn symbolic_product_matches_matrices(
            d in 2usize..=5, n1 in 0usize..5, m1 in 0usize..5, n2 in 0usize..5, m2 in 0usize..5,
            k1 in 0u64..400, k2 in 0u64..400,
        ) {
            let modulus = root_modulus(d);
            let p = PhasedPauli::new(idx(n1, m1, d), Phase::Root { k: k1 % modulus, modulus }).unwrap();
            let q = PhasedPauli::new(idx(n2, m2, d), Phase::Root { k: k2 % modulus, modulus }).unwrap();
            let sym = pauli_mul(&p, &q).unwrap().matrix();
            let num = &p.matrix() * &q.matrix();
            prop_assert!(distance(&sym, &num).unwrap() < 1e-12);
        }

        #[test]
        fn decompose_round_trip(seed in any::<u64>(), d in 2usize..=5) {
            let m = random_matrix(d, seed);
            let back = pauli_decompose(&m).unwrap().reconstruct();
            prop_assert!(distance(&m, &back).unwrap() < 1e-9);
        }
    }

    #[test]
    fn decompose_round_trip_4x4() {
        for seed in 0..20 {
            let m = random_matrix(4, seed);
            let back = pauli_decompose(&m).unwrap().reconstruct();
            assert!(distance(&m, &back).unwrap() < 1e-9);
        }
    }
}
