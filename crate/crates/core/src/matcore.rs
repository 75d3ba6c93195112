//! Dense complex square matrices and the SU(d) numerics built on them.
//!
//! Everything here is a pure function of immutable values. Dimensions are
//! small (2..=16) so storage is a flat row-major `Vec` and the eigensolver is
//! a cyclic complex Jacobi iteration.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default validation tolerance for unitarity, determinant and hermiticity checks.
pub const DEFAULT_TAU: f64 = 1e-9;

/// Largest dimension the eigensolver accepts.
pub const MAX_DIM: usize = 16;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Dense `dim × dim` complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries, validating shape and finiteness.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        let m = Self { dim, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("matrix rows are not square".into()));
        }
        Self::from_vec(dim, rows.iter().flatten().copied().collect())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let dim = entries.len();
        let mut m = Self::zeros(dim);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn scalar(dim: usize, z: C64) -> Self {
        Self::diag(&vec![z; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput("matrix has non-finite entries".into()))
        }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * z).collect() }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * x).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: usize) -> Self {
        let mut acc = Self::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        &(a * b) - &(b * a)
    }

    /// Left-to-right product of a non-empty list.
    pub fn product<'a>(dim: usize, factors: impl IntoIterator<Item = &'a SquareMatrix>) -> Self {
        factors.into_iter().fold(Self::identity(dim), |acc, m| &acc * m)
    }

    pub fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, got: other.dim })
        }
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale_re(0.5)
    }

    /// Anti-Hermitian part divided by i: `(M − M†)/2i`, itself Hermitian.
    pub fn skew_part(&self) -> Self {
        (self - &self.dagger()).scale(C64::new(0.0, -0.5))
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        self.scale_re(-1.0)
    }
}

/// Unitary matrix with unit determinant, carrying its validation residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecialUnitary {
    matrix: SquareMatrix,
    unitarity_residual: f64,
    det_residual: f64,
}

impl SpecialUnitary {
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_TAU)
    }

    pub fn with_tolerance(matrix: SquareMatrix, tau: f64) -> Result<Self> {
        matrix.check_finite()?;
        let unitarity_residual = unitarity_residual(&matrix)?;
        if unitarity_residual > tau {
            return Err(Error::NotUnitary { residual: unitarity_residual });
        }
        let det_residual = (determinant(&matrix)? - C64::new(1.0, 0.0)).norm();
        if det_residual > tau {
            return Err(Error::InvalidInput(format!(
                "determinant differs from 1 by {det_residual:.3e}"
            )));
        }
        Ok(Self { matrix, unitarity_residual, det_residual })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: SquareMatrix::identity(dim), unitarity_residual: 0.0, det_residual: 0.0 }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.unitarity_residual
    }

    pub fn det_residual(&self) -> f64 {
        self.det_residual
    }

    /// The inverse, which for a special unitary is the conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.dagger(),
            unitarity_residual: self.unitarity_residual,
            det_residual: self.det_residual,
        }
    }
}

impl AsRef<SquareMatrix> for SpecialUnitary {
    fn as_ref(&self) -> &SquareMatrix {
        &self.matrix
    }
}

/// Traceless Hermitian generator `H` of `e^{iH}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TracelessHermitian {
    matrix: SquareMatrix,
}

impl TracelessHermitian {
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_TAU)
    }

    pub fn with_tolerance(matrix: SquareMatrix, tau: f64) -> Result<Self> {
        matrix.check_finite()?;
        let hermiticity = op_norm(&(&matrix - &matrix.dagger()))?;
        let trace = matrix.trace().norm();
        if hermiticity > tau || trace > tau {
            return Err(Error::NotTracelessHermitian { hermiticity, trace });
        }
        Ok(Self { matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: SquareMatrix::zeros(dim) }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `‖U†U − I‖`.
pub fn unitarity_residual(m: &SquareMatrix) -> Result<f64> {
    let g = &m.dagger() * m;
    op_norm(&(&g - &SquareMatrix::identity(m.dim())))
}

/// Largest singular value.
///
/// Computed as the square root of the top eigenvalue of `M†M` (after scaling
/// `M` to unit max-entry), from a closed form at `d = 2` and Jacobi otherwise.
pub fn op_norm(m: &SquareMatrix) -> Result<f64> {
    m.check_finite()?;
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s = m.scale_re(1.0 / scale);
    let g = &s.dagger() * &s;
    let top = if g.dim() == 2 {
        let a = g[(0, 0)].re;
        let d = g[(1, 1)].re;
        let b = g[(0, 1)].norm();
        let half = 0.5 * (a - d);
        0.5 * (a + d) + (half * half + b * b).sqrt()
    } else {
        let (vals, _) = eigh(&g)?;
        vals.into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(top.max(0.0).sqrt() * scale)
}

/// Operator-norm distance `‖U − V‖`.
pub fn distance(u: &SquareMatrix, v: &SquareMatrix) -> Result<f64> {
    u.same_dim(v)?;
    op_norm(&(u - v))
}

/// Determinant by LU decomposition with partial pivoting.
pub fn determinant(m: &SquareMatrix) -> Result<C64> {
    m.check_finite()?;
    let n = m.dim();
    let mut a = m.data.clone();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p.norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
        }
    }
    Ok(det)
}

/// Matrix inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(m: &SquareMatrix) -> Result<SquareMatrix> {
    m.check_finite()?;
    let n = m.dim();
    let mut a = m.data.clone();
    let mut inv = SquareMatrix::identity(n).data;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p.norm() < 1e-300 {
            return Err(Error::InvalidInput("matrix is singular".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let pinv = p.inv();
        for k in 0..n {
            a[col * n + k] *= pinv;
            inv[col * n + k] *= pinv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f.norm() == 0.0 {
                continue;
            }
            for k in 0..n {
                let av = a[col * n + k];
                let iv = inv[col * n + k];
                a[row * n + k] -= f * av;
                inv[row * n + k] -= f * iv;
            }
        }
    }
    Ok(SquareMatrix { dim: n, data: inv })
}

/// Multiplies a unitary by the principal d-th root of its inverse determinant.
///
/// The phase is `exp(−i·arg(det M)/d)` with `arg ∈ (−π, π]`.
pub fn su_normalize(m: &SquareMatrix) -> Result<SpecialUnitary> {
    su_normalize_with(m, DEFAULT_TAU)
}

pub fn su_normalize_with(m: &SquareMatrix, tau: f64) -> Result<SpecialUnitary> {
    m.check_finite()?;
    let residual = unitarity_residual(m)?;
    if residual > tau {
        return Err(Error::NotUnitary { residual });
    }
    let det = determinant(m)?;
    // atan2 returns −π for a negative real with −0 imaginary part.
    let arg = if det.arg() <= -std::f64::consts::PI { std::f64::consts::PI } else { det.arg() };
    let zeta = C64::from_polar(1.0, -arg / m.dim() as f64);
    SpecialUnitary::with_tolerance(m.scale(zeta), tau)
}

/// Hermitian eigendecomposition by cyclic complex Jacobi sweeps.
///
/// Returns real eigenvalues (unsorted, matching columns) and a unitary whose
/// columns are the eigenvectors. The input is assumed Hermitian; only its
/// Hermitian part is used.
pub fn eigh(m: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    m.check_finite()?;
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let mut a = m.hermitian_part();
    let mut v = SquareMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }
    let vals = (0..n).map(|i| a[(i, i)].re).collect();
    Ok((vals, v))
}

fn jacobi_rotate(a: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let n = a.dim();
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let e = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ec = e.conj();
    // Columns: A ← A·G with G_pp = c, G_pq = s, G_qp = −s·ē, G_qq = c·ē.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * ec * s;
        a[(k, q)] = akp * s + akq * ec * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ec * s;
        v[(k, q)] = vkp * s + vkq * ec * c;
    }
    // Rows: A ← G†·A.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * e * s;
        a[(q, k)] = apk * s + aqk * e * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

/// Eigendecomposition of a normal matrix `M = VΛV†`.
///
/// `M` is split into commuting Hermitian parts `A = (M+M†)/2`, `B = (M−M†)/2i`
/// which are simultaneously diagonalized through a generic real combination
/// `A + tB`. A different mixing coefficient is tried if the reconstruction
/// check fails.
pub fn eig_normal(m: &SquareMatrix) -> Result<(Vec<C64>, SquareMatrix)> {
    m.check_finite()?;
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let md = m.dagger();
    let scale = m.frobenius_norm().max(1.0);
    let normality = op_norm(&(&(m * &md) - &(&md * m)))?;
    if normality > DEFAULT_TAU * scale * scale {
        return Err(Error::NotNormal { residual: normality });
    }
    let a = m.hermitian_part();
    let b = m.skew_part();
    for t in [0.618_033_988_749_894_9, -1.324_717_957_244_746, 2.414_213_562_373_095] {
        let c = &a + &b.scale_re(t);
        let (_, v) = eigh(&c)?;
        let t_mat = &(&v.dagger() * m) * &v;
        let vals: Vec<C64> = (0..n).map(|i| t_mat[(i, i)]).collect();
        let recon = &(&v * &SquareMatrix::diag(&vals)) * &v.dagger();
        if op_norm(&(&recon - m))? <= 1e-9 * scale {
            return Ok((vals, v));
        }
    }
    Err(Error::NonConvergence { sweeps: JACOBI_MAX_SWEEPS })
}

/// Principal logarithm of a special unitary near the identity: `U = e^{iH}`.
///
/// Requires `‖U − I‖ < 1`, which keeps every eigenphase inside `(−π/3, π/3)`.
pub fn log_unitary(u: &SpecialUnitary) -> Result<TracelessHermitian> {
    let m = u.matrix();
    let n = m.dim();
    let dist = distance(m, &SquareMatrix::identity(n))?;
    if dist >= 1.0 {
        let worst = eig_normal(m)
            .map(|(vals, _)| vals.iter().map(|z| z.arg()).fold(0.0f64, |acc, p| {
                if p.abs() > acc.abs() {
                    p
                } else {
                    acc
                }
            }))
            .unwrap_or(f64::NAN);
        return Err(Error::LogDomain(format!(
            "distance to identity {dist:.6} >= 1 (largest eigenphase {worst:.6})"
        )));
    }
    // sin(θ) is injective on the admissible phase range, so the skew part's
    // eigenbasis diagonalizes U.
    let (_, v) = eigh(&m.skew_part())?;
    let t_mat = &(&v.dagger() * m) * &v;
    let phases: Vec<f64> = (0..n).map(|i| t_mat[(i, i)].arg()).collect();
    let total: f64 = phases.iter().sum();
    if total.abs() > 1e-8 {
        return Err(Error::LogDomain(format!(
            "principal logarithm has trace {total:.6}, no traceless branch"
        )));
    }
    let diag: Vec<C64> = phases.iter().map(|&p| C64::new(p, 0.0)).collect();
    let h = &(&v * &SquareMatrix::diag(&diag)) * &v.dagger();
    let mut h = h.hermitian_part();
    let tr = h.trace() / n as f64;
    for i in 0..n {
        h[(i, i)] -= tr;
    }
    Ok(TracelessHermitian { matrix: h })
}

/// `e^{iH}` for traceless Hermitian `H`, through its eigendecomposition.
pub fn exp_skew(h: &TracelessHermitian) -> SpecialUnitary {
    let m = h.matrix();
    let n = m.dim();
    let (vals, v) = eigh(m).expect("Jacobi converges on validated Hermitian input");
    let phases: Vec<C64> = vals.iter().map(|&x| C64::from_polar(1.0, x)).collect();
    let u = &(&v * &SquareMatrix::diag(&phases)) * &v.dagger();
    let unitarity_residual = unitarity_residual(&u).unwrap_or(f64::INFINITY);
    let det_residual = determinant(&u)
        .map(|d| (d - C64::new(1.0, 0.0)).norm())
        .unwrap_or(f64::INFINITY);
    debug_assert_eq!(u.dim(), n);
    SpecialUnitary { matrix: u, unitarity_residual, det_residual }
}

/// General matrix exponential by scaling and squaring of a Taylor series.
///
/// Used for non-unitary (SL(d,ℂ)) operators; unitary code paths use [`exp_skew`].
pub fn expm(m: &SquareMatrix) -> SquareMatrix {
    let n = m.dim();
    let norm = m.frobenius_norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = m.scale_re(0.5f64.powi(squarings as i32));
    let mut term = SquareMatrix::identity(n);
    let mut sum = SquareMatrix::identity(n);
    for k in 1..=24 {
        term = (&term * &a).scale_re(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Haar-random element of SU(d): QR of a Ginibre matrix, then SU-normalized.
pub fn haar_special_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SpecialUnitary {
    let g = ginibre(dim, rng);
    let q = gram_schmidt(&g);
    su_normalize(&q).expect("Gram–Schmidt output is unitary")
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SquareMatrix {
    SquareMatrix::from_fn(dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Orthonormalizes the columns (modified Gram–Schmidt, positive `R` diagonal).
fn gram_schmidt(g: &SquareMatrix) -> SquareMatrix {
    let n = g.dim();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..n).map(|i| g[(i, j)]).collect()).collect();
    for j in 0..n {
        for i in 0..j {
            let (head, tail) = cols.split_at_mut(j);
            let qi = &head[i];
            let vj = &mut tail[0];
            let r: C64 = qi.iter().zip(vj.iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in vj.iter_mut().zip(qi) {
                *x -= r * y;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    SquareMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Random traceless Hermitian matrix with the given operator norm.
///
/// Drawn from the traceless GUE, so its direction is uniform on the unit
/// sphere of any orthonormal basis of traceless Hermitian matrices.
pub fn random_traceless_hermitian<R: Rng + ?Sized>(
    dim: usize,
    norm: f64,
    rng: &mut R,
) -> TracelessHermitian {
    loop {
        let g = ginibre(dim, rng);
        let mut h = g.hermitian_part();
        let tr = h.trace() / dim as f64;
        for i in 0..dim {
            h[(i, i)] -= tr;
        }
        let n = op_norm(&h).expect("finite");
        if n > 1e-12 {
            return TracelessHermitian { matrix: h.scale_re(norm / n) };
        }
    }
}

/// Random traceless (generally non-normal) matrix with the given operator norm.
pub fn random_traceless<R: Rng + ?Sized>(dim: usize, norm: f64, rng: &mut R) -> SquareMatrix {
    loop {
        let mut g = ginibre(dim, rng);
        let tr = g.trace() / dim as f64;
        for i in 0..dim {
            g[(i, i)] -= tr;
        }
        let n = op_norm(&g).expect("finite");
        if n > 1e-12 {
            return g.scale_re(norm / n);
        }
    }
}
