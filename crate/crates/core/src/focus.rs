//! Self-correcting sequences, group twirls and inverse factories.
//!
//! All constructions act on [`ImplementedOperator`]s so that every output
//! carries the gate word that realizes it.

use crate::error::{Error, Result};
use crate::matcore::{distance, SpecialUnitary, SquareMatrix, DEFAULT_TAU};
use crate::net::GateWord;

/// A gate word together with its evaluated matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplementedOperator {
    pub word: GateWord,
    pub value: SquareMatrix,
    /// The operator this word is meant to approximate, if known.
    pub target: Option<SquareMatrix>,
    pub err_bound: Option<f64>,
    /// Identifies the letter table the word indexes into.
    pub alphabet: u64,
}

impl ImplementedOperator {
    /// Single-letter word.
    pub fn letter(index: u32, value: SquareMatrix, alphabet: u64) -> Self {
        Self { word: GateWord::new(vec![index]), value, target: None, err_bound: None, alphabet }
    }

    /// Empty word, evaluating to the identity.
    pub fn identity(dim: usize, alphabet: u64) -> Self {
        Self {
            word: GateWord::empty(),
            value: SquareMatrix::identity(dim),
            target: None,
            err_bound: None,
            alphabet,
        }
    }

    /// Evaluates `word` against a letter table.
    pub fn from_word(word: GateWord, letters: &[SquareMatrix], alphabet: u64) -> Result<Self> {
        let value = word.evaluate(letters)?;
        Ok(Self { word, value, target: None, err_bound: None, alphabet })
    }

    pub fn with_target(mut self, target: SquareMatrix) -> Self {
        self.err_bound = distance(&self.value, &target).ok();
        self.target = Some(target);
        self
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.value.dim()
    }

    /// Distance between the word's product and the stored value; errors if
    /// it exceeds `1e-9 · max(1, length)`.
    pub fn verify(&self, letters: &[SquareMatrix]) -> Result<f64> {
        let recomputed = self.word.evaluate_or_identity(letters, self.dim())?;
        let residual = distance(&recomputed, &self.value)?;
        if residual > 1e-9 * self.len().max(1) as f64 {
            return Err(Error::WordMismatch(format!(
                "word of length {} differs from its value by {residual:.3e}",
                self.len()
            )));
        }
        Ok(residual)
    }

    /// `self^k`.
    pub fn repeat(&self, k: usize) -> Self {
        let mut indices = Vec::with_capacity(self.len() * k);
        for _ in 0..k {
            indices.extend_from_slice(self.word.indices());
        }
        Self {
            word: GateWord::new(indices),
            value: self.value.pow(k),
            target: None,
            err_bound: None,
            alphabet: self.alphabet,
        }
    }
}

/// Concatenates words and multiplies values left to right.
pub fn compose(ops: &[&ImplementedOperator]) -> Result<ImplementedOperator> {
    let first = ops.first().ok_or_else(|| Error::InvalidInput("compose of no operators".into()))?;
    if ops.len() == 1 {
        return Ok((*first).clone());
    }
    let dim = first.dim();
    let total: usize = ops.iter().map(|o| o.len()).sum();
    let mut indices = Vec::with_capacity(total);
    let mut value = SquareMatrix::identity(dim);
    for op in ops {
        if op.alphabet != first.alphabet {
            return Err(Error::MixedAlphabets);
        }
        op.value.same_dim(&first.value)?;
        indices.extend_from_slice(op.word.indices());
        value = &value * &op.value;
    }
    Ok(ImplementedOperator {
        word: GateWord::new(indices),
        value,
        target: None,
        err_bound: None,
        alphabet: first.alphabet,
    })
}

/// `Σ_g R(g) A R(g)†`.
pub fn twirl_sum(reps: &[SpecialUnitary], a: &SquareMatrix) -> SquareMatrix {
    let mut out = SquareMatrix::zeros(a.dim());
    for r in reps {
        let term = &(r.matrix() * a) * &r.matrix().dagger();
        out = &out + &term;
    }
    out
}

/// `X′Y′X′Y′²X′Y′X′`.
pub fn j2_sequence(xp: &ImplementedOperator, yp: &ImplementedOperator) -> Result<ImplementedOperator> {
    require_dim(xp, 2)?;
    require_dim(yp, 2)?;
    compose(&[xp, yp, xp, yp, yp, xp, yp, xp])
}

/// `[AᵈB]^{d−1} A [BᵈA]^{d−1} B`, `2d²` letters in `A` and `B`.
pub fn jd_sequence(a: &ImplementedOperator, b: &ImplementedOperator, d: usize) -> Result<ImplementedOperator> {
    require_dim(a, d)?;
    require_dim(b, d)?;
    let mut seq: Vec<&ImplementedOperator> = Vec::with_capacity(2 * d * d);
    for _ in 0..d - 1 {
        seq.extend(std::iter::repeat_n(a, d));
        seq.push(b);
    }
    seq.push(a);
    for _ in 0..d - 1 {
        seq.extend(std::iter::repeat_n(b, d));
        seq.push(a);
    }
    seq.push(b);
    compose(&seq)
}

/// `[Z′X′ᵈ]^{d−1} Z′ [X′Z′ᵈ]^{d−1} X′`.
pub fn jd_alt_sequence(zp: &ImplementedOperator, xp: &ImplementedOperator, d: usize) -> Result<ImplementedOperator> {
    require_dim(zp, d)?;
    require_dim(xp, d)?;
    let mut seq: Vec<&ImplementedOperator> = Vec::with_capacity(2 * d * d);
    for _ in 0..d - 1 {
        seq.push(zp);
        seq.extend(std::iter::repeat_n(xp, d));
    }
    seq.push(zp);
    for _ in 0..d - 1 {
        seq.push(xp);
        seq.extend(std::iter::repeat_n(zp, d));
    }
    seq.push(xp);
    compose(&seq)
}

/// An irrep element realized as a word, paired with a word for its exact dagger.
#[derive(Clone, Debug)]
pub struct IrrepElement {
    pub rep: ImplementedOperator,
    pub rep_dagger: ImplementedOperator,
}

/// `[∏_{g≠id} R(g) V̄†V R(g)†] V̄†`.
///
/// `reps` must list the group with the identity last; the identity is skipped.
pub fn irrep_inverse(
    v: &ImplementedOperator,
    vinv_approx: &ImplementedOperator,
    reps: &[IrrepElement],
) -> Result<ImplementedOperator> {
    let d = v.dim();
    let Some((last, rest)) = reps.split_last() else {
        return Err(Error::InvalidInput("empty irrep list".into()));
    };
    let id = SquareMatrix::identity(d);
    if distance(&last.rep.value, &id)? > DEFAULT_TAU {
        return Err(Error::InvalidInput("irrep list must end with the identity".into()));
    }
    for (k, el) in reps.iter().enumerate() {
        let residual = distance(&(&el.rep.value * &el.rep_dagger.value), &id)?;
        if residual > DEFAULT_TAU {
            return Err(Error::InvalidInput(format!(
                "irrep element {k} and its dagger multiply to I only within {residual:.3e}"
            )));
        }
    }
    let mut seq: Vec<&ImplementedOperator> = Vec::with_capacity(4 * rest.len() + 1);
    for el in rest {
        seq.extend([&el.rep, vinv_approx, v, &el.rep_dagger]);
    }
    seq.push(vinv_approx);
    compose(&seq)
}

/// `X′(V̄†V)Y′X′(V̄†V)Y′²X′(V̄†V)Y′X′V̄†`, fifteen blocks.
pub fn qubit_inverse(
    v: &ImplementedOperator,
    vinv_approx: &ImplementedOperator,
    xp: &ImplementedOperator,
    yp: &ImplementedOperator,
) -> Result<ImplementedOperator> {
    for op in [v, vinv_approx, xp, yp] {
        require_dim(op, 2)?;
    }
    let (w, vv) = (vinv_approx, v);
    compose(&[xp, w, vv, yp, xp, w, vv, yp, yp, xp, w, vv, yp, xp, w])
}

/// `[X′ᵈ(Z′V̄†V)]^{d−1} X′ [(Z′V̄†V)ᵈX′]^{d−1} Z′V̄†`, `4d² − 1` blocks.
pub fn sud_inverse(
    v: &ImplementedOperator,
    vinv_approx: &ImplementedOperator,
    xp: &ImplementedOperator,
    zp: &ImplementedOperator,
    d: usize,
) -> Result<ImplementedOperator> {
    for op in [v, vinv_approx, xp, zp] {
        require_dim(op, d)?;
    }
    let b: [&ImplementedOperator; 3] = [zp, vinv_approx, v];
    let mut seq: Vec<&ImplementedOperator> = Vec::with_capacity(4 * d * d);
    for _ in 0..d - 1 {
        seq.extend(std::iter::repeat_n(xp, d));
        seq.extend(b);
    }
    seq.push(xp);
    for _ in 0..d - 1 {
        for _ in 0..d {
            seq.extend(b);
        }
        seq.push(xp);
    }
    seq.extend([zp, vinv_approx]);
    compose(&seq)
}

/// Number of blocks in [`sud_inverse`].
pub fn sud_inverse_blocks(d: usize) -> usize {
    4 * d * d - 1
}

/// Number of blocks in [`qubit_inverse`].
pub const QUBIT_INVERSE_BLOCKS: usize = 15;

fn require_dim(op: &ImplementedOperator, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension {d} < 2")));
    }
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: op.dim() });
    }
    Ok(())
}
