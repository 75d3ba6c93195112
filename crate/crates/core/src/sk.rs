//! Recursive compilers: classic (inverse-closed), irrep-assisted, and
//! inverse-free Solovay–Kitaev.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::balanced_commutator;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, loglog_fit, median};
use crate::focus::{compose, irrep_inverse, qubit_inverse, sud_inverse, ImplementedOperator, IrrepElement};
use crate::matcore::{
    distance, haar_special_unitary, su_normalize, SpecialUnitary, SquareMatrix, DEFAULT_TAU,
};
use crate::net::{EpsilonNet, GateSet, GateWord};
use crate::pauli::{pauli_group, su_generators, su_y};

/// Largest supported recursion depth.
pub const MAX_DEPTH: usize = 25;

/// Name of the padding letter appended after the gate set's letters.
pub const IDENTITY_LETTER: &str = "id";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Classic,
    Irrep,
    Ifsk,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Classic => "classic",
            Algorithm::Irrep => "irrep",
            Algorithm::Ifsk => "ifsk",
        }
    }

    /// Self-calls issued by one invocation above level 0.
    pub fn calls_per_level(self) -> usize {
        match self {
            Algorithm::Classic => 3,
            Algorithm::Irrep | Algorithm::Ifsk => 5,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Algorithm::Classic),
            "irrep" => Ok(Algorithm::Irrep),
            "ifsk" => Ok(Algorithm::Ifsk),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Which inverse factory the qubit case uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitFactory {
    /// Fifteen-block factory built from approximate `X` and `Y`.
    Xy,
    /// The dimension-generic factory built from approximate `X` and `Z`.
    Xz,
}

#[derive(Clone, Debug)]
pub struct SKConfig {
    pub algorithm: Algorithm,
    pub depth: usize,
    /// Largest certified net radius the driver accepts.
    pub epsilon0: f64,
    pub rng_seed: u64,
    pub memoize: bool,
    /// Pad every level-0 word to the net's maximum length with identity letters.
    pub padding: bool,
    pub qubit_factory: QubitFactory,
    /// Estimate `C` on probe targets and refuse depth > 1 unless `C·√ε₀ < 0.9`.
    pub handshake: bool,
    pub handshake_probes: usize,
}

impl SKConfig {
    pub fn new(algorithm: Algorithm, depth: usize, epsilon0: f64) -> Self {
        Self {
            algorithm,
            depth,
            epsilon0,
            rng_seed: 0,
            memoize: true,
            padding: false,
            qubit_factory: QubitFactory::Xy,
            handshake: true,
            handshake_probes: 10,
        }
    }
}

/// Per-level record along the `U_n → U_{n−1} → … → U_0` chain of one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub target_id: usize,
    pub algorithm: Algorithm,
    pub d: usize,
    pub level: usize,
    pub eps_n: f64,
    pub len_n: usize,
    pub recursive_calls: usize,
    pub wall_ms: f64,
    /// Longest level-(n−1) operand spliced into this level's word.
    #[serde(skip)]
    pub max_operand_len: usize,
    /// Lengths of the level-(n−1) operands, for the padded equality checks.
    #[serde(skip)]
    pub operand_lens: Vec<usize>,
}

/// One inverse-factory application at an ifsk level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseQuality {
    pub level: usize,
    /// `‖V̿†V − I‖`.
    pub factory_residual: f64,
    /// `‖V̄† − V†‖`.
    pub approx_error: f64,
    /// Largest error among the Pauli approximants fed to the factory.
    pub pauli_error: f64,
}

impl InverseQuality {
    /// `‖V̿†V − I‖ ≤ ‖V̄† − V†‖^{3/2}`.
    pub fn meets_gate(&self) -> bool {
        self.factory_residual <= self.approx_error.powf(1.5)
    }

    /// The same bound against the largest factory input error.
    pub fn meets_input_gate(&self) -> bool {
        self.factory_residual <= self.approx_error.max(self.pauli_error).powf(1.5)
    }
}

/// Call and cache counters for one compilation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CallStats {
    /// Invocations per level, excluding Pauli-cache builds.
    pub invocations: Vec<u64>,
    /// Direct self-calls issued by each invocation above level 0.
    pub direct_calls: Vec<usize>,
    pub memo_hits: u64,
    /// Compilations of Pauli generators triggered by this call.
    pub pauli_compilations: u64,
    pub inverse_quality: Vec<InverseQuality>,
}

impl CallStats {
    fn bump(&mut self, level: usize) {
        if self.invocations.len() <= level {
            self.invocations.resize(level + 1, 0);
        }
        self.invocations[level] += 1;
    }
}

#[derive(Clone, Debug)]
pub struct Compilation {
    pub op: ImplementedOperator,
    pub levels: Vec<LevelRecord>,
    pub stats: CallStats,
}

impl Compilation {
    pub fn error(&self) -> f64 {
        self.levels.last().map(|r| r.eps_n).unwrap_or(f64::NAN)
    }
}

/// Compiled Pauli generators at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliLevel {
    pub x: ImplementedOperator,
    pub z: ImplementedOperator,
    /// Present for qubits.
    pub y: Option<ImplementedOperator>,
}

/// Level `k` ↦ generators compiled at depth `k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliCache {
    pub levels: Vec<PauliLevel>,
}

#[derive(Serialize, Deserialize)]
struct PauliCacheDoc {
    gateset_fingerprint: String,
    padding: bool,
    levels: Vec<PauliLevelDoc>,
}

#[derive(Serialize, Deserialize)]
struct PauliLevelDoc {
    x: Vec<u32>,
    z: Vec<u32>,
    y: Option<Vec<u32>>,
}

/// Gate-set indices of the exact irrep and its daggers.
#[derive(Clone, Debug)]
pub struct IrrepGateSet {
    /// `(R(g), R(g)†)` gate indices in group order, identity excluded.
    pub elements: Vec<(u32, u32)>,
}

impl IrrepGateSet {
    /// Finds every non-identity Pauli element (up to phase) and its exact dagger.
    pub fn detect(gs: &GateSet) -> Result<Self> {
        let d = gs.dim();
        let mats = gs.matrices();
        let mut elements = Vec::new();
        for p in pauli_group(d).iter().filter(|p| !p.index.is_identity()) {
            let sigma = p.matrix();
            let found = mats.iter().position(|m| {
                let overlap = (&m.dagger() * &sigma).trace().norm() / d as f64;
                (overlap - 1.0).abs() <= DEFAULT_TAU
            });
            let label = format!("X^{}Z^{}", p.index.n(), p.index.m());
            let r = found.ok_or_else(|| Error::MissingIrrepElement(label.clone()))?;
            let rd = mats[r].dagger();
            let dag = mats
                .iter()
                .position(|m| distance(m, &rd).map(|x| x <= DEFAULT_TAU).unwrap_or(false))
                .ok_or_else(|| Error::MissingIrrepElement(format!("({label})†")))?;
            elements.push((r as u32, dag as u32));
        }
        Ok(Self { elements })
    }

    /// Group order `|G| = d²`.
    pub fn group_order(&self) -> usize {
        self.elements.len() + 1
    }
}

/// Dagger map of an inverse-closed gate set.
fn dagger_map(gs: &GateSet) -> Result<Vec<u32>> {
    let mats = gs.matrices();
    let mut out = Vec::with_capacity(mats.len() + 1);
    for (k, m) in mats.iter().enumerate() {
        let md = m.dagger();
        let j = mats
            .iter()
            .position(|c| distance(c, &md).map(|x| x <= DEFAULT_TAU).unwrap_or(false))
            .ok_or_else(|| Error::NotInverseClosed(gs.gates()[k].name.clone()))?;
        out.push(j as u32);
    }
    out.push(mats.len() as u32);
    Ok(out)
}

type MemoKey = (Vec<i64>, usize);

fn memo_key(m: &SquareMatrix, level: usize) -> MemoKey {
    let key = m.data().iter().flat_map(|z| [(z.re * 1e12).round() as i64, (z.im * 1e12).round() as i64]).collect();
    (key, level)
}

/// A compiler bound to one gate set and net.
pub struct Compiler {
    cfg: SKConfig,
    gs: GateSet,
    net: EpsilonNet,
    letters: Vec<SquareMatrix>,
    dagger: Option<Vec<u32>>,
    irrep: Option<IrrepGateSet>,
    memo: Mutex<HashMap<MemoKey, ImplementedOperator>>,
    pauli: Mutex<PauliCache>,
    calibration: Mutex<Option<f64>>,
}

impl Compiler {
    pub fn new(cfg: SKConfig, gs: GateSet, net: EpsilonNet) -> Result<Self> {
        if net.gateset_fingerprint() != gs.fingerprint() {
            return Err(Error::FingerprintMismatch);
        }
        if cfg.depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth {} exceeds {MAX_DEPTH}", cfg.depth)));
        }
        match net.certified_radius() {
            None => return Err(Error::Config("net has no certified radius".into())),
            Some((r, _)) if r > cfg.epsilon0 => {
                return Err(Error::Config(format!(
                    "net radius {r:.4} exceeds the configured epsilon0 {:.4}",
                    cfg.epsilon0
                )))
            }
            Some(_) => {}
        }
        let dagger = match cfg.algorithm {
            Algorithm::Classic => Some(dagger_map(&gs)?),
            _ => None,
        };
        let irrep = match cfg.algorithm {
            Algorithm::Irrep => Some(IrrepGateSet::detect(&gs)?),
            _ => None,
        };
        let mut letters = gs.matrices();
        letters.push(SquareMatrix::identity(gs.dim()));
        Ok(Self {
            cfg,
            gs,
            net,
            letters,
            dagger,
            irrep,
            memo: Mutex::new(HashMap::new()),
            pauli: Mutex::new(PauliCache::default()),
            calibration: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &SKConfig {
        &self.cfg
    }

    pub fn gateset(&self) -> &GateSet {
        &self.gs
    }

    pub fn net(&self) -> &EpsilonNet {
        &self.net
    }

    /// Gate matrices followed by the identity padding letter.
    pub fn letters(&self) -> &[SquareMatrix] {
        &self.letters
    }

    pub fn letter_name(&self, k: u32) -> &str {
        self.gs.gates().get(k as usize).map(|g| g.name.as_str()).unwrap_or(IDENTITY_LETTER)
    }

    pub fn names(&self, word: &GateWord) -> Vec<&str> {
        word.indices().iter().map(|&k| self.letter_name(k)).collect()
    }

    pub fn dim(&self) -> usize {
        self.gs.dim()
    }

    pub fn irrep(&self) -> Option<&IrrepGateSet> {
        self.irrep.as_ref()
    }

    pub fn pauli_cache(&self) -> PauliCache {
        self.pauli.lock().expect("pauli cache lock").clone()
    }

    /// Median of `ε₁/ε₀^{3/2}` over seeded Haar probes, computed once.
    pub fn calibrate(&self) -> Result<f64> {
        if let Some(c) = *self.calibration.lock().expect("calibration lock") {
            return Ok(c);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed ^ 0xc0ffee);
        let mut ratios = Vec::new();
        for _ in 0..self.cfg.handshake_probes.max(1) {
            let u = haar_special_unitary(self.dim(), &mut rng);
            // A probe whose commutator input leaves the solver's domain has no finite C.
            let c = match self.compile_unchecked(&u, 1) {
                Ok(c) => c,
                Err(Error::CommutatorDomain { .. }) => {
                    ratios.push(f64::INFINITY);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let e0 = c.levels[0].eps_n;
            let e1 = c.levels[1].eps_n;
            if e0 > 0.0 {
                ratios.push(e1 / e0.powf(1.5));
            }
        }
        let c = median(&ratios).unwrap_or(0.0);
        *self.calibration.lock().expect("calibration lock") = Some(c);
        Ok(c)
    }

    /// Compiles `u` to depth `n` (at most the configured depth unless raised here).
    pub fn compile(&self, u: &SpecialUnitary, n: usize) -> Result<Compilation> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.dim() });
        }
        if n > MAX_DEPTH {
            return Err(Error::Config(format!("depth {n} exceeds {MAX_DEPTH}")));
        }
        if n > 1 && self.cfg.handshake {
            let c = self.calibrate()?;
            if c * self.cfg.epsilon0.sqrt() >= 0.9 {
                return Err(Error::Config(format!(
                    "measured C = {c:.3} gives C*sqrt(epsilon0) = {:.3} >= 0.9; shrink the net radius",
                    c * self.cfg.epsilon0.sqrt()
                )));
            }
        }
        self.compile_unchecked(u, n)
    }

    fn compile_unchecked(&self, u: &SpecialUnitary, n: usize) -> Result<Compilation> {
        let mut stats = CallStats::default();
        let mut chain = Vec::new();
        let op = self.rec(u.matrix(), n, &mut stats, Some(&mut chain), false)?;
        chain.sort_by_key(|r: &LevelRecord| r.level);
        for r in chain.iter_mut() {
            r.algorithm = self.cfg.algorithm;
            r.d = self.dim();
        }
        Ok(Compilation { op, levels: chain, stats })
    }

    /// Pauli generators compiled up to `level`, built on demand.
    pub fn build_pauli_cache(&self, up_to_level: usize) -> Result<PauliCache> {
        let mut stats = CallStats::default();
        for k in 0..=up_to_level {
            self.pauli_level(k, &mut stats)?;
        }
        Ok(self.pauli_cache())
    }

    fn pauli_level(&self, k: usize, stats: &mut CallStats) -> Result<PauliLevel> {
        if let Some(l) = self.pauli.lock().expect("pauli cache lock").levels.get(k) {
            return Ok(l.clone());
        }
        for j in 0..k {
            self.pauli_level(j, stats)?;
        }
        let d = self.dim();
        let (x, z) = su_generators(d)?;
        let mut inner = CallStats::default();
        let xo = self.rec(x.matrix(), k, &mut inner, None, true)?;
        let zo = self.rec(z.matrix(), k, &mut inner, None, true)?;
        let yo = if d == 2 { Some(self.rec(su_y().matrix(), k, &mut inner, None, true)?) } else { None };
        stats.pauli_compilations += if d == 2 { 3 } else { 2 };
        stats.pauli_compilations += inner.pauli_compilations;
        let level = PauliLevel { x: xo, z: zo, y: yo };
        let mut cache = self.pauli.lock().expect("pauli cache lock");
        if cache.levels.len() == k {
            cache.levels.push(level.clone());
        }
        Ok(cache.levels[k].clone())
    }

    fn base_case(&self, target: &SquareMatrix) -> Result<ImplementedOperator> {
        let hit = self.net.query(target)?;
        let mut indices = hit.word.indices().to_vec();
        if self.cfg.padding {
            indices.resize(self.net.max_word_length().max(indices.len()), self.gs.len() as u32);
        }
        Ok(ImplementedOperator {
            word: GateWord::new(indices),
            value: hit.matrix,
            target: Some(target.clone()),
            err_bound: Some(hit.distance),
            alphabet: self.gs.alphabet_id(),
        })
    }

    fn rec(
        &self,
        target: &SquareMatrix,
        n: usize,
        stats: &mut CallStats,
        chain: Option<&mut Vec<LevelRecord>>,
        pauli_build: bool,
    ) -> Result<ImplementedOperator> {
        if !pauli_build {
            stats.bump(n);
        }
        let key = (self.cfg.memoize).then(|| memo_key(target, n));
        if chain.is_none() {
            if let Some(k) = &key {
                if let Some(hit) = self.memo.lock().expect("memo lock").get(k) {
                    stats.memo_hits += 1;
                    return Ok(hit.clone());
                }
            }
        }
        let start = Instant::now();
        let (op, direct, operand_lens, sub_chain) = if n == 0 {
            (self.base_case(target)?, 0, Vec::new(), None)
        } else {
            let mut sub = chain.is_some().then(Vec::new);
            let (op, direct, lens) = self.step(target, n, stats, sub.as_mut(), pauli_build)?;
            (op, direct, lens, sub)
        };
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        if let Some(chain) = chain {
            if let Some(sub) = sub_chain {
                chain.extend(sub);
            }
            chain.push(LevelRecord {
                target_id: 0,
                algorithm: self.cfg.algorithm,
                d: self.dim(),
                level: n,
                eps_n: distance(&op.value, target)?,
                len_n: op.len(),
                recursive_calls: direct,
                wall_ms,
                max_operand_len: operand_lens.iter().copied().max().unwrap_or(0),
                operand_lens,
            });
        }
        if !pauli_build && n > 0 {
            stats.direct_calls.push(direct);
        }
        if let Some(k) = key {
            self.memo.lock().expect("memo lock").entry(k).or_insert_with(|| op.clone());
        }
        Ok(op)
    }

    /// One recursion level; returns the operator, the number of self-calls,
    /// and the lengths of the level-(n−1) operands it spliced in.
    fn step(
        &self,
        target: &SquareMatrix,
        n: usize,
        stats: &mut CallStats,
        chain: Option<&mut Vec<LevelRecord>>,
        pauli_build: bool,
    ) -> Result<(ImplementedOperator, usize, Vec<usize>)> {
        let u_prev = self.rec(target, n - 1, stats, chain, pauli_build)?;
        let delta = su_normalize(&(target * &u_prev.value.dagger()))?;
        let pair = balanced_commutator(&delta)?;
        let v_prev = self.rec(pair.v.matrix(), n - 1, stats, None, pauli_build)?;
        let w_prev = self.rec(pair.w.matrix(), n - 1, stats, None, pauli_build)?;
        let mut direct = 3;
        let (v_inv, w_inv, extra_lens) = match self.cfg.algorithm {
            Algorithm::Classic => (self.word_dagger(&v_prev), self.word_dagger(&w_prev), Vec::new()),
            Algorithm::Irrep | Algorithm::Ifsk => {
                let vbar = self.rec(&v_prev.value.dagger(), n - 1, stats, None, pauli_build)?;
                let wbar = self.rec(&w_prev.value.dagger(), n - 1, stats, None, pauli_build)?;
                direct += 2;
                let mut lens = vec![vbar.len(), wbar.len()];
                let (vi, wi) = if self.cfg.algorithm == Algorithm::Irrep {
                    let reps = self.irrep_elements();
                    (irrep_inverse(&v_prev, &vbar, &reps)?, irrep_inverse(&w_prev, &wbar, &reps)?)
                } else {
                    let paulis = self.pauli_level(n - 1, stats)?;
                    lens.push(paulis.x.len());
                    lens.push(paulis.z.len());
                    if let Some(y) = &paulis.y {
                        lens.push(y.len());
                    }
                    let used_y = paulis.y.is_some() && self.cfg.qubit_factory == QubitFactory::Xy;
                    let pauli_error = [Some(&paulis.x), (!used_y).then_some(&paulis.z), paulis.y.as_ref().filter(|_| used_y)]
                        .into_iter()
                        .flatten()
                        .map(|p| p.err_bound.unwrap_or(f64::INFINITY))
                        .fold(0.0, f64::max);
                    let vi = self.ifsk_inverse(&v_prev, &vbar, &paulis)?;
                    let wi = self.ifsk_inverse(&w_prev, &wbar, &paulis)?;
                    for (orig, bar, fac) in [(&v_prev, &vbar, &vi), (&w_prev, &wbar, &wi)] {
                        stats.inverse_quality.push(InverseQuality {
                            level: n,
                            factory_residual: distance(
                                &(&fac.value * &orig.value),
                                &SquareMatrix::identity(self.dim()),
                            )?,
                            approx_error: distance(&bar.value, &orig.value.dagger())?,
                            pauli_error,
                        });
                    }
                    (vi, wi)
                };
                (vi, wi, lens)
            }
        };
        let mut lens = vec![u_prev.len(), v_prev.len(), w_prev.len()];
        lens.extend(extra_lens);
        let mut op = compose(&[&v_prev, &w_prev, &v_inv, &w_inv, &u_prev])?;
        op.target = Some(target.clone());
        op.err_bound = distance(&op.value, target).ok();
        Ok((op, direct, lens))
    }

    fn ifsk_inverse(
        &self,
        v: &ImplementedOperator,
        vbar: &ImplementedOperator,
        paulis: &PauliLevel,
    ) -> Result<ImplementedOperator> {
        match (&paulis.y, self.cfg.qubit_factory) {
            (Some(y), QubitFactory::Xy) => qubit_inverse(v, vbar, &paulis.x, y),
            _ => sud_inverse(v, vbar, &paulis.x, &paulis.z, self.dim()),
        }
    }

    fn irrep_elements(&self) -> Vec<IrrepElement> {
        let irrep = self.irrep.as_ref().expect("irrep detected at construction");
        let alphabet = self.gs.alphabet_id();
        let mut out: Vec<IrrepElement> = irrep
            .elements
            .iter()
            .map(|&(r, rd)| IrrepElement {
                rep: ImplementedOperator::letter(r, self.letters[r as usize].clone(), alphabet),
                rep_dagger: ImplementedOperator::letter(rd, self.letters[rd as usize].clone(), alphabet),
            })
            .collect();
        let id = ImplementedOperator::identity(self.dim(), alphabet);
        out.push(IrrepElement { rep: id.clone(), rep_dagger: id });
        out
    }

    /// Reversed word with every gate replaced by its dagger.
    fn word_dagger(&self, op: &ImplementedOperator) -> ImplementedOperator {
        let map = self.dagger.as_ref().expect("dagger map built at construction");
        let indices = op.word.indices().iter().rev().map(|&k| map[k as usize]).collect();
        ImplementedOperator {
            word: GateWord::new(indices),
            value: op.value.dagger(),
            target: None,
            err_bound: None,
            alphabet: op.alphabet,
        }
    }

    /// Writes the Pauli cache as JSON word lists.
    pub fn save_pauli_cache(&self, path: &Path) -> Result<()> {
        let cache = self.pauli_cache();
        let doc = PauliCacheDoc {
            gateset_fingerprint: self.gs.fingerprint_hex(),
            padding: self.cfg.padding,
            levels: cache
                .levels
                .iter()
                .map(|l| PauliLevelDoc {
                    x: l.x.word.indices().to_vec(),
                    z: l.z.word.indices().to_vec(),
                    y: l.y.as_ref().map(|y| y.word.indices().to_vec()),
                })
                .collect(),
        };
        std::fs::write(path, serde_json::to_vec_pretty(&doc)?)?;
        Ok(())
    }

    /// Loads a cache written by [`Compiler::save_pauli_cache`], re-evaluating every word.
    pub fn load_pauli_cache(&self, path: &Path) -> Result<()> {
        let doc: PauliCacheDoc = serde_json::from_slice(&std::fs::read(path)?)?;
        if doc.gateset_fingerprint != self.gs.fingerprint_hex() {
            return Err(Error::FingerprintMismatch);
        }
        if doc.padding != self.cfg.padding {
            return Err(Error::Config("Pauli cache padding mode differs from the configuration".into()));
        }
        let d = self.dim();
        let (xt, zt) = su_generators(d)?;
        let alphabet = self.gs.alphabet_id();
        let make = |w: &[u32], t: &SquareMatrix| -> Result<ImplementedOperator> {
            let word = GateWord::new(w.to_vec());
            let value = word.evaluate_or_identity(&self.letters, d)?;
            Ok(ImplementedOperator { word, value, target: None, err_bound: None, alphabet }.with_target(t.clone()))
        };
        let mut levels = Vec::new();
        for l in &doc.levels {
            levels.push(PauliLevel {
                x: make(&l.x, xt.matrix())?,
                z: make(&l.z, zt.matrix())?,
                y: match &l.y {
                    Some(y) => Some(make(y, su_y().matrix())?),
                    None => None,
                },
            });
        }
        *self.pauli.lock().expect("pauli cache lock") = PauliCache { levels };
        Ok(())
    }
}

/// Length identities a level record must satisfy.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthCheck {
    pub level: usize,
    pub len_n: usize,
    /// The bound (default mode) or exact value (padded mode) predicted from operand lengths.
    pub predicted: usize,
    pub exact: bool,
    pub holds: bool,
}

/// Predicted `ℓ_n` from a uniform operand length `ℓ`.
pub fn length_recursion(algorithm: Algorithm, d: usize, prev: usize, group_order: usize) -> usize {
    match algorithm {
        Algorithm::Classic => 5 * prev,
        Algorithm::Ifsk => (8 * d * d + 1) * prev,
        Algorithm::Irrep => (4 * group_order + 1) * prev + 2 * (group_order - 1),
    }
}

/// `ℓ_n` produced by the irrep factory as constructed: each of the two
/// factories contributes `2(|G|−1)` irrep letters.
pub fn irrep_length_as_built(prev: usize, group_order: usize) -> usize {
    (4 * group_order + 1) * prev + 4 * (group_order - 1)
}

/// Checks every level above 0: equality in padded mode, `≤` otherwise.
///
/// For the irrep algorithm `stated` selects the textbook recursion
/// `(4|G|+1)ℓ + 2(|G|−1)`; otherwise the as-built identity is used.
pub fn check_lengths(
    records: &[LevelRecord],
    padded: bool,
    group_order: usize,
    stated: bool,
) -> Vec<LengthCheck> {
    records
        .iter()
        .filter(|r| r.level > 0)
        .map(|r| {
            let prev = r.max_operand_len;
            let uniform = r.operand_lens.iter().all(|&l| l == prev);
            let predicted = match r.algorithm {
                Algorithm::Irrep if !stated => irrep_length_as_built(prev, group_order),
                a => length_recursion(a, r.d, prev, group_order),
            };
            let exact = padded && uniform;
            let holds = if exact { r.len_n == predicted } else { r.len_n <= predicted };
            LengthCheck { level: r.level, len_n: r.len_n, predicted, exact, holds }
        })
        .collect()
}

/// Fitted per-step exponent `p` in `ε_n ≈ C·ε_{n−1}^p` for one target's chain.
pub fn per_step_exponent(records: &[LevelRecord]) -> Option<f64> {
    let mut sorted: Vec<&LevelRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.level);
    let (xs, ys): (Vec<f64>, Vec<f64>) = sorted.windows(2).map(|w| (w[0].eps_n, w[1].eps_n)).unzip();
    if xs.len() == 1 {
        return (xs[0] > 0.0 && ys[0] > 0.0 && xs[0] < 1.0).then(|| ys[0].ln() / xs[0].ln());
    }
    loglog_fit(&xs, &ys).map(|f| f.slope)
}

/// Aggregate statistics of a benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub algorithm: Algorithm,
    pub d: usize,
    pub targets: usize,
    pub depth: usize,
    /// Median of `ε_n / ε_{n−1}^{3/2}` over all steps.
    pub fitted_c: f64,
    /// Median over targets of the per-target fitted exponent.
    pub per_step_exponent: f64,
    /// Slope of `log ℓ_n` against `log log(1/ε_n)`.
    pub gamma_estimate: f64,
    pub gamma_stderr: f64,
    pub monotone_targets: usize,
}

#[derive(Clone, Debug)]
pub struct BenchmarkResult {
    pub records: Vec<LevelRecord>,
    pub summary: BenchmarkSummary,
    pub compilations: Vec<Compilation>,
}

/// Compiles every target to the configured depth, in parallel over targets.
pub fn run_benchmark(compiler: &Compiler, targets: &[SpecialUnitary]) -> Result<BenchmarkResult> {
    let depth = compiler.config().depth;
    if depth > 0 {
        compiler.build_pauli_cache_if_needed(depth - 1)?;
        if depth > 1 && compiler.config().handshake {
            compiler.calibrate()?;
        }
    }
    let compilations = targets
        .par_iter()
        .map(|t| compiler.compile(t, depth))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for (i, c) in compilations.iter().enumerate() {
        for r in &c.levels {
            let mut r = r.clone();
            r.target_id = i;
            records.push(r);
        }
    }
    let summary = summarize(compiler, &compilations);
    Ok(BenchmarkResult { records, summary, compilations })
}

impl Compiler {
    fn build_pauli_cache_if_needed(&self, level: usize) -> Result<()> {
        if self.cfg.algorithm == Algorithm::Ifsk {
            self.build_pauli_cache(level)?;
        }
        Ok(())
    }
}

fn summarize(compiler: &Compiler, compilations: &[Compilation]) -> BenchmarkSummary {
    let mut ratios = Vec::new();
    let mut exps = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut monotone = 0;
    for c in compilations {
        let levels = &c.levels;
        for w in levels.windows(2) {
            if w[0].eps_n > 0.0 {
                ratios.push(w[1].eps_n / w[0].eps_n.powf(1.5));
            }
        }
        if levels.windows(2).all(|w| w[1].eps_n < w[0].eps_n) {
            monotone += 1;
        }
        if let Some(p) = per_step_exponent(levels) {
            exps.push(p);
        }
        for r in levels.iter().filter(|r| r.level > 0 && r.eps_n > 0.0 && r.eps_n < 1.0) {
            xs.push((1.0 / r.eps_n).ln().ln());
            ys.push((r.len_n as f64).ln());
        }
    }
    let gamma = linear_fit(&xs, &ys);
    BenchmarkSummary {
        algorithm: compiler.config().algorithm,
        d: compiler.dim(),
        targets: compilations.len(),
        depth: compiler.config().depth,
        fitted_c: median(&ratios).unwrap_or(f64::NAN),
        per_step_exponent: median(&exps).unwrap_or(f64::NAN),
        gamma_estimate: gamma.map(|f| f.slope).unwrap_or(f64::NAN),
        gamma_stderr: gamma.map(|f| f.slope_stderr).unwrap_or(f64::NAN),
        monotone_targets: monotone,
    }
}

/// Writes the per-level CSV.
pub fn write_level_csv(path: &Path, records: &[LevelRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["target_id", "algorithm", "d", "level", "eps_n", "len_n", "recursive_calls", "wall_ms"])?;
    for r in records {
        w.write_record([
            r.target_id.to_string(),
            r.algorithm.name().to_string(),
            r.d.to_string(),
            r.level.to_string(),
            format!("{:.6e}", r.eps_n),
            r.len_n.to_string(),
            r.recursive_calls.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one summary row per run.
pub fn write_summary_csv(path: &Path, summaries: &[BenchmarkSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "algorithm",
        "d",
        "targets",
        "depth",
        "fitted_c",
        "per_step_exponent",
        "gamma_estimate",
        "gamma_stderr",
        "monotone_targets",
    ])?;
    for s in summaries {
        w.write_record([
            s.algorithm.name().to_string(),
            s.d.to_string(),
            s.targets.to_string(),
            s.depth.to_string(),
            format!("{:.6}", s.fitted_c),
            format!("{:.6}", s.per_step_exponent),
            format!("{:.6}", s.gamma_estimate),
            format!("{:.6}", s.gamma_stderr),
            s.monotone_targets.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
