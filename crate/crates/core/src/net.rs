//! Gate sets, gate words, and the ε-net used as the recursion's base case.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pauli::pauli_group;
use crate::matcore::{
    haar_special_unitary, op_norm, su_normalize, unitarity_residual, SpecialUnitary, SquareMatrix,
    C64, DEFAULT_TAU, MAX_DIM,
};

/// Default limit on the number of net entries.
pub const DEFAULT_NET_CAP: usize = 5_000_000;

const NET_MAGIC: &[u8; 8] = b"IFSKNET\0";
const NET_FORMAT_VERSION: u32 = 1;
const LOAD_CHECK_SAMPLES: usize = 100;

/// A sequence of gate indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GateWord {
    indices: Vec<u32>,
}

impl GateWord {
    pub fn new(indices: Vec<u32>) -> Self {
        Self { indices }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Left-to-right product of the named letters. Errors on the empty word.
    pub fn evaluate(&self, letters: &[SquareMatrix]) -> Result<SquareMatrix> {
        let dim = letters
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::InvalidInput("empty letter table".into()))?;
        if self.indices.is_empty() {
            return Err(Error::InvalidInput("cannot infer the value of an empty word".into()));
        }
        self.evaluate_or_identity(letters, dim)
    }

    pub fn evaluate_or_identity(&self, letters: &[SquareMatrix], dim: usize) -> Result<SquareMatrix> {
        let mut acc = SquareMatrix::identity(dim);
        for &k in &self.indices {
            let m = letters.get(k as usize).ok_or_else(|| {
                Error::InvalidInput(format!("letter {k} outside table of {}", letters.len()))
            })?;
            acc = &acc * m;
        }
        Ok(acc)
    }
}

/// A named generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub matrix: SpecialUnitary,
    /// Scalar the input matrix was multiplied by to reach unit determinant.
    pub normalization: C64,
}

/// Finite list of SU(d) generators.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    dim: usize,
    gates: Vec<Gate>,
    pub source_path: Option<String>,
    fingerprint: [u8; 32],
}

#[derive(Serialize, Deserialize)]
struct GateDoc {
    name: String,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct GateSetDoc {
    dim: usize,
    gates: Vec<GateDoc>,
}

#[derive(Serialize, Deserialize)]
struct TargetDoc {
    dim: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn matrix_from_doc(dim: usize, rows: &[Vec<[f64; 2]>]) -> Result<SquareMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::GateSet(format!("matrix is not {dim}x{dim}")));
    }
    let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    SquareMatrix::from_vec(dim, data)
}

fn matrix_to_doc(m: &SquareMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl GateSet {
    /// Validates and SU-normalizes named unitaries.
    pub fn from_matrices(dim: usize, gates: Vec<(String, SquareMatrix)>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::GateSet(format!("dimension {dim} outside 2..={MAX_DIM}")));
        }
        if gates.is_empty() {
            return Err(Error::GateSet("gate list is empty".into()));
        }
        if gates.len() > u32::MAX as usize / 2 {
            return Err(Error::GateSet("too many gates".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(gates.len());
        for (name, m) in gates {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::GateSet(format!("invalid gate name {name:?}")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::GateSet(format!("duplicate gate name {name:?}")));
            }
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
            }
            let residual = unitarity_residual(&m)?;
            if residual > DEFAULT_TAU {
                return Err(Error::GateNotUnitary { name, residual });
            }
            let su = su_normalize(&m)?;
            let normalization = phase_ratio(su.matrix(), &m);
            out.push(Gate { name, matrix: su, normalization });
        }
        let fingerprint = fingerprint_of(dim, &out);
        Ok(Self { dim, gates: out, source_path: None, fingerprint })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint)
    }

    /// Short identifier for words over this set.
    pub fn alphabet_id(&self) -> u64 {
        u64::from_le_bytes(self.fingerprint[..8].try_into().expect("8 bytes"))
    }

    pub fn matrices(&self) -> Vec<SquareMatrix> {
        self.gates.iter().map(|g| g.matrix.matrix().clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.name == name)
    }

    pub fn names(&self, word: &GateWord) -> Vec<&str> {
        word.indices().iter().map(|&k| self.gates[k as usize].name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = GateSetDoc {
            dim: self.dim,
            gates: self
                .gates
                .iter()
                .map(|g| GateDoc { name: g.name.clone(), matrix: matrix_to_doc(g.matrix.matrix()) })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    /// Rotations by 1 rad about the Bloch-sphere ẑ and x̂ axes, no inverses.
    pub fn two_rotation_qubit() -> Self {
        Self::from_matrices(2, vec![("rz".into(), rz(1.0)), ("rx".into(), rx(1.0))])
            .expect("rotations are unitary")
    }

    /// The two rotations plus their exact inverses.
    pub fn two_rotation_qubit_with_inverses() -> Self {
        Self::from_matrices(
            2,
            vec![
                ("rz".into(), rz(1.0)),
                ("rx".into(), rx(1.0)),
                ("rzdg".into(), rz(-1.0)),
                ("rxdg".into(), rx(-1.0)),
            ],
        )
        .expect("rotations are unitary")
    }

    /// This set plus every non-identity generalized Pauli `σ(n,m)` and its
    /// dagger, named `pauli_n_m` and `pauli_n_m_dg`.
    pub fn with_pauli_irrep(&self) -> Result<Self> {
        let mut gates: Vec<(String, SquareMatrix)> =
            self.gates.iter().map(|g| (g.name.clone(), g.matrix.matrix().clone())).collect();
        for p in pauli_group(self.dim).into_iter().filter(|p| !p.index.is_identity()) {
            let su = su_normalize(&p.matrix())?;
            let (n, m) = (p.index.n(), p.index.m());
            gates.push((format!("pauli_{n}_{m}_dg"), su.dagger().into_matrix()));
            gates.insert(gates.len() - 1, (format!("pauli_{n}_{m}"), su.into_matrix()));
        }
        Self::from_matrices(self.dim, gates)
    }
}

fn phase_ratio(su: &SquareMatrix, m: &SquareMatrix) -> C64 {
    let (i, _) = m
        .data()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty");
    su.data()[i] / m.data()[i]
}

/// `exp(−iθZ/2)`.
pub fn rz(theta: f64) -> SquareMatrix {
    SquareMatrix::diag(&[C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0)])
}

/// `exp(−iθX/2)`.
pub fn rx(theta: f64) -> SquareMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    SquareMatrix::from_fn(2, |i, j| if i == j { C64::new(c, 0.0) } else { C64::new(0.0, -s) })
}

fn fingerprint_of(dim: usize, gates: &[Gate]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ifsk-gateset-v1");
    h.update((dim as u32).to_le_bytes());
    h.update((gates.len() as u32).to_le_bytes());
    for g in gates {
        h.update((g.name.len() as u32).to_le_bytes());
        h.update(g.name.as_bytes());
        for z in g.matrix.matrix().data() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    h.finalize().into()
}

/// Parses and validates a gate-set document.
pub fn load_gateset(bytes: &[u8]) -> Result<GateSet> {
    let doc: GateSetDoc = serde_json::from_slice(bytes)?;
    if !(2..=MAX_DIM).contains(&doc.dim) {
        return Err(Error::GateSet(format!("dimension {} outside 2..={MAX_DIM}", doc.dim)));
    }
    let gates = doc
        .gates
        .iter()
        .map(|g| Ok((g.name.clone(), matrix_from_doc(doc.dim, &g.matrix)?)))
        .collect::<Result<Vec<_>>>()?;
    GateSet::from_matrices(doc.dim, gates)
}

pub fn load_gateset_file(path: &Path) -> Result<GateSet> {
    let bytes = std::fs::read(path)?;
    let mut gs = load_gateset(&bytes)?;
    gs.source_path = Some(path.display().to_string());
    Ok(gs)
}

/// Parses a single-matrix target document and SU-normalizes it.
pub fn load_target(bytes: &[u8]) -> Result<SpecialUnitary> {
    let doc: TargetDoc = serde_json::from_slice(bytes)?;
    let m = matrix_from_doc(doc.dim, &doc.matrix)?;
    su_normalize(&m)
}

pub fn target_to_json(m: &SquareMatrix) -> String {
    serde_json::to_string_pretty(&TargetDoc { dim: m.dim(), matrix: matrix_to_doc(m) }).expect("serializable")
}

/// Result of a nearest-neighbor lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct NetHit {
    pub index: usize,
    pub word: GateWord,
    pub matrix: SquareMatrix,
    pub distance: f64,
}

/// Enumerated gate words covering SU(d), with their matrices.
///
/// Words are stored as a prefix tree: entry `i` is the word of `parent[i]`
/// followed by gate `last[i]`. Entry 0 is the empty word.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonNet {
    dim: usize,
    gateset_fingerprint: [u8; 32],
    max_word_length: usize,
    dedup_radius: f64,
    parent: Vec<u32>,
    last: Vec<u32>,
    lengths: Vec<u32>,
    /// `2d²` floats per entry: row-major `(re, im)` pairs.
    values: Vec<f64>,
    certified: Option<(f64, usize)>,
}

const NO_PARENT: u32 = u32::MAX;

impl EpsilonNet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn gateset_fingerprint(&self) -> [u8; 32] {
        self.gateset_fingerprint
    }

    pub fn max_word_length(&self) -> usize {
        self.max_word_length
    }

    pub fn dedup_radius(&self) -> f64 {
        self.dedup_radius
    }

    /// Sampled covering radius and the number of samples behind it.
    pub fn certified_radius(&self) -> Option<(f64, usize)> {
        self.certified
    }

    pub fn word_len(&self, i: usize) -> usize {
        self.lengths[i] as usize
    }

    pub fn word(&self, i: usize) -> GateWord {
        let mut out = vec![0u32; self.lengths[i] as usize];
        let mut k = i;
        let mut pos = out.len();
        while self.parent[k] != NO_PARENT {
            pos -= 1;
            out[pos] = self.last[k];
            k = self.parent[k] as usize;
        }
        GateWord::new(out)
    }

    pub fn matrix(&self, i: usize) -> SquareMatrix {
        let s = 2 * self.dim * self.dim;
        flat_to_matrix(&self.values[i * s..(i + 1) * s], self.dim)
    }

    /// Nearest stored entry; ties go to the shorter word, then the lower index.
    pub fn query(&self, u: &SquareMatrix) -> Result<NetHit> {
        if self.is_empty() {
            return Err(Error::EmptyNet);
        }
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.dim() });
        }
        let d = self.dim;
        let s = 2 * d * d;
        let target = matrix_to_flat(u);
        let frob: Vec<f64> = self
            .values
            .par_chunks_exact(s)
            .map(|e| e.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect();
        // ‖M‖_F/√d ≤ ‖M‖ ≤ ‖M‖_F prunes every entry that cannot beat the
        // Frobenius-nearest one.
        let (_, best_f) = frob
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &f)| (i, f))
            .expect("non-empty");
        let bound = best_f.sqrt();
        let cutoff = (bound * (d as f64).sqrt()) * (1.0 + 1e-12) + 1e-300;
        let mut best: Option<(f64, u32, usize)> = None;
        for (i, &f) in frob.iter().enumerate() {
            if f.sqrt() > cutoff {
                continue;
            }
            let dist = flat_distance(&self.values[i * s..(i + 1) * s], &target, d)?;
            let key = (dist, self.lengths[i], i);
            let better = match best {
                None => true,
                Some(b) => key.0 < b.0 || (key.0 == b.0 && (key.1, key.2) < (b.1, b.2)),
            };
            if better {
                best = Some(key);
            }
        }
        let (distance, _, index) = best.expect("at least the Frobenius minimizer survives");
        Ok(NetHit { index, word: self.word(index), matrix: self.matrix(index), distance })
    }

    /// Largest query distance over `samples` Haar-random targets.
    pub fn certify_radius(&mut self, samples: usize, seed: u64) -> Result<f64> {
        if samples == 0 {
            return Err(Error::InvalidInput("certification needs at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<SpecialUnitary> =
            (0..samples).map(|_| haar_special_unitary(self.dim, &mut rng)).collect();
        let dists = targets
            .iter()
            .map(|t| self.query(t.matrix()).map(|h| h.distance))
            .collect::<Result<Vec<f64>>>()?;
        let radius = dists.into_iter().fold(0.0, f64::max);
        self.certified = Some((radius, samples));
        Ok(radius)
    }

    /// Checks that entry `i`'s matrix equals the product of its word.
    pub fn check_entry(&self, i: usize, gs: &GateSet) -> Result<()> {
        let letters = gs.matrices();
        let w = self.word(i);
        let m = w.evaluate_or_identity(&letters, self.dim)?;
        let residual = crate::matcore::distance(&m, &self.matrix(i))?;
        if residual.is_nan() || residual > 1e-9 * w.len().max(1) as f64 {
            return Err(Error::NetEntryInconsistent { index: i, residual });
        }
        Ok(())
    }
}

fn matrix_to_flat(m: &SquareMatrix) -> Vec<f64> {
    m.data().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn flat_to_matrix(v: &[f64], d: usize) -> SquareMatrix {
    SquareMatrix::from_fn(d, |i, j| {
        let k = 2 * (i * d + j);
        C64::new(v[k], v[k + 1])
    })
}

fn flat_mul(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..d {
                let (ar, ai) = (a[2 * (i * d + k)], a[2 * (i * d + k) + 1]);
                let (br, bi) = (b[2 * (k * d + j)], b[2 * (k * d + j) + 1]);
                re += ar * br - ai * bi;
                im += ar * bi + ai * br;
            }
            out[2 * (i * d + j)] = re;
            out[2 * (i * d + j) + 1] = im;
        }
    }
}

/// `‖A − B‖` on flat storage, with the 2×2 case in closed form.
fn flat_distance(a: &[f64], b: &[f64], d: usize) -> Result<f64> {
    if d == 2 {
        let m: [C64; 4] =
            std::array::from_fn(|k| C64::new(a[2 * k] - b[2 * k], a[2 * k + 1] - b[2 * k + 1]));
        let p = m[0].norm_sqr() + m[2].norm_sqr();
        let q = m[1].norm_sqr() + m[3].norm_sqr();
        let r = (m[0].conj() * m[1] + m[2].conj() * m[3]).norm();
        let half = 0.5 * (p - q);
        return Ok((0.5 * (p + q) + (half * half + r * r).sqrt()).max(0.0).sqrt());
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    op_norm(&flat_to_matrix(&diff, d))
}

/// Spatial hash over the first three real coordinates of the top row.
struct DedupIndex {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<u32>>,
}

impl DedupIndex {
    fn new(radius: f64) -> Self {
        Self { cell: radius.max(1e-9), buckets: HashMap::new() }
    }

    fn key(&self, v: &[f64]) -> [i64; 3] {
        [0, 1, 2].map(|k| (v[k] / self.cell).floor() as i64)
    }

    fn insert(&mut self, v: &[f64], id: u32) {
        let k = self.key(v);
        self.buckets.entry(k).or_default().push(id);
    }

    /// True if some stored entry lies within `radius` of `v`.
    fn covered(&self, v: &[f64], values: &[f64], s: usize, d: usize, radius: f64) -> Result<bool> {
        let k = self.key(v);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(ids) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    for &id in ids {
                        let e = &values[id as usize * s..(id as usize + 1) * s];
                        if flat_distance(e, v, d)? <= radius {
                            return Ok(true);
                        }
                    }
                }
            }
        }
        Ok(false)
    }
}

/// Options for [`build_net_with`].
#[derive(Clone, Copy, Debug)]
pub struct NetBuildOptions {
    pub cap: usize,
}

impl Default for NetBuildOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_NET_CAP }
    }
}

pub fn build_net(gs: &GateSet, max_len: usize, dedup_radius: f64) -> Result<EpsilonNet> {
    build_net_with(gs, max_len, dedup_radius, NetBuildOptions::default())
}

/// Breadth-first enumeration of words up to `max_len`.
///
/// Each generation extends the words kept in the previous one by every gate,
/// in (parent index, gate index) order. A candidate is kept only if it lies
/// farther than `dedup_radius` from every kept entry. A discarded word's
/// extensions are not enumerated: right multiplication is an isometry, so
/// they are within `dedup_radius` of the kept word's extensions.
pub fn build_net_with(
    gs: &GateSet,
    max_len: usize,
    dedup_radius: f64,
    opts: NetBuildOptions,
) -> Result<EpsilonNet> {
    if max_len < 1 {
        return Err(Error::InvalidInput("maximum word length must be at least 1".into()));
    }
    if !(dedup_radius >= 0.0 && dedup_radius.is_finite()) {
        return Err(Error::InvalidInput(format!("dedup radius {dedup_radius} is invalid")));
    }
    let d = gs.dim();
    let s = 2 * d * d;
    let gates: Vec<Vec<f64>> = gs.gates().iter().map(|g| matrix_to_flat(g.matrix.matrix())).collect();
    let mut net = EpsilonNet {
        dim: d,
        gateset_fingerprint: gs.fingerprint(),
        max_word_length: max_len,
        dedup_radius,
        parent: vec![NO_PARENT],
        last: vec![0],
        lengths: vec![0],
        values: matrix_to_flat(&SquareMatrix::identity(d)),
        certified: None,
    };
    let mut index = DedupIndex::new(dedup_radius);
    index.insert(&net.values[..s], 0);
    let mut frontier: Vec<u32> = vec![0];
    for len in 1..=max_len {
        let candidates: Vec<f64> = frontier
            .par_iter()
            .flat_map_iter(|&p| {
                let base = &net.values[p as usize * s..(p as usize + 1) * s];
                gates.iter().flat_map(move |g| {
                    let mut out = vec![0.0; s];
                    flat_mul(base, g, d, &mut out);
                    out
                })
            })
            .collect();
        let mut next = Vec::new();
        for (c, v) in candidates.chunks_exact(s).enumerate() {
            if index.covered(v, &net.values, s, d, dedup_radius)? {
                continue;
            }
            if net.len() >= opts.cap {
                return Err(Error::NetCapExceeded(opts.cap));
            }
            let id = net.len() as u32;
            net.parent.push(frontier[c / gates.len()]);
            net.last.push((c % gates.len()) as u32);
            net.lengths.push(len as u32);
            net.values.extend_from_slice(v);
            index.insert(v, id);
            next.push(id);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(net)
}

fn write_u32(w: &mut impl Write, x: u32) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn write_u64(w: &mut impl Write, x: u64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn write_f64(w: &mut impl Write, x: f64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

/// Serializes the net; the output is a pure function of its contents.
pub fn encode_net(net: &EpsilonNet) -> Vec<u8> {
    let mut out = Vec::new();
    let w = &mut out;
    w.extend_from_slice(NET_MAGIC);
    write_u32(w, NET_FORMAT_VERSION).unwrap();
    w.extend_from_slice(&net.gateset_fingerprint);
    write_u32(w, net.dim as u32).unwrap();
    write_u64(w, net.max_word_length as u64).unwrap();
    write_f64(w, net.dedup_radius).unwrap();
    let (radius, samples) = net.certified.unwrap_or((f64::NAN, 0));
    write_f64(w, radius).unwrap();
    write_u64(w, samples as u64).unwrap();
    write_u64(w, net.len() as u64).unwrap();
    let s = 2 * net.dim * net.dim;
    for i in 0..net.len() {
        let word = net.word(i);
        write_u32(w, word.len() as u32).unwrap();
        for &k in word.indices() {
            write_u32(w, k).unwrap();
        }
        for &x in &net.values[i * s..(i + 1) * s] {
            write_f64(w, x).unwrap();
        }
    }
    out
}

pub fn save_net(net: &EpsilonNet, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_net(net))?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::CorruptNet(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses a net and checks it against `gs`: fingerprint, then word/matrix
/// consistency of every entry for small nets or 100 seeded samples otherwise.
pub fn decode_net(bytes: &[u8], gs: &GateSet) -> Result<EpsilonNet> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8)? != NET_MAGIC {
        return Err(Error::CorruptNet("bad magic".into()));
    }
    let version = c.u32()?;
    if version != NET_FORMAT_VERSION {
        return Err(Error::CorruptNet(format!("unsupported format version {version}")));
    }
    let fingerprint: [u8; 32] = c.take(32)?.try_into().expect("32 bytes");
    if fingerprint != gs.fingerprint() {
        return Err(Error::FingerprintMismatch);
    }
    let dim = c.u32()? as usize;
    if dim != gs.dim() {
        return Err(Error::CorruptNet(format!("dimension {dim} does not match gate set")));
    }
    let max_word_length = c.u64()? as usize;
    let dedup_radius = c.f64()?;
    let radius = c.f64()?;
    let samples = c.u64()? as usize;
    let count = c.u64()? as usize;
    let s = 2 * dim * dim;
    if count == 0 || count > bytes.len() {
        return Err(Error::CorruptNet(format!("implausible entry count {count}")));
    }
    let mut net = EpsilonNet {
        dim,
        gateset_fingerprint: fingerprint,
        max_word_length,
        dedup_radius,
        parent: Vec::with_capacity(count),
        last: Vec::with_capacity(count),
        lengths: Vec::with_capacity(count),
        values: Vec::with_capacity(count * s),
        certified: (samples > 0).then_some((radius, samples)),
    };
    let mut by_word: HashMap<Vec<u32>, u32> = HashMap::new();
    for i in 0..count {
        let len = c.u32()? as usize;
        let mut word = Vec::with_capacity(len.min(1 << 16));
        for _ in 0..len {
            let k = c.u32()?;
            if k as usize >= gs.len() {
                return Err(Error::CorruptNet(format!("entry {i} names gate {k}")));
            }
            word.push(k);
        }
        let (parent, last) = match word.split_last() {
            None if i == 0 => (NO_PARENT, 0),
            None => return Err(Error::CorruptNet(format!("entry {i} has an empty word"))),
            Some((&l, prefix)) => {
                let p = by_word.get(prefix).copied().ok_or_else(|| {
                    Error::CorruptNet(format!("entry {i} has no stored prefix"))
                })?;
                (p, l)
            }
        };
        if i == 0 && !word.is_empty() {
            return Err(Error::CorruptNet("entry 0 must be the empty word".into()));
        }
        net.parent.push(parent);
        net.last.push(last);
        net.lengths.push(len as u32);
        for _ in 0..s {
            net.values.push(c.f64()?);
        }
        by_word.insert(word, i as u32);
    }
    if c.pos != bytes.len() {
        return Err(Error::CorruptNet("trailing bytes".into()));
    }
    if count <= LOAD_CHECK_SAMPLES {
        for i in 0..count {
            net.check_entry(i, gs)?;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..LOAD_CHECK_SAMPLES {
            net.check_entry(rng.random_range(0..count), gs)?;
        }
    }
    Ok(net)
}

pub fn load_net(path: &Path, gs: &GateSet) -> Result<EpsilonNet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_net(&bytes, gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::distance;
    use crate::pauli::{clock_z, shift_x};

    #[test]
    fn gateset_document_round_trip() {
        let gs = GateSet::two_rotation_qubit();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs.dim(), 2);
        let back = load_gateset(gs.to_json().as_bytes()).unwrap();
        assert_eq!(back.fingerprint(), gs.fingerprint());
        assert_eq!(back.gates()[1].name, "rx");
    }

    #[test]
    fn gateset_rejects_non_unitary_with_name() {
        let mut m = rz(1.0);
        m[(0, 0)] *= 1.0 + 1e-3;
        let err = GateSet::from_matrices(2, vec![("bad".into(), m)]).unwrap_err();
        match err {
            Error::GateNotUnitary { name, residual } => {
                assert_eq!(name, "bad");
                assert!(residual > 1e-4);
            }
            other => panic!("unexpected {other:?}"),
        }
        let dup = GateSet::from_matrices(2, vec![("a".into(), rz(1.0)), ("a".into(), rx(1.0))]);
        assert!(matches!(dup, Err(Error::GateSet(_))));
        assert!(matches!(load_gateset(b"{not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn gateset_normalizes_qutrit_clock_shift() {
        let gs = GateSet::from_matrices(3, vec![("x".into(), shift_x(3)), ("z".into(), clock_z(3))]).unwrap();
        for g in gs.gates() {
            assert!(g.matrix.det_residual() < 1e-12);
        }
        // det X₃ = 1 already; det Z₃ = ω³ = 1 as well.
        assert!((gs.gates()[0].normalization - 1.0).norm() < 1e-12);
        assert!((gs.gates()[1].normalization - 1.0).norm() < 1e-12);
        let gs2 = GateSet::from_matrices(2, vec![("x".into(), shift_x(2))]).unwrap();
        let zeta = gs2.gates()[0].normalization;
        assert!((zeta * zeta + 1.0).norm() < 1e-12);
    }

    #[test]
    fn counting_examples() {
        let single = GateSet::from_matrices(2, vec![("rz".into(), rz(1.0))]).unwrap();
        let net = build_net(&single, 3, 1e-6).unwrap();
        assert_eq!(net.len(), 4);
        assert!(net.word(0).is_empty());
        assert_eq!(net.word(3).indices(), &[0, 0, 0]);

        let gs = GateSet::two_rotation_qubit();
        let net = build_net(&gs, 2, 0.0).unwrap();
        assert_eq!(net.len(), 7);
        for i in 0..net.len() {
            net.check_entry(i, &gs).unwrap();
        }
    }

    #[test]
    fn query_examples() {
        let gs = GateSet::two_rotation_qubit();
        let net = build_net(&gs, 3, 0.0).unwrap();
        let hit = net.query(&SquareMatrix::identity(2)).unwrap();
        assert!(hit.word.is_empty());
        assert_eq!(hit.distance, 0.0);
        let m = &rz(1.0) * &rx(1.0);
        let target = su_normalize(&m).unwrap();
        let hit = net.query(target.matrix()).unwrap();
        assert_eq!(hit.word.indices(), &[0, 1]);
        assert!(hit.distance <= 1e-9);
        assert!(matches!(net.query(&SquareMatrix::identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn certify_examples() {
        let gs = GateSet::two_rotation_qubit();
        let mut trivial = build_net(&gs, 1, 10.0).unwrap();
        assert_eq!(trivial.len(), 1);
        let r = trivial.certify_radius(20, 1).unwrap();
        assert!(r > 0.0 && r <= 2.0);

        let mut radii = Vec::new();
        for len in [2, 4, 8] {
            let mut net = build_net(&gs, len, 0.0).unwrap();
            radii.push(net.certify_radius(50, 7).unwrap());
        }
        assert!(radii[0] >= radii[1] && radii[1] >= radii[2], "{radii:?}");
    }

    #[test]
    fn query_matches_brute_force() {
        let gs = GateSet::two_rotation_qubit();
        let net = build_net(&gs, 7, 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let t = haar_special_unitary(2, &mut rng);
            let hit = net.query(t.matrix()).unwrap();
            let brute = (0..net.len())
                .map(|i| distance(&net.matrix(i), t.matrix()).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!((hit.distance - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn dedup_radius_respected() {
        let gs = GateSet::two_rotation_qubit();
        let r = 0.1;
        let net = build_net(&gs, 8, r).unwrap();
        for i in 0..net.len() {
            for j in 0..i {
                assert!(distance(&net.matrix(i), &net.matrix(j)).unwrap() > r);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let gs = GateSet::two_rotation_qubit();
        let err = build_net_with(&gs, 6, 0.0, NetBuildOptions { cap: 10 }).unwrap_err();
        assert!(matches!(err, Error::NetCapExceeded(10)));
    }

    #[test]
    fn persistence_round_trip_and_checks() {
        let gs = GateSet::two_rotation_qubit();
        let mut net = build_net(&gs, 5, 0.0).unwrap();
        net.certify_radius(10, 2).unwrap();
        let bytes = encode_net(&net);
        let back = decode_net(&bytes, &gs).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_net(&back), bytes);

        let other = GateSet::two_rotation_qubit_with_inverses();
        assert!(matches!(decode_net(&bytes, &other), Err(Error::FingerprintMismatch)));

        // Corrupt the first matrix entry of entry 5.
        let mut bad = bytes.clone();
        let header = 8 + 4 + 32 + 4 + 8 + 8 + 8 + 8 + 8;
        let mut pos = header;
        for i in 0..5 {
            pos += 4 + 4 * net.word_len(i) + 8 * 8;
        }
        pos += 4 + 4 * net.word_len(5);
        bad[pos..pos + 8].copy_from_slice(&0.5f64.to_le_bytes());
        match decode_net(&bad, &gs) {
            Err(Error::NetEntryInconsistent { index, .. }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode_net(&bytes[..bytes.len() - 3], &gs), Err(Error::CorruptNet(_))));
    }

    #[test]
    fn build_is_deterministic() {
        let gs = GateSet::two_rotation_qubit();
        let a = encode_net(&build_net(&gs, 9, 0.05).unwrap());
        let b = encode_net(&build_net(&gs, 9, 0.05).unwrap());
        assert_eq!(a, b);
    }
}
