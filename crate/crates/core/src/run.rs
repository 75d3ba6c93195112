//! Run manifests, named targets and gate-sequence files.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{haar_special_unitary, SpecialUnitary};
use crate::net::{load_gateset_file, load_target, GateSet};
use crate::pauli::{su_generators, su_y};
use crate::sk::{Compilation, Compiler};

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: serde_json::Value,
    pub gateset_fingerprint: Option<String>,
    pub net: Option<NetParams>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub max_len: usize,
    pub dedup: f64,
    pub entries: usize,
    pub certified_radius: Option<f64>,
    pub certify_samples: Option<usize>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, flags: serde_json::Value) -> Self {
        let now = unix_now();
        Self {
            command: command.into(),
            flags,
            gateset_fingerprint: None,
            net: None,
            seed: None,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix: now,
            finished_unix: now,
        }
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// `builtin:two-rotation`, `builtin:two-rotation-inverses`,
/// `builtin:pauli-augmented`, or a gate-set document path.
pub fn resolve_gateset(spec: &str) -> Result<GateSet> {
    match spec {
        "builtin:two-rotation" => Ok(GateSet::two_rotation_qubit()),
        "builtin:two-rotation-inverses" => Ok(GateSet::two_rotation_qubit_with_inverses()),
        "builtin:pauli-augmented" => GateSet::two_rotation_qubit().with_pauli_irrep(),
        s if s.starts_with("builtin:") => Err(Error::Config(format!("unknown built-in gate set {s:?}"))),
        path => load_gateset_file(Path::new(path)),
    }
}

/// `haar:SEED`, `pauli-x`, `pauli-z`, `pauli-y` (qubits), or a target document path.
pub fn resolve_target(spec: &str, dim: usize) -> Result<SpecialUnitary> {
    if let Some(seed) = spec.strip_prefix("haar:") {
        let seed: u64 = seed.parse().map_err(|_| Error::Config(format!("bad seed in {spec:?}")))?;
        return Ok(haar_special_unitary(dim, &mut ChaCha8Rng::seed_from_u64(seed)));
    }
    let target = match spec {
        "pauli-x" => su_generators(dim)?.0,
        "pauli-z" => su_generators(dim)?.1,
        "pauli-y" if dim == 2 => su_y(),
        "pauli-y" => return Err(Error::Config("pauli-y is defined for qubits only".into())),
        path => load_target(&std::fs::read(path)?)?,
    };
    if target.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: target.dim() });
    }
    Ok(target)
}

/// One gate name per line, then `#`-prefixed metadata lines.
pub fn format_sequence(compiler: &Compiler, c: &Compilation) -> String {
    let mut out = String::new();
    for name in compiler.names(&c.op.word) {
        out.push_str(name);
        out.push('\n');
    }
    let cfg = compiler.config();
    out.push_str(&format!("# algorithm {}\n", cfg.algorithm.name()));
    out.push_str(&format!("# depth {}\n", c.levels.len().saturating_sub(1)));
    out.push_str(&format!("# gateset {}\n", compiler.gateset().fingerprint_hex()));
    out.push_str(&format!("# length {}\n", c.op.len()));
    out.push_str(&format!("# error {:.6e}\n", c.error()));
    out.push_str("# level eps_n len_n recursive_calls wall_ms\n");
    for r in &c.levels {
        out.push_str(&format!(
            "# level {} {:.6e} {} {} {:.3}\n",
            r.level, r.eps_n, r.len_n, r.recursive_calls, r.wall_ms
        ));
    }
    out
}

/// Gate names of a sequence file, footer skipped.
pub fn parse_sequence(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_targets() {
        let x = resolve_target("pauli-x", 3).unwrap();
        assert_eq!(x, su_generators(3).unwrap().0);
        assert_eq!(resolve_target("haar:4", 2).unwrap(), resolve_target("haar:4", 2).unwrap());
        assert!(resolve_target("haar:x", 2).is_err());
        assert!(resolve_target("pauli-y", 3).is_err());
    }

    #[test]
    fn builtin_sets() {
        assert_eq!(resolve_gateset("builtin:two-rotation").unwrap().len(), 2);
        assert_eq!(resolve_gateset("builtin:pauli-augmented").unwrap().len(), 8);
        assert!(resolve_gateset("builtin:nope").is_err());
    }

    #[test]
    fn sequence_parse_skips_footer() {
        assert_eq!(parse_sequence("rz\nrx\n# error 1e-3\n\n"), vec!["rz", "rx"]);
    }
}
