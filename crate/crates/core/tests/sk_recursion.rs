use ifsk::matcore::{distance, haar_special_unitary, SpecialUnitary, SquareMatrix};
use ifsk::net::{build_net, EpsilonNet, GateSet};
use ifsk::sk::{check_lengths, Algorithm, Compiler, SKConfig};
use ifsk::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn net(gs: &GateSet, len: usize, dedup: f64) -> EpsilonNet {
    let mut net = build_net(gs, len, dedup).unwrap();
    net.certify_radius(300, 3).unwrap();
    net
}

fn compiler(algorithm: Algorithm, gs: GateSet, len: usize, dedup: f64, f: impl FnOnce(&mut SKConfig)) -> Compiler {
    let n = net(&gs, len, dedup);
    let mut cfg = SKConfig::new(algorithm, 3, n.certified_radius().unwrap().0);
    f(&mut cfg);
    Compiler::new(cfg, gs, n).unwrap()
}

fn targets(k: usize, seed: u64) -> Vec<SpecialUnitary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| haar_special_unitary(2, &mut rng)).collect()
}

#[test]
fn call_tree_sizes_without_memo() {
    let cases = [
        (Algorithm::Ifsk, GateSet::two_rotation_qubit(), 14, 0.03, 5u64),
        (Algorithm::Classic, GateSet::two_rotation_qubit_with_inverses(), 10, 0.03, 3),
    ];
    for (alg, gs, len, dedup, branching) in cases {
        let c = compiler(alg, gs, len, dedup, |cfg| {
            cfg.memoize = false;
            cfg.handshake = false;
        });
        if alg == Algorithm::Ifsk {
            c.build_pauli_cache(2).unwrap();
        }
        let out = c.compile(&targets(1, 1)[0], 3).unwrap();
        let expected: Vec<u64> = (0..=3).map(|k| branching.pow(3 - k)).collect();
        assert_eq!(out.stats.invocations, expected, "{}", alg.name());
        assert!(out.stats.direct_calls.iter().all(|&k| k as u64 == branching));
        assert_eq!(out.stats.pauli_compilations, 0);
    }
}

#[test]
fn pauli_cache_is_reused_across_targets() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 14, 0.03, |cfg| cfg.handshake = false);
    let ts = targets(3, 2);
    let first = c.compile(&ts[0], 2).unwrap();
    assert!(first.stats.pauli_compilations > 0);
    for t in &ts[1..] {
        assert_eq!(c.compile(t, 2).unwrap().stats.pauli_compilations, 0);
    }
    let cache = c.pauli_cache();
    assert_eq!(cache.levels.len(), 2);
    assert!(cache.levels.iter().all(|l| l.y.is_some()));
}

#[test]
fn cached_pauli_error_decreases_with_level() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 16, 0.02, |cfg| cfg.handshake = false);
    let cache = c.build_pauli_cache(2).unwrap();
    let errs: Vec<f64> = cache.levels.iter().map(|l| l.x.err_bound.unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn pauli_cache_round_trips_through_disk() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 12, 0.03, |cfg| cfg.handshake = false);
    c.build_pauli_cache(1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pauli.json");
    c.save_pauli_cache(&path).unwrap();
    let fresh = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 12, 0.03, |cfg| cfg.handshake = false);
    fresh.load_pauli_cache(&path).unwrap();
    assert_eq!(fresh.pauli_cache().levels.len(), 2);
    let out = fresh.compile(&targets(1, 4)[0], 2).unwrap();
    assert_eq!(out.stats.pauli_compilations, 0);
}

#[test]
fn deterministic_words() {
    let t = &targets(1, 9)[0];
    let a = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 12, 0.03, |cfg| cfg.handshake = false);
    let b = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 12, 0.03, |cfg| cfg.handshake = false);
    assert_eq!(a.compile(t, 2).unwrap().op.word, b.compile(t, 2).unwrap().op.word);
}

#[test]
fn word_value_consistency() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 16, 0.02, |cfg| cfg.handshake = false);
    for t in targets(4, 5) {
        let out = c.compile(&t, 2).unwrap();
        out.op.verify(c.letters()).unwrap();
        assert_eq!(out.stats.inverse_quality.len(), 2 * (1 + 5));
        for chk in check_lengths(&out.levels, false, 4, false) {
            assert!(chk.holds && !chk.exact);
        }
    }
}

#[test]
fn generic_factory_on_qubits() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 16, 0.02, |cfg| {
        cfg.handshake = false;
        cfg.qubit_factory = ifsk::sk::QubitFactory::Xz;
    });
    let out = c.compile(&targets(1, 6)[0], 2).unwrap();
    assert!(out.error() < out.levels[0].eps_n);
    out.op.verify(c.letters()).unwrap();
    assert!(c.pauli_cache().levels.iter().all(|l| l.y.is_some()));
}

#[test]
fn padded_lengths_are_exact() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 12, 0.03, |cfg| {
        cfg.handshake = false;
        cfg.padding = true;
    });
    let out = c.compile(&targets(1, 7)[0], 2).unwrap();
    assert_eq!(out.levels.iter().map(|r| r.len_n).collect::<Vec<_>>(), vec![12, 12 * 33, 12 * 33 * 33]);
    out.op.verify(c.letters()).unwrap();
    assert!(c.names(&out.op.word).contains(&"id"));
}

#[test]
fn handshake_refuses_coarse_nets() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 8, 0.05, |_| {});
    let t = &targets(1, 8)[0];
    let err = c.compile(t, 2).unwrap_err();
    assert!(matches!(err, Error::Config(ref m) if m.contains("0.9")), "{err}");
}

#[test]
fn dimension_mismatch_rejected() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 6, 0.05, |_| {});
    let u = SpecialUnitary::identity(3);
    assert!(matches!(c.compile(&u, 0), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn exact_pauli_targets_compile() {
    let c = compiler(Algorithm::Ifsk, GateSet::two_rotation_qubit(), 14, 0.03, |cfg| cfg.handshake = false);
    let (x, _) = ifsk::pauli::su_generators(2).unwrap();
    let out = c.compile(&x, 1).unwrap();
    assert!(distance(&out.op.value, x.matrix()).unwrap() < out.levels[0].eps_n);
    assert!(distance(&out.op.value, &SquareMatrix::identity(2)).unwrap() > 1.0);
}
