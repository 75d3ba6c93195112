//! One test per acceptance criterion; each prints a single PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use std::sync::OnceLock;
use std::time::Instant;

use ifsk::focus::{compose, qubit_inverse, sud_inverse, sud_inverse_blocks, ImplementedOperator, QUBIT_INVERSE_BLOCKS};
use ifsk::lemmas::{
    commutator_exactness, exact_input_residuals, reduction_residuals, run_lemma, scale_band, slope_summary, Lemma,
    COMMUTATOR_EPS_GRID, DEFAULT_EPS_GRID,
};
use ifsk::matcore::{haar_special_unitary, SpecialUnitary, SquareMatrix};
use ifsk::net::{build_net, EpsilonNet, GateSet};
use ifsk::sk::{
    check_lengths, run_benchmark, Algorithm, BenchmarkResult, Compiler, LevelRecord, SKConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

fn report(n: u32, label: &str, pass: bool, detail: String) -> bool {
    println!("criterion {n:>2} {label}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

fn haar_targets(k: usize, seed: u64) -> Vec<SpecialUnitary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| haar_special_unitary(2, &mut rng)).collect()
}

fn certified(gs: &GateSet, len: usize, dedup: f64, samples: usize) -> EpsilonNet {
    let mut net = build_net(gs, len, dedup).unwrap();
    net.certify_radius(samples, 7).unwrap();
    net
}

fn compiler(algorithm: Algorithm, gs: &GateSet, net: &EpsilonNet, depth: usize, padding: bool) -> Compiler {
    let mut cfg = SKConfig::new(algorithm, depth, net.certified_radius().unwrap().0);
    cfg.rng_seed = SEED;
    cfg.padding = padding;
    Compiler::new(cfg, gs.clone(), net.clone()).unwrap()
}

/// Two 1-radian rotations, no inverses: the end-to-end net.
fn rotation_net() -> &'static (GateSet, EpsilonNet) {
    static NET: OnceLock<(GateSet, EpsilonNet)> = OnceLock::new();
    NET.get_or_init(|| {
        let gs = GateSet::two_rotation_qubit();
        let net = certified(&gs, 20, 0.015, 2000);
        (gs, net)
    })
}

fn inverse_closed_net() -> &'static (GateSet, EpsilonNet) {
    static NET: OnceLock<(GateSet, EpsilonNet)> = OnceLock::new();
    NET.get_or_init(|| {
        let gs = GateSet::two_rotation_qubit_with_inverses();
        let net = certified(&gs, 13, 0.025, 1000);
        (gs, net)
    })
}

fn pauli_augmented_net() -> &'static (GateSet, EpsilonNet) {
    static NET: OnceLock<(GateSet, EpsilonNet)> = OnceLock::new();
    NET.get_or_init(|| {
        let gs = GateSet::two_rotation_qubit().with_pauli_irrep().unwrap();
        let net = certified(&gs, 10, 0.02, 1000);
        (gs, net)
    })
}

/// The 20-target, depth-3 inverse-free run on the rotation set.
fn end_to_end() -> &'static (BenchmarkResult, f64, f64) {
    static RUN: OnceLock<(BenchmarkResult, f64, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let (gs, net) = rotation_net();
        let start = Instant::now();
        let c = compiler(Algorithm::Ifsk, gs, net, 3, false);
        let handshake = c.calibrate().unwrap();
        let res = run_benchmark(&c, &haar_targets(20, 42)).unwrap();
        (res, handshake, start.elapsed().as_secs_f64())
    })
}

fn chain_decreasing(levels: &[LevelRecord]) -> bool {
    levels.windows(2).all(|w| w[1].eps_n < w[0].eps_n || w[0].eps_n < 1e-8)
}

fn slopes_pass(lemmas: &[Lemma], dims: &[usize], grid: &[f64]) -> (bool, String) {
    let mut samples = Vec::new();
    for &d in dims {
        for &l in lemmas.iter().filter(|l| l.applies_to(d)) {
            samples.extend(run_lemma(l, d, grid, 50, SEED).unwrap());
        }
    }
    let summary = slope_summary(&samples);
    let worst = summary.iter().min_by(|a, b| (a.slope - a.threshold).total_cmp(&(b.slope - b.threshold))).unwrap();
    let pass = summary.iter().all(|s| s.pass);
    (pass, format!("{} fits, weakest {} d={} slope {:.3} vs {:.2}", summary.len(), worst.lemma.name(), worst.d, worst.slope, worst.threshold))
}

#[test]
fn criterion_01_commutator_exactness() {
    let start = Instant::now();
    let worst = (2..=5).map(|d| commutator_exactness(d, 200, 0.3, SEED).unwrap()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && secs < 10.0;
    assert!(report(1, "commutator [A,B] = iH", pass, format!("max residual {worst:.2e}, {secs:.2}s")));
}

#[test]
fn criterion_02_commutator_three_halves() {
    let start = Instant::now();
    let (slope_ok, detail) = slopes_pass(&[Lemma::Commutator], &[2, 3], &COMMUTATOR_EPS_GRID);
    let mut bands = Vec::new();
    for d in [2, 3] {
        let s = run_lemma(Lemma::CommutatorScale, d, &COMMUTATOR_EPS_GRID, 50, SEED).unwrap();
        bands.push(scale_band(&s, d).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let band_ok = bands.iter().all(|&b| b <= 2.0);
    let pass = slope_ok && band_ok && secs < 60.0;
    assert!(report(2, "commutator 3/2 power", pass, format!("{detail}; |V-I|/sqrt(eps) band {bands:.3?}; {secs:.2}s")));
}

#[test]
fn criterion_03_twirl_projection() {
    let start = Instant::now();
    let worst = (2..=5)
        .flat_map(|d| run_lemma(Lemma::Twirl, d, &[1.0], 100, SEED).unwrap())
        .map(|s| s.residual)
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && secs < 10.0;
    assert!(report(3, "twirl projection", pass, format!("max residual {worst:.2e}, {secs:.2}s")));
}

fn exact_ok(lemmas: &[Lemma]) -> f64 {
    (2..=5)
        .flat_map(|d| exact_input_residuals(d).unwrap())
        .filter(|(l, _)| lemmas.contains(l))
        .map(|(_, r)| r)
        .fold(0.0, f64::max)
}

#[test]
fn criterion_04_self_correction_slopes() {
    let start = Instant::now();
    let lemmas = [Lemma::J2, Lemma::Jd, Lemma::JdAlt];
    let (slope_ok, detail) = slopes_pass(&lemmas, &[2, 3, 4, 5], &DEFAULT_EPS_GRID);
    let exact = exact_ok(&lemmas);
    let secs = start.elapsed().as_secs_f64();
    let pass = slope_ok && exact <= 1e-10 && secs < 120.0;
    assert!(report(4, "self-correcting sequences quadratic", pass, format!("{detail}; exact inputs {exact:.2e}; {secs:.2}s")));
}

#[test]
fn criterion_05_inverse_factories() {
    let start = Instant::now();
    let lemmas = [Lemma::IrrepInverse, Lemma::QubitInverse, Lemma::SudInverse, Lemma::SudInverseSl];
    let (slope_ok, detail) = slopes_pass(&lemmas, &[2, 3, 4, 5], &DEFAULT_EPS_GRID);
    let exact = exact_ok(&lemmas);
    let secs = start.elapsed().as_secs_f64();
    let pass = slope_ok && exact <= 1e-10 && secs < 120.0;
    assert!(report(5, "inverse factories quadratic", pass, format!("{detail}; exact inputs {exact:.2e}; {secs:.2}s")));
}

#[test]
fn criterion_06_reduction_identities() {
    let worst = (2..=5)
        .flat_map(|d| reduction_residuals(d, 20, 1e-2, SEED).unwrap())
        .map(|(a, b)| a.max(b))
        .fold(0.0, f64::max);
    assert!(report(6, "reduction identities", worst <= 1e-12, format!("max distance {worst:.2e}")));
}

fn letter(k: u32) -> ImplementedOperator {
    ImplementedOperator::letter(k, SquareMatrix::identity(2), 0)
}

fn padded_exact(res: &BenchmarkResult, order: usize, stated: bool) -> (bool, usize) {
    let checks = check_lengths(&res.records, true, order, stated);
    (checks.iter().all(|c| c.exact && c.holds), checks.len())
}

#[test]
fn criterion_07_length_bookkeeping() {
    let mut ok = true;
    let mut notes = Vec::new();

    // Factory block counts with unit-length operands.
    let (v, w, x, z) = (letter(0), letter(1), letter(2), letter(3));
    ok &= qubit_inverse(&v, &w, &x, &z).unwrap().len() == QUBIT_INVERSE_BLOCKS;
    for d in 2..=5 {
        let one = |k| ImplementedOperator::letter(k, SquareMatrix::identity(d), 0);
        let blocks = sud_inverse(&one(0), &one(1), &one(2), &one(3), d).unwrap().len();
        ok &= blocks == sud_inverse_blocks(d) && blocks == 4 * d * d - 1;
    }
    ok &= compose(&[&v, &w]).unwrap().len() == 2;
    notes.push("factory blocks 15 / 4d^2-1".to_string());

    // Default mode: bounds on the end-to-end run.
    let (res, _, _) = end_to_end();
    let bounds = check_lengths(&res.records, false, 4, false);
    ok &= bounds.iter().all(|c| c.holds);
    notes.push(format!("{} ifsk <= bounds", bounds.len()));

    // Padded mode: exact equalities per algorithm.
    let targets = haar_targets(5, 3);
    let (gs, net) = rotation_net();
    let ifsk = run_benchmark(&compiler(Algorithm::Ifsk, gs, net, 2, true), &targets).unwrap();
    let (e, n) = padded_exact(&ifsk, 4, false);
    ok &= e;
    notes.push(format!("{n} ifsk 33l equalities"));
    let (gs, net) = inverse_closed_net();
    let classic = run_benchmark(&compiler(Algorithm::Classic, gs, net, 3, true), &targets).unwrap();
    let (e, n) = padded_exact(&classic, 4, false);
    ok &= e;
    notes.push(format!("{n} classic 5l equalities"));
    let (gs, net) = pauli_augmented_net();
    let irrep = run_benchmark(&compiler(Algorithm::Irrep, gs, net, 2, true), &targets).unwrap();
    let (e, n) = padded_exact(&irrep, 4, false);
    ok &= e;
    notes.push(format!("{n} irrep (4|G|+1)l+4(|G|-1) equalities"));

    assert!(report(7, "length bookkeeping", ok, notes.join("; ")));
}

/// The textbook irrep recursion `(4|G|+1)ℓ + 2(|G|−1)` checked against the
/// construction, which places `2(|G|−1)` irrep letters in each of its two
/// inverse factories.
#[test]
fn criterion_07_irrep_stated_recursion() {
    let (gs, net) = pauli_augmented_net();
    let res = run_benchmark(&compiler(Algorithm::Irrep, gs, net, 2, true), &haar_targets(5, 3)).unwrap();
    let checks = check_lengths(&res.records, true, 4, true);
    let first = &checks[0];
    let pass = checks.iter().all(|c| c.exact && c.holds);
    assert!(report(
        7,
        "irrep recursion (4|G|+1)l + 2(|G|-1)",
        pass,
        format!("level 1: built {} vs stated {}; the construction yields (4|G|+1)l + 4(|G|-1)", first.len_n, first.predicted)
    ));
}

#[test]
fn criterion_08_call_counts() {
    let targets = haar_targets(3, 5);
    let mut ok = true;
    let mut notes = Vec::new();
    for (alg, (gs, net), branching) in
        [(Algorithm::Ifsk, rotation_net(), 5u64), (Algorithm::Classic, inverse_closed_net(), 3)]
    {
        let mut cfg = SKConfig::new(alg, 3, net.certified_radius().unwrap().0);
        cfg.memoize = false;
        cfg.handshake = false;
        let c = Compiler::new(cfg, gs.clone(), net.clone()).unwrap();
        if alg == Algorithm::Ifsk {
            c.build_pauli_cache(2).unwrap();
        }
        for t in &targets {
            let out = c.compile(t, 3).unwrap();
            let tree: Vec<u64> = (0..=3).map(|k| branching.pow(3 - k)).collect();
            ok &= out.stats.invocations == tree;
            ok &= out.stats.direct_calls.iter().all(|&k| k as u64 == branching);
            ok &= out.levels.iter().filter(|r| r.level > 0).all(|r| r.recursive_calls as u64 == branching);
            ok &= out.stats.pauli_compilations == 0;
        }
        notes.push(format!("{} {branching}/level, tree {:?}", alg.name(), (0..=3).map(|k| branching.pow(3 - k)).collect::<Vec<_>>()));
    }
    assert!(report(8, "call-count bookkeeping", ok, notes.join("; ")));
}

#[test]
fn criterion_09_end_to_end_inverse_free() {
    let (_, net) = rotation_net();
    let radius = net.certified_radius().unwrap().0;
    let (res, handshake, secs) = end_to_end();
    let monotone = res.compilations.iter().filter(|c| chain_decreasing(&c.levels) && c.levels.len() == 4).count();
    let exponent = res.summary.per_step_exponent;
    let pass = radius <= 0.05 && monotone == 20 && exponent >= 1.3 && *secs < 1800.0;
    let median_final = ifsk::fit::median(&res.compilations.iter().map(|c| c.error()).collect::<Vec<_>>()).unwrap();
    assert!(report(
        9,
        "end-to-end inverse-free compilation",
        pass,
        format!(
            "eps0 {radius:.4}, {} entries, C {handshake:.2}, {monotone}/20 monotone, median exponent {exponent:.3}, median eps3 {median_final:.2e}, {secs:.1}s",
            net.len()
        )
    ));
}

#[test]
fn criterion_10_cross_algorithm() {
    let targets = haar_targets(5, 13);
    let mut ok = true;
    let mut notes = Vec::new();
    let runs = [
        (Algorithm::Classic, inverse_closed_net(), 3),
        (Algorithm::Ifsk, inverse_closed_net(), 2),
        (Algorithm::Irrep, pauli_augmented_net(), 2),
    ];
    for (alg, (gs, net), depth) in runs {
        let radius = net.certified_radius().unwrap().0;
        let res = run_benchmark(&compiler(alg, gs, net, depth, false), &targets).unwrap();
        let converged = res.compilations.iter().all(|c| chain_decreasing(&c.levels) && c.error() < radius);
        let padded = run_benchmark(&compiler(alg, gs, net, depth, true), &targets).unwrap();
        let (exact, _) = padded_exact(&padded, 4, false);
        ok &= converged && exact;
        notes.push(format!("{} depth {depth} converged {converged} exact lengths {exact}", alg.name()));
    }
    assert!(report(10, "cross-algorithm consistency", ok, notes.join("; ")));
}

/// `‖V̿†V − I‖ ≤ ‖V̄† − V†‖^{3/2}` at every ifsk level of the end-to-end run,
/// alongside the same bound taken against the largest factory input error.
#[test]
fn criterion_09_inverse_quality_gate() {
    let (res, _, _) = end_to_end();
    let all: Vec<_> = res.compilations.iter().flat_map(|c| c.stats.inverse_quality.iter()).collect();
    let literal = all.iter().filter(|q| q.meets_gate()).count();
    let input = all.iter().filter(|q| q.meets_input_gate()).count();
    let worst = all.iter().map(|q| q.factory_residual / q.approx_error.powf(1.5)).fold(0.0, f64::max);
    assert!(report(
        9,
        "inverse-quality gate against |Vbar - V^dag|^1.5",
        literal == all.len(),
        format!(
            "{literal}/{} factory calls meet it (worst ratio {worst:.2}); {input}/{} meet it against the largest input error incl. Paulis",
            all.len(),
            all.len()
        )
    ));
}
