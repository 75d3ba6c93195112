//! Classic, irrep-assisted and inverse-free recursion side by side, with padded lengths.

use ifsk::matcore::haar_special_unitary;
use ifsk::net::{build_net, GateSet};
use ifsk::sk::{check_lengths, run_benchmark, Algorithm, Compiler, SKConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ifsk::Result<()> {
    let runs = [
        (Algorithm::Classic, GateSet::two_rotation_qubit_with_inverses(), 12, 0.03),
        (Algorithm::Irrep, GateSet::two_rotation_qubit().with_pauli_irrep()?, 10, 0.02),
        (Algorithm::Ifsk, GateSet::two_rotation_qubit(), 16, 0.02),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let targets: Vec<_> = (0..5).map(|_| haar_special_unitary(2, &mut rng)).collect();
    for (algorithm, gs, len, dedup) in runs {
        let mut net = build_net(&gs, len, dedup)?;
        let radius = net.certify_radius(500, 1)?;
        let mut cfg = SKConfig::new(algorithm, 2, radius);
        cfg.padding = true;
        let compiler = Compiler::new(cfg, gs, net)?;
        let res = run_benchmark(&compiler, &targets)?;
        let order = compiler.irrep().map(|g| g.group_order()).unwrap_or(4);
        let exact = check_lengths(&res.records, true, order, false).iter().all(|c| c.exact && c.holds);
        let lens: Vec<usize> = res.compilations[0].levels.iter().map(|r| r.len_n).collect();
        println!(
            "{:<7} lengths {:?} exact recursion {exact}  C {:.2}  exponent {:.2}",
            algorithm.name(),
            lens,
            res.summary.fitted_c,
            res.summary.per_step_exponent
        );
    }
    Ok(())
}
