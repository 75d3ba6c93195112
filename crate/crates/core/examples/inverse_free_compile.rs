//! Compiling Haar targets over two 1-radian rotations with no inverse gates.

use ifsk::matcore::haar_special_unitary;
use ifsk::net::{build_net, GateSet};
use ifsk::sk::{Algorithm, Compiler, SKConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ifsk::Result<()> {
    let gs = GateSet::two_rotation_qubit();
    let mut net = build_net(&gs, 16, 0.02)?;
    let radius = net.certify_radius(500, 1)?;
    let compiler = Compiler::new(SKConfig::new(Algorithm::Ifsk, 2, radius), gs, net)?;
    println!("handshake C = {:.3}", compiler.calibrate()?);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let u = haar_special_unitary(2, &mut rng);
        let c = compiler.compile(&u, 2)?;
        c.op.verify(compiler.letters())?;
        let levels: Vec<String> = c.levels.iter().map(|r| format!("{:.2e}/{}", r.eps_n, r.len_n)).collect();
        println!("eps/len per level: {}", levels.join("  "));
        let head: Vec<&str> = compiler.names(&c.op.word).into_iter().take(12).collect();
        println!("  starts {} ...", head.join(" "));
    }
    Ok(())
}
