//! Generalized Pauli multiplication, daggers and basis decomposition.

use ifsk::matcore::distance;
use ifsk::pauli::{pauli_dagger, pauli_decompose, pauli_group, pauli_mul, su_generators, PauliIndex, PhasedPauli};

fn main() -> ifsk::Result<()> {
    let d = 3;
    let x = PhasedPauli::plain(PauliIndex::new(1, 0, d)?);
    let z = PhasedPauli::plain(PauliIndex::new(0, 1, d)?);

    let zx = pauli_mul(&z, &x)?;
    let xz = pauli_mul(&x, &z)?;
    println!("Z·X phase {:.4}", zx.phase.value());
    println!("X·Z phase {:.4}", xz.phase.value());
    let symbolic = zx.matrix();
    let dense = &z.matrix() * &x.matrix();
    println!("symbolic vs dense product distance {:.2e}", distance(&symbolic, &dense)?);

    let xd = pauli_dagger(&xz);
    println!("(XZ)† = phase {:.4} · X^{} Z^{}", xd.phase.value(), xd.index.n(), xd.index.m());

    let (xt, zt) = su_generators(d)?;
    println!("SU-normalized X̃^3 = I: {:.2e}", distance(&xt.matrix().pow(3), &ifsk::matcore::SquareMatrix::identity(d))?);

    let m = &xt.matrix().scale_re(0.5) + zt.matrix();
    let coeffs = pauli_decompose(&m)?;
    for p in pauli_group(d) {
        let c = coeffs.get(p.index.n(), p.index.m());
        if c.norm() > 1e-12 {
            println!("coefficient of X^{} Z^{}: {:.4}", p.index.n(), p.index.m(), c);
        }
    }
    println!("reconstruction error {:.2e}", distance(&coeffs.reconstruct(), &m)?);
    Ok(())
}
