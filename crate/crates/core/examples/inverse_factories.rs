//! Turning an ε-approximate inverse into an O(ε²) one with approximate Paulis only.

use ifsk::focus::{qubit_inverse, sud_inverse, ImplementedOperator};
use ifsk::matcore::{distance, exp_skew, haar_special_unitary, random_traceless_hermitian, SquareMatrix};
use ifsk::pauli::{su_generators, su_y};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ifsk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [2usize, 3] {
        let (xt, zt) = su_generators(d)?;
        let v = haar_special_unitary(d, &mut rng);
        for eps in [1e-2, 1e-3, 1e-4] {
            let mut noisy = |m: &SquareMatrix, letter: u32| {
                let e = random_traceless_hermitian(d, eps, &mut rng);
                ImplementedOperator::letter(letter, m * exp_skew(&e).matrix(), 0)
            };
            let vbar = noisy(v.dagger().matrix(), 1);
            let xp = noisy(xt.matrix(), 2);
            let zp = noisy(zt.matrix(), 3);
            let vop = ImplementedOperator::letter(0, v.matrix().clone(), 0);
            let id = SquareMatrix::identity(d);
            let before = distance(&(&vbar.value * &vop.value), &id)?;
            let out = sud_inverse(&vop, &vbar, &xp, &zp, d)?;
            let after = distance(&(&out.value * &vop.value), &id)?;
            print!("d={d} eps={eps:.0e}: approximate inverse {before:.2e} -> factory {after:.2e} ({} blocks)", out.len());
            if d == 2 {
                let yp = noisy(su_y().matrix(), 4);
                let q = qubit_inverse(&vop, &vbar, &xp, &yp)?;
                print!(", qubit factory {:.2e}", distance(&(&q.value * &vop.value), &id)?);
            }
            println!();
        }
    }
    Ok(())
}
