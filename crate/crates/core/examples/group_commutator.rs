//! Factoring a near-identity unitary as a balanced group commutator.

use ifsk::commutator::{balanced_commutator, group_commutator};
use ifsk::matcore::{distance, exp_skew, random_traceless_hermitian, SquareMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ifsk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 3;
    let id = SquareMatrix::identity(d);
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let delta = exp_skew(&random_traceless_hermitian(d, eps, &mut rng));
        let pair = balanced_commutator(&delta)?;
        let c = group_commutator(pair.v.matrix(), pair.w.matrix());
        println!(
            "eps {eps:.0e}: |V-I| {:.3e}  |W-I| {:.3e}  |VWV†W† - Δ| {:.3e}",
            distance(pair.v.matrix(), &id)?,
            distance(pair.w.matrix(), &id)?,
            distance(&c, delta.matrix())?
        );
    }
    Ok(())
}
