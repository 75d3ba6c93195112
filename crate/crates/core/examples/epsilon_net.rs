//! Building, certifying, querying and persisting an ε-net.

use ifsk::matcore::haar_special_unitary;
use ifsk::net::{build_net, load_net, save_net, GateSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ifsk::Result<()> {
    let gs = GateSet::two_rotation_qubit();
    let mut net = build_net(&gs, 14, 0.03)?;
    let radius = net.certify_radius(500, 1)?;
    println!("{} entries up to length {}, certified radius {radius:.4}", net.len(), net.max_word_length());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = haar_special_unitary(2, &mut rng);
    let hit = net.query(u.matrix())?;
    println!("nearest word {:?} at distance {:.4}", gs.names(&hit.word), hit.distance);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("net.bin");
    save_net(&net, &path)?;
    let back = load_net(&path, &gs)?;
    println!("reloaded {} entries, radius {:?}", back.len(), back.certified_radius());
    Ok(())
}
