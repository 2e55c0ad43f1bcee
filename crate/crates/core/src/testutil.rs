use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelRealization;
use crate::linalg::{complex_normal_matrix, complex_normal_vector};
use crate::model::PhaseVector;

/// Unit-scale random instance with a generic (non-identity) RIS root.
pub(crate) fn random_instance(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> (ChannelRealization, PhaseVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h1 = complex_normal_matrix(m, n, &mut rng);
    let r = complex_normal_matrix(n, n, &mut rng);
    let h2 = (0..k).map(|_| complex_normal_vector(n, &mut rng)).collect();
    let chan = ChannelRealization::new(h1, r, h2, vec![[15.0, 15.0]; k]).unwrap();
    let phase = PhaseVector::uniform(n, 0.8, &mut rng);
    (chan, phase)
}
