//! Counter-based reproducible random number streams.
//!
//! Every trial of an ensemble draws from its own ChaCha substream selected by
//! the trial index.  Results are therefore a pure function of
//! `(master_seed, trial_index)` and do not depend on thread count or on the
//! order in which a parallel scheduler happens to run the trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for one trial: master seed selects the key, `index` selects the stream.
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
