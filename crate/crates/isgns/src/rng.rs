//! Named random sub-streams derived from one master seed.
//!
//! Negative sampling, subsampling, table rounding and row initialization each
//! draw from their own ChaCha stream, so toggling one feature does not shift
//! the draws of the others. Stream cursors are saved into checkpoints, which
//! is what makes a split-and-resume run reproduce the unsplit run bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STREAM_NEGATIVES: u64 = 1;
const STREAM_SUBSAMPLE: u64 = 2;
const STREAM_TABLE: u64 = 3;
const STREAM_INIT: u64 = 4;

#[derive(Debug, Clone)]
pub struct RngStreams {
    seed: u64,
    pub negatives: ChaCha8Rng,
    pub subsample: ChaCha8Rng,
    pub table: ChaCha8Rng,
    pub init: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams {
            seed,
            negatives: stream(seed, STREAM_NEGATIVES),
            subsample: stream(seed, STREAM_SUBSAMPLE),
            table: stream(seed, STREAM_TABLE),
            init: stream(seed, STREAM_INIT),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Current keystream positions, in the fixed order used by checkpoints.
    pub fn cursors(&self) -> [u128; 4] {
        [
            self.negatives.get_word_pos(),
            self.subsample.get_word_pos(),
            self.table.get_word_pos(),
            self.init.get_word_pos(),
        ]
    }

    /// Rebuilds the streams at previously saved cursor positions.
    pub fn restore(seed: u64, cursors: [u128; 4]) -> Self {
        let mut streams = RngStreams::new(seed);
        streams.negatives.set_word_pos(cursors[0]);
        streams.subsample.set_word_pos(cursors[1]);
        streams.table.set_word_pos(cursors[2]);
        streams.init.set_word_pos(cursors[3]);
        streams
    }
}
