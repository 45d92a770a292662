use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream of randomness is consumed by. Each purpose gets its own key
/// so that, e.g., gradient noise does not shift when a compressor draws more
/// numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Noise,
    Quantizer,
    Compressor,
    Generator,
    Selection,
    Sampling,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Noise => 1,
            Purpose::Quantizer => 2,
            Purpose::Compressor => 3,
            Purpose::Generator => 4,
            Purpose::Selection => 5,
            Purpose::Sampling => 6,
        }
    }
}

const SYNCHRONIZED: u64 = u64::MAX;

/// Address of a reproducible, counter-based random stream.
///
/// The ChaCha key is built from `(master_seed, worker, purpose)` and the
/// round index selects the ChaCha stream, so every `(worker, round)` cell is
/// independent of every other and can be regenerated from the master seed
/// alone. Synchronized streams drop the worker index: all workers see the
/// same draws in a given round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    worker: u64,
    round: u64,
    purpose: Purpose,
}

impl RngStream {
    pub fn worker(master_seed: u64, worker: usize, round: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            worker: worker as u64,
            round,
            purpose,
        }
    }

    pub fn synchronized(master_seed: u64, round: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            worker: SYNCHRONIZED,
            round,
            purpose,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Worker index, or `None` for a synchronized stream.
    pub fn worker_index(&self) -> Option<usize> {
        (self.worker != SYNCHRONIZED).then_some(self.worker as usize)
    }

    pub fn is_synchronized(&self) -> bool {
        self.worker == SYNCHRONIZED
    }

    pub fn purpose(&self) -> Purpose {
        self.purpose
    }

    /// Same address with a different round.
    pub fn at_round(self, round: u64) -> Self {
        Self { round, ..self }
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.worker.to_le_bytes());
        key[16..24].copy_from_slice(&self.purpose.tag().to_le_bytes());
        key[24..].copy_from_slice(b"hetsgd\0\x01");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.round);
        rng
    }
}
