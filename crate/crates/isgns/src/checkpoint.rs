//! Versioned binary checkpoint format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "ISGN"  magic
//! u16     format version (currently 1)
//! payload:
//!   config block   hyperparameters + the four RNG stream cursors
//!   vocab slab     n_seen, live (id, count, word) entries in id order,
//!                  free-id stack, next fresh id
//!   noise slab     z, table ids (u32), per-id contributed mass
//!   model slab     target/context matrices (f32), AdaGrad accumulators (f64),
//!                  row-major, indexed by word id
//! u32     CRC32 of the payload
//! ```
//!
//! The loader rejects bad magic, versions newer than it understands, and any
//! CRC mismatch before touching the payload; serialization is fully
//! deterministic, so save -> load -> save is byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::TrainConfig;
use crate::model::{AdaGradState, EmbeddingModel};
use crate::noise::UnigramTable;
use crate::vocab::{Vocabulary, WordId};

const MAGIC: &[u8; 4] = b"ISGN";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}; this build reads up to {FORMAT_VERSION}")]
    UnsupportedVersion(u16),
    #[error("checkpoint corrupted: stored CRC {stored:#010x} != computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("checkpoint truncated or malformed: {0}")]
    Malformed(&'static str),
}

/// A resumable snapshot of everything a training run carries.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub table: UnigramTable,
    pub model: EmbeddingModel,
    pub optimizer: AdaGradState,
    /// Keystream cursors of the named RNG sub-streams, in the order
    /// negatives, subsample, table, init.
    pub rng_cursors: [u128; 4],
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Malformed("unexpected end of payload"));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128, CheckpointError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, CheckpointError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize64(&mut self) -> Result<usize, CheckpointError> {
        usize::try_from(self.u64()?).map_err(|_| CheckpointError::Malformed("length overflow"))
    }
    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u16(FORMAT_VERSION);
        let payload_start = w.buf.len();

        // Config block.
        let c = &self.config;
        w.u64(c.window as u64);
        w.u64(c.negatives as u64);
        w.f64(c.smoothing);
        w.u64(c.dim as u64);
        w.u64(c.max_vocab as u64);
        w.u64(c.table_cap as u64);
        w.f64(c.learning_rate);
        w.f64(c.subsample);
        // The mini-batch size is a per-run mode, not model state: a chunked
        // run with M = 1 must serialize identically to an incremental one.
        w.u64(c.seed);
        for cursor in self.rng_cursors {
            w.u128(cursor);
        }

        // Vocab slab.
        w.u64(self.vocab.n_seen());
        w.u32(self.vocab.next_fresh());
        w.u32(self.vocab.len() as u32);
        for (id, word, count) in self.vocab.iter() {
            w.u32(id.0);
            w.u64(count);
            w.u32(word.len() as u32);
            w.bytes(word.as_bytes());
        }
        w.u32(self.vocab.free_list().len() as u32);
        for &raw in self.vocab.free_list() {
            w.u32(raw);
        }

        // Noise slab.
        w.f64(self.table.z());
        w.u64(self.table.len() as u64);
        for &id in self.table.entries() {
            w.u32(id.0);
        }
        w.u64(self.table.mass_slice().len() as u64);
        for &m in self.table.mass_slice() {
            w.f64(m);
        }

        // Model slab.
        w.u64(self.model.rows() as u64);
        w.u64(self.model.dim() as u64);
        for &x in self.model.target_flat() {
            w.f32(x);
        }
        for &x in self.model.context_flat() {
            w.f32(x);
        }
        for &x in self.optimizer.accum_target_flat() {
            w.f64(x);
        }
        for &x in self.optimizer.accum_context_flat() {
            w.f64(x);
        }

        let crc = crc32fast::hash(&w.buf[payload_start..]);
        w.u32(crc);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() + 2 + 4 {
            return Err(CheckpointError::Malformed("file too short"));
        }
        if &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let payload = &bytes[6..bytes.len() - 4];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(CheckpointError::CrcMismatch { stored, computed });
        }

        let mut r = Reader::new(payload);
        let config = TrainConfig {
            window: r.usize64()?,
            negatives: r.usize64()?,
            smoothing: r.f64()?,
            dim: r.usize64()?,
            max_vocab: r.usize64()?,
            table_cap: r.usize64()?,
            learning_rate: r.f64()?,
            subsample: r.f64()?,
            minibatch: None,
            seed: r.u64()?,
        };
        let mut rng_cursors = [0u128; 4];
        for cursor in &mut rng_cursors {
            *cursor = r.u128()?;
        }

        let n_seen = r.u64()?;
        let next_fresh = r.u32()?;
        let live = r.u32()? as usize;
        if live > config.max_vocab {
            return Err(CheckpointError::Malformed("more entries than capacity"));
        }
        let mut entries = Vec::with_capacity(live);
        for _ in 0..live {
            let id = r.u32()?;
            let count = r.u64()?;
            let len = r.u32()? as usize;
            let word = std::str::from_utf8(r.take(len)?)
                .map_err(|_| CheckpointError::Malformed("word is not UTF-8"))?
                .to_owned();
            if id as usize >= config.max_vocab {
                return Err(CheckpointError::Malformed("word id out of range"));
            }
            entries.push((id, word, count));
        }
        let free_len = r.u32()? as usize;
        let mut free = Vec::with_capacity(free_len);
        for _ in 0..free_len {
            free.push(r.u32()?);
        }
        let vocab =
            Vocabulary::from_parts(config.max_vocab, entries, free, next_fresh, n_seen);

        let z = r.f64()?;
        let table_len = r.usize64()?;
        if table_len > config.table_cap {
            return Err(CheckpointError::Malformed("table longer than its cap"));
        }
        let mut table_entries = Vec::with_capacity(table_len);
        for _ in 0..table_len {
            table_entries.push(WordId(r.u32()?));
        }
        let mass_len = r.usize64()?;
        if mass_len > config.max_vocab {
            return Err(CheckpointError::Malformed("mass vector longer than capacity"));
        }
        let mut mass = Vec::with_capacity(mass_len);
        for _ in 0..mass_len {
            mass.push(r.f64()?);
        }
        let table = UnigramTable::from_parts(
            config.table_cap,
            config.smoothing,
            table_entries,
            z,
            mass,
        );

        let rows = r.usize64()?;
        let dim = r.usize64()?;
        if rows != config.max_vocab || dim != config.dim {
            return Err(CheckpointError::Malformed("model shape disagrees with config"));
        }
        let cells = rows
            .checked_mul(dim)
            .ok_or(CheckpointError::Malformed("model shape overflow"))?;
        let mut target = Vec::with_capacity(cells);
        for _ in 0..cells {
            target.push(r.f32()?);
        }
        let mut context = Vec::with_capacity(cells);
        for _ in 0..cells {
            context.push(r.f32()?);
        }
        let mut accum_target = Vec::with_capacity(cells);
        for _ in 0..cells {
            accum_target.push(r.f64()?);
        }
        let mut accum_context = Vec::with_capacity(cells);
        for _ in 0..cells {
            accum_context.push(r.f64()?);
        }
        if !r.done() {
            return Err(CheckpointError::Malformed("trailing bytes in payload"));
        }

        Ok(Checkpoint {
            model: EmbeddingModel::from_parts(rows, dim, target, context),
            optimizer: AdaGradState::from_parts(config.learning_rate, accum_target, accum_context),
            config,
            vocab,
            table,
            rng_cursors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let bytes = self.to_bytes();
        let mut file = fs::File::create(path)?;
        file.write_all(&bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path)?;
        Checkpoint::from_bytes(&bytes)
    }
}
