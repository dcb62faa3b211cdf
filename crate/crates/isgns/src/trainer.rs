//! Training pipelines: single-pass incremental, chunked mini-batch, and the
//! two-pass batch baseline.
//!
//! The incremental pipeline reads the stream token by token. Each token first
//! updates the vocabulary and the noise table, may be dropped by frequency
//! subsampling ("dirty": dropped tokens vanish before windows form), and the
//! survivors slide through a `2c+1` window whose center is trained as soon as
//! its right context is complete. The noise distribution therefore reflects
//! counts up to the read position, never the whole stream.
//!
//! The mini-batch variant defers SGD: vocabulary and table updates run for M
//! tokens, then all pairs that became ready in the chunk are trained. With
//! M = 1 it reproduces the incremental pipeline exactly. The batch baseline
//! counts frequencies in a first pass, fixes the vocabulary and table, and
//! runs SGD in a second pass.

use std::collections::{HashMap, VecDeque};
use std::io;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::config::{ConfigError, TrainConfig};
use crate::corpus::TokenSource;
use crate::model::{self, AdaGradState, EmbeddingModel, PairBatch};
use crate::noise::UnigramTable;
use crate::rng::RngStreams;
use crate::vocab::{VocabEvent, Vocabulary, WordId};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("batch mode requires re-iterable input (not a stream)")]
    NotReiterable,
}

/// Pairs between report rows.
const REPORT_INTERVAL: u64 = 100_000;

/// Counters and loss trace of one run. All counters cover this run only and
/// increase monotonically while it progresses.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Tokens read from the source during this run.
    pub tokens: u64,
    /// Training pairs (one SGD step each).
    pub pairs: u64,
    /// `(pairs_so_far, mean pair loss)` for each window of 10^5 pairs.
    pub loss_trace: Vec<(u64, f64)>,
    /// Mean pair loss over the whole run.
    pub mean_loss: f64,
    pub wall: Duration,
    pub vocab_size: usize,
    pub table_len: usize,
}

/// Wall-clock comparison of updating a model incrementally on new data versus
/// retraining the batch baseline on everything.
#[derive(Debug, Clone)]
pub struct UpdateTiming {
    pub initial_tokens: u64,
    pub new_tokens: u64,
    pub incremental_update_secs: f64,
    pub batch_retrain_secs: f64,
    pub speedup: f64,
}

/// Sliding window over post-subsampling survivors of one sentence. A center
/// is emitted once `window` tokens follow it (or the sentence ends), paired
/// with every surviving token at distance <= `window`.
struct WindowBuffer {
    window: usize,
    buf: VecDeque<WordId>,
    /// Absolute survivor index of `buf[0]` within the sentence.
    base: usize,
    /// Absolute survivor index of the next center to emit.
    next_center: usize,
    total: usize,
}

impl WindowBuffer {
    fn new(window: usize) -> Self {
        assert!(window >= 1);
        WindowBuffer {
            window,
            buf: VecDeque::new(),
            base: 0,
            next_center: 0,
            total: 0,
        }
    }

    fn emit_center(&mut self, pending: &mut Vec<(WordId, WordId)>) {
        let center_id = self.buf[self.next_center - self.base];
        let hi = (self.total - 1).min(self.next_center + self.window);
        for abs in self.base..=hi {
            if abs != self.next_center {
                pending.push((center_id, self.buf[abs - self.base]));
            }
        }
        self.next_center += 1;
        // Drop tokens that can no longer be context for future centers.
        while self.base + self.window < self.next_center {
            self.buf.pop_front();
            self.base += 1;
        }
    }

    fn push(&mut self, id: WordId, pending: &mut Vec<(WordId, WordId)>) {
        self.buf.push_back(id);
        self.total += 1;
        while self.next_center + self.window < self.total {
            self.emit_center(pending);
        }
    }

    fn flush(&mut self, pending: &mut Vec<(WordId, WordId)>) {
        while self.next_center < self.total {
            self.emit_center(pending);
        }
        self.buf.clear();
        self.base = 0;
        self.next_center = 0;
        self.total = 0;
    }
}

struct RunStats {
    tokens: u64,
    pairs: u64,
    loss_total: f64,
    window_loss: f64,
    window_pairs: u64,
    trace: Vec<(u64, f64)>,
    started: Instant,
}

impl RunStats {
    fn new() -> Self {
        RunStats {
            tokens: 0,
            pairs: 0,
            loss_total: 0.0,
            window_loss: 0.0,
            window_pairs: 0,
            trace: Vec::new(),
            started: Instant::now(),
        }
    }

    fn record_pair(&mut self, loss: f64) {
        self.pairs += 1;
        self.loss_total += loss;
        self.window_loss += loss;
        self.window_pairs += 1;
        if self.window_pairs == REPORT_INTERVAL {
            self.trace
                .push((self.pairs, self.window_loss / self.window_pairs as f64));
            self.window_loss = 0.0;
            self.window_pairs = 0;
        }
    }
}

/// Shared machinery of the streaming pipelines.
struct Pipeline<'a> {
    cfg: &'a TrainConfig,
    vocab: Vocabulary,
    table: UnigramTable,
    model: EmbeddingModel,
    opt: AdaGradState,
    rng: RngStreams,
    window: WindowBuffer,
    pending: Vec<(WordId, WordId)>,
    negatives: Vec<WordId>,
    stats: RunStats,
}

impl<'a> Pipeline<'a> {
    fn fresh(cfg: &'a TrainConfig) -> Self {
        Pipeline {
            cfg,
            vocab: Vocabulary::new(cfg.max_vocab),
            table: UnigramTable::new(cfg.table_cap, cfg.smoothing),
            model: EmbeddingModel::new(cfg.max_vocab, cfg.dim),
            opt: AdaGradState::new(cfg.max_vocab, cfg.dim, cfg.learning_rate),
            rng: RngStreams::new(cfg.seed),
            window: WindowBuffer::new(cfg.window),
            pending: Vec::new(),
            negatives: Vec::new(),
            stats: RunStats::new(),
        }
    }

    fn resume(cfg: &'a TrainConfig, ckpt: Checkpoint) -> Result<Self, TrainError> {
        ckpt.config.structural_match(cfg)?;
        let Checkpoint {
            config,
            vocab,
            table,
            model,
            optimizer,
            rng_cursors,
        } = ckpt;
        Ok(Pipeline {
            cfg,
            vocab,
            table,
            model,
            opt: optimizer.with_learning_rate(cfg.learning_rate),
            rng: RngStreams::restore(config.seed, rng_cursors),
            window: WindowBuffer::new(cfg.window),
            pending: Vec::new(),
            negatives: Vec::new(),
            stats: RunStats::new(),
        })
    }

    /// Feeds one token through vocabulary, noise table and subsampling.
    /// `ends_sentence` flushes the window after the token is placed, so a
    /// sentence's tail pairs become pending together with its last token.
    fn ingest_token(&mut self, word: &str, ends_sentence: bool) {
        self.stats.tokens += 1;
        let live = match self.vocab.observe(word) {
            VocabEvent::Inserted(id) => {
                model::init_row(&mut self.model, &mut self.opt, id, &mut self.rng.init);
                Some(id)
            }
            VocabEvent::Existing(id) => Some(id),
            VocabEvent::Rejected { evicted } => {
                for id in evicted {
                    self.table.retire_word(id);
                    model::clear_row(&mut self.model, &mut self.opt, id);
                }
                None
            }
        };
        if let Some(id) = live {
            let count = self.vocab.frequency(id).expect("live word");
            self.table.increment_mass(id, count, &mut self.rng.table);
            let keep = model::subsample_keep(
                count,
                self.vocab.n_seen(),
                self.cfg.subsample,
                &mut self.rng.subsample,
            );
            if keep {
                // Buffered ids may be evicted (or recycled) before their pair
                // trains; the step then touches whichever row owns the id.
                self.window.push(id, &mut self.pending);
            }
        }
        if ends_sentence {
            self.window.flush(&mut self.pending);
        }
    }

    /// Runs SGD over every pending pair, in emission order.
    fn train_pending(&mut self) {
        for i in 0..self.pending.len() {
            let (target, positive) = self.pending[i];
            self.table
                .sample_into(&mut self.negatives, self.cfg.negatives, &mut self.rng.negatives)
                .expect("table non-empty while pairs pend");
            let batch = PairBatch {
                target,
                positive,
                negatives: &self.negatives,
            };
            let loss = self.model.sgd_step(&mut self.opt, &batch);
            self.stats.record_pair(loss);
        }
        self.pending.clear();
    }

    /// Streams the source through the pipeline. `chunk = None` trains after
    /// every token (incremental); `chunk = Some(M)` trains at M-token
    /// boundaries and once more at end of stream.
    fn run(&mut self, source: &mut TokenSource, chunk: Option<usize>) -> Result<(), TrainError> {
        let mut fill = 0usize;
        for sentence in source.sentences()? {
            let tokens = sentence?;
            let len = tokens.len();
            for (i, token) in tokens.iter().enumerate() {
                self.ingest_token(token, i + 1 == len);
                match chunk {
                    None => self.train_pending(),
                    Some(m) => {
                        fill += 1;
                        if fill == m {
                            self.train_pending();
                            fill = 0;
                        }
                    }
                }
            }
        }
        self.train_pending();
        Ok(())
    }

    fn finish(self) -> (Checkpoint, TrainReport) {
        let report = TrainReport {
            tokens: self.stats.tokens,
            pairs: self.stats.pairs,
            loss_trace: self.stats.trace,
            mean_loss: if self.stats.pairs > 0 {
                self.stats.loss_total / self.stats.pairs as f64
            } else {
                0.0
            },
            wall: self.stats.started.elapsed(),
            vocab_size: self.vocab.len(),
            table_len: self.table.len(),
        };
        let ckpt = Checkpoint {
            config: self.cfg.clone(),
            vocab: self.vocab,
            table: self.table,
            model: self.model,
            optimizer: self.opt,
            rng_cursors: self.rng.cursors(),
        };
        (ckpt, report)
    }
}

/// Single-pass incremental training (optionally resuming a checkpoint).
pub fn train_incremental(
    source: &mut TokenSource,
    cfg: &TrainConfig,
    resume: Option<Checkpoint>,
) -> Result<(Checkpoint, TrainReport), TrainError> {
    cfg.validate()?;
    let mut pipeline = match resume {
        Some(ckpt) => Pipeline::resume(cfg, ckpt)?,
        None => Pipeline::fresh(cfg),
    };
    pipeline.run(source, None)?;
    Ok(pipeline.finish())
}

/// Mini-batch training: noise updates for M tokens, then their SGD. Requires
/// `cfg.minibatch`.
pub fn train_minibatch(
    source: &mut TokenSource,
    cfg: &TrainConfig,
    resume: Option<Checkpoint>,
) -> Result<(Checkpoint, TrainReport), TrainError> {
    cfg.validate()?;
    let m = cfg.minibatch.ok_or(ConfigError::Invalid {
        field: "batch-size",
        requirement: "set for mini-batch training",
        value: "absent".into(),
    })?;
    let mut pipeline = match resume {
        Some(ckpt) => Pipeline::resume(cfg, ckpt)?,
        None => Pipeline::fresh(cfg),
    };
    pipeline.run(source, Some(m))?;
    Ok(pipeline.finish())
}

/// Two-pass batch baseline: exact counts and a fixed noise table from pass
/// one, SGD in pass two.
pub fn train_batch(
    source: &mut TokenSource,
    cfg: &TrainConfig,
) -> Result<(Checkpoint, TrainReport), TrainError> {
    cfg.validate()?;
    if !source.is_reiterable() {
        return Err(TrainError::NotReiterable);
    }

    // Pass 1: exact frequencies.
    let mut counts: HashMap<String, (u64, u64)> = HashMap::new();
    let mut order = 0u64;
    let mut total_tokens = 0u64;
    for sentence in source.sentences()? {
        for token in sentence? {
            total_tokens += 1;
            counts
                .entry(token)
                .and_modify(|e| e.0 += 1)
                .or_insert_with(|| {
                    order += 1;
                    (1, order)
                });
        }
    }
    let mut ranked: Vec<(String, u64, u64)> =
        counts.into_iter().map(|(w, (c, o))| (w, c, o)).collect();
    // Exact top-m vocabulary; ties resolved by first appearance.
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.truncate(cfg.max_vocab);

    let vocab = Vocabulary::from_exact_counts(
        cfg.max_vocab,
        ranked.iter().map(|(w, c, _)| (w.clone(), *c)),
        total_tokens,
    );
    let id_counts: Vec<(WordId, u64)> = vocab.iter().map(|(id, _, c)| (id, c)).collect();
    let table = UnigramTable::build_exact(&id_counts, cfg.smoothing, cfg.table_cap);

    let mut pipeline = Pipeline::fresh(cfg);
    pipeline.vocab = vocab;
    pipeline.table = table;
    for (id, _) in id_counts {
        model::init_row(&mut pipeline.model, &mut pipeline.opt, id, &mut pipeline.rng.init);
    }

    // Pass 2: SGD with the noise distribution frozen at the final counts.
    for sentence in source.sentences()? {
        let tokens = sentence?;
        let len = tokens.len();
        for (i, token) in tokens.iter().enumerate() {
            pipeline.stats.tokens += 1;
            if let Some(id) = pipeline.vocab.id_of(token) {
                let count = pipeline.vocab.frequency(id).expect("live word");
                let keep = model::subsample_keep(
                    count,
                    total_tokens,
                    cfg.subsample,
                    &mut pipeline.rng.subsample,
                );
                if keep {
                    pipeline.window.push(id, &mut pipeline.pending);
                }
            }
            if i + 1 == len {
                pipeline.window.flush(&mut pipeline.pending);
            }
            pipeline.train_pending();
        }
    }
    Ok(pipeline.finish())
}

/// Times (a) an incremental update on `new` only, resuming a checkpoint of
/// `initial`, against (b) a batch retrain over `initial` followed by `new`.
/// Checkpoint serialization happens in memory and is included in (a), so an
/// empty update measures little more than a load/save round trip.
pub fn measure_update(
    initial: &TokenSource,
    new: &TokenSource,
    cfg: &TrainConfig,
) -> Result<UpdateTiming, TrainError> {
    let mut initial_once = initial.clone();
    let (ckpt, initial_report) = train_incremental(&mut initial_once, cfg, None)?;
    let bytes = ckpt.to_bytes();

    let start = Instant::now();
    let resumed = Checkpoint::from_bytes(&bytes)?;
    let mut new_once = new.clone();
    let (updated, update_report) = train_incremental(&mut new_once, cfg, Some(resumed))?;
    let _ = updated.to_bytes();
    let incremental_update_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut combined = TokenSource::Chain(vec![initial.clone(), new.clone()]);
    let (retrained, _) = train_batch(&mut combined, cfg)?;
    let _ = retrained.to_bytes();
    let batch_retrain_secs = start.elapsed().as_secs_f64();

    Ok(UpdateTiming {
        initial_tokens: initial_report.tokens,
        new_tokens: update_report.tokens,
        incremental_update_secs,
        batch_retrain_secs,
        speedup: batch_retrain_secs / incremental_update_secs.max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            window: 1,
            negatives: 1,
            smoothing: 1.0,
            dim: 4,
            max_vocab: 8,
            table_cap: 64,
            learning_rate: 0.1,
            subsample: 4.0, // p <= 1 < t: nothing is ever dropped
            minibatch: None,
            seed: 5,
        }
    }

    #[test]
    fn window_pair_count_single_sentence() {
        // "x x x x" with c = 1: two interior tokens contribute two pairs each,
        // the two edge tokens one each.
        let cfg = tiny_cfg();
        let mut source = TokenSource::from_text("x x x x\n");
        let (_, report) = train_incremental(&mut source, &cfg, None).unwrap();
        assert_eq!(report.pairs, 6);
        assert_eq!(report.tokens, 4);
    }

    #[test]
    fn empty_source_yields_empty_checkpoint() {
        let cfg = tiny_cfg();
        let mut source = TokenSource::from_text("");
        let (ckpt, report) = train_incremental(&mut source, &cfg, None).unwrap();
        assert_eq!(report.tokens, 0);
        assert_eq!(report.pairs, 0);
        assert_eq!(ckpt.vocab.len(), 0);
        assert_eq!(ckpt.vocab.n_seen(), 0);
        assert_eq!(ckpt.table.len(), 0);
    }

    #[test]
    fn windows_never_cross_sentences() {
        let cfg = tiny_cfg();
        let mut one = TokenSource::from_text("a b\nc d\n");
        let (_, report_split) = train_incremental(&mut one, &cfg, None).unwrap();
        // Each 2-token sentence yields 2 pairs.
        assert_eq!(report_split.pairs, 4);

        let mut joined = TokenSource::from_text("a b c d\n");
        let (_, report_joined) = train_incremental(&mut joined, &cfg, None).unwrap();
        assert_eq!(report_joined.pairs, 6);
    }

    #[test]
    fn minibatch_defers_sgd_until_chunk_boundary() {
        // With M covering the whole stream, every noise update lands before
        // the first SGD step: the table the pairs see is the final one.
        let cfg = TrainConfig {
            minibatch: Some(4),
            ..tiny_cfg()
        };
        let mut pipeline = Pipeline::fresh(&cfg);
        let tokens = ["a", "a", "a", "b"];
        for (i, tok) in tokens.iter().enumerate() {
            pipeline.ingest_token(tok, i + 1 == tokens.len());
        }
        assert!(!pipeline.pending.is_empty());
        assert_eq!(pipeline.stats.pairs, 0);
        assert_eq!(pipeline.table.len(), 4); // a:3 + b:1 at alpha = 1
        pipeline.train_pending();
        assert!(pipeline.stats.pairs > 0);
    }

    #[test]
    fn rejected_tokens_are_skipped_but_decrement() {
        let cfg = TrainConfig {
            max_vocab: 1,
            ..tiny_cfg()
        };
        // "a a b": b is rejected (vocab full with a), decrementing a to 1.
        let mut source = TokenSource::from_text("a a b\n");
        let (ckpt, _) = train_incremental(&mut source, &cfg, None).unwrap();
        let a = ckpt.vocab.id_of("a").unwrap();
        assert_eq!(ckpt.vocab.frequency(a), Ok(1));
        assert!(ckpt.vocab.id_of("b").is_none());
        assert_eq!(ckpt.vocab.n_seen(), 3);
    }

    /// Brute-force window enumeration used to validate the sliding buffer.
    fn brute_force_pairs(survivors: &[u32], c: usize) -> Vec<(u32, u32)> {
        let n = survivors.len();
        let mut out = Vec::new();
        for i in 0..n {
            let lo = i.saturating_sub(c);
            let hi = (n - 1).min(i + c);
            for j in lo..=hi {
                if j != i {
                    out.push((survivors[i], survivors[j]));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn window_buffer_matches_brute_force(
            ids in proptest::collection::vec(0u32..50, 0..40),
            c in 1usize..5,
        ) {
            let mut buffer = WindowBuffer::new(c);
            let mut pending = Vec::new();
            for &id in &ids {
                buffer.push(WordId(id), &mut pending);
            }
            buffer.flush(&mut pending);
            let got: Vec<(u32, u32)> = pending.iter().map(|&(a, b)| (a.0, b.0)).collect();
            prop_assert_eq!(got, brute_force_pairs(&ids, c));
        }
    }
}
