//! Monte-Carlo harness for the objective difference between batch-noise and
//! streaming-noise training.
//!
//! For a dataset w_1..w_n and fixed parameters, the two objectives differ by
//!
//! ```text
//! dL = (2ck/n) * sum_i sum_v (q_i(v) - q_n(v)) * psi_neg(w_i, v)
//! ```
//!
//! where `q_i` is the smoothed unigram distribution of the first `i` words.
//! The harness evaluates `dL` exactly on sampled datasets, estimates its
//! first and second moments over replicates, and compares the unsmoothed
//! first moment against its closed form
//!
//! ```text
//! E[dL] = (2ck(H_n - 1)/n) * sum_{w,v} Sigma_{w,v} * psi_neg(w, v)
//! ```
//!
//! with `H_n` the n-th harmonic number and `Sigma` the stationary
//! single-position covariance. Both moments decay like `log(n)/n`; the
//! `fit_log_over_x` helper fits that shape to a measured series.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::EmbeddingModel;
use crate::vocab::WordId;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("word {0} is outside the vocabulary of size {1}")]
    UnknownWord(u32, usize),
    #[error("the closed-form first moment holds for smoothing 1.0 only, got {0}")]
    SmoothedNotSupported(f64),
    #[error("degenerate fit: no point has log(n)/n != 0")]
    DegenerateFit,
    #[error("need at least 2 tokens to estimate a covariance")]
    CorpusTooShort,
    #[error("need at least 2 replicates for standard errors")]
    TooFewReplicates,
    #[error("probabilities must be non-negative and sum to 1")]
    BadDistribution,
    #[error("dataset must not be empty")]
    EmptyDataset,
}

/// The objective parameters `dL` depends on.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveConfig {
    /// Window size c.
    pub window: usize,
    /// Negative samples k.
    pub negatives: usize,
    /// Noise smoothing alpha.
    pub smoothing: f64,
}

/// Dense matrix of `psi_neg(w, v) = log sigmoid(-t_w . c_v)` over the whole
/// vocabulary, precomputed once per parameter draw.
#[derive(Debug, Clone)]
pub struct PsiTable {
    vocab: usize,
    values: Vec<f64>,
}

impl PsiTable {
    pub fn from_model(model: &EmbeddingModel) -> Self {
        let vocab = model.rows();
        let mut values = vec![0.0; vocab * vocab];
        for w in 0..vocab {
            for v in 0..vocab {
                values[w * vocab + v] = model.psi_neg(WordId(w as u32), WordId(v as u32));
            }
        }
        PsiTable { vocab, values }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    #[inline]
    pub fn get(&self, w: usize, v: usize) -> f64 {
        self.values[w * self.vocab + v]
    }

    #[inline]
    fn row(&self, w: usize) -> &[f64] {
        &self.values[w * self.vocab..(w + 1) * self.vocab]
    }
}

/// Neumaier compensated accumulator. The objective difference is a small gap
/// between two large sums, so plain summation noise can exceed it; keeping
/// the compensation term makes the later subtraction meaningful.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// `a - b` without losing the cancellation: the leading parts subtract
/// exactly when they are close (Sterbenz), the compensations carry the rest.
pub(crate) fn compensated_difference(a: CompensatedSum, b: CompensatedSum) -> f64 {
    (a.sum - b.sum) + (a.comp - b.comp)
}

/// Samples parameters for the harness: every coordinate of both tables drawn
/// uniformly from [-0.5, 0.5].
pub fn random_theta(vocab: usize, dim: usize, rng: &mut impl Rng) -> EmbeddingModel {
    let mut target = vec![0.0f32; vocab * dim];
    let mut context = vec![0.0f32; vocab * dim];
    for x in &mut target {
        *x = rng.gen_range(-0.5..0.5);
    }
    for x in &mut context {
        *x = rng.gen_range(-0.5..0.5);
    }
    EmbeddingModel::from_parts(vocab, dim, target, context)
}

/// Exact objective difference with the streaming distribution `q_i` at every
/// position. Runs in O(n |W|) after an O(|W|^2) setup.
pub fn delta_l(
    dataset: &[u32],
    psi: &PsiTable,
    cfg: &ObjectiveConfig,
) -> Result<f64, TheoryError> {
    delta_l_blocked(dataset, psi, cfg, 1)
}

/// Objective difference in the mini-batch regime: the noise distribution is
/// frozen within each `block`-token chunk, i.e. position `i` sees the counts
/// through index `min(ceil(i/M)*M, n)`. `block = 1` is the streaming case.
pub fn delta_l_blocked(
    dataset: &[u32],
    psi: &PsiTable,
    cfg: &ObjectiveConfig,
    block: usize,
) -> Result<f64, TheoryError> {
    assert!(block >= 1);
    let n = dataset.len();
    if n == 0 {
        return Err(TheoryError::EmptyDataset);
    }
    let vocab = psi.vocab;
    for &w in dataset {
        if w as usize >= vocab {
            return Err(TheoryError::UnknownWord(w, vocab));
        }
    }
    let alpha = cfg.smoothing;

    // Final distribution q_n and its per-target expectation of psi.
    let mut counts_n = vec![0u64; vocab];
    for &w in dataset {
        counts_n[w as usize] += 1;
    }
    let pow_n: Vec<f64> = counts_n.iter().map(|&c| (c as f64).powf(alpha)).collect();
    let z_n: f64 = pow_n.iter().sum();
    let q_n: Vec<f64> = pow_n.iter().map(|&p| p / z_n).collect();
    let mut expect_n = vec![0.0f64; vocab];
    for w in 0..vocab {
        let row = psi.row(w);
        expect_n[w] = row.iter().zip(&q_n).map(|(p, q)| p * q).sum();
    }

    let mut counts = vec![0u64; vocab];
    let mut pow = vec![0.0f64; vocab];
    let mut q = vec![0.0f64; vocab];
    let mut streaming_sum = CompensatedSum::default();
    let mut batch_sum = CompensatedSum::default();
    let mut start = 0usize;
    while start < n {
        let end = (start + block).min(n);
        for &w in &dataset[start..end] {
            let w = w as usize;
            counts[w] += 1;
            pow[w] = (counts[w] as f64).powf(alpha);
        }
        // Normalize the same way the q_n route does, so identical prefix and
        // full distributions cancel exactly (a repeated-word dataset gives
        // zero, not rounding dust).
        let z: f64 = pow.iter().sum();
        for v in 0..vocab {
            q[v] = pow[v] / z;
        }
        for &w in &dataset[start..end] {
            let row = psi.row(w as usize);
            let mut acc = 0.0f64;
            for v in 0..vocab {
                acc += q[v] * row[v];
            }
            streaming_sum.add(acc);
            batch_sum.add(expect_n[w as usize]);
        }
        start = end;
    }
    let scale = 2.0 * cfg.window as f64 * cfg.negatives as f64 / n as f64;
    Ok(scale * compensated_difference(streaming_sum, batch_sum))
}

/// Stationary mean vector and single-position covariance matrix.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    vocab: usize,
    pub mu: Vec<f64>,
    /// Row-major |W| x |W|: `sigma[w*|W| + v]`.
    pub sigma: Vec<f64>,
}

impl CovarianceModel {
    /// Covariance of an iid categorical source:
    /// `Sigma_{w,v} = mu_w * delta_{w,v} - mu_w * mu_v`.
    pub fn iid(mu: Vec<f64>) -> Self {
        let vocab = mu.len();
        let mut sigma = vec![0.0; vocab * vocab];
        for w in 0..vocab {
            for v in 0..vocab {
                let indicator = if w == v { mu[w] } else { 0.0 };
                sigma[w * vocab + v] = indicator - mu[w] * mu[v];
            }
        }
        CovarianceModel { vocab, mu, sigma }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    #[inline]
    pub fn sigma_at(&self, w: usize, v: usize) -> f64 {
        self.sigma[w * self.vocab + v]
    }
}

/// Maximum-likelihood estimate of the stationary mean and covariance from a
/// finite corpus: `mu_w = count(w)/n`, Bernoulli single-position covariance.
pub fn estimate_covariance(
    corpus: &[u32],
    vocab: usize,
) -> Result<CovarianceModel, TheoryError> {
    if corpus.len() < 2 {
        return Err(TheoryError::CorpusTooShort);
    }
    let mut counts = vec![0u64; vocab];
    for &w in corpus {
        if w as usize >= vocab {
            return Err(TheoryError::UnknownWord(w, vocab));
        }
        counts[w as usize] += 1;
    }
    let n = corpus.len() as f64;
    let mu: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(CovarianceModel::iid(mu))
}

/// Harmonic number `H_n`. Direct summation up to 10^6 terms, then the
/// asymptotic expansion `ln n + gamma + 1/(2n)`.
pub fn harmonic_number(n: u64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if n == 0 {
        return 0.0;
    }
    if n <= 1_000_000 {
        // Small terms first for accuracy.
        let mut h = 0.0f64;
        for i in (1..=n).rev() {
            h += 1.0 / i as f64;
        }
        h
    } else {
        let nf = n as f64;
        nf.ln() + EULER_GAMMA + 1.0 / (2.0 * nf)
    }
}

/// Closed-form first moment of `dL` for the unsmoothed noise distribution:
/// `(2ck(H_n - 1)/n) * sum_{w,v} Sigma_{w,v} psi_neg(w,v)`.
pub fn theoretical_first_moment(
    cov: &CovarianceModel,
    psi: &PsiTable,
    cfg: &ObjectiveConfig,
    n: u64,
) -> Result<f64, TheoryError> {
    if cfg.smoothing != 1.0 {
        return Err(TheoryError::SmoothedNotSupported(cfg.smoothing));
    }
    let vocab = psi.vocab.min(cov.vocab);
    let mut weighted = 0.0f64;
    for w in 0..vocab {
        let row = psi.row(w);
        for v in 0..vocab {
            weighted += cov.sigma_at(w, v) * row[v];
        }
    }
    let prefactor = 2.0 * cfg.window as f64 * cfg.negatives as f64 * (harmonic_number(n) - 1.0)
        / n as f64;
    Ok(prefactor * weighted)
}

/// Word-sequence generators satisfying the stationarity assumption.
#[derive(Debug, Clone)]
pub enum StationarySource {
    /// Independent draws from a fixed categorical distribution.
    IidCategorical { probs: Vec<f64> },
    /// Concatenation of uniformly resampled sentences from a fixed corpus,
    /// truncated to the requested length.
    SentenceResample { sentences: Vec<Vec<u32>>, vocab: usize },
}

impl StationarySource {
    pub fn iid(probs: Vec<f64>) -> Result<Self, TheoryError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(TheoryError::BadDistribution);
        }
        Ok(StationarySource::IidCategorical { probs })
    }

    pub fn resample(sentences: Vec<Vec<u32>>, vocab: usize) -> Self {
        StationarySource::SentenceResample { sentences, vocab }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            StationarySource::IidCategorical { probs } => probs.len(),
            StationarySource::SentenceResample { vocab, .. } => *vocab,
        }
    }

    pub fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let mut out = Vec::with_capacity(n);
        match self {
            StationarySource::IidCategorical { probs } => {
                let dist = WeightedIndex::new(probs).expect("validated distribution");
                for _ in 0..n {
                    out.push(dist.sample(rng) as u32);
                }
            }
            StationarySource::SentenceResample { sentences, .. } => {
                while out.len() < n {
                    let s = &sentences[rng.gen_range(0..sentences.len())];
                    out.extend_from_slice(s);
                }
                out.truncate(n);
            }
        }
        out
    }

    /// Mean/covariance consistent with this source: exact for the iid case,
    /// the corpus MLE for sentence resampling.
    pub fn covariance(&self) -> Result<CovarianceModel, TheoryError> {
        match self {
            StationarySource::IidCategorical { probs } => Ok(CovarianceModel::iid(probs.clone())),
            StationarySource::SentenceResample { sentences, vocab } => {
                let flat: Vec<u32> = sentences.iter().flatten().copied().collect();
                estimate_covariance(&flat, *vocab)
            }
        }
    }
}

/// Which noise-update schedule the replicates simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    Incremental,
    Minibatch(usize),
}

/// Moment estimates of `dL` at one dataset size.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub mean_sq: f64,
    pub se_mean_sq: f64,
    /// Closed-form first moment; present only in the unsmoothed case.
    pub theory_mean: Option<f64>,
}

/// Draws `replicates` datasets per grid size, evaluates `dL` on each and
/// returns the sample moments with their standard errors. The same parameters
/// must be used across all sizes, so the caller passes one fixed `model`.
/// Replicates are independent with derived per-replicate seeds and are
/// evaluated in parallel; results do not depend on the parallelism degree.
pub fn estimate_moments(
    source: &StationarySource,
    model: &EmbeddingModel,
    cfg: &ObjectiveConfig,
    n_grid: &[usize],
    replicates: usize,
    mode: MomentMode,
    seed: u64,
) -> Result<Vec<MomentEstimate>, TheoryError> {
    if replicates < 2 {
        return Err(TheoryError::TooFewReplicates);
    }
    let psi = PsiTable::from_model(model);
    let block = match mode {
        MomentMode::Incremental => 1,
        MomentMode::Minibatch(m) => m.max(1),
    };
    let theory_cov = if cfg.smoothing == 1.0 {
        Some(source.covariance()?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(n_grid.len());
    for (grid_index, &n) in n_grid.iter().enumerate() {
        let values = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((grid_index as u64) << 32) | r as u64);
                let dataset = source.generate(n, &mut rng);
                delta_l_blocked(&dataset, &psi, cfg, block)
            })
            .collect::<Result<Vec<f64>, TheoryError>>()?;

        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / r;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        let var_sq = values
            .iter()
            .map(|v| (v * v - mean_sq).powi(2))
            .sum::<f64>()
            / (r - 1.0);
        let theory_mean = match &theory_cov {
            Some(cov) => Some(theoretical_first_moment(cov, &psi, cfg, n as u64)?),
            None => None,
        };
        out.push(MomentEstimate {
            n,
            replicates,
            mean,
            se_mean: (var / r).sqrt(),
            mean_sq,
            se_mean_sq: (var_sq / r).sqrt(),
            theory_mean,
        });
    }
    Ok(out)
}

/// Least-squares fit of `y = a * log(x) / x` (single scale parameter).
#[derive(Debug, Clone)]
pub struct LogOverXFit {
    pub scale: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_log_over_x(points: &[(f64, f64)]) -> Result<LogOverXFit, TheoryError> {
    let g: Vec<f64> = points.iter().map(|&(x, _)| x.ln() / x).collect();
    let gg: f64 = g.iter().map(|gi| gi * gi).sum();
    if gg == 0.0 || points.is_empty() {
        return Err(TheoryError::DegenerateFit);
    }
    let gy: f64 = points.iter().zip(&g).map(|(&(_, y), gi)| y * gi).sum();
    let scale = gy / gg;
    let residuals = points
        .iter()
        .zip(&g)
        .map(|(&(_, y), gi)| y - scale * gi)
        .collect();
    Ok(LogOverXFit { scale, residuals })
}
