//! Embedding tables, the pairwise loss and its AdaGrad update.
//!
//! The parameter is a pair of `m x d` matrices: one row per word id for
//! target roles and one for context roles. Rows are stored as `f32`, all
//! arithmetic runs in `f64`. AdaGrad keeps one squared-gradient accumulator
//! per coordinate of each table.

use rand::Rng;

use crate::vocab::WordId;

/// Numerically stable `log(sigmoid(x))`: never overflows and is exact for
/// large `|x|` where the naive form would round to `log(0)` or `log(1)`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One training instance: a target word, its observed context word, and the
/// noise words drawn against them.
#[derive(Debug, Clone, Copy)]
pub struct PairBatch<'a> {
    pub target: WordId,
    pub positive: WordId,
    pub negatives: &'a [WordId],
}

/// Paired target/context vector tables.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    rows: usize,
    dim: usize,
    target: Vec<f32>,
    context: Vec<f32>,
}

/// Per-coordinate squared-gradient accumulators and the base learning rate.
#[derive(Debug, Clone)]
pub struct AdaGradState {
    learning_rate: f64,
    epsilon: f64,
    accum_target: Vec<f64>,
    accum_context: Vec<f64>,
}

pub const ADAGRAD_EPSILON: f64 = 1e-8;

impl EmbeddingModel {
    pub fn new(rows: usize, dim: usize) -> Self {
        assert!(rows >= 1 && dim >= 1);
        EmbeddingModel {
            rows,
            dim,
            target: vec![0.0; rows * dim],
            context: vec![0.0; rows * dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn target_row(&self, w: WordId) -> &[f32] {
        let start = w.index() * self.dim;
        &self.target[start..start + self.dim]
    }

    #[inline]
    pub fn context_row(&self, w: WordId) -> &[f32] {
        let start = w.index() * self.dim;
        &self.context[start..start + self.dim]
    }

    #[inline]
    fn dot(&self, w: WordId, v: WordId) -> f64 {
        let t = self.target_row(w);
        let c = self.context_row(v);
        let mut acc = 0.0f64;
        for i in 0..self.dim {
            acc += f64::from(t[i]) * f64::from(c[i]);
        }
        acc
    }

    /// log sigmoid(t_w . c_v), the attraction score of an observed pair.
    pub fn psi_pos(&self, w: WordId, v: WordId) -> f64 {
        log_sigmoid(self.dot(w, v))
    }

    /// log sigmoid(-t_w . c_v), the repulsion score of a noise pair.
    pub fn psi_neg(&self, w: WordId, v: WordId) -> f64 {
        log_sigmoid(-self.dot(w, v))
    }

    /// Negative log likelihood of one pair with its negatives:
    /// `-psi_pos(target, positive) - sum psi_neg(target, negative)`.
    pub fn pair_loss(&self, batch: &PairBatch) -> f64 {
        let mut loss = -self.psi_pos(batch.target, batch.positive);
        for &v in batch.negatives {
            loss -= self.psi_neg(batch.target, v);
        }
        loss
    }

    /// Analytic gradient of [`EmbeddingModel::pair_loss`] at the current
    /// parameters. Context contributions are listed per batch slot (positive
    /// first); duplicates are *not* merged.
    pub fn pair_gradients(&self, batch: &PairBatch) -> PairGradients {
        let d = self.dim;
        let mut target_grad = vec![0.0f64; d];
        let mut contexts = Vec::with_capacity(1 + batch.negatives.len());
        let slots = std::iter::once((batch.positive, true))
            .chain(batch.negatives.iter().map(|&v| (v, false)));
        for (v, is_positive) in slots {
            let s = sigmoid(self.dot(batch.target, v));
            // d(loss)/d(dot) is s - 1 for the positive slot and s for noise.
            let coeff = if is_positive { s - 1.0 } else { s };
            let c = self.context_row(v);
            let t = self.target_row(batch.target);
            let mut grad = vec![0.0f64; d];
            for i in 0..d {
                target_grad[i] += coeff * f64::from(c[i]);
                grad[i] = coeff * f64::from(t[i]);
            }
            contexts.push((v, grad));
        }
        PairGradients {
            target: target_grad,
            contexts,
        }
    }

    /// One SGD step with AdaGrad scaling. All gradients are evaluated at the
    /// pre-update parameters; context rows are then updated sequentially in
    /// batch order (positive, negatives), the target row last with its
    /// accumulated gradient. Returns the pre-update loss.
    pub fn sgd_step(&mut self, opt: &mut AdaGradState, batch: &PairBatch) -> f64 {
        let d = self.dim;
        debug_assert_eq!(opt.accum_target.len(), self.target.len());

        let mut loss = 0.0f64;
        let mut target_grad = vec![0.0f64; d];
        let mut coeffs = Vec::with_capacity(1 + batch.negatives.len());

        let dot = self.dot(batch.target, batch.positive);
        loss -= log_sigmoid(dot);
        coeffs.push((batch.positive, sigmoid(dot) - 1.0));
        for &v in batch.negatives {
            let dot = self.dot(batch.target, v);
            loss -= log_sigmoid(-dot);
            coeffs.push((v, sigmoid(dot)));
        }

        let tstart = batch.target.index() * d;
        for &(v, coeff) in &coeffs {
            let cstart = v.index() * d;
            for i in 0..d {
                target_grad[i] += coeff * f64::from(self.context[cstart + i]);
                let g = coeff * f64::from(self.target[tstart + i]);
                let acc = &mut opt.accum_context[cstart + i];
                *acc += g * g;
                let step = opt.learning_rate * g / (acc.sqrt() + opt.epsilon);
                self.context[cstart + i] = (f64::from(self.context[cstart + i]) - step) as f32;
            }
        }
        for i in 0..d {
            let g = target_grad[i];
            let acc = &mut opt.accum_target[tstart + i];
            *acc += g * g;
            let step = opt.learning_rate * g / (acc.sqrt() + opt.epsilon);
            self.target[tstart + i] = (f64::from(self.target[tstart + i]) - step) as f32;
        }
        loss
    }

    pub(crate) fn target_flat(&self) -> &[f32] {
        &self.target
    }

    pub(crate) fn context_flat(&self) -> &[f32] {
        &self.context
    }

    pub(crate) fn from_parts(rows: usize, dim: usize, target: Vec<f32>, context: Vec<f32>) -> Self {
        assert_eq!(target.len(), rows * dim);
        assert_eq!(context.len(), rows * dim);
        EmbeddingModel {
            rows,
            dim,
            target,
            context,
        }
    }

    #[cfg(test)]
    fn target_row_mut(&mut self, w: WordId) -> &mut [f32] {
        let start = w.index() * self.dim;
        &mut self.target[start..start + self.dim]
    }
}

/// Gradient of the pair loss, split by parameter row.
pub struct PairGradients {
    pub target: Vec<f64>,
    pub contexts: Vec<(WordId, Vec<f64>)>,
}

impl AdaGradState {
    pub fn new(rows: usize, dim: usize, learning_rate: f64) -> Self {
        AdaGradState {
            learning_rate,
            epsilon: ADAGRAD_EPSILON,
            accum_target: vec![0.0; rows * dim],
            accum_context: vec![0.0; rows * dim],
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Same accumulators under a different base learning rate (used when a
    /// resumed run overrides the checkpoint's rate).
    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub(crate) fn accum_target_flat(&self) -> &[f64] {
        &self.accum_target
    }

    pub(crate) fn accum_context_flat(&self) -> &[f64] {
        &self.accum_context
    }

    pub(crate) fn from_parts(learning_rate: f64, accum_target: Vec<f64>, accum_context: Vec<f64>) -> Self {
        AdaGradState {
            learning_rate,
            epsilon: ADAGRAD_EPSILON,
            accum_target,
            accum_context,
        }
    }
}

/// Decides whether a token survives frequency subsampling: with occurrence
/// ratio `p = freq/total`, it is kept with probability `min(1, sqrt(t/p))`.
/// Spends exactly one uniform draw.
pub fn subsample_keep(freq: u64, total: u64, threshold: f64, rng: &mut impl Rng) -> bool {
    debug_assert!(freq <= total && total > 0);
    let p = freq as f64 / total as f64;
    let keep = (threshold / p).sqrt();
    rng.gen::<f64>() < keep
}

/// Initializes a freshly inserted word's rows: target coordinates uniform in
/// `(-0.5/d, 0.5/d)`, context row zero, accumulators zero.
pub fn init_row(model: &mut EmbeddingModel, opt: &mut AdaGradState, w: WordId, rng: &mut impl Rng) {
    let d = model.dim;
    let half = 0.5 / d as f64;
    let start = w.index() * d;
    for i in 0..d {
        model.target[start + i] = rng.gen_range(-half..half) as f32;
        model.context[start + i] = 0.0;
        opt.accum_target[start + i] = 0.0;
        opt.accum_context[start + i] = 0.0;
    }
}

/// Clears an evicted word's rows and optimizer state.
pub fn clear_row(model: &mut EmbeddingModel, opt: &mut AdaGradState, w: WordId) {
    let d = model.dim;
    let start = w.index() * d;
    for i in 0..d {
        model.target[start + i] = 0.0;
        model.context[start + i] = 0.0;
        opt.accum_target[start + i] = 0.0;
        opt.accum_context[start + i] = 0.0;
    }
}
