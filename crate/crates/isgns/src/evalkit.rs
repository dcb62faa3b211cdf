//! Word-similarity and analogy evaluation over trained checkpoints.
//!
//! Words are scored through their composed embedding `t_w + c_w`; cosine
//! operations use a unit-normalized copy. Similarity suites report Spearman's
//! rho against human judgments (average ranks on ties), analogy suites report
//! 3CosMul accuracy with the conventional epsilon of 0.001 and cosines
//! shifted into [0, 1]. Out-of-vocabulary records are excluded and surface in
//! the coverage column instead of being scored as failures.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::checkpoint::Checkpoint;

const COSMUL_EPSILON: f64 = 0.001;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("no quadruple could be resolved against the vocabulary")]
    NoResolvableItems,
}

/// Word pairs with human similarity judgments.
#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    /// Parses `word1 word2 score` records, one per line, whitespace or tab
    /// separated; `#` lines are comments.
    pub fn parse(text: &str, origin: &str) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(EvalError::Parse {
                    path: origin.to_owned(),
                    line: lineno + 1,
                    message: format!("expected `word1 word2 score`, got {} fields", fields.len()),
                });
            }
            let score: f64 = fields[2].parse().map_err(|_| EvalError::Parse {
                path: origin.to_owned(),
                line: lineno + 1,
                message: format!("bad score {:?}", fields[2]),
            })?;
            pairs.push((fields[0].to_owned(), fields[1].to_owned(), score));
        }
        Ok(SimilarityDataset { pairs })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Analogy quadruples `a : a* :: b : b*`, optionally grouped into sections.
#[derive(Debug, Clone)]
pub struct AnalogyItem {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
    pub section: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AnalogyDataset {
    pub items: Vec<AnalogyItem>,
}

impl AnalogyDataset {
    /// Parses 4-token records; `: section-name` headers start a new section
    /// and `#` lines are comments.
    pub fn parse(text: &str, origin: &str) -> Result<Self, EvalError> {
        let mut items = Vec::new();
        let mut section: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix(':') {
                section = Some(name.trim().to_owned());
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(EvalError::Parse {
                    path: origin.to_owned(),
                    line: lineno + 1,
                    message: format!("expected 4 words, got {}", fields.len()),
                });
            }
            items.push(AnalogyItem {
                a: fields[0].to_owned(),
                a_star: fields[1].to_owned(),
                b: fields[2].to_owned(),
                b_star: fields[3].to_owned(),
                section: section.clone(),
            });
        }
        Ok(AnalogyDataset { items })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Per-word composed vectors `t_w + c_w` with a unit-normalized copy.
#[derive(Debug, Clone)]
pub struct ComposedEmbedding {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    unit: Vec<f32>,
}

impl ComposedEmbedding {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Self {
        let dim = ckpt.model.dim();
        let mut words = Vec::with_capacity(ckpt.vocab.len());
        let mut vectors = Vec::with_capacity(ckpt.vocab.len() * dim);
        for (id, word, _) in ckpt.vocab.iter() {
            words.push(word.to_owned());
            let t = ckpt.model.target_row(id);
            let c = ckpt.model.context_row(id);
            vectors.extend(t.iter().zip(c).map(|(a, b)| a + b));
        }
        Self::from_vectors(words, vectors, dim)
    }

    /// Builds directly from raw vectors (tests and synthetic baselines).
    pub fn from_vectors(words: Vec<String>, mut vectors: Vec<f32>, dim: usize) -> Self {
        assert_eq!(words.len() * dim, vectors.len());
        for row in vectors.chunks_mut(dim) {
            let norm = row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row {
                    *x = (f64::from(*x) / norm) as f32;
                }
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        ComposedEmbedding {
            words,
            index,
            dim,
            unit: vectors,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    fn unit_row(&self, slot: usize) -> &[f32] {
        &self.unit[slot * self.dim..(slot + 1) * self.dim]
    }

    fn cosine(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.unit_row(a), self.unit_row(b));
        ra.iter()
            .zip(rb)
            .map(|(x, y)| f64::from(*x) * f64::from(*y))
            .sum()
    }
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite scores"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

/// Spearman rank correlation between model cosine similarities and human
/// scores. Returns `(rho, coverage)` where coverage is the resolvable
/// fraction of pairs.
pub fn spearman(
    emb: &ComposedEmbedding,
    ds: &SimilarityDataset,
) -> Result<(f64, f64), EvalError> {
    let mut human = Vec::new();
    let mut predicted = Vec::new();
    for (w1, w2, score) in &ds.pairs {
        if let (Some(a), Some(b)) = (emb.slot(w1), emb.slot(w2)) {
            human.push(*score);
            predicted.push(emb.cosine(a, b));
        }
    }
    if human.len() < 2 {
        return Err(EvalError::UndefinedCorrelation(
            "fewer than 2 pairs resolve against the vocabulary",
        ));
    }
    let rho = pearson(&average_ranks(&human), &average_ranks(&predicted)).ok_or(
        EvalError::UndefinedCorrelation("one of the rank vectors is constant"),
    )?;
    let coverage = human.len() as f64 / ds.pairs.len() as f64;
    Ok((rho, coverage))
}

/// 3CosMul prediction for one resolved quadruple: the vocabulary argmax of
/// `cos01(x, b) * cos01(x, a*) / (cos01(x, a) + eps)` excluding a, a*, b.
fn cosmul_predict(emb: &ComposedEmbedding, a: usize, a_star: usize, b: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for x in 0..emb.len() {
        if x == a || x == a_star || x == b {
            continue;
        }
        let c01 = |u: usize, v: usize| (emb.cosine(u, v) + 1.0) / 2.0;
        let score = c01(x, b) * c01(x, a_star) / (c01(x, a) + COSMUL_EPSILON);
        match best {
            Some((_, s)) if s >= score => {}
            _ => best = Some((x, score)),
        }
    }
    best.map(|(x, _)| x)
}

/// Accuracy and coverage of 3CosMul analogy completion over a dataset.
pub fn analogy_3cosmul(
    emb: &ComposedEmbedding,
    ds: &AnalogyDataset,
) -> Result<(f64, f64), EvalError> {
    let (correct, resolved) = cosmul_counts(emb, ds.items.iter())?;
    Ok((
        correct as f64 / resolved as f64,
        resolved as f64 / ds.items.len() as f64,
    ))
}

fn cosmul_counts<'a>(
    emb: &ComposedEmbedding,
    items: impl Iterator<Item = &'a AnalogyItem>,
) -> Result<(usize, usize), EvalError> {
    let mut resolved = 0usize;
    let mut correct = 0usize;
    for item in items {
        let slots = (
            emb.slot(&item.a),
            emb.slot(&item.a_star),
            emb.slot(&item.b),
            emb.slot(&item.b_star),
        );
        let (Some(a), Some(a_star), Some(b), Some(b_star)) = slots else {
            continue;
        };
        resolved += 1;
        if cosmul_predict(emb, a, a_star, b) == Some(b_star) {
            correct += 1;
        }
    }
    if resolved == 0 {
        return Err(EvalError::NoResolvableItems);
    }
    Ok((correct, resolved))
}

/// Per-section accuracy breakdown (sections in first-appearance order).
pub fn analogy_sections(
    emb: &ComposedEmbedding,
    ds: &AnalogyDataset,
) -> Vec<(String, Result<(f64, f64), EvalError>)> {
    let mut order: Vec<String> = Vec::new();
    for item in &ds.items {
        let name = item.section.clone().unwrap_or_default();
        if !order.contains(&name) {
            order.push(name);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let want = if name.is_empty() { None } else { Some(name.clone()) };
            let total = ds.items.iter().filter(|i| i.section == want).count();
            let result = cosmul_counts(emb, ds.items.iter().filter(|i| i.section == want)).map(
                |(correct, resolved)| {
                    (correct as f64 / resolved as f64, resolved as f64 / total as f64)
                },
            );
            (name, result)
        })
        .collect()
}

/// One evaluation suite to run against both models.
#[derive(Debug, Clone)]
pub enum EvalSuite {
    Similarity { name: String, data: SimilarityDataset },
    Analogy { name: String, data: AnalogyDataset },
}

/// One row of the model-comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub suite: String,
    pub metric: String,
    pub value_a: f64,
    pub value_b: f64,
    pub delta: f64,
    pub coverage_a: f64,
    pub coverage_b: f64,
}

/// Runs every suite against both checkpoints and tabulates metric deltas.
/// Analogy suites with sections get one extra row per section.
pub fn compare_models(
    a: &Checkpoint,
    b: &Checkpoint,
    suites: &[EvalSuite],
) -> Result<Vec<CompareRow>, EvalError> {
    let emb_a = ComposedEmbedding::from_checkpoint(a);
    let emb_b = ComposedEmbedding::from_checkpoint(b);
    let mut rows = Vec::new();
    for suite in suites {
        match suite {
            EvalSuite::Similarity { name, data } => {
                let (rho_a, cov_a) = spearman(&emb_a, data)?;
                let (rho_b, cov_b) = spearman(&emb_b, data)?;
                rows.push(CompareRow {
                    suite: name.clone(),
                    metric: "spearman_rho".into(),
                    value_a: rho_a,
                    value_b: rho_b,
                    delta: rho_a - rho_b,
                    coverage_a: cov_a,
                    coverage_b: cov_b,
                });
            }
            EvalSuite::Analogy { name, data } => {
                let (acc_a, cov_a) = analogy_3cosmul(&emb_a, data)?;
                let (acc_b, cov_b) = analogy_3cosmul(&emb_b, data)?;
                rows.push(CompareRow {
                    suite: name.clone(),
                    metric: "cosmul_accuracy".into(),
                    value_a: acc_a,
                    value_b: acc_b,
                    delta: acc_a - acc_b,
                    coverage_a: cov_a,
                    coverage_b: cov_b,
                });
                let sections_a = analogy_sections(&emb_a, data);
                let sections_b = analogy_sections(&emb_b, data);
                for ((sec, res_a), (_, res_b)) in sections_a.into_iter().zip(sections_b) {
                    if sec.is_empty() {
                        continue;
                    }
                    if let (Ok((va, ca)), Ok((vb, cb))) = (res_a, res_b) {
                        rows.push(CompareRow {
                            suite: format!("{name}/{sec}"),
                            metric: "cosmul_accuracy".into(),
                            value_a: va,
                            value_b: vb,
                            delta: va - vb,
                            coverage_a: ca,
                            coverage_b: cb,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_embedding(rows: &[(&str, &[f32])]) -> ComposedEmbedding {
        let dim = rows[0].1.len();
        let words = rows.iter().map(|(w, _)| w.to_string()).collect();
        let vectors = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        ComposedEmbedding::from_vectors(words, vectors, dim)
    }

    #[test]
    fn rows_are_unit_normalized() {
        let emb = toy_embedding(&[("a", &[3.0, 4.0]), ("b", &[0.0, 2.0])]);
        let norm: f64 = emb
            .unit_row(0)
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum();
        assert!((norm.sqrt() - 1.0).abs() < 1e-6);
    }

    /// Words at increasing angles from "probe": the cosine to probe rises
    /// strictly from w0 (farthest) to w4 (closest).
    fn ordered_embedding() -> ComposedEmbedding {
        let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
        for (i, w) in ["w0", "w1", "w2", "w3", "w4", "probe"].iter().enumerate() {
            let angle = i as f32 * 0.25;
            rows.push((w.to_string(), vec![angle.cos(), angle.sin()]));
        }
        let dim = 2;
        let words = rows.iter().map(|(w, _)| w.clone()).collect();
        let vectors = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        ComposedEmbedding::from_vectors(words, vectors, dim)
    }

    #[test]
    fn perfect_and_reversed_correlation() {
        let emb = ordered_embedding();
        let agreeing = SimilarityDataset {
            pairs: (0..5)
                .map(|i| ("probe".to_owned(), format!("w{i}"), i as f64))
                .collect(),
        };
        let (rho, coverage) = spearman(&emb, &agreeing).unwrap();
        assert_relative_eq!(rho, 1.0);
        assert_relative_eq!(coverage, 1.0);

        let reversed = SimilarityDataset {
            pairs: (0..5)
                .map(|i| ("probe".to_owned(), format!("w{i}"), 10.0 - i as f64))
                .collect(),
        };
        let (rho, _) = spearman(&emb, &reversed).unwrap();
        assert_relative_eq!(rho, -1.0);
    }

    #[test]
    fn tie_handling_matches_rank_formula_oracle() {
        // Five pairs, tied human scores at ranks 3/4. Model cosine ranks for
        // (w0, w2, w1, w4, w3) are (1, 3, 2, 5, 4); human average ranks are
        // (1, 2, 3.5, 3.5, 5). The expected rho was computed independently
        // with the average-rank Pearson formula.
        let emb = ordered_embedding();
        let ds = SimilarityDataset {
            pairs: vec![
                ("probe".into(), "w0".into(), 1.0),
                ("probe".into(), "w2".into(), 2.0),
                ("probe".into(), "w1".into(), 3.0),
                ("probe".into(), "w4".into(), 3.0),
                ("probe".into(), "w3".into(), 5.0),
            ],
        };
        let (rho, _) = spearman(&emb, &ds).unwrap();
        assert_relative_eq!(rho, 0.6668859288553503, epsilon = 1e-12);
    }

    #[test]
    fn undefined_correlation_cases() {
        let emb = ordered_embedding();
        let too_few = SimilarityDataset {
            pairs: vec![
                ("probe".into(), "w0".into(), 1.0),
                ("missing".into(), "w1".into(), 2.0),
            ],
        };
        assert!(matches!(
            spearman(&emb, &too_few),
            Err(EvalError::UndefinedCorrelation(_))
        ));

        let constant = SimilarityDataset {
            pairs: vec![
                ("probe".into(), "w0".into(), 1.0),
                ("probe".into(), "w1".into(), 1.0),
                ("probe".into(), "w2".into(), 1.0),
            ],
        };
        assert!(matches!(
            spearman(&emb, &constant),
            Err(EvalError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn scale_invariance_of_rankings() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let vectors: Vec<f32> = (0..12 * 6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scaled: Vec<f32> = vectors.iter().map(|&x| x * 7.25).collect();
        let a = ComposedEmbedding::from_vectors(words.clone(), vectors, 6);
        let b = ComposedEmbedding::from_vectors(words, scaled, 6);

        let ds = SimilarityDataset {
            pairs: (0..6)
                .map(|i| (format!("w{i}"), format!("w{}", i + 6), i as f64))
                .collect(),
        };
        let (rho_a, _) = spearman(&a, &ds).unwrap();
        let (rho_b, _) = spearman(&b, &ds).unwrap();
        assert_relative_eq!(rho_a, rho_b, epsilon = 1e-6);

        let quads = AnalogyDataset {
            items: vec![AnalogyItem {
                a: "w0".into(),
                a_star: "w1".into(),
                b: "w2".into(),
                b_star: "w3".into(),
                section: None,
            }],
        };
        let acc_a = analogy_3cosmul(&a, &quads).unwrap();
        let acc_b = analogy_3cosmul(&b, &quads).unwrap();
        assert_eq!(acc_a, acc_b);
    }

    #[test]
    fn constructed_analogy_is_solved() {
        // b* constructed collinear with a* - a + b; the offset direction is
        // shared, so 3CosMul must pick it over the distractors.
        let emb = toy_embedding(&[
            ("a", &[1.0, 0.0, 0.0]),
            ("a_star", &[1.0, 1.0, 0.0]),
            ("b", &[0.0, 0.0, 1.0]),
            ("b_star", &[0.0, 1.0, 1.0]),
            ("noise1", &[0.9, -0.1, 0.2]),
            ("noise2", &[0.2, 0.1, -0.9]),
        ]);
        let ds = AnalogyDataset {
            items: vec![AnalogyItem {
                a: "a".into(),
                a_star: "a_star".into(),
                b: "b".into(),
                b_star: "b_star".into(),
                section: None,
            }],
        };
        let (accuracy, coverage) = analogy_3cosmul(&emb, &ds).unwrap();
        assert_relative_eq!(accuracy, 1.0);
        assert_relative_eq!(coverage, 1.0);
    }

    #[test]
    fn prediction_never_returns_query_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
            let vectors: Vec<f32> = (0..8 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let emb = ComposedEmbedding::from_vectors(words, vectors, 4);
            let picked = cosmul_predict(&emb, 0, 1, 2).unwrap();
            assert!(picked > 2);
        }
    }

    #[test]
    fn out_of_vocabulary_reduces_coverage_only() {
        let emb = toy_embedding(&[
            ("a", &[1.0, 0.0]),
            ("a_star", &[0.8, 0.6]),
            ("b", &[0.0, 1.0]),
            ("b_star", &[-0.6, 0.8]),
            ("pad", &[-1.0, 0.0]),
        ]);
        let ds = AnalogyDataset {
            items: vec![
                AnalogyItem {
                    a: "a".into(),
                    a_star: "a_star".into(),
                    b: "b".into(),
                    b_star: "b_star".into(),
                    section: None,
                },
                AnalogyItem {
                    a: "a".into(),
                    a_star: "unknown".into(),
                    b: "b".into(),
                    b_star: "b_star".into(),
                    section: None,
                },
            ],
        };
        let (_, coverage) = analogy_3cosmul(&emb, &ds).unwrap();
        assert_relative_eq!(coverage, 0.5);

        let all_oov = AnalogyDataset {
            items: vec![AnalogyItem {
                a: "nope".into(),
                a_star: "nada".into(),
                b: "none".into(),
                b_star: "nil".into(),
                section: None,
            }],
        };
        assert!(matches!(
            analogy_3cosmul(&emb, &all_oov),
            Err(EvalError::NoResolvableItems)
        ));
    }

    #[test]
    fn parses_comments_and_sections() {
        let sim = SimilarityDataset::parse(
            "# header\nfoo bar 3.5\n\nbaz\tqux\t1.25\n",
            "test",
        )
        .unwrap();
        assert_eq!(sim.pairs.len(), 2);
        assert_eq!(sim.pairs[1], ("baz".into(), "qux".into(), 1.25));

        let ana = AnalogyDataset::parse(
            ": capital-common\nathens greece oslo norway\n: family\nboy girl he she\n",
            "test",
        )
        .unwrap();
        assert_eq!(ana.items.len(), 2);
        assert_eq!(ana.items[0].section.as_deref(), Some("capital-common"));
        assert_eq!(ana.items[1].section.as_deref(), Some("family"));
        assert_eq!(ana.items[1].b_star, "she");

        assert!(SimilarityDataset::parse("one two\n", "test").is_err());
        assert!(AnalogyDataset::parse("one two three\n", "test").is_err());
    }

    #[test]
    fn random_embedding_correlation_is_near_zero() {
        // Permutation-null analog: random vectors against arbitrary human
        // scores should give |rho| < 0.2 at 353 pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n_words = 500;
        let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        let vectors: Vec<f32> = (0..n_words * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let emb = ComposedEmbedding::from_vectors(words, vectors, 16);
        let ds = SimilarityDataset {
            pairs: (0..353)
                .map(|i| {
                    (
                        format!("w{}", rng.gen_range(0..n_words)),
                        format!("w{}", rng.gen_range(0..n_words)),
                        i as f64,
                    )
                })
                .collect(),
        };
        let (rho, coverage) = spearman(&emb, &ds).unwrap();
        assert!(rho.abs() < 0.2, "rho {rho}");
        assert_relative_eq!(coverage, 1.0);
    }
}
