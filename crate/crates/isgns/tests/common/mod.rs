//! Shared fixtures for the integration and acceptance suites: seeded Zipf
//! token streams and a synthetic topical language with planted similarity
//! and analogy structure.

#![allow(dead_code)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sentences of Zipf-distributed tokens `w0, w1, ...` (weight 1/(rank+1)).
pub fn zipf_sentences(
    n_tokens: usize,
    vocab: usize,
    sentence_len: usize,
    seed: u64,
) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..vocab).map(|r| 1.0 / (r + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let mut sentences = Vec::new();
    let mut sentence = Vec::with_capacity(sentence_len);
    for _ in 0..n_tokens {
        let u: f64 = rng.gen();
        let rank = cumulative.partition_point(|&c| c < u).min(vocab - 1);
        sentence.push(format!("w{rank}"));
        if sentence.len() == sentence_len {
            sentences.push(std::mem::take(&mut sentence));
        }
    }
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}

pub fn write_corpus(path: &Path, sentences: &[Vec<String>]) {
    let mut out = BufWriter::new(File::create(path).unwrap());
    for sentence in sentences {
        writeln!(out, "{}", sentence.join(" ")).unwrap();
    }
    out.flush().unwrap();
}

/// A synthetic language with planted semantics, used where no natural corpus
/// is available. Sentences are single-topic; every topic word has two forms
/// whose contexts differ through form-marker words, giving the embedding a
/// consistent form offset:
///
/// * similarity ground truth: same-topic word pairs score high, cross-topic
///   pairs low;
/// * analogy ground truth: `t1s1_a : t1s1_b :: t2s2_a : t2s2_b` (form
///   analogies across stems and topics).
pub struct SyntheticLanguage {
    pub sentences: Vec<Vec<String>>,
    pub characters: usize,
    pub similarity: Vec<(String, String, f64)>,
    pub analogies: Vec<[String; 4]>,
}

const TOPICS: usize = 12;
const STEMS: usize = 30;
const MARKERS_PER_FORM: usize = 20;
const FUNCTION_WORDS: usize = 100;

fn topic_word(topic: usize, stem: usize, form: usize) -> String {
    let suffix = if form == 0 { "a" } else { "b" };
    format!("t{topic}s{stem}{suffix}")
}

impl SyntheticLanguage {
    pub fn generate(char_budget: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sentences = Vec::new();
        let mut characters = 0usize;

        // Zipf-ish stem weights inside each topic.
        let stem_weights: Vec<f64> = (0..STEMS).map(|s| 1.0 / (s + 1) as f64).collect();
        let stem_total: f64 = stem_weights.iter().sum();
        let stem_cum: Vec<f64> = stem_weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w / stem_total;
                Some(*acc)
            })
            .collect();

        while characters < char_budget {
            let topic = rng.gen_range(0..TOPICS);
            let slots = rng.gen_range(8..=14);
            let mut sentence: Vec<String> = Vec::with_capacity(slots * 2);
            for _ in 0..slots {
                if rng.gen::<f64>() < 0.25 {
                    sentence.push(format!("f{}", rng.gen_range(0..FUNCTION_WORDS)));
                    continue;
                }
                let u: f64 = rng.gen();
                let stem = stem_cum.partition_point(|&c| c < u).min(STEMS - 1);
                let form = usize::from(rng.gen::<bool>());
                sentence.push(topic_word(topic, stem, form));
                if rng.gen::<f64>() < 0.8 {
                    let marker_class = if form == 0 { "ka" } else { "kb" };
                    sentence.push(format!(
                        "{marker_class}{}",
                        rng.gen_range(0..MARKERS_PER_FORM)
                    ));
                }
            }
            characters += sentence.iter().map(|w| w.len() + 1).sum::<usize>();
            sentences.push(sentence);
        }

        // Similarity gold: 150 same-topic pairs scored 7..9, 150 cross-topic
        // pairs scored 1..3 (list order fixed by the seed).
        let mut similarity = Vec::new();
        for _ in 0..150 {
            let topic = rng.gen_range(0..TOPICS);
            let s1 = rng.gen_range(0..STEMS);
            let mut s2 = rng.gen_range(0..STEMS);
            while s2 == s1 {
                s2 = rng.gen_range(0..STEMS);
            }
            similarity.push((
                topic_word(topic, s1, rng.gen_range(0..2)),
                topic_word(topic, s2, rng.gen_range(0..2)),
                7.0 + 2.0 * rng.gen::<f64>(),
            ));
        }
        for _ in 0..150 {
            let t1 = rng.gen_range(0..TOPICS);
            let mut t2 = rng.gen_range(0..TOPICS);
            while t2 == t1 {
                t2 = rng.gen_range(0..TOPICS);
            }
            similarity.push((
                topic_word(t1, rng.gen_range(0..STEMS), rng.gen_range(0..2)),
                topic_word(t2, rng.gen_range(0..STEMS), rng.gen_range(0..2)),
                1.0 + 2.0 * rng.gen::<f64>(),
            ));
        }

        // Analogy gold over frequent stems (rare stems train too little).
        let mut analogies = Vec::new();
        while analogies.len() < 200 {
            let t1 = rng.gen_range(0..TOPICS);
            let t2 = rng.gen_range(0..TOPICS);
            let s1 = rng.gen_range(0..STEMS / 2);
            let s2 = rng.gen_range(0..STEMS / 2);
            if (t1, s1) == (t2, s2) {
                continue;
            }
            analogies.push([
                topic_word(t1, s1, 0),
                topic_word(t1, s1, 1),
                topic_word(t2, s2, 0),
                topic_word(t2, s2, 1),
            ]);
        }

        SyntheticLanguage {
            sentences,
            characters,
            similarity,
            analogies,
        }
    }

    pub fn similarity_file(&self, path: &Path) {
        let mut out = BufWriter::new(File::create(path).unwrap());
        writeln!(out, "# synthetic similarity gold").unwrap();
        for (a, b, score) in &self.similarity {
            writeln!(out, "{a}\t{b}\t{score}").unwrap();
        }
    }

    pub fn analogy_file(&self, path: &Path) {
        let mut out = BufWriter::new(File::create(path).unwrap());
        writeln!(out, ": form-offset").unwrap();
        for [a, a_star, b, b_star] in &self.analogies {
            writeln!(out, "{a} {a_star} {b} {b_star}").unwrap();
        }
    }
}
