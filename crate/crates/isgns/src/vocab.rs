//! Bounded dynamic vocabulary over an unbounded token stream.
//!
//! Implements the classical Misra-Gries frequent-items summary with at most
//! `m` counters: a known word increments its counter; an unknown word is
//! inserted while capacity remains; otherwise every live counter is
//! decremented by one and counters that reach zero are evicted (the new word
//! is *not* inserted on that step). This guarantees, after `n` observed
//! tokens, `true_count - n/m <= count <= true_count` for every live word and
//! that any word with true frequency above `n/m` is live.
//!
//! Word ids are dense in `[0, m)` and recycled through a free list so that
//! embedding tables can stay at a fixed `m` rows.

use std::collections::HashMap;

use thiserror::Error;

/// Dense index of a live vocabulary entry. At most `m` ids exist at a time
/// and no two live words share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

impl WordId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for WordId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of observing one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabEvent {
    /// The word was already live; its count has been incremented.
    Existing(WordId),
    /// The word was inserted with count 1 under this id.
    Inserted(WordId),
    /// The summary was full: all counters were decremented, the listed ids
    /// were evicted, and the word was not inserted.
    Rejected { evicted: Vec<WordId> },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("word id {0} is not live")]
    UnknownId(WordId),
}

#[derive(Debug, Clone)]
struct Slot {
    word: String,
    count: u64,
}

/// Misra-Gries counter set mapping surviving words to approximate counts.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    capacity: usize,
    slots: Vec<Option<Slot>>,
    index: HashMap<String, WordId>,
    /// Recycled ids, most recently evicted last (used as a stack).
    free: Vec<u32>,
    /// Ids in `[next_fresh, capacity)` have never been assigned.
    next_fresh: u32,
    n_seen: u64,
}

impl Vocabulary {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "vocabulary capacity must be positive");
        Vocabulary {
            capacity,
            slots: vec![None; capacity],
            index: HashMap::new(),
            free: Vec::new(),
            next_fresh: 0,
            n_seen: 0,
        }
    }

    /// Feeds one token to the summary.
    pub fn observe(&mut self, word: &str) -> VocabEvent {
        self.n_seen += 1;
        if let Some(&id) = self.index.get(word) {
            let slot = self.slots[id.index()].as_mut().expect("indexed slot live");
            slot.count += 1;
            return VocabEvent::Existing(id);
        }
        if self.index.len() < self.capacity {
            let id = match self.free.pop() {
                Some(raw) => WordId(raw),
                None => {
                    let raw = self.next_fresh;
                    self.next_fresh += 1;
                    WordId(raw)
                }
            };
            self.slots[id.index()] = Some(Slot {
                word: word.to_owned(),
                count: 1,
            });
            self.index.insert(word.to_owned(), id);
            return VocabEvent::Inserted(id);
        }
        // Full: decrement every counter; zeroed entries leave together.
        // Iterating slots in id order keeps eviction order deterministic.
        let mut evicted = Vec::new();
        for raw in 0..self.next_fresh {
            let idx = raw as usize;
            if let Some(slot) = self.slots[idx].as_mut() {
                slot.count -= 1;
                if slot.count == 0 {
                    let slot = self.slots[idx].take().expect("slot live");
                    self.index.remove(&slot.word);
                    self.free.push(raw);
                    evicted.push(WordId(raw));
                }
            }
        }
        VocabEvent::Rejected { evicted }
    }

    /// Approximate count of a live word.
    pub fn frequency(&self, id: WordId) -> Result<u64, VocabError> {
        self.slots
            .get(id.index())
            .and_then(|slot| slot.as_ref())
            .map(|slot| slot.count)
            .ok_or(VocabError::UnknownId(id))
    }

    pub fn id_of(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word_of(&self, id: WordId) -> Option<&str> {
        self.slots
            .get(id.index())
            .and_then(|slot| slot.as_ref())
            .map(|slot| slot.word.as_str())
    }

    /// Number of live entries.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Total tokens observed, including rejected ones.
    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Live entries in id order.
    pub fn iter(&self) -> impl Iterator<Item = (WordId, &str, u64)> + '_ {
        self.slots.iter().enumerate().filter_map(|(idx, slot)| {
            slot.as_ref()
                .map(|s| (WordId(idx as u32), s.word.as_str(), s.count))
        })
    }

    /// Rebuilds a vocabulary from serialized state. Entries must be sorted by
    /// id and free ids must come in their original stack order.
    pub(crate) fn from_parts(
        capacity: usize,
        entries: Vec<(u32, String, u64)>,
        free: Vec<u32>,
        next_fresh: u32,
        n_seen: u64,
    ) -> Self {
        let mut vocab = Vocabulary::new(capacity);
        for (raw, word, count) in entries {
            vocab.index.insert(word.clone(), WordId(raw));
            vocab.slots[raw as usize] = Some(Slot { word, count });
        }
        vocab.free = free;
        vocab.next_fresh = next_fresh;
        vocab.n_seen = n_seen;
        vocab
    }

    /// Builds a vocabulary holding exact counts, used by the two-pass batch
    /// trainer. `entries` are taken in order; ids are assigned 0, 1, ...
    pub(crate) fn from_exact_counts(
        capacity: usize,
        entries: impl IntoIterator<Item = (String, u64)>,
        n_seen: u64,
    ) -> Self {
        let mut vocab = Vocabulary::new(capacity);
        for (word, count) in entries {
            let raw = vocab.next_fresh;
            assert!((raw as usize) < capacity, "more entries than capacity");
            vocab.next_fresh += 1;
            vocab.index.insert(word.clone(), WordId(raw));
            vocab.slots[raw as usize] = Some(Slot { word, count });
        }
        vocab.n_seen = n_seen;
        vocab
    }

    pub(crate) fn free_list(&self) -> &[u32] {
        &self.free
    }

    pub(crate) fn next_fresh(&self) -> u32 {
        self.next_fresh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn hand_trace_classical_update() {
        // Stream a, b, a, c with m = 2.
        let mut v = Vocabulary::new(2);
        let a = match v.observe("a") {
            VocabEvent::Inserted(id) => id,
            other => panic!("{other:?}"),
        };
        assert_eq!(v.frequency(a), Ok(1));
        let b = match v.observe("b") {
            VocabEvent::Inserted(id) => id,
            other => panic!("{other:?}"),
        };
        assert_eq!(v.observe("a"), VocabEvent::Existing(a));
        assert_eq!(v.frequency(a), Ok(2));
        assert_eq!(v.frequency(b), Ok(1));

        match v.observe("c") {
            VocabEvent::Rejected { evicted } => assert_eq!(evicted, vec![b]),
            other => panic!("{other:?}"),
        }
        assert_eq!(v.frequency(a), Ok(1));
        assert_eq!(v.frequency(b), Err(VocabError::UnknownId(b)));
        assert!(v.id_of("c").is_none());
        assert_eq!(v.len(), 1);
        assert_eq!(v.n_seen(), 4);
    }

    #[test]
    fn repeated_word_counts_exactly() {
        let mut v = Vocabulary::new(1);
        let mut id = None;
        for _ in 0..57 {
            match v.observe("x") {
                VocabEvent::Inserted(i) => id = Some(i),
                VocabEvent::Existing(i) => assert_eq!(Some(i), id),
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(v.frequency(id.unwrap()), Ok(57));
    }

    #[test]
    fn recycled_ids_stay_dense_and_unique() {
        let mut v = Vocabulary::new(3);
        for w in ["a", "b", "c"] {
            v.observe(w);
        }
        // Three rejections evict everything (all counts are 1).
        let evicted = match v.observe("d") {
            VocabEvent::Rejected { evicted } => evicted,
            other => panic!("{other:?}"),
        };
        assert_eq!(evicted.len(), 3);
        // New insertions reuse evicted ids; ids stay unique and below m.
        let mut seen = std::collections::HashSet::new();
        for w in ["e", "f", "g"] {
            match v.observe(w) {
                VocabEvent::Inserted(id) => {
                    assert!(id.index() < 3);
                    assert!(seen.insert(id));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    /// Exact-counter oracle checking the Misra-Gries guarantees on a stream.
    fn check_against_exact(stream: &[String], m: usize) {
        let mut v = Vocabulary::new(m);
        let mut exact: HashMap<&str, u64> = HashMap::new();
        for token in stream {
            *exact.entry(token.as_str()).or_insert(0) += 1;
            v.observe(token);
            assert!(v.len() <= m, "live entries exceeded capacity");
        }
        let n = v.n_seen();
        let bound = n / m as u64;
        for (word, &true_count) in &exact {
            match v.id_of(word) {
                Some(id) => {
                    let approx = v.frequency(id).unwrap();
                    assert!(approx <= true_count, "{word}: {approx} > {true_count}");
                    assert!(
                        true_count - approx <= bound,
                        "{word}: error {} exceeds n/m = {bound}",
                        true_count - approx
                    );
                }
                None => assert!(
                    true_count <= bound,
                    "{word} with count {true_count} > {bound} missing"
                ),
            }
        }
        // Ids must be unique among live words.
        let ids: Vec<_> = v.iter().map(|(id, _, _)| id).collect();
        let distinct: std::collections::HashSet<_> = ids.iter().collect();
        assert_eq!(ids.len(), distinct.len());
    }

    #[test]
    fn random_stream_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let stream: Vec<String> = (0..10_000)
            // 1/i-shaped weights give a mix of heavy hitters and noise words.
            .map(|_| {
                let z: f64 = rng.gen::<f64>();
                let word = ((1.0 / (1.0 - z * 0.999)).floor() as usize).min(700);
                format!("w{word}")
            })
            .collect();
        check_against_exact(&stream, 100);
    }

    proptest! {
        #[test]
        fn misra_gries_bounds_hold(tokens in proptest::collection::vec(0u16..40, 1..400), m in 1usize..12) {
            let stream: Vec<String> = tokens.iter().map(|t| format!("t{t}")).collect();
            check_against_exact(&stream, m);
        }
    }
}
