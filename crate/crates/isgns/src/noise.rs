//! Adaptive unigram table: the smoothed noise distribution under streaming
//! frequency updates.
//!
//! The table is a bounded word array `T`. A word's multiplicity tracks
//! `f(w)^alpha`, so sampling a uniformly random position realizes
//! `q(w) ∝ f(w)^alpha` with O(1) cost per sample. While the table has room,
//! each count transition appends `F = f^alpha - (f-1)^alpha` copies
//! (probabilistically rounded). Once full, `tau*F/z` uniformly chosen
//! positions are overwritten instead — the expected number a full
//! position-by-position sweep would replace — keeping updates O(1) amortized
//! at alpha = 1 since `z >= tau` forces at most one substitution.

use rand::Rng;
use thiserror::Error;

use crate::vocab::WordId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NoiseError {
    #[error("the unigram table is empty")]
    EmptyTable,
}

/// Bounded word array realizing the noise distribution, plus the running
/// normalizer `z` (the sum of `f(w)^alpha` mass fed in so far).
#[derive(Debug, Clone)]
pub struct UnigramTable {
    capacity: usize,
    smoothing: f64,
    entries: Vec<WordId>,
    z: f64,
    /// Mass each word id has contributed to `z`; retired ids give it back.
    mass: Vec<f64>,
}

/// Rounds `x` to an integer whose expectation is `x`, spending exactly one
/// uniform draw.
#[inline]
fn probabilistic_round(x: f64, rng: &mut impl Rng) -> u64 {
    debug_assert!(x >= 0.0);
    let floor = x.floor();
    let extra = rng.gen::<f64>() < (x - floor);
    floor as u64 + u64::from(extra)
}

impl UnigramTable {
    pub fn new(capacity: usize, smoothing: f64) -> Self {
        assert!(capacity >= 1, "table capacity must be positive");
        assert!(
            smoothing > 0.0 && smoothing <= 1.0,
            "smoothing must be in (0, 1]"
        );
        UnigramTable {
            capacity,
            smoothing,
            entries: Vec::new(),
            z: 0.0,
            mass: Vec::new(),
        }
    }

    /// Records that `w`'s count moved to `new_count` and folds the fresh
    /// probability mass into the table.
    pub fn increment_mass(&mut self, w: WordId, new_count: u64, rng: &mut impl Rng) {
        debug_assert!(new_count >= 1);
        let f = new_count as f64;
        let added = f.powf(self.smoothing) - (f - 1.0).powf(self.smoothing);
        self.z += added;
        if self.mass.len() <= w.index() {
            self.mass.resize(w.index() + 1, 0.0);
        }
        self.mass[w.index()] += added;

        if self.entries.len() < self.capacity {
            let copies = probabilistic_round(added, rng);
            for _ in 0..copies {
                if self.entries.len() < self.capacity {
                    self.entries.push(w);
                } else {
                    let j = rng.gen_range(0..self.entries.len());
                    self.entries[j] = w;
                }
            }
        } else {
            let expected = self.capacity as f64 * added / self.z;
            let substitutions = probabilistic_round(expected, rng);
            for _ in 0..substitutions {
                let j = rng.gen_range(0..self.entries.len());
                self.entries[j] = w;
            }
        }
    }

    /// Draws `k` ids independently and uniformly over table positions.
    pub fn sample_negatives(
        &self,
        k: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<WordId>, NoiseError> {
        let mut out = Vec::with_capacity(k);
        self.sample_into(&mut out, k, rng)?;
        Ok(out)
    }

    /// Allocation-free variant of [`UnigramTable::sample_negatives`].
    pub fn sample_into(
        &self,
        out: &mut Vec<WordId>,
        k: usize,
        rng: &mut impl Rng,
    ) -> Result<(), NoiseError> {
        if self.entries.is_empty() {
            return Err(NoiseError::EmptyTable);
        }
        out.clear();
        for _ in 0..k {
            let j = rng.gen_range(0..self.entries.len());
            out.push(self.entries[j]);
        }
        Ok(())
    }

    /// The table's realized probability of `w`: multiplicity over table
    /// length. Diagnostic accessor; O(|T|).
    pub fn noise_prob(&self, w: WordId) -> Result<f64, NoiseError> {
        if self.entries.is_empty() {
            return Err(NoiseError::EmptyTable);
        }
        let hits = self.entries.iter().filter(|&&e| e == w).count();
        Ok(hits as f64 / self.entries.len() as f64)
    }

    /// Removes an evicted word's contribution from `z`. Its table entries are
    /// left in place and decay through future substitutions; an O(tau) sweep
    /// here would break the O(1) update bound.
    pub fn retire_word(&mut self, w: WordId) {
        if let Some(m) = self.mass.get_mut(w.index()) {
            self.z -= *m;
            *m = 0.0;
        }
    }

    /// Builds the table deterministically from final counts, as the two-pass
    /// batch trainer does. When the unsmoothed counts fit, every word gets
    /// exactly `count` copies; otherwise all `capacity` slots are filled with
    /// multiplicities proportional to `count^alpha`.
    pub fn build_exact(
        counts: &[(WordId, u64)],
        smoothing: f64,
        capacity: usize,
    ) -> Self {
        let mut table = UnigramTable::new(capacity, smoothing);
        let total: u64 = counts.iter().map(|&(_, c)| c).sum();
        for &(w, count) in counts {
            let m = (count as f64).powf(smoothing);
            if table.mass.len() <= w.index() {
                table.mass.resize(w.index() + 1, 0.0);
            }
            table.mass[w.index()] += m;
            table.z += m;
        }
        if total == 0 {
            return table;
        }
        if smoothing == 1.0 && (total as usize) <= capacity {
            for &(w, count) in counts {
                for _ in 0..count {
                    table.entries.push(w);
                }
            }
        } else {
            // Cumulative fill: slot j belongs to the word covering fraction
            // j/capacity of the total mass.
            let mut word = 0usize;
            let mut cum = (counts[0].1 as f64).powf(smoothing) / table.z;
            for slot in 0..capacity {
                table.entries.push(counts[word].0);
                if (slot + 1) as f64 / capacity as f64 > cum && word + 1 < counts.len() {
                    word += 1;
                    cum += (counts[word].1 as f64).powf(smoothing) / table.z;
                }
            }
        }
        table
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn entries(&self) -> &[WordId] {
        &self.entries
    }

    pub(crate) fn mass_slice(&self) -> &[f64] {
        &self.mass
    }

    pub(crate) fn from_parts(
        capacity: usize,
        smoothing: f64,
        entries: Vec<WordId>,
        z: f64,
        mass: Vec<f64>,
    ) -> Self {
        UnigramTable {
            capacity,
            smoothing,
            entries,
            z,
            mass,
        }
    }
}
