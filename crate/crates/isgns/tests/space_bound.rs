//! Peak-memory accounting: training memory must not grow with stream length.
//!
//! A counting global allocator tracks live bytes; the peak while training a
//! 10x longer stream (same config, same vocabulary shape) must stay within
//! 10% of the shorter run's peak. This file holds a single test so the
//! allocator sees no unrelated traffic.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use isgns::config::TrainConfig;
use isgns::corpus::TokenSource;
use isgns::trainer::train_incremental;

struct CountingAllocator;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

fn note_alloc(size: usize) {
    let live = LIVE.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(live, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            note_alloc(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            note_alloc(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, p: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
        unsafe { System.dealloc(p, layout) }
    }

    unsafe fn realloc(&self, p: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let q = unsafe { System.realloc(p, layout, new_size) };
        if !q.is_null() {
            LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
            note_alloc(new_size);
        }
        q
    }
}

#[global_allocator]
static ALLOCATOR: CountingAllocator = CountingAllocator;

fn peak_during_training(path: &std::path::Path, cfg: &TrainConfig) -> usize {
    let baseline = LIVE.load(Ordering::Relaxed);
    PEAK.store(baseline, Ordering::Relaxed);
    let mut source = TokenSource::file(path);
    let (ckpt, report) = train_incremental(&mut source, cfg, None).unwrap();
    assert!(report.pairs > 0);
    drop(ckpt);
    PEAK.load(Ordering::Relaxed) - baseline
}

#[test]
fn peak_memory_is_independent_of_stream_length() {
    let cfg = TrainConfig {
        window: 2,
        negatives: 2,
        smoothing: 1.0,
        dim: 16,
        max_vocab: 200,
        table_cap: 2_000,
        learning_rate: 0.1,
        subsample: 1e-3,
        minibatch: None,
        seed: 3,
    };
    let dir = tempfile::tempdir().unwrap();
    let short_path = dir.path().join("short.txt");
    let long_path = dir.path().join("long.txt");
    common::write_corpus(&short_path, &common::zipf_sentences(200_000, 400, 10, 1));
    common::write_corpus(&long_path, &common::zipf_sentences(2_000_000, 400, 10, 2));

    // Warm-up so one-time allocations (thread-locals, etc.) don't skew run 1.
    let _ = peak_during_training(&short_path, &cfg);

    let peak_short = peak_during_training(&short_path, &cfg);
    let peak_long = peak_during_training(&long_path, &cfg);
    let ratio = peak_long as f64 / peak_short as f64;
    println!(
        "peak bytes: short {peak_short}, long {peak_long}, ratio {ratio:.4}"
    );
    assert!(
        (0.9..=1.1).contains(&ratio),
        "peak memory moved by more than 10%: {ratio:.4}"
    );
}
