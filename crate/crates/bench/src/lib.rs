//! Shared fixtures for the criterion benchmarks.

use cend_core::synth::{generate, SynthSpec};
use cend_core::Document;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reduced synthetic corpus that keeps benchmark iterations short.
pub fn small_corpus(seed: u64) -> Vec<Document> {
    let spec = SynthSpec {
        n_categories: 4,
        vocab_size: 600,
        exclusive_per_category: 50,
        background_words: 400,
        docs_per_category: 100,
        seed,
        ..SynthSpec::default()
    };
    generate(&spec).expect("valid spec").documents
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}
