use serde::{Deserialize, Serialize};

use super::cooc::{CooccurrenceCounts, DEFAULT_WINDOW};
use super::procrustes::procrustes_align;
use super::sgns::{SgnsConfig, SgnsState};
use super::snapshot::{EmbeddingSnapshot, ModelTag};
use super::sppmi::{sppmi, DEFAULT_SHIFT};
use super::svd::{svd_snapshot, SvdOptions};
use crate::corpus::TimeSlicedCorpus;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsRunConfig {
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Number of leading slices used to initialise the model.
    pub init_slices: usize,
}

impl Default for SgnsRunConfig {
    fn default() -> Self {
        SgnsRunConfig {
            negatives: 5,
            learning_rate: 0.025,
            epochs: 1,
            init_slices: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub model: ModelTag,
    pub dim: usize,
    pub window: usize,
    pub shift: f64,
    pub exponent: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub dense_cutoff: usize,
    pub sgns: SgnsRunConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        let svd = SvdOptions::default();
        EmbeddingConfig {
            model: ModelTag::Svd,
            dim: 100,
            window: DEFAULT_WINDOW,
            shift: DEFAULT_SHIFT,
            exponent: svd.exponent,
            oversample: svd.oversample,
            power_iters: svd.power_iters,
            dense_cutoff: svd.dense_cutoff,
            sgns: SgnsRunConfig::default(),
        }
    }
}

/// Snapshots for slices `start_time..T`, in order.
#[derive(Debug, Clone)]
pub struct EmbeddingRun {
    pub snapshots: Vec<EmbeddingSnapshot>,
    pub start_time: usize,
    /// Slices whose alignment fell back to the identity.
    pub degenerate_alignments: Vec<usize>,
}

/// Builds one snapshot per slice.
///
/// SVD: counts accumulate across slices; leading slices that do not yet
/// produce a non-empty SPPMI matrix are skipped. Every later snapshot is
/// rotated onto its predecessor. SGNS: the first `init_slices` slices train
/// the initial model (snapshot at the last of them), then each subsequent
/// slice continues training.
pub fn embed_corpus(corpus: &TimeSlicedCorpus, config: &EmbeddingConfig, seed: u64) -> Result<EmbeddingRun> {
    let v = corpus.vocab.len();
    if config.dim == 0 || config.dim > v {
        return Err(invalid(format!("embedding dimension {} outside 1..={v}", config.dim)));
    }
    match config.model {
        ModelTag::Svd => embed_svd(corpus, config, seed),
        ModelTag::Sgns => embed_sgns(corpus, config, seed),
    }
}

fn embed_svd(corpus: &TimeSlicedCorpus, config: &EmbeddingConfig, seed: u64) -> Result<EmbeddingRun> {
    let mut counts = CooccurrenceCounts::new(corpus.vocab.len(), config.window);
    let mut snapshots: Vec<EmbeddingSnapshot> = Vec::with_capacity(corpus.n_slices());
    let mut start_time = 0;
    let mut degenerate = Vec::new();
    for (t, slice) in corpus.slices.iter().enumerate() {
        counts.accumulate(slice, &corpus.vocab);
        if counts.total_pair_mass() == 0.0 {
            start_time = t + 1;
            continue;
        }
        let matrix = sppmi(&counts, config.shift)?;
        if snapshots.is_empty() && matrix.matrix.nnz() == 0 {
            start_time = t + 1;
            continue;
        }
        let opts = SvdOptions {
            oversample: config.oversample,
            power_iters: config.power_iters,
            exponent: config.exponent,
            dense_cutoff: config.dense_cutoff,
            seed: seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        };
        let raw = svd_snapshot(&matrix, config.dim, &opts, t)?;
        let snap = match snapshots.last() {
            None => raw,
            Some(prev) => {
                let aligned = procrustes_align(&raw, prev)?;
                if aligned.degenerate {
                    degenerate.push(t);
                }
                aligned.snapshot
            }
        };
        snapshots.push(snap);
    }
    if snapshots.is_empty() {
        return Err(invalid("corpus never produced a usable co-occurrence matrix"));
    }
    Ok(EmbeddingRun {
        snapshots,
        start_time,
        degenerate_alignments: degenerate,
    })
}

fn embed_sgns(corpus: &TimeSlicedCorpus, config: &EmbeddingConfig, seed: u64) -> Result<EmbeddingRun> {
    let init = config.sgns.init_slices.max(1);
    if init > corpus.n_slices() {
        return Err(invalid(format!(
            "SGNS needs {init} initialisation slices, corpus has {}",
            corpus.n_slices()
        )));
    }
    let sgns = SgnsConfig {
        dim: config.dim,
        window: config.window,
        negatives: config.sgns.negatives,
        learning_rate: config.sgns.learning_rate,
        epochs: config.sgns.epochs,
        seed,
    };
    let init_docs: Vec<_> = corpus.slices[..init].iter().flatten().cloned().collect();
    let mut state = SgnsState::init(&init_docs, &corpus.vocab, sgns)?;
    let mut snapshots = vec![state.snapshot(init - 1)];
    for (t, slice) in corpus.slices.iter().enumerate().skip(init) {
        snapshots.push(state.update(slice, t));
    }
    Ok(EmbeddingRun {
        snapshots,
        start_time: init - 1,
        degenerate_alignments: Vec::new(),
    })
}
