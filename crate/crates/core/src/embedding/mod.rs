//! Per-slice word embeddings.
//!
//! The SVD route keeps cumulative co-occurrence counts, turns them into a
//! shifted PPMI matrix after every slice, factorises it with a truncated SVD
//! and rotates the result onto the previous snapshot with orthogonal
//! Procrustes. The SGNS route keeps training one skip-gram model over a fixed
//! vocabulary.

mod cooc;
mod pipeline;
mod procrustes;
mod sgns;
mod snapshot;
mod sparse;
mod sppmi;
pub mod svd;

pub use cooc::{CooccurrenceCounts, DEFAULT_WINDOW};
pub use pipeline::{embed_corpus, EmbeddingConfig, EmbeddingRun, SgnsRunConfig};
pub use procrustes::{procrustes_align, procrustes_rotation, Alignment};
pub use sgns::{SgnsConfig, SgnsState};
pub use snapshot::{read_snapshot, write_snapshot, EmbeddingSnapshot, ModelTag};
pub use sparse::CsrMatrix;
pub use sppmi::{sppmi, sppmi_entry, SppmiMatrix, DEFAULT_SHIFT};
pub use svd::{dense_svd, randomized_svd, svd_snapshot, truncated_svd, Svd, SvdOptions};
