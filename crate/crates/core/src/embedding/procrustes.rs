use nalgebra::DMatrix;

use super::snapshot::EmbeddingSnapshot;
use super::svd::dense_svd;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Alignment {
    pub snapshot: EmbeddingSnapshot,
    pub rotation: DMatrix<f64>,
    /// True when the cross-covariance vanished and the identity was used.
    pub degenerate: bool,
}

/// Orthogonal `Ω` minimising `‖current Ω − previous‖_F`: with
/// `currentᵀ previous = U Σ Vᵀ`, `Ω = U Vᵀ`.
pub fn procrustes_rotation(current: &DMatrix<f64>, previous: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if current.shape() != previous.shape() {
        let expected = previous.nrows() * previous.ncols();
        return Err(Error::DimensionMismatch {
            expected,
            actual: current.nrows() * current.ncols(),
        });
    }
    let d = current.ncols();
    let cross = current.transpose() * previous;
    let scale = current.norm() * previous.norm();
    if !(cross.norm() > f64::EPSILON * scale) || !cross.iter().all(|x| x.is_finite()) {
        log::warn!("procrustes: vanishing cross-covariance, using identity");
        return Ok((DMatrix::identity(d, d), true));
    }
    let svd = dense_svd(&cross);
    Ok((&svd.u * svd.v.transpose(), false))
}

pub fn procrustes_align(current: &EmbeddingSnapshot, previous: &EmbeddingSnapshot) -> Result<Alignment> {
    let (rotation, degenerate) = procrustes_rotation(&current.vectors, &previous.vectors)?;
    let snapshot = EmbeddingSnapshot {
        vectors: &current.vectors * &rotation,
        time_index: current.time_index,
        model: current.model,
        aligned: true,
    };
    Ok(Alignment {
        snapshot,
        rotation,
        degenerate,
    })
}
