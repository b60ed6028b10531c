//! Truncated SVD.
//!
//! Small matrices are factorised exactly with a dense SVD. Larger sparse
//! matrices use randomized subspace iteration: a Gaussian sketch of the range,
//! a few power iterations with re-orthonormalisation, then an exact SVD of the
//! small projected matrix.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::snapshot::{EmbeddingSnapshot, ModelTag};
use super::sparse::CsrMatrix;
use super::sppmi::SppmiMatrix;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    /// Word vectors are `U Σ^exponent`.
    pub exponent: f64,
    /// Matrices with both sides at most this large use the exact solver.
    pub dense_cutoff: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iters: 4,
            exponent: 0.5,
            dense_cutoff: 500,
            seed: 0,
        }
    }
}

/// Thin SVD `A = U diag(σ) Vᵀ` with `σ` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    pub fn truncate(mut self, k: usize) -> Svd {
        let k = k.min(self.singular_values.len());
        self.u = self.u.columns(0, k).into_owned();
        self.v = self.v.columns(0, k).into_owned();
        self.singular_values = self.singular_values.rows(0, k).into_owned();
        self
    }

    /// Flips factor pairs so the largest-magnitude entry of each left
    /// singular vector is positive.
    pub fn fix_signs(&mut self) {
        for j in 0..self.u.ncols() {
            let col = self.u.column(j);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            if !col.is_empty() && col[best] < 0.0 {
                self.u.column_mut(j).neg_mut();
                self.v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Exact thin SVD of a dense matrix, singular values descending.
pub fn dense_svd(a: &DMatrix<f64>) -> Svd {
    let svd = a.clone().svd(true, true);
    Svd {
        u: svd.u.expect("u requested"),
        singular_values: svd.singular_values,
        v: svd.v_t.expect("v requested").transpose(),
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Randomized subspace iteration for the top `k` singular triples.
pub fn randomized_svd(a: &CsrMatrix, k: usize, oversample: usize, power_iters: usize, seed: u64) -> Svd {
    let (m, n) = (a.nrows(), a.ncols());
    let l = (k + oversample).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(a.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orthonormal_basis(a.tr_mul_dense(&q));
        q = orthonormal_basis(a.mul_dense(&z));
    }
    // B = Qᵀ A; factor Bᵀ = Q₂ R and take the exact SVD of the small R
    let qr = a.tr_mul_dense(&q).qr();
    let (q2, r) = (qr.q(), qr.r());
    let small = dense_svd(&r);
    // Bᵀ = Q₂ U_r Σ V_rᵀ, hence A ≈ (Q V_r) Σ (Q₂ U_r)ᵀ
    Svd {
        u: q * small.v,
        singular_values: small.singular_values,
        v: q2 * small.u,
    }
    .truncate(k)
}

/// Top-`d` singular triples of a sparse matrix, signs fixed.
pub fn truncated_svd(a: &CsrMatrix, d: usize, opts: &SvdOptions) -> Result<Svd> {
    let (m, n) = (a.nrows(), a.ncols());
    if d == 0 || d > m.min(n) {
        return Err(invalid(format!("rank {d} outside 1..={}", m.min(n))));
    }
    if a.values().iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let mut svd = if m.max(n) <= opts.dense_cutoff {
        dense_svd(&a.to_dense()).truncate(d)
    } else {
        randomized_svd(a, d, opts.oversample, opts.power_iters, opts.seed)
    };
    svd.fix_signs();
    Ok(svd)
}

/// Factorises an SPPMI matrix into a `V × d` embedding snapshot.
pub fn svd_snapshot(sppmi: &SppmiMatrix, d: usize, opts: &SvdOptions, time_index: usize) -> Result<EmbeddingSnapshot> {
    if ![0.0, 0.5, 1.0].contains(&opts.exponent) {
        return Err(invalid(format!("singular value exponent must be 0, 0.5 or 1, got {}", opts.exponent)));
    }
    let svd = truncated_svd(&sppmi.matrix, d, opts)?;
    let mut vectors = svd.u;
    for (j, s) in svd.singular_values.iter().enumerate() {
        vectors.column_mut(j).scale_mut(s.powf(opts.exponent));
    }
    Ok(EmbeddingSnapshot {
        vectors,
        time_index,
        model: ModelTag::Svd,
        aligned: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
        let g = m.transpose() * m;
        (g - DMatrix::identity(m.ncols(), m.ncols())).amax()
    }

    #[test]
    fn diagonal_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let csr = CsrMatrix::from_dense(&a);
        let svd = truncated_svd(&csr, 2, &SvdOptions::default()).unwrap();
        assert_eq!(svd.singular_values.as_slice(), &[4.0, 1.0]);
        let sppmi = SppmiMatrix { matrix: csr, shift: 1.0 };
        let snap = svd_snapshot(&sppmi, 2, &SvdOptions::default(), 0).unwrap();
        assert_eq!(snap.vectors, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn rank_one_has_zero_tail() {
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = DVector::from_vec(vec![0.3, 1.0, -1.0, 2.0, 0.1]);
        let a = &x * y.transpose();
        let svd = truncated_svd(&CsrMatrix::from_dense(&a), 3, &SvdOptions::default()).unwrap();
        let expected = x.norm() * y.norm();
        assert!((svd.singular_values[0] - expected).abs() < 1e-8);
        assert!(svd.singular_values[1].abs() < 1e-8);
        assert!(svd.singular_values[2].abs() < 1e-8);
        assert!(orthonormality_error(&svd.u) < 1e-10);
    }

    #[test]
    fn full_rank_reconstruction() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + (i == j) as u8 as f64);
        let svd = truncated_svd(&CsrMatrix::from_dense(&a), 6, &SvdOptions::default()).unwrap();
        assert!((svd.reconstruct() - &a).amax() < 1e-8);
        assert!(orthonormality_error(&svd.v) < 1e-12);
    }

    #[test]
    fn wide_matrix_goes_through_transpose() {
        let a = DMatrix::from_fn(3, 7, |i, j| (i as f64 + 1.0) * (j as f64 - 3.0).sin());
        let svd = dense_svd(&a);
        assert_eq!(svd.u.shape(), (3, 3));
        assert_eq!(svd.v.shape(), (7, 3));
        assert!((svd.reconstruct() - a).amax() < 1e-12);
    }

    #[test]
    fn signs_follow_largest_entry() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -5.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0]);
        let svd = truncated_svd(&CsrMatrix::from_dense(&a), 3, &SvdOptions::default()).unwrap();
        for j in 0..3 {
            let col = svd.u.column(j);
            let max = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(max > 0.0);
        }
        assert!((svd.reconstruct() - a).amax() < 1e-12);
    }

    #[test]
    fn zero_and_bad_rank_rejected() {
        let z = CsrMatrix::from_rows(3, vec![vec![], vec![], vec![]]);
        assert!(matches!(truncated_svd(&z, 1, &SvdOptions::default()), Err(Error::ZeroMatrix)));
        let a = CsrMatrix::from_dense(&DMatrix::identity(3, 3));
        assert!(truncated_svd(&a, 0, &SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 4, &SvdOptions::default()).is_err());
    }

    #[test]
    fn randomized_matches_exact_on_decaying_spectrum() {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let q = g.qr().q();
        let spectrum = DVector::from_fn(n, |i, _| 0.8f64.powi(i as i32));
        let a = &q * DMatrix::from_diagonal(&spectrum) * q.transpose();
        let csr = CsrMatrix::from_dense(&a);
        let approx = randomized_svd(&csr, 10, 10, 4, 3);
        let exact = dense_svd(&a);
        for i in 0..10 {
            let rel = (approx.singular_values[i] - exact.singular_values[i]).abs() / exact.singular_values[i];
            assert!(rel < 1e-6, "σ_{i}: {rel}");
        }
        assert!(orthonormality_error(&approx.u) < 1e-10);
        assert!(orthonormality_error(&approx.v) < 1e-10);
    }
}
