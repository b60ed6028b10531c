use std::collections::HashMap;

use crate::corpus::{Document, VocabMap};

use super::sparse::CsrMatrix;

pub const DEFAULT_WINDOW: usize = 5;

/// Cumulative symmetric co-occurrence counts over the fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCounts {
    window: usize,
    rows: Vec<HashMap<u32, f64>>,
    marginals: Vec<f64>,
    total: f64,
}

impl CooccurrenceCounts {
    pub fn new(vocab_size: usize, window: usize) -> Self {
        CooccurrenceCounts {
            window,
            rows: vec![HashMap::new(); vocab_size],
            marginals: vec![0.0; vocab_size],
            total: 0.0,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.rows.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(&(y as u32)).copied().unwrap_or(0.0)
    }

    pub fn marginal(&self, x: usize) -> f64 {
        self.marginals[x]
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    pub fn total_pair_mass(&self) -> f64 {
        self.total
    }

    fn bump(&mut self, x: usize, y: usize) {
        *self.rows[x].entry(y as u32).or_insert(0.0) += 1.0;
        self.marginals[x] += 1.0;
        self.total += 1.0;
    }

    /// Every in-vocabulary neighbour within `±window` positions of a token
    /// adds one to that ordered pair. Out-of-vocabulary tokens keep their
    /// position but contribute nothing.
    pub fn accumulate(&mut self, docs: &[Document], vocab: &VocabMap) {
        for doc in docs {
            let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| vocab.id(t)).collect();
            for (i, a) in ids.iter().enumerate() {
                let Some(a) = *a else { continue };
                let end = (i + self.window).min(ids.len().saturating_sub(1));
                for b in ids[i + 1..=end].iter().flatten() {
                    self.bump(a, *b);
                    self.bump(*b, a);
                }
            }
        }
    }

    /// Counts as a sparse matrix with sorted columns.
    pub fn to_csr(&self) -> CsrMatrix {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut entries: Vec<(u32, f64)> = row.iter().map(|(&c, &v)| (c, v)).collect();
                entries.sort_unstable_by_key(|e| e.0);
                entries
            })
            .collect();
        CsrMatrix::from_rows(self.rows.len(), rows)
    }
}
