//! Skip-gram with negative sampling, trained incrementally over a vocabulary
//! that is frozen at initialisation.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::snapshot::{EmbeddingSnapshot, ModelTag};
use crate::corpus::{Document, VocabMap};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    /// Starting learning rate of every update batch; decays linearly to
    /// `1e-4` of this value over the batch.
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SgnsState {
    config: SgnsConfig,
    vocab: VocabMap,
    /// Row-major `V × dim`.
    input: Vec<f64>,
    output: Vec<f64>,
    counts: Vec<f64>,
    rng: ChaCha8Rng,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SgnsState {
    /// Initialises the weights and trains on `init_docs`.
    pub fn init(init_docs: &[Document], vocab: &VocabMap, config: SgnsConfig) -> Result<Self> {
        if init_docs.is_empty() {
            return Err(invalid("SGNS initialisation needs documents"));
        }
        if config.dim == 0 || config.window == 0 {
            return Err(invalid("SGNS dim and window must be positive"));
        }
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = 0.5 / config.dim as f64;
        let input = (0..v * config.dim).map(|_| rng.random_range(-half..half)).collect();
        let mut state = SgnsState {
            config,
            vocab: vocab.clone(),
            input,
            output: vec![0.0; v * config.dim],
            counts: vec![0.0; v],
            rng,
        };
        state.train(init_docs);
        Ok(state)
    }

    pub fn snapshot(&self, time_index: usize) -> EmbeddingSnapshot {
        EmbeddingSnapshot {
            vectors: DMatrix::from_row_slice(self.vocab.len(), self.config.dim, &self.input),
            time_index,
            model: ModelTag::Sgns,
            aligned: false,
        }
    }

    /// Continues training from the current weights on one slice.
    pub fn update(&mut self, slice_docs: &[Document], time_index: usize) -> EmbeddingSnapshot {
        self.train(slice_docs);
        self.snapshot(time_index)
    }

    fn train(&mut self, docs: &[Document]) {
        let sentences: Vec<Vec<usize>> = docs
            .iter()
            .map(|d| d.tokens.iter().filter_map(|t| self.vocab.id(t)).collect::<Vec<_>>())
            .filter(|ids| !ids.is_empty())
            .collect();
        let n_tokens: usize = sentences.iter().map(Vec::len).sum();
        if n_tokens == 0 {
            return;
        }
        for s in &sentences {
            for &w in s {
                self.counts[w] += 1.0;
            }
        }
        let weights: Vec<f64> = self.counts.iter().map(|c| c.powf(0.75)).collect();
        let noise = WeightedIndex::new(&weights).expect("at least one counted word");

        let dim = self.config.dim;
        let lr0 = self.config.learning_rate;
        let total = (n_tokens * self.config.epochs) as f64;
        let mut seen = 0usize;
        let mut grad = vec![0.0; dim];
        for _ in 0..self.config.epochs {
            for s in &sentences {
                for (i, &center) in s.iter().enumerate() {
                    let lr = (lr0 * (1.0 - seen as f64 / total)).max(lr0 * 1e-4);
                    seen += 1;
                    let lo = i.saturating_sub(self.config.window);
                    let hi = (i + self.config.window).min(s.len() - 1);
                    for j in lo..=hi {
                        if j == i {
                            continue;
                        }
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        self.pair_step(center, s[j], 1.0, lr, &mut grad);
                        for _ in 0..self.config.negatives {
                            let neg = noise.sample(&mut self.rng);
                            if neg != s[j] {
                                self.pair_step(center, neg, 0.0, lr, &mut grad);
                            }
                        }
                        let row = &mut self.input[center * dim..(center + 1) * dim];
                        for (x, g) in row.iter_mut().zip(&grad) {
                            *x += g;
                        }
                    }
                }
            }
        }
    }

    fn pair_step(&mut self, center: usize, target: usize, label: f64, lr: f64, grad: &mut [f64]) {
        let dim = self.config.dim;
        let inp = &self.input[center * dim..(center + 1) * dim];
        let out = &mut self.output[target * dim..(target + 1) * dim];
        let score: f64 = inp.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        let g = (label - sigmoid(score)) * lr;
        for k in 0..dim {
            grad[k] += g * out[k];
            out[k] += g * inp[k];
        }
    }
}
