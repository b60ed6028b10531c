//! Seeded synthetic labelled corpus.
//!
//! Each category owns a disjoint set of exclusive words; every category also
//! draws from one shared background vocabulary. A document token comes from
//! its category's exclusive set with probability `lambda`, otherwise from the
//! background. Both sets are sampled with Zipf weights `rank^-s`.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_categories: usize,
    pub vocab_size: usize,
    pub exclusive_per_category: usize,
    /// Shared words. Vocabulary left over after the exclusive and background
    /// sets extends the background tail.
    pub background_words: usize,
    pub docs_per_category: usize,
    pub tokens_per_doc: usize,
    pub lambda: f64,
    pub zipf_exponent: f64,
    pub n_slices: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_categories: 10,
            vocab_size: 2000,
            exclusive_per_category: 100,
            background_words: 1000,
            docs_per_category: 500,
            tokens_per_doc: 80,
            lambda: 0.4,
            zipf_exponent: 1.1,
            n_slices: 30,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_categories == 0 || self.exclusive_per_category == 0 || self.background_words == 0 {
            return Err(invalid("synthetic spec needs categories, exclusive and background words"));
        }
        let needed = self.n_categories * self.exclusive_per_category + self.background_words;
        if self.vocab_size < needed {
            return Err(invalid(format!(
                "vocab_size {} is smaller than the {needed} exclusive + background words",
                self.vocab_size
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1], got {}", self.lambda)));
        }
        if !(self.zipf_exponent > 0.0) || self.n_slices == 0 || self.tokens_per_doc == 0 {
            return Err(invalid("zipf exponent, slice count and document length must be positive"));
        }
        Ok(())
    }

    pub fn category_name(&self, c: usize) -> String {
        format!("cat{c:02}")
    }

    pub fn exclusive_word(&self, c: usize, rank: usize) -> String {
        format!("c{c:02}w{rank:03}")
    }

    pub fn background_word(&self, rank: usize) -> String {
        format!("bg{rank:04}")
    }

    fn background_len(&self) -> usize {
        self.vocab_size - self.n_categories * self.exclusive_per_category
    }
}

pub fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|k| (k as f64).powf(-exponent)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    /// True exclusive words per category, most frequent first.
    pub lexical_fields: BTreeMap<String, Vec<String>>,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let background: Vec<String> = (0..spec.background_len()).map(|r| spec.background_word(r)).collect();
    let background_dist = WeightedIndex::new(zipf_weights(background.len(), spec.zipf_exponent)).expect("non-empty");
    let exclusive_dist =
        WeightedIndex::new(zipf_weights(spec.exclusive_per_category, spec.zipf_exponent)).expect("non-empty");
    let fields: Vec<Vec<String>> = (0..spec.n_categories)
        .map(|c| (0..spec.exclusive_per_category).map(|r| spec.exclusive_word(c, r)).collect())
        .collect();

    let n_docs = spec.n_categories * spec.docs_per_category;
    let documents = (0..n_docs)
        .into_par_iter()
        .map(|i| {
            let c = i / spec.docs_per_category;
            // one stream per document keeps generation order-independent
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let time_index = rng.random_range(0..spec.n_slices);
            let tokens = (0..spec.tokens_per_doc)
                .map(|_| {
                    if spec.lambda >= 1.0 || rng.random_bool(spec.lambda) {
                        fields[c][exclusive_dist.sample(&mut rng)].clone()
                    } else {
                        background[background_dist.sample(&mut rng)].clone()
                    }
                })
                .collect();
            Document {
                id: format!("d{i:06}"),
                tokens,
                category: spec.category_name(c),
                time_index,
            }
        })
        .collect();
    let lexical_fields = fields
        .into_iter()
        .enumerate()
        .map(|(c, words)| (spec.category_name(c), words))
        .collect();
    Ok(SynthCorpus {
        documents,
        lexical_fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize;

    fn small() -> SynthSpec {
        SynthSpec {
            n_categories: 3,
            vocab_size: 90,
            exclusive_per_category: 10,
            background_words: 60,
            docs_per_category: 20,
            tokens_per_doc: 15,
            n_slices: 4,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn pure_category_documents() {
        let spec = SynthSpec { lambda: 1.0, ..small() };
        let corpus = generate(&spec).unwrap();
        for doc in &corpus.documents {
            let field = &corpus.lexical_fields[&doc.category];
            assert!(doc.tokens.iter().all(|t| field.contains(t)));
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate(&small()).unwrap();
        assert_eq!(a, generate(&small()).unwrap());
        let other = generate(&SynthSpec { seed: 7, ..small() }).unwrap();
        assert_ne!(a.documents, other.documents);
    }

    #[test]
    fn shape_and_disjoint_fields() {
        let spec = small();
        let corpus = generate(&spec).unwrap();
        assert_eq!(corpus.documents.len(), 60);
        assert!(corpus.documents.iter().all(|d| d.tokens.len() == 15 && d.time_index < 4));
        let mut all: Vec<&String> = corpus.lexical_fields.values().flatten().collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn words_survive_normalisation() {
        let spec = small();
        for w in [spec.exclusive_word(2, 7), spec.background_word(13)] {
            assert_eq!(normalize(&w, None), vec![w.clone()]);
        }
    }

    #[test]
    fn vocabulary_too_small() {
        let spec = SynthSpec { vocab_size: 50, ..small() };
        assert!(generate(&spec).is_err());
        assert!(generate(&SynthSpec { lambda: 0.0, ..small() }).is_err());
    }

    #[test]
    fn zipf_fit_on_large_sample() {
        let weights = zipf_weights(50, 1.1);
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(&weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut counts = vec![0usize; 50];
        for _ in 0..n {
            counts[dist.sample(&mut rng)] += 1;
        }
        // chi-square against the configured law, 49 dof: p = 0.001 critical value ~85.4
        let chi2: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&o, w)| {
                let e = w / total * n as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 85.4, "chi2 = {chi2}");
    }
}
