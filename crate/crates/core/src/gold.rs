//! Multinomial Naive Bayes over the fixed vocabulary, used only to mint the
//! per-category list of most discriminative words.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TimeSlicedCorpus, VocabMap};
use crate::error::{invalid, Error, Result};

/// Size of each category's gold list.
pub const GOLD_SIZE: usize = 100;

#[derive(Debug, Clone)]
pub struct NbModel {
    /// Sorted category names; every per-category vector below follows this order.
    pub categories: Vec<String>,
    pub log_prior: Vec<f64>,
    /// `log_likelihood[c][w]` with add-one smoothing.
    pub log_likelihood: Vec<Vec<f64>>,
    word_counts: Vec<Vec<f64>>,
    token_totals: Vec<f64>,
    vocab: VocabMap,
}

pub fn train_nb(corpus: &TimeSlicedCorpus) -> Result<NbModel> {
    let mut categories: Vec<String> = corpus.documents().map(|d| d.category.clone()).collect();
    categories.sort();
    categories.dedup();
    train_nb_docs(corpus.documents(), &corpus.vocab, &categories)
}

/// Trains over an explicit category list; a listed category with no
/// documents is an error.
pub fn train_nb_docs<'a, I>(docs: I, vocab: &VocabMap, categories: &[String]) -> Result<NbModel>
where
    I: IntoIterator<Item = &'a Document>,
{
    if categories.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut categories = categories.to_vec();
    categories.sort();
    categories.dedup();
    let v = vocab.len();
    if v == 0 {
        return Err(invalid("vocabulary is empty"));
    }
    let c = categories.len();
    let mut doc_counts = vec![0usize; c];
    let mut word_counts = vec![vec![0.0; v]; c];
    let mut token_totals = vec![0.0; c];
    for doc in docs {
        let ci = categories
            .binary_search(&doc.category)
            .map_err(|_| Error::UnknownCategory(doc.category.clone()))?;
        doc_counts[ci] += 1;
        for tok in &doc.tokens {
            if let Some(w) = vocab.id(tok) {
                word_counts[ci][w] += 1.0;
                token_totals[ci] += 1.0;
            }
        }
    }
    if let Some(ci) = doc_counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyCategory(categories[ci].clone()));
    }
    let n_docs: usize = doc_counts.iter().sum();
    let log_prior = doc_counts.iter().map(|&n| (n as f64 / n_docs as f64).ln()).collect();
    let log_likelihood = word_counts
        .iter()
        .zip(&token_totals)
        .map(|(counts, total)| smoothed_log_probs(counts, *total))
        .collect();
    Ok(NbModel {
        categories,
        log_prior,
        log_likelihood,
        word_counts,
        token_totals,
        vocab: vocab.clone(),
    })
}

fn smoothed_log_probs(counts: &[f64], total: f64) -> Vec<f64> {
    let denom = (total + counts.len() as f64).ln();
    counts.iter().map(|n| (n + 1.0).ln() - denom).collect()
}

impl NbModel {
    pub fn vocab(&self) -> &VocabMap {
        &self.vocab
    }

    fn category_index(&self, category: &str) -> Result<usize> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(category))
            .map_err(|_| Error::UnknownCategory(category.to_string()))
    }

    pub fn log_posteriors(&self, tokens: &[String]) -> Vec<f64> {
        let ids: Vec<usize> = tokens.iter().filter_map(|t| self.vocab.id(t)).collect();
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(prior, ll)| prior + ids.iter().map(|&w| ll[w]).sum::<f64>())
            .collect()
    }

    /// Highest posterior; ties go to the lexicographically smallest category.
    pub fn classify(&self, tokens: &[String]) -> &str {
        let scores = self.log_posteriors(tokens);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        &self.categories[best]
    }

    pub fn accuracy<'a, I: IntoIterator<Item = &'a Document>>(&self, docs: I) -> f64 {
        let (mut hit, mut n) = (0usize, 0usize);
        for doc in docs {
            n += 1;
            if self.classify(&doc.tokens) == doc.category {
                hit += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            hit as f64 / n as f64
        }
    }

    /// `log P(w | c) - log P(w | not c)`, both add-one smoothed.
    pub fn discriminative_scores(&self, category: &str) -> Result<Vec<f64>> {
        if self.categories.len() < 2 {
            return Err(Error::NoComplement);
        }
        let ci = self.category_index(category)?;
        let v = self.vocab.len();
        let mut rest = vec![0.0; v];
        let mut rest_total = 0.0;
        for (j, counts) in self.word_counts.iter().enumerate() {
            if j == ci {
                continue;
            }
            for (r, n) in rest.iter_mut().zip(counts) {
                *r += n;
            }
            rest_total += self.token_totals[j];
        }
        let rest_ll = smoothed_log_probs(&rest, rest_total);
        Ok(self.log_likelihood[ci].iter().zip(rest_ll).map(|(a, b)| a - b).collect())
    }

    pub fn top_discriminative(&self, category: &str, k: usize) -> Result<Vec<ScoredWord>> {
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let scores = self.discriminative_scores(category)?;
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.vocab.word(a.0).cmp(self.vocab.word(b.0)))
        });
        Ok(ranked
            .into_iter()
            .take(k)
            .map(|(w, score)| ScoredWord {
                word: self.vocab.word(w).to_string(),
                score,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    pub score: f64,
}

/// `{category: [{word, score}, ...]}`, each list best-first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldStandard {
    pub categories: BTreeMap<String, Vec<ScoredWord>>,
}

impl GoldStandard {
    pub fn from_model(model: &NbModel, k: usize) -> Result<Self> {
        let k = k.min(model.vocab.len());
        let mut categories = BTreeMap::new();
        for c in &model.categories {
            categories.insert(c.clone(), model.top_discriminative(c, k)?);
        }
        Ok(GoldStandard { categories })
    }

    pub fn words(&self, category: &str) -> Option<Vec<&str>> {
        self.categories
            .get(category)
            .map(|ws| ws.iter().map(|w| w.word.as_str()).collect())
    }
}
