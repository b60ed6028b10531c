//! TF-IDF threshold-crossing baseline.
//!
//! At slice `t` a word scores `tf · ln((1 + t_seen) / (1 + df))` where `tf`
//! is its token share in the slice, `t_seen = t + 1` and `df` the number of
//! slices up to and including `t` that contain it. Words above the
//! `quantile`-th quantile of the slice's non-zero scores raise an alert.

use crate::corpus::TimeSlicedCorpus;
use crate::detector::{relative_frequencies, Alert, AlertMode};
use crate::error::{invalid, Result};

pub const DEFAULT_TFIDF_QUANTILE: f64 = 0.99;

/// Upper order statistic at fraction `q` of an ascending slice, so only
/// values strictly above an observed score can alert.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (q * (sorted.len() - 1) as f64).ceil() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Scores per slice, `T × V`. Causal: slice `t` only looks at slices `..=t`.
pub fn tfidf_scores(corpus: &TimeSlicedCorpus) -> Vec<Vec<f64>> {
    let freq = relative_frequencies(corpus);
    let v = corpus.vocab.len();
    let mut df = vec![0usize; v];
    (0..corpus.n_slices())
        .map(|t| {
            for w in 0..v {
                if freq[w][t] > 0.0 {
                    df[w] += 1;
                }
            }
            let seen = (t + 1) as f64;
            (0..v)
                .map(|w| {
                    let tf = freq[w][t];
                    if tf == 0.0 {
                        0.0
                    } else {
                        tf * ((1.0 + seen) / (1.0 + df[w] as f64)).ln()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn tfidf_detect(corpus: &TimeSlicedCorpus, threshold_quantile: f64) -> Result<Vec<Alert>> {
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return Err(invalid(format!("quantile must lie in (0, 1), got {threshold_quantile}")));
    }
    let mut alerts = Vec::new();
    for (t, scores) in tfidf_scores(corpus).into_iter().enumerate() {
        let mut nonzero: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
        if nonzero.is_empty() {
            continue;
        }
        nonzero.sort_by(f64::total_cmp);
        let cut = quantile_sorted(&nonzero, threshold_quantile);
        let mut step: Vec<Alert> = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > cut)
            .map(|(w, &s)| Alert {
                word: corpus.vocab.word(w).to_string(),
                time: t,
                rho: s,
                threshold: cut,
                mode: AlertMode::Tfidf,
            })
            .collect();
        step.sort_by(|a, b| a.word.cmp(&b.word));
        alerts.extend(step);
    }
    Ok(alerts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, slice_by_time, Document};

    fn doc(t: usize, text: &str) -> Document {
        Document {
            id: format!("{t}:{text}"),
            tokens: text.split_whitespace().map(String::from).collect(),
            category: "c".into(),
            time_index: t,
        }
    }

    fn toy() -> TimeSlicedCorpus {
        let docs = vec![
            doc(0, "a b c d"),
            doc(1, "a b c e"),
            doc(2, "a b w x y z z z z z z"),
        ];
        let vocab = build_vocabulary(&docs, 100).unwrap();
        slice_by_time(docs, 3, vocab).unwrap()
    }

    #[test]
    fn hand_computed_toy() {
        let c = toy();
        let scores = tfidf_scores(&c);
        let z = c.vocab.id("z").unwrap();
        let a = c.vocab.id("a").unwrap();
        // slice 2: tf(z) = 6/11, df = 1, idf = ln(4/2)
        assert!((scores[2][z] - 6.0 / 11.0 * 2f64.ln()).abs() < 1e-15);
        // a is in every slice
        assert!(scores.iter().all(|s| s[a] == 0.0));
        let alerts = tfidf_detect(&c, 0.5).unwrap();
        assert!(alerts.iter().any(|x| x.word == "z" && x.time == 2));
        assert!(alerts.iter().all(|x| x.word != "a"));
        // nothing can alert in the first slice: every present word has df = t + 1
        assert!(alerts.iter().all(|x| x.time > 0));
    }

    #[test]
    fn extreme_quantile_silences() {
        let c = toy();
        assert!(tfidf_detect(&c, 0.999_999).unwrap().is_empty());
        assert!(tfidf_detect(&c, 1.0).is_err());
        assert!(tfidf_detect(&c, 0.0).is_err());
    }

    #[test]
    fn causal() {
        let c = toy();
        let mut altered = c.clone();
        altered.slices[2] = vec![doc(2, "d d e e")];
        let before: Vec<_> = tfidf_detect(&c, 0.5).unwrap().into_iter().filter(|a| a.time < 2).collect();
        let after: Vec<_> = tfidf_detect(&altered, 0.5).unwrap().into_iter().filter(|a| a.time < 2).collect();
        assert_eq!(before, after);
    }
}
