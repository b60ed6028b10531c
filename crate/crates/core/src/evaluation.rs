//! Scoring against the gold standard and the repeated-injection experiment.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{tfidf_detect, DEFAULT_TFIDF_QUANTILE};
use crate::corpus::{build_vocabulary, slice_by_time, Document, TimeSlicedCorpus, VocabMap};
use crate::detector::{build_trajectories, detect, Alert, Detection, ThresholdMode, TrajectorySeries};
use crate::embedding::{embed_corpus, EmbeddingConfig, EmbeddingRun, ModelTag};
use crate::error::{invalid, Error, Result};
use crate::gold::{train_nb, GoldStandard, GOLD_SIZE};
use crate::injection::{apply_plan, plan_control, plan_injection, InjectionPlan, LogisticSchedule, DEFAULT_CONTROL_NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Prf {
    fn mean(items: &[Prf]) -> Prf {
        let n = items.len().max(1) as f64;
        Prf {
            precision: items.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: items.iter().map(|p| p.recall).sum::<f64>() / n,
            f_measure: items.iter().map(|p| p.f_measure).sum::<f64>() / n,
        }
    }
}

/// Set-based precision, recall and F-measure.
pub fn prf<D, G>(detected: D, gold: G) -> Result<Prf>
where
    D: IntoIterator,
    D::Item: AsRef<str>,
    G: IntoIterator,
    G::Item: AsRef<str>,
{
    let gold: BTreeSet<String> = gold.into_iter().map(|g| g.as_ref().to_string()).collect();
    if gold.is_empty() {
        return Err(invalid("gold set is empty"));
    }
    let detected: BTreeSet<String> = detected.into_iter().map(|d| d.as_ref().to_string()).collect();
    let hits = detected.intersection(&gold).count() as f64;
    let precision = if detected.is_empty() { 0.0 } else { hits / detected.len() as f64 };
    let recall = hits / gold.len() as f64;
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Prf {
        precision,
        recall,
        f_measure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)`, starting at the origin.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC of the ranking by alert count. Words of `vocab` (and any gold word
/// outside it) without an entry count zero. Equal counts form one step.
///
/// With no gold word or no non-gold word the curve is the diagonal.
pub fn roc_auc(alert_counts: &BTreeMap<String, usize>, gold: &BTreeSet<String>, vocab: &VocabMap) -> RocCurve {
    let mut universe: BTreeSet<&str> = vocab.words().iter().map(String::as_str).collect();
    universe.extend(gold.iter().map(String::as_str));
    let n_pos = universe.iter().filter(|w| gold.contains(**w)).count();
    let n_neg = universe.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return RocCurve {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            auc: 0.5,
        };
    }

    // count -> (gold, other)
    let mut groups: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for w in universe {
        let c = alert_counts.get(w).copied().unwrap_or(0);
        let g = groups.entry(c).or_default();
        if gold.contains(w) {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    for (pos, neg) in groups.values().rev() {
        let (x0, y0) = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        tp += pos;
        fp += neg;
        let (x1, y1) = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        points.push((x1, y1));
    }
    RocCurve { points, auc }
}

/// Number of alerts per word.
pub fn alert_counts(alerts: &[Alert]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for a in alerts {
        *counts.entry(a.word.clone()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    Logistic,
    Control,
}

impl std::fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InjectionMode::Logistic => "logistic",
            InjectionMode::Control => "control",
        })
    }
}

impl std::str::FromStr for InjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(InjectionMode::Logistic),
            "control" => Ok(InjectionMode::Control),
            other => Err(invalid(format!("unknown injection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Category held out of the base corpus and re-injected.
    pub category: String,
    pub mode: InjectionMode,
    pub rate: f64,
    pub alpha: f64,
    /// Sliding-window size `n`.
    pub window: usize,
    pub threshold: ThresholdMode,
    pub embedding: EmbeddingConfig,
    /// One run per seed; only the injection shuffle (and control noise)
    /// depends on it.
    pub seeds: Vec<u64>,
    /// Seed of the embedding solver, shared by every run.
    pub embedding_seed: u64,
    pub tfidf_quantile: f64,
    pub control_noise: f64,
    /// Keep every run's embedding snapshots in its artifacts.
    pub keep_snapshots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            category: "cat00".into(),
            mode: InjectionMode::Logistic,
            rate: 0.5,
            alpha: 1.0,
            window: 5,
            threshold: ThresholdMode::Adaptive,
            embedding: EmbeddingConfig::default(),
            seeds: vec![0, 1, 2, 3, 4],
            embedding_seed: 0,
            tfidf_quantile: DEFAULT_TFIDF_QUANTILE,
            control_noise: DEFAULT_CONTROL_NOISE,
            keep_snapshots: false,
        }
    }
}

/// Everything shared by the runs of one corpus: the vocabulary and the gold
/// standard are built once from the complete corpus.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub documents: Vec<Document>,
    pub n_slices: usize,
    pub vocab: VocabMap,
    pub gold: GoldStandard,
}

impl ExperimentData {
    pub fn prepare(documents: Vec<Document>, n_slices: usize, vocab_cap: usize, gold_size: usize) -> Result<Self> {
        let vocab = build_vocabulary(&documents, vocab_cap)?;
        let full = slice_by_time(documents.clone(), n_slices, vocab.clone())?;
        let gold = GoldStandard::from_model(&train_nb(&full)?, gold_size)?;
        Ok(ExperimentData {
            documents,
            n_slices,
            vocab,
            gold,
        })
    }

    pub fn with_default_gold(documents: Vec<Document>, n_slices: usize, vocab_cap: usize) -> Result<Self> {
        Self::prepare(documents, n_slices, vocab_cap, GOLD_SIZE)
    }

    /// The base corpus without `category`, and that category's documents.
    pub fn split(&self, category: &str) -> Result<(TimeSlicedCorpus, Vec<Document>)> {
        let (held, base): (Vec<Document>, Vec<Document>) =
            self.documents.iter().cloned().partition(|d| d.category == category);
        if held.is_empty() {
            return Err(Error::UnknownCategory(category.to_string()));
        }
        Ok((slice_by_time(base, self.n_slices, self.vocab.clone())?, held))
    }

    pub fn gold_set(&self, category: &str) -> Result<BTreeSet<String>> {
        self.gold
            .words(category)
            .map(|ws| ws.into_iter().map(String::from).collect())
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))
    }
}

/// Echo of the knobs that identify a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub category: String,
    pub mode: InjectionMode,
    pub rate: Option<f64>,
    pub window: usize,
    pub model: ModelTag,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedWord {
    pub word: String,
    pub alerts: usize,
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub cend: Prf,
    pub auc: f64,
    pub tfidf: Prf,
    pub tfidf_auc: f64,
    pub n_alerts: usize,
    pub n_tfidf_alerts: usize,
    /// Time steps that had an adaptive threshold, and its range.
    pub threshold_steps: usize,
    pub threshold_min: Option<f64>,
    pub threshold_max: Option<f64>,
    /// Every alert satisfies `rho < threshold`.
    pub audit_passed: bool,
    pub degenerate_alignments: Vec<usize>,
    pub injected_per_slice: Vec<usize>,
    /// Alerted words, most alerts first.
    pub detected: Vec<DetectedWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    /// Means over runs of the per-run CEND metrics.
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub auc: f64,
    pub tfidf: Prf,
    pub tfidf_auc: f64,
    pub runs: Vec<RunReport>,
}

impl EvalReport {
    pub fn cend(&self) -> Prf {
        Prf {
            precision: self.precision,
            recall: self.recall,
            f_measure: self.f_measure,
        }
    }
}

/// Intermediate products of one run, for callers that persist them.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub seed: u64,
    pub plan: InjectionPlan,
    pub trajectories: TrajectorySeries,
    pub detection: Detection,
    pub tfidf_alerts: Vec<Alert>,
    pub embedding: Option<EmbeddingRun>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub artifacts: Vec<RunArtifacts>,
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.seeds.is_empty() {
        return Err(invalid("experiment needs at least one seed"));
    }
    if config.window < 2 {
        return Err(invalid(format!("window n must be at least 2, got {}", config.window)));
    }
    if config.mode == InjectionMode::Logistic && !(config.rate > 0.0 && config.rate.is_finite()) {
        return Err(invalid(format!("rate must be positive, got {}", config.rate)));
    }
    Ok(())
}

fn ranked_detected(counts: &BTreeMap<String, usize>, gold: &BTreeSet<String>) -> Vec<DetectedWord> {
    let mut out: Vec<DetectedWord> = counts
        .iter()
        .map(|(w, &c)| DetectedWord {
            word: w.clone(),
            alerts: c,
            gold: gold.contains(w),
        })
        .collect();
    out.sort_by(|a, b| b.alerts.cmp(&a.alerts).then_with(|| a.word.cmp(&b.word)));
    out
}

fn run_one(
    data: &ExperimentData,
    base: &TimeSlicedCorpus,
    held: &[Document],
    gold: &BTreeSet<String>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(RunReport, RunArtifacts)> {
    let context = |e: Error| invalid(format!("run with seed {seed}: {e}"));
    let plan = match config.mode {
        InjectionMode::Logistic => {
            let schedule = LogisticSchedule::with_alpha(1.0, config.alpha, config.rate, data.n_slices)?;
            plan_injection(held, &schedule, seed)?
        }
        InjectionMode::Control => plan_control(held, data.n_slices, seed, config.control_noise)?,
    };
    let corpus = apply_plan(base, &plan, held).map_err(context)?;
    let embedded = embed_corpus(&corpus, &config.embedding, config.embedding_seed).map_err(context)?;
    let trajectories = build_trajectories(&corpus, &embedded).map_err(context)?;
    let detection = detect(&trajectories, config.window, config.threshold).map_err(context)?;
    let tfidf_alerts = tfidf_detect(&corpus, config.tfidf_quantile).map_err(context)?;

    let counts = alert_counts(&detection.alerts);
    let tfidf_counts = alert_counts(&tfidf_alerts);
    let ks: Vec<f64> = detection.thresholds.iter().filter_map(|s| s.threshold).collect();
    let report = RunReport {
        seed,
        cend: prf(counts.keys(), gold)?,
        auc: roc_auc(&counts, gold, &data.vocab).auc,
        tfidf: prf(tfidf_counts.keys(), gold)?,
        tfidf_auc: roc_auc(&tfidf_counts, gold, &data.vocab).auc,
        n_alerts: detection.alerts.len(),
        n_tfidf_alerts: tfidf_alerts.len(),
        threshold_steps: ks.len(),
        threshold_min: ks.iter().copied().reduce(f64::min),
        threshold_max: ks.iter().copied().reduce(f64::max),
        audit_passed: detection.audit(),
        degenerate_alignments: embedded.degenerate_alignments.clone(),
        injected_per_slice: plan.per_slice_counts.clone(),
        detected: ranked_detected(&counts, gold),
    };
    let artifacts = RunArtifacts {
        seed,
        plan,
        trajectories,
        detection,
        tfidf_alerts,
        embedding: config.keep_snapshots.then_some(embedded),
    };
    Ok((report, artifacts))
}

/// Injects, embeds, detects and scores once per seed; runs execute in
/// parallel and are reduced in seed order.
pub fn run_experiment(data: &ExperimentData, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    validate(config)?;
    let (base, held) = data.split(&config.category)?;
    let gold = data.gold_set(&config.category)?;
    let results: Vec<(RunReport, RunArtifacts)> = config
        .seeds
        .par_iter()
        .map(|&seed| run_one(data, &base, &held, &gold, config, seed))
        .collect::<Result<_>>()?;
    let (runs, artifacts): (Vec<RunReport>, Vec<RunArtifacts>) = results.into_iter().unzip();

    let n = runs.len() as f64;
    let cend = Prf::mean(&runs.iter().map(|r| r.cend).collect::<Vec<_>>());
    let tfidf = Prf::mean(&runs.iter().map(|r| r.tfidf).collect::<Vec<_>>());
    let report = EvalReport {
        config: ConfigEcho {
            category: config.category.clone(),
            mode: config.mode,
            rate: (config.mode == InjectionMode::Logistic).then_some(config.rate),
            window: config.window,
            model: config.embedding.model,
            seeds: config.seeds.clone(),
            config: config.clone(),
        },
        precision: cend.precision,
        recall: cend.recall,
        f_measure: cend.f_measure,
        auc: runs.iter().map(|r| r.auc).sum::<f64>() / n,
        tfidf,
        tfidf_auc: runs.iter().map(|r| r.tfidf_auc).sum::<f64>() / n,
        runs,
    };
    Ok(ExperimentOutcome { report, artifacts })
}
