//! Declarative run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use cend_core::embedding::{EmbeddingConfig, SgnsRunConfig, SvdOptions, DEFAULT_SHIFT, DEFAULT_WINDOW};
use cend_core::evaluation::{ExperimentConfig, InjectionMode};
use cend_core::gold::GOLD_SIZE;
use cend_core::injection::DEFAULT_CONTROL_NOISE;
use cend_core::baselines::DEFAULT_TFIDF_QUANTILE;
use cend_core::synth::SynthSpec;
use cend_core::{ModelTag, ThresholdMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSource {
    /// JSONL corpus; when absent the `synth` spec generates one.
    pub path: Option<PathBuf>,
    /// Two-column `word lemma` file applied while reading `path`.
    pub lemmas: Option<PathBuf>,
    /// Slice count of a file corpus (defaults to the largest time index + 1).
    pub n_slices: Option<usize>,
    pub vocab_cap: usize,
    pub granularity: String,
    pub synth: SynthSpec,
}

impl Default for CorpusSource {
    fn default() -> Self {
        CorpusSource {
            path: None,
            lemmas: None,
            n_slices: None,
            vocab_cap: 2000,
            granularity: "slice".into(),
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvdSection {
    pub exponent: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub dense_cutoff: usize,
}

impl Default for SvdSection {
    fn default() -> Self {
        let o = SvdOptions::default();
        SvdSection {
            exponent: o.exponent,
            oversample: o.oversample,
            power_iters: o.power_iters,
            dense_cutoff: o.dense_cutoff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    /// Precomputed gold standard; built from the corpus when absent.
    pub gold: Option<PathBuf>,
    pub gold_size: usize,
    pub model: ModelTag,
    /// Embedding dimension D.
    pub dim: usize,
    /// Co-occurrence window.
    pub window_size: usize,
    pub shift: f64,
    /// Correlation window n.
    pub n: usize,
    pub mode: InjectionMode,
    pub rates: Vec<f64>,
    pub alpha: f64,
    pub threshold: ThresholdKind,
    pub fixed_k: Option<f64>,
    pub category: String,
    pub seeds: Vec<u64>,
    pub embedding_seed: u64,
    pub tfidf_quantile: f64,
    pub control_noise: f64,
    /// Also write every embedding snapshot.
    pub snapshots: bool,
    pub out: PathBuf,
    pub svd: SvdSection,
    pub sgns: SgnsRunConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: CorpusSource::default(),
            gold: None,
            gold_size: GOLD_SIZE,
            model: ModelTag::Svd,
            dim: 100,
            window_size: DEFAULT_WINDOW,
            shift: DEFAULT_SHIFT,
            n: 5,
            mode: InjectionMode::Logistic,
            rates: vec![0.5],
            alpha: 1.0,
            threshold: ThresholdKind::Adaptive,
            fixed_k: None,
            category: "cat00".into(),
            seeds: vec![0, 1, 2, 3, 4],
            embedding_seed: 0,
            tfidf_quantile: DEFAULT_TFIDF_QUANTILE,
            control_noise: DEFAULT_CONTROL_NOISE,
            snapshots: false,
            out: PathBuf::from("cend-out"),
            svd: SvdSection::default(),
            sgns: SgnsRunConfig::default(),
        }
    }
}

/// Flag values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<InjectionMode>,
    pub rates: Option<Vec<f64>>,
    pub model: Option<ModelTag>,
    pub category: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub threshold: Option<ThresholdKind>,
    pub fixed_k: Option<f64>,
    pub snapshots: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid run configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(p) = o.corpus {
            self.corpus.path = Some(p);
        }
        if let Some(p) = o.gold {
            self.gold = Some(p);
        }
        if let Some(p) = o.out {
            self.out = p;
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(r) = o.rates {
            self.rates = r;
        }
        if let Some(m) = o.model {
            self.model = m;
        }
        if let Some(c) = o.category {
            self.category = c;
        }
        if let Some(s) = o.seeds {
            self.seeds = s;
        }
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(d) = o.dim {
            self.dim = d;
        }
        if let Some(t) = o.threshold {
            self.threshold = t;
        }
        if let Some(k) = o.fixed_k {
            self.fixed_k = Some(k);
            self.threshold = ThresholdKind::Fixed;
        }
        self.snapshots |= o.snapshots;
    }

    /// Checks paths and numeric ranges before any work starts.
    pub fn validate(&self) -> Result<()> {
        for (what, path) in [
            ("corpus", &self.corpus.path),
            ("lemma table", &self.corpus.lemmas),
            ("gold standard", &self.gold),
        ] {
            if let Some(p) = path {
                ensure!(p.is_file(), "{what} file {} does not exist", p.display());
            }
        }
        if self.corpus.path.is_none() {
            self.corpus.synth.validate()?;
        }
        ensure!(self.corpus.vocab_cap >= 1, "corpus.vocab_cap must be at least 1");
        ensure!(self.corpus.n_slices != Some(0), "corpus.n_slices must be positive");
        ensure!(self.gold_size >= 1, "gold_size must be at least 1");
        ensure!(self.dim >= 1, "dim must be at least 1");
        ensure!(self.window_size >= 1, "window_size must be at least 1");
        ensure!(self.shift >= 1.0, "shift must be >= 1");
        ensure!(self.n >= 2, "n must be at least 2");
        ensure!(self.alpha > 0.0, "alpha must be positive");
        ensure!(!self.seeds.is_empty(), "at least one seed is required");
        ensure!(
            self.tfidf_quantile > 0.0 && self.tfidf_quantile < 1.0,
            "tfidf_quantile must lie in (0, 1)"
        );
        ensure!(
            (0.0..1.0).contains(&self.control_noise),
            "control_noise must lie in [0, 1)"
        );
        ensure!(
            [0.0, 0.5, 1.0].contains(&self.svd.exponent),
            "svd.exponent must be 0, 0.5 or 1"
        );
        if self.mode == InjectionMode::Logistic {
            ensure!(!self.rates.is_empty(), "logistic mode needs at least one rate");
            for r in &self.rates {
                ensure!(*r > 0.0 && r.is_finite(), "rates must be positive, got {r}");
            }
        }
        if self.threshold == ThresholdKind::Fixed && self.fixed_k.is_none() {
            bail!("threshold = \"fixed\" needs fixed_k");
        }
        Ok(())
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        match (self.threshold, self.fixed_k) {
            (ThresholdKind::Fixed, Some(k)) => ThresholdMode::Fixed { k },
            _ => ThresholdMode::Adaptive,
        }
    }

    pub fn embedding(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            model: self.model,
            dim: self.dim,
            window: self.window_size,
            shift: self.shift,
            exponent: self.svd.exponent,
            oversample: self.svd.oversample,
            power_iters: self.svd.power_iters,
            dense_cutoff: self.svd.dense_cutoff,
            sgns: self.sgns,
        }
    }

    /// Experiment settings for one rate (ignored in control mode).
    pub fn experiment(&self, rate: f64) -> ExperimentConfig {
        ExperimentConfig {
            category: self.category.clone(),
            mode: self.mode,
            rate,
            alpha: self.alpha,
            window: self.n,
            threshold: self.threshold_mode(),
            embedding: self.embedding(),
            seeds: self.seeds.clone(),
            embedding_seed: self.embedding_seed,
            tfidf_quantile: self.tfidf_quantile,
            control_noise: self.control_noise,
            keep_snapshots: self.snapshots,
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("bad list item {s:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.rates = vec![0.3, 1.0];
        cfg.fixed_k = Some(-0.65);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn nested_sections_and_typos() {
        let cfg = RunConfig::from_toml(
            "n = 3\nmode = \"control\"\n[corpus.synth]\nn_slices = 12\n[svd]\npower_iters = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.n, 3);
        assert_eq!(cfg.mode, InjectionMode::Control);
        assert_eq!(cfg.corpus.synth.n_slices, 12);
        assert_eq!(cfg.corpus.synth.vocab_size, 2000);
        assert_eq!(cfg.svd.power_iters, 2);
        assert!(RunConfig::from_toml("windw = 3").is_err());
    }

    #[test]
    fn flags_win() {
        let mut cfg = RunConfig::from_toml("n = 3\nseeds = [9]").unwrap();
        cfg.apply(Overrides {
            n: Some(5),
            fixed_k: Some(-0.5),
            ..Overrides::default()
        });
        assert_eq!(cfg.n, 5);
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.threshold_mode(), ThresholdMode::Fixed { k: -0.5 });
    }

    #[test]
    fn validation_catches_bad_values() {
        let ok = RunConfig::default();
        ok.validate().unwrap();
        let bad = [
            RunConfig { n: 1, ..ok.clone() },
            RunConfig { rates: vec![0.0], ..ok.clone() },
            RunConfig { threshold: ThresholdKind::Fixed, ..ok.clone() },
            RunConfig { seeds: vec![], ..ok.clone() },
            RunConfig { gold: Some("/no/such/gold.json".into()), ..ok.clone() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("0.3, 0.5,1.0").unwrap(), vec![0.3, 0.5, 1.0]);
        assert!(parse_list::<u64>("1,x").is_err());
    }
}
