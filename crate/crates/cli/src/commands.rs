use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use cend_core::corpus::{build_vocabulary, read_jsonl, read_lemma_table, slice_by_time, write_jsonl};
use cend_core::detector::{full_span_correlation, read_trajectories_csv, write_alerts_csv, write_trajectories_csv};
use cend_core::embedding::write_snapshot;
use cend_core::evaluation::{run_experiment, ExperimentData, ExperimentOutcome, InjectionMode};
use cend_core::gold::train_nb;
use cend_core::synth::{generate, SynthSpec};
use cend_core::{Document, EvalReport, GoldStandard};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub n_slices: usize,
    /// Input file hash, or `None` for a generated corpus.
    pub sha256: Option<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_corpus(cfg: &RunConfig) -> Result<LoadedCorpus> {
    let Some(path) = &cfg.corpus.path else {
        let spec = cfg.corpus.synth;
        return Ok(LoadedCorpus {
            documents: generate(&spec)?.documents,
            n_slices: spec.n_slices,
            sha256: None,
        });
    };
    let lemmas = match &cfg.corpus.lemmas {
        Some(p) => Some(read_lemma_table(BufReader::new(File::open(p)?)).with_context(|| format!("lemma table {}", p.display()))?),
        None => None,
    };
    let file = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    let documents = read_jsonl(BufReader::new(file), lemmas.as_ref()).with_context(|| format!("reading corpus {}", path.display()))?;
    ensure!(!documents.is_empty(), "corpus {} has no documents", path.display());
    let needed = documents.iter().map(|d| d.time_index).max().unwrap_or(0) + 1;
    Ok(LoadedCorpus {
        documents,
        n_slices: cfg.corpus.n_slices.unwrap_or(needed),
        sha256: Some(sha256_file(path)?),
    })
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    create_parent(path)?;
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

/// Writes a synthetic corpus as JSONL and optionally the true lexical fields.
pub fn cmd_synth(spec: &SynthSpec, out: &Path, fields: Option<&Path>) -> Result<usize> {
    let corpus = generate(spec)?;
    write_file(out, |w| Ok(write_jsonl(w, &corpus.documents)?))?;
    if let Some(p) = fields {
        write_json(p, &corpus.lexical_fields)?;
    }
    Ok(corpus.documents.len())
}

fn build_gold(cfg: &RunConfig, corpus: &LoadedCorpus) -> Result<GoldStandard> {
    let vocab = build_vocabulary(&corpus.documents, cfg.corpus.vocab_cap)?;
    let sliced = slice_by_time(corpus.documents.clone(), corpus.n_slices, vocab)?;
    Ok(GoldStandard::from_model(&train_nb(&sliced)?, cfg.gold_size)?)
}

/// Trains the Naive Bayes model on the whole corpus and writes the top words
/// of every category as JSON.
pub fn cmd_gold(cfg: &RunConfig, out: &Path) -> Result<GoldStandard> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let gold = build_gold(cfg, &corpus)?;
    write_json(out, &gold)?;
    Ok(gold)
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub config: RunConfig,
    pub corpus: String,
    pub corpus_sha256: Option<String>,
    pub gold_source: String,
    pub seeds: Vec<u64>,
    pub embedding_seed: u64,
    pub files: Vec<ManifestFile>,
}

/// One executed experiment and where its report went.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub dir: PathBuf,
    pub report: EvalReport,
}

fn label_for(mode: InjectionMode, rate: f64) -> String {
    match mode {
        InjectionMode::Control => "control".into(),
        InjectionMode::Logistic => format!("rate-{rate}"),
    }
}

fn write_outcome(dir: &Path, outcome: &ExperimentOutcome, vocab_words: &[String]) -> Result<()> {
    write_json(&dir.join("report.json"), &outcome.report)?;
    for art in &outcome.artifacts {
        let s = art.seed;
        write_file(&dir.join(format!("alerts_seed{s}.csv")), |w| Ok(write_alerts_csv(w, &art.detection.alerts)?))?;
        write_file(&dir.join(format!("tfidf_alerts_seed{s}.csv")), |w| Ok(write_alerts_csv(w, &art.tfidf_alerts)?))?;
        write_file(&dir.join(format!("trajectories_seed{s}.csv")), |w| Ok(write_trajectories_csv(w, &art.trajectories)?))?;
        write_json(&dir.join(format!("plan_seed{s}.json")), &art.plan)?;
        write_file(&dir.join(format!("thresholds_seed{s}.csv")), |w| {
            writeln!(w, "time,threshold,n_valid")?;
            for st in &art.detection.thresholds {
                let k = st.threshold.map(|k| k.to_string()).unwrap_or_default();
                writeln!(w, "{},{k},{}", st.time, st.n_valid)?;
            }
            Ok(())
        })?;
        if let Some(run) = &art.embedding {
            let snap_dir = dir.join(format!("snapshots_seed{s}"));
            for snap in &run.snapshots {
                let p = snap_dir.join(format!("t{:03}.snap", snap.time_index));
                write_file(&p, |w| Ok(write_snapshot(w, snap)?))?;
            }
            write_file(&snap_dir.join("vocab.txt"), |w| {
                for word in vocab_words {
                    writeln!(w, "{word}")?;
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}

fn write_tables(out: &Path, results: &[RunResult]) -> Result<()> {
    write_file(&out.join("summary.csv"), |w| {
        writeln!(w, "label,method,precision,recall,f_measure,auc")?;
        for r in results {
            let rep = &r.report;
            writeln!(
                w,
                "{},cend-{},{},{},{},{}",
                r.label, rep.config.model, rep.precision, rep.recall, rep.f_measure, rep.auc
            )?;
            writeln!(
                w,
                "{},tfidf,{},{},{},{}",
                r.label, rep.tfidf.precision, rep.tfidf.recall, rep.tfidf.f_measure, rep.tfidf_auc
            )?;
        }
        Ok(())
    })?;
    let rated: Vec<&RunResult> = results.iter().filter(|r| r.report.config.rate.is_some()).collect();
    if !rated.is_empty() {
        write_file(&out.join("rates.csv"), |w| {
            writeln!(w, "rate,cend_f,tfidf_f,cend_auc")?;
            for r in rated {
                let rep = &r.report;
                writeln!(
                    w,
                    "{},{},{},{}",
                    rep.config.rate.unwrap_or_default(),
                    rep.f_measure,
                    rep.tfidf.f_measure,
                    rep.auc
                )?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestFile>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if p.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(ManifestFile {
                path: p.strip_prefix(root)?.to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(&p)?,
                bytes: e.metadata()?.len(),
            });
        }
    }
    Ok(())
}

/// Runs the configured experiments (one per rate, or the control group) and
/// writes reports, alert tables, trajectories, plans, summary tables and a
/// hashed manifest under `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let vocab = build_vocabulary(&corpus.documents, cfg.corpus.vocab_cap)?;
    let (gold, gold_source) = match &cfg.gold {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening gold standard {}", p.display()))?;
            let gold: GoldStandard = serde_json::from_reader(BufReader::new(file))
                .with_context(|| format!("parsing gold standard {}", p.display()))?;
            (gold, p.display().to_string())
        }
        None => (build_gold(cfg, &corpus)?, "built".to_string()),
    };
    if gold.words(&cfg.category).is_none() {
        bail!("category {:?} is not in the gold standard", cfg.category);
    }
    let corpus_label = cfg
        .corpus
        .path
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "synthetic".into());
    let corpus_sha = corpus.sha256.clone();
    let data = ExperimentData {
        documents: corpus.documents,
        n_slices: corpus.n_slices,
        vocab,
        gold,
    };

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_json(&cfg.out.join("gold.json"), &data.gold)?;
    let rates: Vec<f64> = match cfg.mode {
        InjectionMode::Control => vec![cfg.rates.first().copied().unwrap_or(0.5)],
        InjectionMode::Logistic => cfg.rates.clone(),
    };
    let mut results = Vec::new();
    for rate in rates {
        let label = label_for(cfg.mode, rate);
        log::info!("running {label} over {} seeds", cfg.seeds.len());
        let outcome = run_experiment(&data, &cfg.experiment(rate)).with_context(|| format!("experiment {label}"))?;
        let dir = cfg.out.join(&label);
        write_outcome(&dir, &outcome, data.vocab.words())?;
        results.push(RunResult {
            label,
            dir,
            report: outcome.report,
        });
    }
    write_tables(&cfg.out, &results)?;

    let mut files = Vec::new();
    collect_files(&cfg.out, &cfg.out, &mut files)?;
    let manifest = Manifest {
        tool: format!("cend {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        corpus: corpus_label,
        corpus_sha256: corpus_sha,
        gold_source,
        seeds: cfg.seeds.clone(),
        embedding_seed: cfg.embedding_seed,
        files,
    };
    write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(results)
}

#[derive(Debug, Clone, Default)]
pub struct PlotSummary {
    pub written: Vec<PathBuf>,
    pub skipped_words: Vec<String>,
}

const HIST_BINS: usize = 20;

fn histogram(values: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HIST_BINS];
    for &v in values {
        let b = (((v + 1.0) / 2.0) * HIST_BINS as f64).floor() as usize;
        bins[b.min(HIST_BINS - 1)] += 1;
    }
    bins
}

/// Emits plot-ready CSV from a finished run directory: the whole-span
/// correlation of every word split into gold and other words, a histogram of
/// both, and the frequency / movement series of the requested words.
pub fn cmd_plotdata(run: &Path, words: &[String], seed: Option<u64>) -> Result<PlotSummary> {
    ensure!(run.is_dir(), "run directory {} does not exist", run.display());
    let gold_path = run.join("gold.json");
    ensure!(gold_path.is_file(), "{} holds no completed run (gold.json missing)", run.display());
    let gold: GoldStandard = serde_json::from_reader(BufReader::new(File::open(&gold_path)?))
        .with_context(|| format!("parsing {}", gold_path.display()))?;

    let mut label_dirs: Vec<PathBuf> = fs::read_dir(run)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("report.json").is_file())
        .collect();
    label_dirs.sort();
    ensure!(!label_dirs.is_empty(), "{} contains no experiment reports", run.display());

    let mut summary = PlotSummary::default();
    let mut skipped = BTreeSet::new();
    for dir in label_dirs {
        let report: EvalReport = serde_json::from_reader(BufReader::new(File::open(dir.join("report.json"))?))
            .with_context(|| format!("parsing {}", dir.join("report.json").display()))?;
        let seed = seed.or_else(|| report.config.seeds.first().copied()).context("report lists no seeds")?;
        let traj_path = dir.join(format!("trajectories_seed{seed}.csv"));
        ensure!(traj_path.is_file(), "missing {}", traj_path.display());
        let traj = read_trajectories_csv(File::open(&traj_path)?).with_context(|| format!("reading {}", traj_path.display()))?;
        let gold_words: BTreeSet<&str> = gold
            .words(&report.config.category)
            .with_context(|| format!("category {:?} missing from gold.json", report.config.category))?
            .into_iter()
            .collect();
        let plot_dir = dir.join("plot");

        let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let corr_path = plot_dir.join(format!("correlation_seed{seed}.csv"));
        write_file(&corr_path, |w| {
            writeln!(w, "word,rho,group")?;
            for (i, word) in traj.words.iter().enumerate() {
                let Some(c) = full_span_correlation(&traj, i).filter(|c| c.valid) else {
                    continue;
                };
                let group = if gold_words.contains(word.as_str()) { "gold" } else { "other" };
                by_group.entry(group).or_default().push(c.rho);
                writeln!(w, "{word},{},{group}", c.rho)?;
            }
            Ok(())
        })?;
        let hist_path = plot_dir.join(format!("correlation_hist_seed{seed}.csv"));
        let empty = Vec::new();
        let hg = histogram(by_group.get("gold").unwrap_or(&empty));
        let ho = histogram(by_group.get("other").unwrap_or(&empty));
        write_file(&hist_path, |w| {
            writeln!(w, "bin_lo,bin_hi,gold,other")?;
            for b in 0..HIST_BINS {
                let lo = -1.0 + 2.0 * b as f64 / HIST_BINS as f64;
                let hi = lo + 2.0 / HIST_BINS as f64;
                writeln!(w, "{lo},{hi},{},{}", hg[b], ho[b])?;
            }
            Ok(())
        })?;

        let injected = report
            .runs
            .iter()
            .find(|r| r.seed == seed)
            .map(|r| r.injected_per_slice.clone())
            .unwrap_or_default();
        let series_path = plot_dir.join(format!("series_seed{seed}.csv"));
        write_file(&series_path, |w| {
            writeln!(w, "word,time,freq,movement,injected_docs")?;
            for word in words {
                let Some(i) = traj.words.iter().position(|x| x == word) else {
                    skipped.insert(word.clone());
                    continue;
                };
                for j in 0..traj.n_times() {
                    let t = traj.start_time + j;
                    let mv = if j == 0 { String::new() } else { traj.movement[i][j - 1].to_string() };
                    let inj = injected.get(t).map(|c| c.to_string()).unwrap_or_default();
                    writeln!(w, "{word},{t},{},{mv},{inj}", traj.freq[i][j])?;
                }
            }
            Ok(())
        })?;
        summary.written.extend([corr_path, hist_path, series_path]);
    }
    let skipped_path = run.join("skipped_words.txt");
    write_file(&skipped_path, |w| {
        for word in &skipped {
            writeln!(w, "{word}")?;
        }
        Ok(())
    })?;
    summary.written.push(skipped_path);
    summary.skipped_words = skipped.into_iter().collect();
    Ok(summary)
}
