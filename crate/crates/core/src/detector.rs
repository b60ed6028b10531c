//! Frequency/movement trajectories, windowed Spearman correlation and alerting.
//!
//! Time convention: the movement at time `t` is the distance between the
//! snapshots of `t - 1` and `t`. A window ending at `t` of size `n` pairs the
//! frequency and movement values at the `n + 1` times `t - n ..= t`, so the
//! first window ends at `start + 1 + n`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::TimeSlicedCorpus;
use crate::embedding::{EmbeddingRun, EmbeddingSnapshot};
use crate::error::{invalid, Error, Result};

/// Two-sided 95% normal quantile used by the adaptive threshold.
pub const Z_975: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThresholdMode {
    Adaptive,
    Fixed { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlertMode {
    Fixed,
    Adaptive,
    Tfidf,
}

impl fmt::Display for AlertMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlertMode::Fixed => "fixed",
            AlertMode::Adaptive => "adaptive",
            AlertMode::Tfidf => "tfidf",
        })
    }
}

impl std::str::FromStr for AlertMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(AlertMode::Fixed),
            "adaptive" => Ok(AlertMode::Adaptive),
            "tfidf" => Ok(AlertMode::Tfidf),
            other => Err(invalid(format!("unknown alert mode {other:?}"))),
        }
    }
}

/// A detection event. For TF-IDF alerts `rho` carries the tf-idf score and
/// `threshold` the slice quantile it exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub word: String,
    pub time: usize,
    pub rho: f64,
    pub threshold: f64,
    pub mode: AlertMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    pub words: Vec<String>,
    /// Absolute time of `freq[w][0]`.
    pub start_time: usize,
    /// Relative frequency per word and time.
    pub freq: Vec<Vec<f64>>,
    /// `movement[w][j]` is the movement at time `start_time + j + 1`.
    pub movement: Vec<Vec<f64>>,
}

impl TrajectorySeries {
    pub fn n_times(&self) -> usize {
        self.freq.first().map_or(0, Vec::len)
    }

    pub fn end_time(&self) -> usize {
        self.start_time + self.n_times()
    }

    /// Frequency and movement aligned on times `start_time + 1 ..`.
    fn aligned(&self, w: usize) -> (&[f64], &[f64]) {
        (&self.freq[w][1..], &self.movement[w])
    }
}

/// Share of slice `t`'s tokens taken by each vocabulary word, `V × T`.
pub fn relative_frequencies(corpus: &TimeSlicedCorpus) -> Vec<Vec<f64>> {
    let v = corpus.vocab.len();
    let t_len = corpus.n_slices();
    let mut freq = vec![vec![0.0; t_len]; v];
    for (t, slice) in corpus.slices.iter().enumerate() {
        let mut total = 0usize;
        let mut counts = vec![0usize; v];
        for doc in slice {
            total += doc.tokens.len();
            for tok in &doc.tokens {
                if let Some(w) = corpus.vocab.id(tok) {
                    counts[w] += 1;
                }
            }
        }
        if total > 0 {
            for (w, c) in counts.into_iter().enumerate() {
                freq[w][t] = c as f64 / total as f64;
            }
        }
    }
    freq
}

pub fn movement(v_t: &[f64], v_prev: &[f64]) -> Result<f64> {
    if v_t.len() != v_prev.len() {
        return Err(Error::DimensionMismatch {
            expected: v_prev.len(),
            actual: v_t.len(),
        });
    }
    Ok(v_t.iter().zip(v_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

fn snapshot_movements(prev: &EmbeddingSnapshot, cur: &EmbeddingSnapshot) -> Result<Vec<f64>> {
    if prev.vectors.shape() != cur.vectors.shape() {
        return Err(Error::DimensionMismatch {
            expected: prev.dim(),
            actual: cur.dim(),
        });
    }
    let diff = &cur.vectors - &prev.vectors;
    Ok(diff.row_iter().map(|r| r.norm()).collect())
}

pub fn build_trajectories(corpus: &TimeSlicedCorpus, run: &EmbeddingRun) -> Result<TrajectorySeries> {
    let start = run.start_time;
    let end = start + run.snapshots.len();
    if end > corpus.n_slices() {
        return Err(invalid("more snapshots than corpus slices"));
    }
    let v = corpus.vocab.len();
    if let Some(s) = run.snapshots.iter().find(|s| s.vocab_size() != v) {
        return Err(Error::DimensionMismatch {
            expected: v,
            actual: s.vocab_size(),
        });
    }
    let freq: Vec<Vec<f64>> = relative_frequencies(corpus)
        .into_iter()
        .map(|row| row[start..end].to_vec())
        .collect();
    let mut movement = vec![Vec::with_capacity(run.snapshots.len().saturating_sub(1)); v];
    for pair in run.snapshots.windows(2) {
        for (w, d) in snapshot_movements(&pair[0], &pair[1])?.into_iter().enumerate() {
            movement[w].push(d);
        }
    }
    Ok(TrajectorySeries {
        words: corpus.vocab.words().to_vec(),
        start_time: start,
        freq,
        movement,
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCorrelation {
    pub rho: f64,
    /// False when either window has no rank variance; `rho` is then 0.
    pub valid: bool,
}

/// Spearman correlation over the time-aligned points `t - n ..= t`.
/// `None` when the window does not fit in the series.
pub fn spearman_window(freq: &[f64], movement: &[f64], t: usize, n: usize) -> Option<WindowCorrelation> {
    if t < n || t >= freq.len() || t >= movement.len() {
        return None;
    }
    let rf = average_ranks(&freq[t - n..=t]);
    let rd = average_ranks(&movement[t - n..=t]);
    let mean = (n as f64 + 2.0) / 2.0;
    let (mut cov, mut vf, mut vd) = (0.0, 0.0, 0.0);
    for (a, b) in rf.iter().zip(&rd) {
        let (da, db) = (a - mean, b - mean);
        cov += da * db;
        vf += da * da;
        vd += db * db;
    }
    if vf == 0.0 || vd == 0.0 {
        return Some(WindowCorrelation { rho: 0.0, valid: false });
    }
    Some(WindowCorrelation {
        rho: (cov / (vf * vd).sqrt()).clamp(-1.0, 1.0),
        valid: true,
    })
}

/// `mean − 1.96 · sd` over the given correlations (population sd).
pub fn adaptive_threshold(rhos: &[f64]) -> Option<f64> {
    if rhos.len() < 2 {
        return None;
    }
    let n = rhos.len() as f64;
    // shifted by the first value so identical inputs give that value exactly
    let mean = rhos[0] + rhos.iter().map(|r| r - rhos[0]).sum::<f64>() / n;
    let var = rhos.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Some(mean - Z_975 * var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub word: usize,
    pub time: usize,
    pub rho: f64,
    pub window: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepThreshold {
    pub time: usize,
    pub threshold: Option<f64>,
    pub n_valid: usize,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub alerts: Vec<Alert>,
    pub thresholds: Vec<StepThreshold>,
    pub records: Vec<CorrelationRecord>,
}

impl Detection {
    /// Every alert must sit strictly below the threshold of its step.
    pub fn audit(&self) -> bool {
        self.alerts.iter().all(|a| a.rho < a.threshold)
    }
}

/// Absolute times at which a window of size `n` is available.
pub fn window_times(traj: &TrajectorySeries, n: usize) -> std::ops::Range<usize> {
    let first = traj.start_time + 1 + n;
    first..traj.end_time().max(first)
}

pub fn records_at(traj: &TrajectorySeries, t: usize, n: usize) -> Vec<CorrelationRecord> {
    let offset = traj.start_time + 1;
    (0..traj.words.len())
        .into_par_iter()
        .filter_map(|w| {
            let (f, d) = traj.aligned(w);
            let c = spearman_window(f, d, t.checked_sub(offset)?, n)?;
            Some(CorrelationRecord {
                word: w,
                time: t,
                rho: c.rho,
                window: n,
                valid: c.valid,
            })
        })
        .collect()
}

pub fn detect(traj: &TrajectorySeries, n: usize, mode: ThresholdMode) -> Result<Detection> {
    if n < 2 {
        return Err(invalid(format!("window size must be at least 2, got {n}")));
    }
    let mut alerts = Vec::new();
    let mut thresholds = Vec::new();
    let mut records = Vec::new();
    for t in window_times(traj, n) {
        let step = records_at(traj, t, n);
        let valid: Vec<&CorrelationRecord> = step.iter().filter(|r| r.valid).collect();
        let (k, alert_mode) = match mode {
            ThresholdMode::Adaptive => {
                let rhos: Vec<f64> = valid.iter().map(|r| r.rho).collect();
                (adaptive_threshold(&rhos), AlertMode::Adaptive)
            }
            ThresholdMode::Fixed { k } => (Some(k), AlertMode::Fixed),
        };
        thresholds.push(StepThreshold {
            time: t,
            threshold: k,
            n_valid: valid.len(),
        });
        if let Some(k) = k {
            let mut step_alerts: Vec<Alert> = valid
                .iter()
                .filter(|r| r.rho < k)
                .map(|r| Alert {
                    word: traj.words[r.word].clone(),
                    time: t,
                    rho: r.rho,
                    threshold: k,
                    mode: alert_mode,
                })
                .collect();
            step_alerts.sort_by(|a, b| a.word.cmp(&b.word));
            alerts.extend(step_alerts);
        }
        records.extend(step);
    }
    Ok(Detection {
        alerts,
        thresholds,
        records,
    })
}

/// Whole-span correlation of one word (window covering every aligned point).
pub fn full_span_correlation(traj: &TrajectorySeries, w: usize) -> Option<WindowCorrelation> {
    let (f, d) = traj.aligned(w);
    let len = d.len();
    if len < 2 {
        return None;
    }
    spearman_window(f, d, len - 1, len - 1)
}

/// CSV `word,time,rho,threshold,mode`.
pub fn write_alerts_csv<W: Write>(writer: W, alerts: &[Alert]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["word", "time", "rho", "threshold", "mode"])?;
    for a in alerts {
        out.write_record([
            a.word.clone(),
            a.time.to_string(),
            a.rho.to_string(),
            a.threshold.to_string(),
            a.mode.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_alerts_csv<R: std::io::Read>(reader: R) -> Result<Vec<Alert>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut alerts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| Error::Parse {
            line: i + 2,
            message: format!("bad {what}"),
        };
        if rec.len() != 5 {
            return Err(parse_err("record width"));
        }
        alerts.push(Alert {
            word: rec[0].to_string(),
            time: rec[1].parse().map_err(|_| parse_err("time"))?,
            rho: rec[2].parse().map_err(|_| parse_err("rho"))?,
            threshold: rec[3].parse().map_err(|_| parse_err("threshold"))?,
            mode: rec[4].parse()?,
        });
    }
    Ok(alerts)
}

/// CSV `word,time,freq,movement`; movement is empty at the first time.
pub fn write_trajectories_csv<W: Write>(writer: W, traj: &TrajectorySeries) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["word", "time", "freq", "movement"])?;
    for (w, word) in traj.words.iter().enumerate() {
        for j in 0..traj.n_times() {
            let mv = if j == 0 {
                String::new()
            } else {
                traj.movement[w][j - 1].to_string()
            };
            out.write_record([
                word.clone(),
                (traj.start_time + j).to_string(),
                traj.freq[w][j].to_string(),
                mv,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a trajectory dump back. Words appear in first-seen order.
pub fn read_trajectories_csv<R: std::io::Read>(reader: R) -> Result<TrajectorySeries> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut words: Vec<String> = Vec::new();
    let mut freq: Vec<Vec<f64>> = Vec::new();
    let mut movement: Vec<Vec<f64>> = Vec::new();
    let mut start_time = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| Error::Parse {
            line: i + 2,
            message: format!("bad {what}"),
        };
        if rec.len() != 4 {
            return Err(parse_err("record width"));
        }
        let time: usize = rec[1].parse().map_err(|_| parse_err("time"))?;
        let start = *start_time.get_or_insert(time);
        if words.last().map(String::as_str) != Some(&rec[0]) {
            if time != start {
                return Err(parse_err("series start"));
            }
            words.push(rec[0].to_string());
            freq.push(Vec::new());
            movement.push(Vec::new());
        }
        let w = words.len() - 1;
        freq[w].push(rec[2].parse().map_err(|_| parse_err("freq"))?);
        if !rec[3].is_empty() {
            movement[w].push(rec[3].parse().map_err(|_| parse_err("movement"))?);
        }
    }
    Ok(TrajectorySeries {
        words,
        start_time: start_time.unwrap_or(0),
        freq,
        movement,
    })
}
