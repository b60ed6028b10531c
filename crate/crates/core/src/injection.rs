//! Controlled re-introduction of a held-out category.
//!
//! A logistic schedule spreads the category's documents over the time slices
//! so that the cumulative injected volume follows `K / (1 + alpha e^{-rate t})`.
//! The control schedule instead introduces them in a noisy but roughly uniform
//! stream, which carries no emergence signal.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TimeSlicedCorpus};
use crate::error::{invalid, Result};

/// Half-width of the logistic time axis covered by the slice grid.
pub const T_HALF_SPAN: f64 = 10.0;

/// Default multiplicative noise of the control schedule.
pub const DEFAULT_CONTROL_NOISE: f64 = 0.5;

// Stream ids keep the noise draws and the document shuffle independent.
const NOISE_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticSchedule {
    pub k: f64,
    pub alpha: f64,
    pub rate: f64,
    pub n_slices: usize,
}

impl LogisticSchedule {
    pub fn new(k: f64, rate: f64, n_slices: usize) -> Result<Self> {
        Self::with_alpha(k, 1.0, rate, n_slices)
    }

    pub fn with_alpha(k: f64, alpha: f64, rate: f64, n_slices: usize) -> Result<Self> {
        if !(k > 0.0 && alpha > 0.0 && rate > 0.0) {
            return Err(invalid(format!(
                "logistic schedule needs K, alpha, rate > 0 (got {k}, {alpha}, {rate})"
            )));
        }
        if n_slices == 0 {
            return Err(invalid("logistic schedule needs at least one slice"));
        }
        Ok(LogisticSchedule { k, alpha, rate, n_slices })
    }

    /// Real-valued time of slice `i`: an even grid over `[-10, 10]`, so the
    /// midpoint of the corpus sits at `t = 0`.
    pub fn t_at(&self, i: usize) -> f64 {
        if self.n_slices == 1 {
            return 0.0;
        }
        -T_HALF_SPAN + 2.0 * T_HALF_SPAN * i as f64 / (self.n_slices - 1) as f64
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_slices).map(|i| self.t_at(i)).collect()
    }
}

pub fn logistic_volume(t: f64, schedule: &LogisticSchedule) -> f64 {
    schedule.k / (1.0 + schedule.alpha * (-schedule.rate * t).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub seed: u64,
    /// `None` for a control plan.
    pub rate: Option<f64>,
    pub per_slice_counts: Vec<usize>,
}

impl InjectionPlan {
    pub fn total(&self) -> usize {
        self.per_slice_counts.iter().sum()
    }

    /// The order in which category documents are dealt into the slices.
    pub fn shuffled_order(&self, n_docs: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n_docs).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(SHUFFLE_STREAM);
        order.shuffle(&mut rng);
        order
    }
}

/// `round(c_i) - round(c_{i-1})` over a non-decreasing cumulative series.
fn quantize_cumulative(cumulative: &[f64]) -> Vec<usize> {
    let mut prev = 0i64;
    cumulative
        .iter()
        .map(|&c| {
            let cur = (c.round() as i64).max(prev);
            let n = (cur - prev) as usize;
            prev = cur;
            n
        })
        .collect()
}

/// Cumulative targets for each slice. The logistic curve is scaled so the
/// final slice reaches exactly `n_docs`; the mass the curve would still owe
/// beyond the last grid point is spread proportionally instead of dumped into
/// one slice.
pub fn logistic_cumulative(schedule: &LogisticSchedule, n_docs: usize) -> Vec<f64> {
    let raw: Vec<f64> = schedule
        .t_grid()
        .into_iter()
        .map(|t| logistic_volume(t, schedule))
        .collect();
    let last = *raw.last().expect("schedule has slices");
    raw.into_iter().map(|v| v / last * n_docs as f64).collect()
}

pub fn plan_injection(category_docs: &[Document], schedule: &LogisticSchedule, rng_seed: u64) -> Result<InjectionPlan> {
    if category_docs.is_empty() {
        return Err(invalid("cannot plan an injection without documents"));
    }
    let cumulative = logistic_cumulative(schedule, category_docs.len());
    Ok(InjectionPlan {
        seed: rng_seed,
        rate: Some(schedule.rate),
        per_slice_counts: quantize_cumulative(&cumulative),
    })
}

pub fn plan_control(category_docs: &[Document], n_slices: usize, rng_seed: u64, noise_level: f64) -> Result<InjectionPlan> {
    if !(0.0..1.0).contains(&noise_level) {
        return Err(invalid(format!("noise_level must lie in [0, 1), got {noise_level}")));
    }
    if n_slices == 0 {
        return Err(invalid("control plan needs at least one slice"));
    }
    let total = category_docs.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(NOISE_STREAM);
    let weights: Vec<f64> = (0..n_slices)
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            1.0 + noise_level * u
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let cumulative: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc / sum * total
        })
        .collect();
    Ok(InjectionPlan {
        seed: rng_seed,
        rate: None,
        per_slice_counts: quantize_cumulative(&cumulative),
    })
}

/// Appends the planned category documents to the base corpus slices, with
/// their `time_index` rewritten to the slice they land in.
pub fn apply_plan(base: &TimeSlicedCorpus, plan: &InjectionPlan, category_docs: &[Document]) -> Result<TimeSlicedCorpus> {
    if plan.per_slice_counts.len() != base.n_slices() {
        return Err(invalid(format!(
            "plan covers {} slices, corpus has {}",
            plan.per_slice_counts.len(),
            base.n_slices()
        )));
    }
    if plan.total() > category_docs.len() {
        return Err(invalid(format!(
            "plan injects {} documents but only {} are available",
            plan.total(),
            category_docs.len()
        )));
    }
    if let Some(first) = category_docs.first() {
        if base.documents().any(|d| d.category == first.category) {
            return Err(invalid(format!(
                "base corpus already contains category {:?}",
                first.category
            )));
        }
    }

    let order = plan.shuffled_order(category_docs.len());
    let mut next = order.into_iter();
    let mut out = base.clone();
    for (t, &count) in plan.per_slice_counts.iter().enumerate() {
        for idx in next.by_ref().take(count) {
            let mut doc = category_docs[idx].clone();
            doc.time_index = t;
            out.slices[t].push(doc);
        }
    }
    Ok(out)
}
