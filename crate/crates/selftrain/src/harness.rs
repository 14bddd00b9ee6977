//! Experiment runner: seeded replications, error-rate evaluation, timing,
//! and five-number summaries of the per-replication errors.
//!
//! Replications run in parallel with independently derived child seeds
//! and are aggregated by replication index, so the per-replication errors
//! are identical regardless of thread count. Wall-clock timing covers the
//! algorithm run only, never generation or I/O.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::datasets::{
    child_seed, load_labeled_csv, seeded_rng, CsvOptions, GeneratorSpec, Label, LabeledSet,
    SplitSample,
};
use crate::engine::{run, RunConfig, Trace};
use crate::error::{Error, Result};
use crate::estimators::knn_classify;
use crate::geometry::PointSet;

/// How unclassified points enter the error rate. Acceptance-style
/// evaluation always counts them as wrong; `Skip` exists for diagnostics
/// of the classified subset only.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UnclassifiedPolicy {
    CountAsError,
    Skip,
}

/// Fraction of pool points whose assigned label differs from the hidden
/// label; unclassified points count as errors.
pub fn error_rate(trace: &Trace, hidden: &[Label]) -> Result<f64> {
    error_rate_with_policy(trace, hidden, UnclassifiedPolicy::CountAsError)
}

pub fn error_rate_with_policy(
    trace: &Trace,
    hidden: &[Label],
    policy: UnclassifiedPolicy,
) -> Result<f64> {
    if hidden.len() != trace.pool_len() {
        return Err(Error::InvalidInput(format!(
            "hidden labels ({}) do not match the pool size ({})",
            hidden.len(),
            trace.pool_len()
        )));
    }
    let wrong = trace
        .events
        .iter()
        .filter(|e| e.label != hidden[e.pool_index])
        .count();
    match policy {
        UnclassifiedPolicy::CountAsError => {
            Ok((wrong + trace.unclassified.len()) as f64 / trace.pool_len() as f64)
        }
        UnclassifiedPolicy::Skip => {
            let classified = trace.events.len();
            if classified == 0 {
                return Err(Error::InvalidInput("no classified points to score".into()));
            }
            Ok(wrong as f64 / classified as f64)
        }
    }
}

/// Where replication samples come from: a parametric generator, or a
/// fully labeled CSV from which each replication draws a fresh seed set
/// (so many points per class) and treats the rest as the pool.
#[derive(Clone, Debug)]
pub enum DataSource {
    Generator(GeneratorSpec),
    Csv(CsvSource),
}

#[derive(Clone, Debug)]
pub struct CsvSource {
    pub path: PathBuf,
    pub per_class: (usize, usize),
    pub header: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub run: RunConfig,
    pub replications: usize,
    /// Also score a k-NN baseline on the same replications.
    pub baseline_k: Option<usize>,
    pub master_seed: u64,
    /// Record wall-clock times. Off, every time is reported as zero so
    /// that serialized results are byte-comparable across runs.
    pub measure_time: bool,
}

/// Five-number summary plus the raw per-replication data behind it.
#[derive(Clone, Debug)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub per_rep_errors: Vec<f64>,
    pub per_rep_times: Vec<f64>,
}

impl Summary {
    pub fn from_reps(errors: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InvalidInput("summary needs at least one replication".into()));
        }
        let mut sorted = errors.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite error rates"));
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Ok(Self {
            min: sorted[0],
            q1: quantile_linear(&sorted, 0.25),
            median: quantile_linear(&sorted, 0.5),
            mean,
            q3: quantile_linear(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            per_rep_errors: errors,
            per_rep_times: times,
        })
    }

    pub fn times_mean_s(&self) -> f64 {
        if self.per_rep_times.is_empty() {
            0.0
        } else {
            self.per_rep_times.iter().sum::<f64>() / self.per_rep_times.len() as f64
        }
    }

    /// JSON object with the summary fields only.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "mean": self.mean,
            "q3": self.q3,
            "max": self.max,
            "reps": self.per_rep_errors.len(),
            "times_mean_s": self.times_mean_s(),
        })
    }
}

/// Quantile by linear interpolation between order statistics (the
/// convention is pinned; `sorted` must be ascending).
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// One replication's outcome.
#[derive(Clone, Debug)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub error: f64,
    pub time_s: f64,
    pub stalled_count: usize,
    pub baseline_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub algo: Summary,
    pub baseline: Option<Summary>,
    pub records: Vec<RepRecord>,
}

/// Per-replication CSV: `rep,seed,error,time_s,stalled_count`. With
/// `include_times` off the time column is written as zero, which makes
/// the bytes reproducible across runs and thread counts.
pub fn per_rep_csv(records: &[RepRecord], include_times: bool) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("rep,seed,error,time_s,stalled_count\n");
    for r in records {
        let t = if include_times { r.time_s } else { 0.0 };
        writeln!(out, "{},{},{},{:.6},{}", r.rep, r.seed, r.error, t, r.stalled_count)
            .expect("string write");
    }
    out
}

fn realize_csv(table: &LabeledSet, per_class: (usize, usize), seed: u64) -> Result<SplitSample> {
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (_, y)) in table.iter().enumerate() {
        by_class[y.as_u8() as usize].push(i);
    }
    let want = [per_class.0, per_class.1];
    for c in 0..2 {
        if by_class[c].len() < want[c] || want[c] == 0 {
            return Err(Error::InvalidInput(format!(
                "need {} seeds of class {c} but the table has {} rows of it",
                want[c],
                by_class[c].len()
            )));
        }
    }
    // partial Fisher-Yates per class
    let mut chosen = Vec::with_capacity(want[0] + want[1]);
    for c in 0..2 {
        let ids = &mut by_class[c];
        for k in 0..want[c] {
            let j = rng.gen_range(k..ids.len());
            ids.swap(k, j);
            chosen.push(ids[k]);
        }
        ids.truncate(want[c]);
    }
    let picked: std::collections::HashSet<usize> = chosen.iter().copied().collect();
    let seed_set = LabeledSet::new(
        chosen
            .iter()
            .map(|&i| {
                let (p, y) = table.get(i);
                (p.clone(), y)
            })
            .collect(),
    )?;
    let mut pool_pts = Vec::new();
    let mut hidden = Vec::new();
    for (i, (p, y)) in table.iter().enumerate() {
        if !picked.contains(&i) {
            pool_pts.push(p.clone());
            hidden.push(y);
        }
    }
    SplitSample::new(seed_set, PointSet::new(pool_pts)?, Some(hidden))
}

fn with_rep(index: usize, e: Error) -> Error {
    Error::InvalidInput(format!("replication {index}: {e}"))
}

/// Runs all replications (in parallel, keyed by replication index),
/// scores each against the hidden labels, and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.replications < 1 {
        return Err(Error::InvalidInput("replications must be >= 1".into()));
    }
    let table = match &spec.source {
        DataSource::Csv(c) => {
            Some(load_labeled_csv(&c.path, CsvOptions { header: c.header })?)
        }
        DataSource::Generator(_) => None,
    };
    let records: Vec<RepRecord> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| -> Result<RepRecord> {
            let seed = child_seed(spec.master_seed, rep as u64);
            let sample = match &spec.source {
                DataSource::Generator(g) => g.generate(seed).map_err(|e| with_rep(rep, e))?,
                DataSource::Csv(c) => realize_csv(table.as_ref().expect("loaded above"), c.per_class, seed)
                    .map_err(|e| with_rep(rep, e))?,
            };
            let hidden = sample.hidden_labels.clone().ok_or_else(|| {
                with_rep(rep, Error::InvalidInput("source provides no hidden labels".into()))
            })?;
            let t0 = Instant::now();
            let trace = run(&sample, &spec.run).map_err(|e| with_rep(rep, e))?;
            let time_s = if spec.measure_time { t0.elapsed().as_secs_f64() } else { 0.0 };
            let error = error_rate(&trace, &hidden).map_err(|e| with_rep(rep, e))?;
            let baseline_error = match spec.baseline_k {
                Some(k) => {
                    let labels = knn_classify(&sample.seed, &sample.pool, k)
                        .map_err(|e| with_rep(rep, e))?;
                    let wrong =
                        labels.iter().zip(&hidden).filter(|(a, b)| *a != *b).count();
                    Some(wrong as f64 / hidden.len() as f64)
                }
                None => None,
            };
            Ok(RepRecord {
                rep,
                seed,
                error,
                time_s,
                stalled_count: trace.stalled_count(),
                baseline_error,
            })
        })
        .collect::<Result<_>>()?;
    let algo = Summary::from_reps(
        records.iter().map(|r| r.error).collect(),
        records.iter().map(|r| r.time_s).collect(),
    )?;
    let baseline = match spec.baseline_k {
        Some(_) => Some(Summary::from_reps(
            records.iter().map(|r| r.baseline_error.expect("baseline ran")).collect(),
            vec![0.0; records.len()],
        )?),
        None => None,
    };
    Ok(ExperimentResult { algo, baseline, records })
}
