//! Experiment runner: many random hard MDPs times many algorithm configs.
//!
//! Every (MDP, algorithm) task is independent and draws from streams keyed by
//! its MDP seed, so output is identical for any worker count.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_mdp::{make_hard_linear_mdp, GapOracle, LinearMdp};
use crate::registry::{AlgorithmSpec, SolverRegistry, SolverRun};
use crate::rng::{combine, tag, Streams};

pub const RECORD_HEADER: [&str; 5] = [
    "mdp_seed",
    "algorithm",
    "iteration",
    "samples_used",
    "normalized_gap",
];
pub const SUMMARY_HEADER: [&str; 5] = ["algorithm", "samples_used", "mean_gap", "stderr_gap", "n"];

/// Environment variable for the worker pool size.
pub const WORKERS_ENV: &str = "MDVI_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpParams {
    pub num_actions: usize,
    pub dim: usize,
    pub gamma: f64,
}

impl Default for MdpParams {
    fn default() -> Self {
        Self {
            num_actions: 30,
            dim: 4,
            gamma: 0.9,
        }
    }
}

impl MdpParams {
    pub fn build(&self, seed: u64) -> Result<LinearMdp> {
        make_hard_linear_mdp(self.num_actions, self.dim, self.gamma, seed)
    }
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_mdps: usize,
    #[serde(default)]
    pub mdp: MdpParams,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "ten")]
    pub eval_every: usize,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_config(path)?)
    }

    pub fn validate(&self, registry: &SolverRegistry) -> Result<()> {
        if self.num_mdps == 0 {
            return Err(Error::invalid("num_mdps must be >= 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("eval_every must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        let mut labels = HashSet::new();
        for spec in &self.algorithms {
            spec.validate()?;
            registry.get(&spec.kind)?;
            if !labels.insert(spec.label.as_str()) {
                return Err(Error::invalid(format!("duplicate label {:?}", spec.label)));
            }
        }
        Ok(())
    }

    /// Seed of the `index`-th MDP.
    pub fn mdp_seed(&self, index: usize) -> u64 {
        mdp_seed(self.master_seed, index)
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))
}

pub fn mdp_seed(master_seed: u64, index: usize) -> u64 {
    combine(combine(master_seed, tag::MDP_SEED), index as u64)
}

/// Solver streams for one MDP; shared by every algorithm on that MDP.
pub fn solver_streams(mdp_seed: u64) -> Streams {
    Streams::new(mdp_seed).child(tag::SOLVER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub mdp_seed: u64,
    #[serde(rename = "algorithm")]
    pub algorithm_label: String,
    pub iteration: usize,
    pub samples_used: u64,
    /// NaN marks a failed run.
    pub normalized_gap: f64,
}

impl ExperimentRecord {
    pub fn is_failure(&self) -> bool {
        self.normalized_gap.is_nan()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    /// `(mdp_seed, label, message)` for every failed task.
    pub failures: Vec<(u64, String, String)>,
}

/// Worker count from `MDVI_WORKERS`, else the number of available cores.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Iterations at which the gap is evaluated.
pub fn evaluation_points(run: &SolverRun, eval_every: usize) -> Vec<usize> {
    let last = run.last().iteration;
    let mut points: Vec<usize> = run
        .checkpoints
        .iter()
        .map(|c| c.iteration)
        .filter(|&k| k % eval_every == 0 || k == last || Some(k) == run.phase_boundary)
        .collect();
    points.dedup();
    points
}

/// Gap records at the evaluation points of `run`.
fn gap_trace(
    mdp: &LinearMdp,
    run: &SolverRun,
    seed: u64,
    label: &str,
    eval_every: usize,
) -> Result<Vec<ExperimentRecord>> {
    let oracle = GapOracle::new(mdp)?;
    let points: HashSet<usize> = evaluation_points(run, eval_every).into_iter().collect();
    run.checkpoints
        .iter()
        .filter(|c| points.contains(&c.iteration))
        .map(|c| {
            Ok(ExperimentRecord {
                mdp_seed: seed,
                algorithm_label: label.to_string(),
                iteration: c.iteration,
                samples_used: c.samples_used,
                normalized_gap: oracle.gap(mdp, &c.policy)?,
            })
        })
        .collect()
}

fn run_task(
    config: &ExperimentConfig,
    registry: &SolverRegistry,
    seed: u64,
    spec: &AlgorithmSpec,
) -> Result<Vec<ExperimentRecord>> {
    let mdp = config.mdp.build(seed)?;
    let run = registry
        .get(&spec.kind)?
        .run(&mdp, spec, &solver_streams(seed))?;
    gap_trace(&mdp, &run, seed, &spec.label, config.eval_every)
}

/// Runs every algorithm on every MDP with `workers` threads.
///
/// A failing task contributes one record with a NaN gap and an entry in
/// `failures`; other tasks are unaffected.
pub fn run_experiment(
    config: &ExperimentConfig,
    registry: &SolverRegistry,
    workers: usize,
) -> Result<ExperimentOutput> {
    config.validate(registry)?;
    let tasks: Vec<(u64, &AlgorithmSpec)> = (0..config.num_mdps)
        .flat_map(|i| config.algorithms.iter().map(move |a| (i, a)))
        .map(|(i, a)| (config.mdp_seed(i), a))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(seed, spec)| (seed, spec, run_task(config, registry, seed, spec)))
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (seed, spec, result) in results {
        match result {
            Ok(rows) => records.extend(rows),
            Err(e) => {
                records.push(ExperimentRecord {
                    mdp_seed: seed,
                    algorithm_label: spec.label.clone(),
                    iteration: 0,
                    samples_used: 0,
                    normalized_gap: f64::NAN,
                });
                failures.push((seed, spec.label.clone(), e.to_string()));
            }
        }
    }
    records.sort_by(|a, b| {
        (a.mdp_seed, &a.algorithm_label, a.iteration).cmp(&(
            b.mdp_seed,
            &b.algorithm_label,
            b.iteration,
        ))
    });
    Ok(ExperimentOutput { records, failures })
}

pub fn write_records<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.mdp_seed.to_string(),
            r.algorithm_label.clone(),
            r.iteration.to_string(),
            r.samples_used.to_string(),
            format!("{}", r.normalized_gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_HEADER {
        return Err(Error::invalid(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_err =
            |i: usize| Error::invalid(format!("bad {} {:?}", RECORD_HEADER[i], field(i)));
        out.push(ExperimentRecord {
            mdp_seed: field(0).parse().map_err(|_| parse_err(0))?,
            algorithm_label: field(1).to_string(),
            iteration: field(2).parse().map_err(|_| parse_err(2))?,
            samples_used: field(3).parse().map_err(|_| parse_err(3))?,
            normalized_gap: field(4).parse().map_err(|_| parse_err(4))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub samples_used: u64,
    pub mean_gap: f64,
    pub stderr_gap: f64,
    pub n: usize,
}

/// Sample mean and standard error (n - 1 denominator; zero for n = 1).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates records per (algorithm, iteration).
///
/// Runs of one algorithm share the iteration grid but their sample counts can
/// differ with the core-set size, so each row reports the rounded mean count.
/// Failed runs are excluded.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, usize), (Vec<f64>, u128)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_failure()) {
        let entry = groups
            .entry((r.algorithm_label.as_str(), r.iteration))
            .or_default();
        entry.0.push(r.normalized_gap);
        entry.1 += r.samples_used as u128;
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((label, _), (gaps, total))| {
            let n = gaps.len();
            let (mean_gap, stderr_gap) = mean_stderr(&gaps);
            SummaryRow {
                algorithm: label.to_string(),
                samples_used: ((total + n as u128 / 2) / n as u128) as u64,
                mean_gap,
                stderr_gap,
                n,
            }
        })
        .collect();
    rows.sort_by(|a, b| (&a.algorithm, a.samples_used).cmp(&(&b.algorithm, b.samples_used)));
    rows
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.samples_used.to_string(),
            format!("{:.12}", r.mean_gap),
            format!("{:.12}", r.stderr_gap),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Final gap of every successful run, keyed by label.
pub fn final_gaps(records: &[ExperimentRecord]) -> BTreeMap<String, Vec<f64>> {
    let mut last: BTreeMap<(&str, u64), &ExperimentRecord> = BTreeMap::new();
    for r in records {
        let slot = last
            .entry((r.algorithm_label.as_str(), r.mdp_seed))
            .or_insert(r);
        if r.iteration >= slot.iteration {
            *slot = r;
        }
    }
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((label, _), r) in last {
        if !r.is_failure() {
            out.entry(label.to_string())
                .or_default()
                .push(r.normalized_gap);
        }
    }
    out
}

/// One solver run on one hard MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub algorithm: String,
    #[serde(flatten)]
    pub params: SolveParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mdp: MdpParams,
    #[serde(default = "one")]
    pub eval_every: usize,
    /// Where to write the per-iteration CSV trace.
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
}

/// Algorithm parameters of a [`SolveConfig`]; same keys as [`AlgorithmSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    #[serde(flatten)]
    values: serde_json::Map<String, serde_json::Value>,
}

impl SolveConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_config(path)?)
    }

    pub fn spec(&self) -> Result<AlgorithmSpec> {
        let mut values = self.params.values.clone();
        values.insert("label".into(), self.algorithm.clone().into());
        values.insert("kind".into(), self.algorithm.clone().into());
        serde_json::from_value(serde_json::Value::Object(values))
            .map_err(|e| Error::invalid(format!("config: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub algorithm: String,
    pub seed: u64,
    pub iterations: usize,
    pub final_gap: f64,
    pub samples_used: u64,
    pub phase_boundary: Option<usize>,
    pub trace_path: Option<PathBuf>,
}

/// Runs one solver and evaluates its gap trace; the trace uses the
/// experiment record schema with `mdp_seed = seed`.
pub fn solve(
    config: &SolveConfig,
    registry: &SolverRegistry,
) -> Result<(SolveResult, Vec<ExperimentRecord>)> {
    if config.eval_every == 0 {
        return Err(Error::invalid("eval_every must be >= 1"));
    }
    let spec = config.spec()?;
    spec.validate()?;
    let solver = registry.get(&spec.kind)?;
    let mdp = config.mdp.build(config.seed)?;
    let run = solver.run(&mdp, &spec, &solver_streams(config.seed))?;
    let trace = gap_trace(&mdp, &run, config.seed, &spec.label, config.eval_every)?;
    let last = trace.last().expect("final checkpoint is always evaluated");
    let result = SolveResult {
        algorithm: spec.kind.clone(),
        seed: config.seed,
        iterations: last.iteration,
        final_gap: last.normalized_gap,
        samples_used: run.samples_used,
        phase_boundary: run.phase_boundary,
        trace_path: config.trace_path.clone(),
    };
    if let Some(path) = &config.trace_path {
        write_records(&trace, std::fs::File::create(path)?)?;
    }
    Ok((result, trace))
}
