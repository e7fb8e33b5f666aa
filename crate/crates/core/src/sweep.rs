//! Repeated estimation runs over a grid of sample sizes and seeds.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{error_bound, us_irl_se, BoundInputs, GenerativeModel};
use crate::feasible::{polytope_h_rep, DEFAULT_TOL};
use crate::hausdorff::{hausdorff_distance, HausdorffMode, HausdorffOptions};
use crate::polytope::DEFAULT_ENUMERATION_CAP;
use crate::problem::IrlSeProblem;
use crate::seed::mix_seed;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "IRLSE_THREADS";

pub const CSV_HEADER: [&str; 8] = [
    "seed",
    "t",
    "total_queries",
    "hausdorff_estimate",
    "hausdorff_mode",
    "error_bound",
    "bound_valid",
    "wall_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub seed: u64,
    pub t: u64,
    pub total_queries: u64,
    pub hausdorff_estimate: f64,
    pub hausdorff_mode: String,
    pub error_bound: f64,
    pub bound_valid: bool,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub t_grid: Vec<u64>,
    pub seeds: Vec<u64>,
    pub delta: f64,
    /// `None` picks exact mode when the reward dimension allows it.
    pub mode: Option<HausdorffMode>,
    /// Random directions per set in lower-bound mode.
    pub budget: usize,
    /// Worker threads; `None` reads [`THREADS_ENV`], falling back to rayon's
    /// default.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(t_grid: Vec<u64>, seeds: Vec<u64>, delta: f64) -> Self {
        Self {
            t_grid,
            seeds,
            delta,
            mode: None,
            budget: 64,
            threads: None,
        }
    }
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `us_irl_se(t)` for every `(seed, t)` pair and compares each plug-in
/// set with the true one. Each run draws from its own model seeded by
/// `mix_seed(seed, t)`. Records come back sorted by `(seed, t)`.
pub fn run_sweep(truth: &IrlSeProblem, config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    if config.t_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "needs at least one value".into(),
        });
    }
    let inputs = BoundInputs::from_problem(truth, config.delta)?;
    let mode = config.mode.unwrap_or(if truth.reward_dim() <= DEFAULT_ENUMERATION_CAP {
        HausdorffMode::Exact
    } else {
        HausdorffMode::LowerBound
    });
    let truth_set = polytope_h_rep(truth, DEFAULT_TOL)?.reduced()?;

    let run = |seed: u64, t: u64| -> Result<SweepRecord> {
        let start = Instant::now();
        let task_seed = mix_seed(seed, t);
        let mut model = GenerativeModel::new(truth.clone(), task_seed);
        let (estimate, _) = us_irl_se(&mut model, t)?;
        let estimate_set = polytope_h_rep(&estimate, DEFAULT_TOL)?.reduced()?;
        let options = HausdorffOptions {
            mode,
            budget: config.budget,
            seed: task_seed,
            ..HausdorffOptions::default()
        };
        let report = hausdorff_distance(&truth_set, &estimate_set, &options)?;
        let bound = error_bound(t.max(1), &inputs)?;
        Ok(SweepRecord {
            seed,
            t,
            total_queries: t * truth.reward_dim() as u64,
            hausdorff_estimate: report.value,
            hausdorff_mode: mode.tag().to_string(),
            error_bound: bound.value,
            bound_valid: t > 0 && bound.valid,
            wall_ms: start.elapsed().as_millis() as u64,
        })
    };
    let all = || -> Result<Vec<SweepRecord>> {
        let per_seed = config
            .seeds
            .par_iter()
            .map(|&seed| config.t_grid.iter().map(|&t| run(seed, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut records: Vec<SweepRecord> = per_seed.into_iter().flatten().collect();
        records.sort_by_key(|r| (r.seed, r.t));
        Ok(records)
    };
    match config.threads.or_else(threads_from_env) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(all),
        None => all(),
    }
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
