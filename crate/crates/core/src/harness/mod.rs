//! Runs experiment sweeps, aggregates the reports and checks benchmark gates.

pub mod config;
pub mod emit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::hellinger;
use crate::instance::generate;
use crate::report::{Algo, RunReport};
use crate::solver_lv::{run_baseline, run_lv};
use crate::solver_mc::run_mc;
use crate::bounds::lb_query_budget;

pub use config::{Cell, ConfigError, ExperimentConfig};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "OCL_THREADS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial. Used both for the instance and for the solvers, which
/// draw from a different ChaCha stream than the generator.
pub fn trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ cell as u64) ^ trial as u64)
}

/// Worker count from `OCL_THREADS`, if set to a positive integer.
pub fn env_workers() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w| w > 0)
}

/// Summary of one (cell, algorithm) pair over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cell: usize,
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub clusters: String,
    pub f_plus: String,
    pub f_minus: String,
    pub trials: usize,
    pub median_queries: f64,
    pub mean_queries: f64,
    /// Normal-approximation 95% interval for the mean.
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub max_queries: u64,
    pub success_rate: f64,
    pub lb_query_budget: f64,
}

pub fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    match v.len() {
        0 => f64::NAN,
        len if len % 2 == 1 => v[m] as f64,
        _ => (v[m - 1] as f64 + v[m] as f64) / 2.0,
    }
}

impl Aggregate {
    /// `runs` holds `(queries, exact)` for each trial of this cell and algorithm.
    pub fn compute(cell: &Cell, algo: Algo, runs: &[(u64, bool)]) -> Self {
        let t = runs.len();
        let queries: Vec<u64> = runs.iter().map(|r| r.0).collect();
        let mean = queries.iter().map(|&q| q as f64).sum::<f64>() / t as f64;
        let sd = if t > 1 {
            (queries.iter().map(|&q| (q as f64 - mean).powi(2)).sum::<f64>() / (t - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * sd / (t as f64).sqrt();
        let h = hellinger(&cell.f_plus, &cell.f_minus).expect("config checked the supports");
        Self {
            cell: cell.index,
            algo,
            n: cell.n,
            k: cell.k,
            clusters: cell.clusters_label.clone(),
            f_plus: cell.f_plus.to_string(),
            f_minus: cell.f_minus.to_string(),
            trials: t,
            median_queries: median(&queries),
            mean_queries: mean,
            ci95_low: mean - half,
            ci95_high: mean + half,
            max_queries: queries.iter().copied().max().unwrap_or(0),
            success_rate: runs.iter().filter(|r| r.1).count() as f64 / t as f64,
            lb_query_budget: lb_query_budget(cell.n, cell.k, h),
        }
    }
}

/// Aggregates reports laid out as [`run_experiment`] produces them: cell by
/// cell, trial by trial, one report per algorithm in config order.
pub fn aggregate(config: &ExperimentConfig, runs: &[(u64, bool)]) -> Vec<Aggregate> {
    let per_cell = config.trials * config.algos.len();
    assert_eq!(runs.len(), per_cell * config.cells.len(), "report count does not match the config");
    let mut out = Vec::new();
    for (cell, chunk) in config.cells.iter().zip(runs.chunks(per_cell)) {
        for (a, &algo) in config.algos.iter().enumerate() {
            let mine: Vec<(u64, bool)> = chunk.iter().skip(a).step_by(config.algos.len()).copied().collect();
            out.push(Aggregate::compute(cell, algo, &mine));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub reports: Vec<RunReport>,
    pub aggregates: Vec<Aggregate>,
}

fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: usize) -> Vec<RunReport> {
    let seed = trial_seed(config.base_seed, cell.index, trial);
    let instance = generate(cell.n, &cell.clusters, &cell.f_plus, &cell.f_minus, seed)
        .expect("config validation checked the cell");
    config
        .algos
        .iter()
        .map(|algo| {
            let mut report = match algo {
                Algo::Mc => run_mc(&instance, &config.params, seed).expect("constants validated").1,
                Algo::Lv => run_lv(&instance, seed).1,
                Algo::Baseline => run_baseline(&instance, seed).1,
            };
            if !config.timing {
                report.wall_ms = 0.0;
            }
            report
        })
        .collect()
}

/// Runs every trial of every cell on `workers` threads (all cores when
/// `None`). The result does not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> ExperimentResult {
    let tasks: Vec<(usize, usize)> = (0..config.cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let run = || -> Vec<RunReport> {
        tasks
            .par_iter()
            .map(|&(c, t)| run_trial(config, &config.cells[c], t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let reports = builder.build().expect("thread pool").install(run);
    let runs: Vec<(u64, bool)> = reports.iter().map(|r| (r.queries, r.exact)).collect();
    let aggregates = aggregate(config, &runs);
    ExperimentResult { reports, aggregates }
}

/// Benchmark gates: Las Vegas and baseline runs are exact, no run exceeds
/// `nk` queries, and every Monte Carlo cell succeeds at least
/// `mc_min_success` of the time. Returns one message per violation.
pub fn check_gates(config: &ExperimentConfig, result: &ExperimentResult) -> Vec<String> {
    let mut failures = Vec::new();
    for r in &result.reports {
        if matches!(r.algo, Algo::Lv | Algo::Baseline) && !r.exact {
            failures.push(format!("{} run with seed {} is not exact", r.algo, r.seed));
        }
        let cap = (r.n * r.k) as u64;
        if r.queries > cap {
            failures.push(format!(
                "{} run with seed {} used {} queries, more than nk = {cap}",
                r.algo, r.seed, r.queries
            ));
        }
    }
    for a in &result.aggregates {
        if a.algo == Algo::Mc && a.success_rate < config.mc_min_success {
            failures.push(format!(
                "mc success rate {:.3} in cell {} (n = {}, k = {}) is below {}",
                a.success_rate, a.cell, a.n, a.k, config.mc_min_success
            ));
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_cell_and_trial() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..20 {
            for t in 0..20 {
                assert!(seen.insert(trial_seed(7, c, t)));
            }
        }
        assert_ne!(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 2, 3]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
