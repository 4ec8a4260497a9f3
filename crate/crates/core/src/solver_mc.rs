//! The parameter-free Monte Carlo solver.
//!
//! Phase 1 clusters random vertices by querying until one cluster reaches
//! `⌈scale·C·ln n⌉`. Phase 2 keeps doing so, re-estimating `p₊`, `p₋` and the
//! size threshold `M^E` after every vertex, until some cluster that has not
//! been processed yet reaches `M^E`. Phase 3 then grows that cluster from the
//! side information: vertices whose membership clears the upper band edge
//! join without a query (3A), vertices inside the band are resolved by
//! querying (3B). Phases 2 and 3 alternate until every vertex is placed.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{first_match, solver_rng, ClusterId, ClusteringState, Placement};
use crate::estimation::{Constants, EstimationError, Estimates, TrackedClustering};
use crate::instance::Instance;
use crate::oracle::Oracle;
use crate::report::{Algo, EffectiveConstants, RunReport};

/// Which inclusion band Phase 3 uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    /// Centered at `h/B` with half-width `2h²/(B√ln n)`.
    #[default]
    Lemma,
    /// Centered at `4h/C` with half-width `2h²/(C√ln n)`.
    Text,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Lemma => "lemma",
            Band::Text => "text",
        })
    }
}

impl FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lemma" => Ok(Band::Lemma),
            "text" => Ok(Band::Text),
            _ => Err(format!("unknown band `{s}` (expected lemma or text)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct McParams {
    pub constants: Constants,
    pub band: Band,
}

/// Membership cut-offs for one Phase-3 pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    /// 3A: include when `membership ≥ include`. `None` when the band's upper
    /// edge is not negative, in which case nothing is included unqueried.
    pub include: Option<f64>,
    /// 3B: wait when `wait ≤ membership` and the vertex was not included.
    pub wait: f64,
}

impl Bands {
    pub fn new(h: f64, n: usize, params: &McParams) -> Self {
        let c = &params.constants;
        let (center, denom) = match params.band {
            Band::Lemma => (h / c.b(), c.b()),
            Band::Text => (4.0 * h / c.c, c.c),
        };
        let log_root = (n.max(1) as f64).ln().sqrt();
        let half = if log_root > 0.0 {
            2.0 * h * h / (denom * log_root)
        } else {
            f64::INFINITY
        };
        let upper = center - half;
        Self {
            include: (upper > 0.0).then_some(-upper),
            wait: -(center + half),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Iterate,
    Grow,
    Finished,
}

#[derive(Debug, Clone)]
pub struct McState<'w> {
    pub clustering: TrackedClustering<'w>,
    pub phase: Phase,
    pub estimates: Estimates,
    /// `Waiting(C)` for every cluster that went through Phase 3.
    pub waiting: Vec<Vec<u32>>,
    pub done: Vec<bool>,
    /// Queries charged in Phases 1, 2 and 3.
    pub queries: [u64; 3],
    rng: ChaCha8Rng,
}

impl<'w> McState<'w> {
    pub fn new(instance: &'w Instance, params: &McParams, seed: u64) -> Self {
        let clustering = TrackedClustering::new(&instance.side_info);
        let estimates = clustering.estimates(&params.constants);
        Self {
            clustering,
            phase: Phase::Init,
            estimates,
            waiting: Vec::new(),
            done: Vec::new(),
            queries: [0; 3],
            rng: solver_rng(seed),
        }
    }

    pub fn is_done(&self, c: ClusterId) -> bool {
        self.done.get(c).copied().unwrap_or(false)
    }

    pub fn waiting_total(&self) -> usize {
        self.waiting.iter().map(Vec::len).sum()
    }

    /// Clusters not yet processed by Phase 3 (largest first), then processed ones.
    fn query_order(&self) -> Vec<ClusterId> {
        let (mut fresh, done): (Vec<_>, Vec<_>) = self
            .clustering
            .state()
            .by_size()
            .into_iter()
            .partition(|&c| !self.is_done(c));
        fresh.extend(done);
        fresh
    }

    /// Places `v` by querying one representative per cluster in `order`,
    /// opening a singleton if every answer is negative.
    fn place_by_query(&mut self, oracle: &mut Oracle<'_>, v: usize, order: Vec<ClusterId>) {
        let (hit, asked) = first_match(oracle, self.clustering.state(), v, order);
        match hit {
            Some(c) => self.clustering.join(v, c, Placement::Queried, asked),
            None => {
                self.clustering.open(v, asked);
            }
        }
    }

    fn place_random(&mut self, oracle: &mut Oracle<'_>) -> bool {
        let Some(v) = self.clustering.state().random_unclustered(&mut self.rng) else {
            return false;
        };
        let order = self.query_order();
        self.place_by_query(oracle, v, order);
        true
    }
}

/// Phase 1: cluster random vertices by querying until some cluster reaches
/// `⌈scale·C·ln n⌉` or nothing is left.
pub fn phase1(state: &mut McState<'_>, oracle: &mut Oracle<'_>, params: &McParams) {
    let before = oracle.count();
    let target = params.constants.phase1_target(oracle.n());
    state.phase = Phase::Init;
    while state.clustering.state().max_size() < target && state.place_random(oracle) {}
    state.queries[0] += oracle.count() - before;
    state.phase = Phase::Iterate;
}

/// Phase 2: re-estimate, then cluster one more random vertex by querying,
/// until an unprocessed cluster reaches `M^E`. Returns that cluster, or `None`
/// once every vertex is placed.
pub fn phase2_loop(state: &mut McState<'_>, oracle: &mut Oracle<'_>, params: &McParams) -> Option<ClusterId> {
    let before = oracle.count();
    state.phase = Phase::Iterate;
    let grown = loop {
        state.estimates = state.clustering.estimates(&params.constants);
        let threshold = state.estimates.m_threshold;
        let s = state.clustering.state();
        if let Some(c) = s
            .by_size()
            .into_iter()
            .find(|&c| !state.is_done(c) && threshold.reached_by(s.size(c)))
        {
            if !s.is_done() {
                break Some(c);
            }
        }
        if !state.place_random(oracle) {
            break None;
        }
    };
    state.queries[1] += oracle.count() - before;
    if grown.is_none() {
        state.phase = Phase::Finished;
    }
    grown
}

/// Phase 3 on the grown cluster `c`, with `h` frozen from the current
/// estimates. Memberships are all taken against `c` as it was on entry.
pub fn phase3_process(state: &mut McState<'_>, oracle: &mut Oracle<'_>, params: &McParams, c: ClusterId) {
    let before = oracle.count();
    state.phase = Phase::Grow;
    let h = state.estimates.h.expect("a finite threshold implies an estimate of h");
    let bands = Bands::new(h, oracle.n(), params);

    let candidates = state.clustering.state().unclustered_sorted();
    let scored: Vec<(u32, f64)> = {
        let tracked = &state.clustering;
        candidates
            .par_iter()
            .map(|&v| (v, tracked.membership(v as usize, c).expect("grown cluster has intra pairs")))
            .collect()
    };
    let mut waiting = Vec::new();
    for (v, m) in scored {
        if bands.include.is_some_and(|cut| m >= cut) {
            state.clustering.join(v as usize, c, Placement::SideInfo, 0);
        } else if m >= bands.wait {
            waiting.push(v);
        }
    }
    for &v in &waiting {
        let mut order = vec![c];
        order.extend(state.clustering.state().by_size().into_iter().filter(|&x| x != c));
        state.place_by_query(oracle, v as usize, order);
    }

    if state.waiting.len() <= c {
        state.waiting.resize_with(c + 1, Vec::new);
    }
    state.waiting[c] = waiting;
    if state.done.len() <= c {
        state.done.resize(c + 1, false);
    }
    state.done[c] = true;
    state.queries[2] += oracle.count() - before;
    state.phase = if state.clustering.state().is_done() {
        Phase::Finished
    } else {
        Phase::Iterate
    };
}

/// Runs all three phases with a fresh oracle.
pub fn run_mc(
    instance: &Instance,
    params: &McParams,
    seed: u64,
) -> Result<(ClusteringState, RunReport), EstimationError> {
    let mut oracle = Oracle::new(&instance.truth);
    run_mc_with_oracle(instance, params, seed, &mut oracle)
}

/// Like [`run_mc`] with a caller-supplied (for example, logging) oracle.
pub fn run_mc_with_oracle(
    instance: &Instance,
    params: &McParams,
    seed: u64,
    oracle: &mut Oracle<'_>,
) -> Result<(ClusteringState, RunReport), EstimationError> {
    params.constants.validate()?;
    let start = Instant::now();
    let mut state = McState::new(instance, params, seed);
    phase1(&mut state, oracle, params);
    while let Some(c) = phase2_loop(&mut state, oracle, params) {
        phase3_process(&mut state, oracle, params, c);
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let (n, k) = (instance.n() as u64, instance.k() as u64);
    let waiting = state.waiting_total();
    let queries = oracle.count();
    assert!(
        queries <= n * k + k * waiting as u64,
        "query count {queries} exceeds nk + k|Waiting|"
    );
    let estimates = state.clustering.estimates(&params.constants);
    let clustering = state.clustering.into_state();
    let mut report = RunReport::new(Algo::Mc, instance, seed, queries, &clustering.partition(), wall_ms);
    report.q_phase1 = state.queries[0];
    report.q_phase2 = state.queries[1];
    report.q_phase3 = state.queries[2];
    report.waiting = Some(waiting);
    report.estimates = Some((&estimates).into());
    report.constants = Some(EffectiveConstants {
        c: params.constants.c,
        c_prime: params.constants.c_prime,
        scale: params.constants.scale,
        b: params.constants.b(),
        band: params.band.to_string(),
        phase1_target: params.constants.phase1_target(instance.n()),
    });
    Ok((clustering, report))
}
