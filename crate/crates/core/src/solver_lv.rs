//! The Las Vegas solver and the query-only baseline. Both only ever place a
//! vertex on a `+1` answer, so their output always equals the ground truth.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::clustering::{first_match, solver_rng, ClusterId, ClusteringState, Placement};
use crate::estimation::TrackedClustering;
use crate::instance::Instance;
use crate::oracle::Oracle;
use crate::report::{Algo, RunReport};

/// Membership scores of every element against one cluster, valid while the
/// cluster still has `size` members.
#[derive(Debug, Clone, Default)]
struct ScoreCache {
    size: usize,
    scores: Vec<f64>,
}

/// Index of the dyadic size group of a cluster of size `s` relative to the
/// largest size `top`: group `i ≥ 1` holds sizes in `(top/2^i, top/2^(i−1)]`.
pub fn dyadic_group(s: usize, top: usize) -> u32 {
    debug_assert!(s >= 1 && s <= top);
    let mut i = 1;
    while (s as f64) <= top as f64 / 2f64.powi(i as i32) {
        i += 1;
    }
    i
}

fn argmax_position(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn run_lv(instance: &Instance, seed: u64) -> (ClusteringState, RunReport) {
    let mut oracle = Oracle::new(&instance.truth);
    run_lv_with_oracle(instance, seed, &mut oracle)
}

pub fn run_lv_with_oracle(instance: &Instance, seed: u64, oracle: &mut Oracle<'_>) -> (ClusteringState, RunReport) {
    let start = Instant::now();
    let n = instance.n();
    let k = instance.k() as u32;
    let mut rng = solver_rng(seed);
    let mut tracked = TrackedClustering::with_inter_table(&instance.side_info);
    let mut cache: Vec<ScoreCache> = Vec::new();

    while !tracked.state().is_done() {
        let order = tracked.state().by_size();
        let ranked = order.iter().take_while(|&&c| tracked.state().size(c) >= 2).count();

        if ranked == 0 {
            let v = tracked.state().random_unclustered(&mut rng).expect("pool is nonempty");
            let (hit, asked) = first_match(oracle, tracked.state(), v, order);
            assert!(asked <= k, "element {v} needed {asked} queries");
            match hit {
                Some(c) => tracked.join(v, c, Placement::Queried, asked),
                None => {
                    tracked.open(v, asked);
                }
            }
            continue;
        }

        cache.resize_with(tracked.state().num_clusters(), ScoreCache::default);
        for &c in &order[..ranked] {
            let size = tracked.state().size(c);
            if cache[c].size != size {
                let pool = tracked.state().unclustered();
                let mut scores = vec![f64::NEG_INFINITY; n];
                let fresh: Vec<(u32, f64)> = pool
                    .par_iter()
                    .map(|&v| (v, tracked.membership(v as usize, c).expect("ranked clusters have intra pairs")))
                    .collect();
                for (v, s) in fresh {
                    scores[v as usize] = s;
                }
                cache[c] = ScoreCache { size, scores };
            }
        }

        // Smallest position that is some vertex's best cluster; lowest id among those.
        let (j, v) = tracked
            .state()
            .unclustered()
            .iter()
            .map(|&v| {
                let best = argmax_position(order[..ranked].iter().map(|&c| cache[c].scores[v as usize]))
                    .expect("ranked is nonempty");
                (best, v as usize)
            })
            .min()
            .expect("pool is nonempty");

        let score = |c: ClusterId| cache[c].scores[v];
        let mut tried = vec![false; order.len()];
        let mut asked = 0u32;
        let mut ask = |pos: usize, tried: &mut Vec<bool>| {
            tried[pos] = true;
            asked += 1;
            oracle
                .query(v, tracked.state().representative(order[pos]))
                .expect("solver queries distinct in-range elements")
                .is_same()
        };

        let mut hit = ask(j, &mut tried).then_some(j);
        if hit.is_none() && j > 0 {
            let top = tracked.state().size(order[0]);
            let mut groups: Vec<(u32, usize)> = Vec::new();
            for pos in 0..j {
                let g = dyadic_group(tracked.state().size(order[pos]), top);
                match groups.last_mut() {
                    Some((last, best)) if *last == g => {
                        if score(order[pos]) > score(order[*best]) {
                            *best = pos;
                        }
                    }
                    _ => groups.push((g, pos)),
                }
            }
            for (_, pos) in groups {
                if ask(pos, &mut tried) {
                    hit = Some(pos);
                    break;
                }
            }
        }
        if hit.is_none() {
            for pos in 0..order.len() {
                if !tried[pos] && ask(pos, &mut tried) {
                    hit = Some(pos);
                    break;
                }
            }
        }
        assert!(asked <= k, "element {v} needed {asked} queries");
        match hit {
            Some(pos) => tracked.join(v, order[pos], Placement::Queried, asked),
            None => {
                tracked.open(v, asked);
            }
        }
    }

    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let state = tracked.into_state();
    let report = RunReport::new(Algo::Lv, instance, seed, oracle.count(), &state.partition(), wall_ms);
    (state, report)
}

pub fn run_baseline(instance: &Instance, seed: u64) -> (ClusteringState, RunReport) {
    let mut oracle = Oracle::new(&instance.truth);
    run_baseline_with_oracle(instance, seed, &mut oracle)
}

/// Visits vertices in a seeded random order and asks one query per existing
/// cluster (in creation order) until a `+1`, opening a new cluster otherwise.
pub fn run_baseline_with_oracle(
    instance: &Instance,
    seed: u64,
    oracle: &mut Oracle<'_>,
) -> (ClusteringState, RunReport) {
    let start = Instant::now();
    let n = instance.n();
    let mut vertices: Vec<usize> = (0..n).collect();
    vertices.shuffle(&mut solver_rng(seed));
    let mut state = ClusteringState::new(n);
    for v in vertices {
        let clusters = state.num_clusters();
        let (hit, asked) = first_match(oracle, &state, v, 0..clusters);
        assert!(asked as usize <= clusters && clusters <= instance.k());
        match hit {
            Some(c) => state.join(v, c, Placement::Queried, asked),
            None => {
                state.open(v, asked);
            }
        }
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = RunReport::new(Algo::Baseline, instance, seed, oracle.count(), &state.partition(), wall_ms);
    (state, report)
}
