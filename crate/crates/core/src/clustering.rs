//! A partial partition under construction: disjoint clusters of element ids
//! plus the pool of elements not yet clustered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::Oracle;
use crate::partition::canonicalize;

pub type ClusterId = usize;

/// ChaCha8 stream used by solvers, disjoint from the instance generator's.
const SOLVER_STREAM: u64 = 2;

pub(crate) fn solver_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SOLVER_STREAM);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Opened a new singleton after every query came back negative.
    Opened,
    /// Joined on a `+1` answer against a member of the cluster.
    Queried,
    /// Joined on side information alone.
    SideInfo,
}

/// How and at what cost one element was placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementRecord {
    pub how: Placement,
    pub cluster: ClusterId,
    /// Queries spent on this element while placing it.
    pub queries: u32,
    /// Size of the cluster just before the element joined (0 for `Opened`).
    pub size_before: usize,
    /// Position in the global placement order.
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct ClusteringState {
    clusters: Vec<Vec<u32>>,
    reps: Vec<u32>,
    assignment: Vec<Option<ClusterId>>,
    pool: Vec<u32>,
    pool_pos: Vec<usize>,
    records: Vec<Option<PlacementRecord>>,
    steps: usize,
}

impl ClusteringState {
    pub fn new(n: usize) -> Self {
        Self {
            clusters: Vec::new(),
            reps: Vec::new(),
            assignment: vec![None; n],
            pool: (0..n as u32).collect(),
            pool_pos: (0..n).collect(),
            records: vec![None; n],
            steps: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, c: ClusterId) -> &[u32] {
        &self.clusters[c]
    }

    pub fn clusters(&self) -> &[Vec<u32>] {
        &self.clusters
    }

    pub fn size(&self, c: ClusterId) -> usize {
        self.clusters[c].len()
    }

    pub fn max_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Cluster ids by nonincreasing size, ties by id.
    pub fn by_size(&self) -> Vec<ClusterId> {
        let mut ids: Vec<ClusterId> = (0..self.clusters.len()).collect();
        ids.sort_by_key(|&c| (std::cmp::Reverse(self.clusters[c].len()), c));
        ids
    }

    /// Lowest-id member; the element every query against `c` is made with.
    pub fn representative(&self, c: ClusterId) -> usize {
        self.reps[c] as usize
    }

    pub fn cluster_of(&self, v: usize) -> Option<ClusterId> {
        self.assignment[v]
    }

    pub fn is_clustered(&self, v: usize) -> bool {
        self.assignment[v].is_some()
    }

    /// Unclustered elements, in no particular order.
    pub fn unclustered(&self) -> &[u32] {
        &self.pool
    }

    pub fn unclustered_sorted(&self) -> Vec<u32> {
        let mut v = self.pool.clone();
        v.sort_unstable();
        v
    }

    pub fn is_done(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn record(&self, v: usize) -> Option<&PlacementRecord> {
        self.records[v].as_ref()
    }

    pub fn records(&self) -> impl Iterator<Item = &PlacementRecord> {
        self.records.iter().flatten()
    }

    /// Draws an unclustered element uniformly at random.
    pub fn random_unclustered<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.pool.is_empty() {
            None
        } else {
            Some(self.pool[rng.random_range(0..self.pool.len())] as usize)
        }
    }

    fn take_from_pool(&mut self, v: usize) {
        let pos = self.pool_pos[v];
        assert!(pos != usize::MAX, "element {v} is already clustered");
        let last = *self.pool.last().unwrap();
        self.pool.swap_remove(pos);
        if last as usize != v {
            self.pool_pos[last as usize] = pos;
        }
        self.pool_pos[v] = usize::MAX;
    }

    fn next_step(&mut self) -> usize {
        self.steps += 1;
        self.steps - 1
    }

    /// Opens a singleton cluster `{v}`.
    pub fn open(&mut self, v: usize, queries: u32) -> ClusterId {
        self.take_from_pool(v);
        let c = self.clusters.len();
        self.clusters.push(vec![v as u32]);
        self.reps.push(v as u32);
        self.assignment[v] = Some(c);
        let step = self.next_step();
        self.records[v] = Some(PlacementRecord {
            how: Placement::Opened,
            cluster: c,
            queries,
            size_before: 0,
            step,
        });
        c
    }

    pub fn join(&mut self, v: usize, c: ClusterId, how: Placement, queries: u32) {
        debug_assert!(how != Placement::Opened);
        self.take_from_pool(v);
        let size_before = self.clusters[c].len();
        self.clusters[c].push(v as u32);
        self.reps[c] = self.reps[c].min(v as u32);
        self.assignment[v] = Some(c);
        let step = self.next_step();
        self.records[v] = Some(PlacementRecord {
            how,
            cluster: c,
            queries,
            size_before,
            step,
        });
    }

    /// Final clusters in canonical form (see [`canonicalize`]).
    pub fn partition(&self) -> Vec<Vec<u32>> {
        canonicalize(self.clusters.clone())
    }
}

/// Queries `v` against the representative of each cluster in `order` and
/// stops at the first `+1`. Returns the matching cluster (if any) and the
/// number of queries asked.
pub(crate) fn first_match(
    oracle: &mut Oracle<'_>,
    state: &ClusteringState,
    v: usize,
    order: impl IntoIterator<Item = ClusterId>,
) -> (Option<ClusterId>, u32) {
    let mut asked = 0;
    for c in order {
        asked += 1;
        let answer = oracle
            .query(v, state.representative(c))
            .expect("solver queries distinct in-range elements");
        if answer.is_same() {
            return (Some(c), asked);
        }
    }
    (None, asked)
}
