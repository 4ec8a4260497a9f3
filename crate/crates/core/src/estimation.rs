//! Empirical inter/intra distributions, the membership score, pooled
//! `p₊`/`p₋` estimates and the size threshold derived from them.

use crate::clustering::{ClusterId, ClusteringState, Placement};
use crate::divergence::{hellinger2_unchecked, Distribution};
use crate::instance::SideInfo;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("element {0} belongs to the cluster")]
    ElementInCluster(usize),
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("cluster of size {0} has no intra pairs")]
    ClusterTooSmall(usize),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
}

/// Algorithm constants. `scale` shrinks the size thresholds for desk-sized
/// runs; the band width `B` is always derived from the unscaled `c`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Constants {
    pub c: f64,
    pub c_prime: f64,
    pub scale: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c: 118.0,
            c_prime: 3.0,
            scale: 1.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<(), EstimationError> {
        let bad = |m: String| Err(EstimationError::InvalidConstants(m));
        if !(self.c_prime >= 3.0) {
            return bad(format!("c_prime = {} must be at least 3", self.c_prime));
        }
        if !(self.c >= 36.0 * self.c_prime) {
            return bad(format!(
                "c = {} must be at least 36 * c_prime = {}",
                self.c,
                36.0 * self.c_prime
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale = {} must be positive", self.scale));
        }
        Ok(())
    }

    pub fn b(&self) -> f64 {
        (self.c / self.c_prime).sqrt()
    }

    /// Cluster size that ends the first phase: `⌈scale·C·ln n⌉`, at least 1.
    pub fn phase1_target(&self, n: usize) -> usize {
        ((self.scale * self.c * ln(n)).ceil() as usize).max(1)
    }

    /// `⌈scale·C·ln n / h²⌉` capped at `n`; unbounded when `h2 = 0`.
    pub fn m_threshold(&self, h2: f64, n: usize) -> Threshold {
        if !(h2 > 0.0) {
            return Threshold::Unbounded;
        }
        let m = (self.scale * self.c * ln(n) / h2).ceil();
        Threshold::Finite((m.min(n as f64) as usize).max(1))
    }
}

fn ln(n: usize) -> f64 {
    (n.max(1) as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    Finite(usize),
    /// No usable estimate: keep querying.
    Unbounded,
}

impl Threshold {
    pub fn reached_by(self, size: usize) -> bool {
        matches!(self, Threshold::Finite(m) if size >= m)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Threshold::Finite(m) => Some(m),
            Threshold::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    /// Pooled over within-cluster pairs; `None` without any such pair.
    pub p_plus: Option<Distribution>,
    /// Pooled over cross-cluster pairs; `None` without any such pair.
    pub p_minus: Option<Distribution>,
    /// `H(p₊‖p₋)` when both sides are available.
    pub h: Option<f64>,
    pub m_threshold: Threshold,
}

impl Estimates {
    fn from_counts(
        w: &SideInfo,
        plus: &[u64],
        minus: &[u64],
        consts: &Constants,
        n: usize,
    ) -> Self {
        let dist = |c: &[u64]| {
            if c.iter().sum::<u64>() == 0 {
                None
            } else {
                Some(Distribution::from_counts(w.support().clone(), c).expect("nonempty counts"))
            }
        };
        let p_plus = dist(plus);
        let p_minus = dist(minus);
        let h2 = match (&p_plus, &p_minus) {
            (Some(a), Some(b)) => Some(hellinger2_unchecked(a.probs(), b.probs())),
            _ => None,
        };
        Self {
            p_plus,
            p_minus,
            h: h2.map(f64::sqrt),
            m_threshold: h2.map_or(Threshold::Unbounded, |h2| consts.m_threshold(h2, n)),
        }
    }
}

pub(crate) trait Count: Copy {
    fn as_f64(self) -> f64;
}

impl Count for u32 {
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Count for u64 {
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Squared Hellinger divergence between two histograms normalized by `na` and `nb`.
pub(crate) fn hellinger2_counts<A: Count, B: Count>(a: &[A], na: f64, b: &[B], nb: f64) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x.as_f64() / na).sqrt() - (y.as_f64() / nb).sqrt();
            d * d
        })
        .sum();
    (0.5 * s).min(1.0)
}

fn inter_counts(v: usize, cluster: &[u32], w: &SideInfo) -> Result<Vec<u64>, EstimationError> {
    if cluster.is_empty() {
        return Err(EstimationError::EmptyCluster);
    }
    let mut counts = vec![0u64; w.q()];
    for &u in cluster {
        if u as usize == v {
            return Err(EstimationError::ElementInCluster(v));
        }
        counts[w.get(u as usize, v)] += 1;
    }
    Ok(counts)
}

/// Unordered-pair counts; the ordered-pair normalization `|C|(|C|−1)` gives
/// the same pmf.
fn intra_counts(cluster: &[u32], w: &SideInfo) -> Result<Vec<u64>, EstimationError> {
    if cluster.len() < 2 {
        return Err(EstimationError::ClusterTooSmall(cluster.len()));
    }
    let mut counts = vec![0u64; w.q()];
    for (i, &u) in cluster.iter().enumerate() {
        for &v in &cluster[i + 1..] {
            counts[w.get(u as usize, v as usize)] += 1;
        }
    }
    Ok(counts)
}

/// `p_{v,C}`: the distribution of `w_{u,v}` over `u ∈ C`.
pub fn inter_dist(v: usize, cluster: &[u32], w: &SideInfo) -> Result<Distribution, EstimationError> {
    let counts = inter_counts(v, cluster, w)?;
    Ok(Distribution::from_counts(w.support().clone(), &counts).expect("nonempty counts"))
}

/// `p_C`: the distribution of `w` over pairs inside `C`.
pub fn intra_dist(cluster: &[u32], w: &SideInfo) -> Result<Distribution, EstimationError> {
    let counts = intra_counts(cluster, w)?;
    Ok(Distribution::from_counts(w.support().clone(), &counts).expect("nonempty counts"))
}

/// `−H²(p_{v,C} ‖ p_C)`, in `[−1, 0]`.
pub fn membership(v: usize, cluster: &[u32], w: &SideInfo) -> Result<f64, EstimationError> {
    let intra = intra_counts(cluster, w)?;
    membership_with_intra(v, cluster, &intra, w)
}

/// Like [`membership`] with the cluster's intra counts supplied, so many
/// vertices can be scored against one cluster without recounting.
pub(crate) fn membership_with_intra(
    v: usize,
    cluster: &[u32],
    intra: &[u64],
    w: &SideInfo,
) -> Result<f64, EstimationError> {
    let inter = inter_counts(v, cluster, w)?;
    let s = cluster.len() as f64;
    Ok(-hellinger2_counts(&inter, s, intra, s * (s - 1.0) / 2.0))
}

/// Pooled `p₊` over every within-cluster pair and `p₋` over every
/// cross-cluster pair of the clustered elements, plus the derived threshold.
pub fn pooled_estimates(clusters: &[Vec<u32>], w: &SideInfo, consts: &Constants, n: usize) -> Estimates {
    let q = w.q();
    let mut plus = vec![0u64; q];
    let mut minus = vec![0u64; q];
    for (i, a) in clusters.iter().enumerate() {
        if a.len() >= 2 {
            for (p, c) in plus.iter_mut().zip(intra_counts(a, w).unwrap()) {
                *p += c;
            }
        }
        for b in &clusters[i + 1..] {
            for &u in a {
                for &v in b {
                    minus[w.get(u as usize, v as usize)] += 1;
                }
            }
        }
    }
    Estimates::from_counts(w, &plus, &minus, consts, n)
}

/// A [`ClusteringState`] that keeps pooled and per-cluster pair counts up to
/// date as elements are placed, so estimates cost `O(q)` to refresh.
///
/// With `with_inter_table`, it also keeps `|{u ∈ C : w_{u,v} = a_i}|` for
/// every unclustered `v` and every cluster `C`.
#[derive(Debug, Clone)]
pub struct TrackedClustering<'w> {
    w: &'w SideInfo,
    state: ClusteringState,
    intra: Vec<Vec<u64>>,
    pooled_plus: Vec<u64>,
    pooled_minus: Vec<u64>,
    inter: Option<Vec<Vec<u32>>>,
}

impl<'w> TrackedClustering<'w> {
    pub fn new(w: &'w SideInfo) -> Self {
        Self {
            w,
            state: ClusteringState::new(w.n()),
            intra: Vec::new(),
            pooled_plus: vec![0; w.q()],
            pooled_minus: vec![0; w.q()],
            inter: None,
        }
    }

    pub fn with_inter_table(w: &'w SideInfo) -> Self {
        Self {
            inter: Some(Vec::new()),
            ..Self::new(w)
        }
    }

    pub fn state(&self) -> &ClusteringState {
        &self.state
    }

    pub fn into_state(self) -> ClusteringState {
        self.state
    }

    pub fn side_info(&self) -> &'w SideInfo {
        self.w
    }

    fn account(&mut self, v: usize, c: ClusterId) {
        let q = self.w.q();
        for (other, members) in self.state.clusters().iter().enumerate() {
            for &u in members {
                if u as usize == v {
                    continue;
                }
                let x = self.w.get(u as usize, v);
                if other == c {
                    self.intra[c][x] += 1;
                    self.pooled_plus[x] += 1;
                } else {
                    self.pooled_minus[x] += 1;
                }
            }
        }
        if let Some(table) = &mut self.inter {
            if table.len() <= c {
                table.resize_with(c + 1, || vec![0; self.w.n() * q]);
            }
            let row = &mut table[c];
            for &x in self.state.unclustered() {
                let x = x as usize;
                row[x * q + self.w.get(x, v)] += 1;
            }
        }
    }

    pub fn open(&mut self, v: usize, queries: u32) -> ClusterId {
        let c = self.state.open(v, queries);
        self.intra.push(vec![0; self.w.q()]);
        self.account(v, c);
        c
    }

    pub fn join(&mut self, v: usize, c: ClusterId, how: Placement, queries: u32) {
        self.state.join(v, c, how, queries);
        self.account(v, c);
    }

    pub fn intra_counts(&self, c: ClusterId) -> &[u64] {
        &self.intra[c]
    }

    pub fn estimates(&self, consts: &Constants) -> Estimates {
        Estimates::from_counts(self.w, &self.pooled_plus, &self.pooled_minus, consts, self.w.n())
    }

    /// `membership(v, C)` for unclustered `v`; `None` when `|C| < 2`.
    pub fn membership(&self, v: usize, c: ClusterId) -> Option<f64> {
        let cluster = self.state.cluster(c);
        let s = cluster.len();
        if s < 2 {
            return None;
        }
        let pairs = (s * (s - 1) / 2) as f64;
        let h2 = match &self.inter {
            Some(table) => {
                let q = self.w.q();
                hellinger2_counts(&table[c][v * q..(v + 1) * q], s as f64, &self.intra[c], pairs)
            }
            None => {
                let inter = inter_counts(v, cluster, self.w).ok()?;
                hellinger2_counts(&inter, s as f64, &self.intra[c], pairs)
            }
        };
        Some(-h2)
    }
}
