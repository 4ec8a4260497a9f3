//! Planted-clustering instances: ground truth plus a side-information matrix
//! whose entries are drawn from `f_plus` (same cluster) or `f_minus` (different
//! clusters).
//!
//! Randomness is counter-based. Entry `(u, v)` with triangular index `t`
//! reads the two ChaCha8 words at position `2t` of stream [`SIDE_INFO_STREAM`]
//! for the instance seed, so the matrix does not depend on fill order or on
//! the number of worker threads.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::divergence::{DivergenceError, Distribution, Support};
use crate::partition::{Partition, PartitionError};

/// File magic of the binary instance container.
pub const MAGIC: &[u8; 5] = b"OCLB1";
/// Largest `n` accepted by the JSON sidecar.
pub const JSON_MAX_N: usize = 200;

const LABEL_STREAM: u64 = 0;
const SIDE_INFO_STREAM: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("cluster sizes sum to {sum}, expected n = {n}")]
    SizeMismatch { sum: usize, n: usize },
    #[error("cluster {0} would be empty")]
    EmptyCluster(usize),
    #[error("need at least one cluster")]
    NoClusters,
    #[error("skew ratio must be finite and at least 1, got {0}")]
    BadRatio(f64),
    #[error("support has {0} points; at most 256 fit the packed format")]
    SupportTooLarge(usize),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("JSON sidecar is limited to n <= {JSON_MAX_N}, got {0}")]
    TooLargeForJson(usize),
    #[error("invalid JSON instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How the `n` elements are split into clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClusterSpec {
    /// `k` clusters whose sizes differ by at most one.
    Balanced(usize),
    /// Exact sizes; singletons allowed.
    ExplicitSizes(Vec<usize>),
    /// `k` clusters with geometrically decreasing sizes; the largest is about
    /// `ratio` times the smallest. Every cluster gets at least one element.
    Skewed { k: usize, ratio: f64 },
}

impl ClusterSpec {
    pub fn k(&self) -> usize {
        match self {
            ClusterSpec::Balanced(k) | ClusterSpec::Skewed { k, .. } => *k,
            ClusterSpec::ExplicitSizes(sizes) => sizes.len(),
        }
    }

    pub fn sizes(&self, n: usize) -> Result<Vec<usize>, InstanceError> {
        let sizes = match self {
            ClusterSpec::Balanced(k) => {
                let k = *k;
                if k == 0 {
                    return Err(InstanceError::NoClusters);
                }
                if k > n {
                    return Err(InstanceError::EmptyCluster(n));
                }
                (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
            }
            ClusterSpec::ExplicitSizes(sizes) => sizes.clone(),
            ClusterSpec::Skewed { k, ratio } => {
                let k = *k;
                if k == 0 {
                    return Err(InstanceError::NoClusters);
                }
                if !ratio.is_finite() || *ratio < 1.0 {
                    return Err(InstanceError::BadRatio(*ratio));
                }
                if k > n {
                    return Err(InstanceError::EmptyCluster(n));
                }
                skewed_sizes(n, k, *ratio)
            }
        };
        if sizes.is_empty() {
            return Err(InstanceError::NoClusters);
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(InstanceError::EmptyCluster(i));
        }
        let sum: usize = sizes.iter().sum();
        if sum != n {
            return Err(InstanceError::SizeMismatch { sum, n });
        }
        Ok(sizes)
    }
}

/// One element per cluster, then the remaining `n - k` apportioned by weight
/// `ratio^(-i/(k-1))` with largest-remainder rounding.
fn skewed_sizes(n: usize, k: usize, ratio: f64) -> Vec<usize> {
    if k == 1 {
        return vec![n];
    }
    let weights: Vec<f64> = (0..k)
        .map(|i| ratio.powf(-(i as f64) / (k - 1) as f64))
        .collect();
    let total: f64 = weights.iter().sum();
    let extra = (n - k) as f64;
    let shares: Vec<f64> = weights.iter().map(|w| extra * w / total).collect();
    let mut sizes: Vec<usize> = shares.iter().map(|s| 1 + s.floor() as usize).collect();
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Index of the unordered pair `{u, v}` (`u != v`) in the row-major upper triangle.
#[inline]
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    debug_assert!(b < n && a != b);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// The side-information matrix `W`, stored as a flat upper triangle of support
/// indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    n: usize,
    support: Arc<Support>,
    data: Vec<u8>,
}

impl SideInfo {
    pub fn from_parts(n: usize, support: Arc<Support>, data: Vec<u8>) -> Result<Self, InstanceError> {
        if support.len() > 256 {
            return Err(InstanceError::SupportTooLarge(support.len()));
        }
        let expected = n * n.saturating_sub(1) / 2;
        if data.len() != expected {
            return Err(InstanceError::Invalid(format!(
                "side information has {} entries, expected {expected}",
                data.len()
            )));
        }
        let q = support.len();
        if let Some(t) = data.iter().position(|&x| x as usize >= q) {
            return Err(InstanceError::Invalid(format!(
                "side-information entry {t} is {} but q = {q}",
                data[t]
            )));
        }
        Ok(Self { n, support, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    /// Support index of `w_{u,v}`; symmetric in its arguments.
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> usize {
        self.data[pair_index(self.n, u, v)] as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// A generated (or loaded) problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub truth: Partition,
    pub side_info: SideInfo,
    pub f_plus: Distribution,
    pub f_minus: Distribution,
    pub seed: u64,
}

struct Sampler {
    cdf: Vec<f64>,
    last: usize,
}

impl Sampler {
    fn new(d: &Distribution) -> Self {
        let mut acc = 0.0;
        let cdf = d
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = d.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { cdf, last }
    }

    #[inline]
    fn sample(&self, word: u64) -> u8 {
        let u = (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.cdf
            .iter()
            .position(|&c| u < c)
            .map_or(self.last, |i| i.min(self.last)) as u8
    }
}

pub fn generate(
    n: usize,
    spec: &ClusterSpec,
    f_plus: &Distribution,
    f_minus: &Distribution,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if !f_plus.shares_support(f_minus) {
        return Err(DivergenceError::SupportMismatch.into());
    }
    let support = f_plus.support().clone();
    if support.len() > 256 {
        return Err(InstanceError::SupportTooLarge(support.len()));
    }
    let sizes = spec.sizes(n)?;
    let k = sizes.len();

    let mut labels: Vec<u32> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c as u32, s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(LABEL_STREAM);
    labels.shuffle(&mut rng);
    let truth = Partition::from_labels(labels, k)?;

    let plus = Sampler::new(f_plus);
    let minus = Sampler::new(f_minus);
    let mut data = vec![0u8; n * n.saturating_sub(1) / 2];
    let mut rows: Vec<(usize, &mut [u8])> = Vec::with_capacity(n);
    let mut rest: &mut [u8] = &mut data;
    for u in 0..n.saturating_sub(1) {
        let (row, tail) = rest.split_at_mut(n - u - 1);
        rows.push((u, row));
        rest = tail;
    }
    rows.into_par_iter().for_each(|(u, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SIDE_INFO_STREAM);
        rng.set_word_pos(2 * pair_index(n, u, u + 1) as u128);
        for (offset, slot) in row.iter_mut().enumerate() {
            let v = u + 1 + offset;
            let word = rng.next_u64();
            *slot = if truth.same(u, v) {
                plus.sample(word)
            } else {
                minus.sample(word)
            };
        }
    });

    Ok(Instance {
        side_info: SideInfo { n, support, data },
        truth,
        f_plus: f_plus.clone(),
        f_minus: f_minus.clone(),
        seed,
    })
}

impl Instance {
    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn k(&self) -> usize {
        self.truth.k()
    }

    /// Short content hash over truth, side information and seed.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        for &l in self.truth.labels() {
            h.update(l.to_le_bytes());
        }
        h.update(self.side_info.as_bytes());
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Serializes into the binary container (little endian):
    /// magic `OCLB1`, `n: u64`, `k: u32`, `q: u32`, `seed: u64`,
    /// `f_plus` and `f_minus` as `u32` length + UTF-8 text, `n` labels as `u32`,
    /// then the `n(n-1)/2` packed support indices.
    pub fn to_bytes(&self) -> Vec<u8> {
        let fp = self.f_plus.to_string();
        let fm = self.f_minus.to_string();
        let mut out = Vec::with_capacity(40 + fp.len() + fm.len() + 4 * self.n() + self.side_info.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        out.extend_from_slice(&(self.side_info.q() as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for s in [&fp, &fm] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        for &l in self.truth.labels() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.side_info.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, InstanceError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(MAGIC.len(), "magic")?;
        if magic != MAGIC {
            return Err(r.error_at(0, "bad magic, expected OCLB1"));
        }
        let n_at = r.pos;
        let n = r.u64("n")?;
        let n = usize::try_from(n).map_err(|_| r.error_at(n_at, "n does not fit in memory"))?;
        let k = r.u32("k")? as usize;
        let q_at = r.pos;
        let q = r.u32("q")? as usize;
        let seed = r.u64("seed")?;
        let fp_at = r.pos;
        let f_plus = r.distribution("f_plus")?;
        let f_minus = r.distribution("f_minus")?;
        if !f_plus.shares_support(&f_minus) {
            return Err(r.error_at(fp_at, "f_plus and f_minus have different supports"));
        }
        if f_plus.q() != q {
            return Err(r.error_at(q_at, &format!("q = {q} but distributions have {} points", f_plus.q())));
        }
        let labels_at = r.pos;
        let raw = r.take(n.checked_mul(4).ok_or_else(|| r.error_at(n_at, "n too large"))?, "labels")?;
        let labels: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let truth = Partition::from_labels(labels, k)
            .map_err(|e| r.error_at(labels_at, &e.to_string()))?;
        let side_at = r.pos;
        let data = r.take(n * n.saturating_sub(1) / 2, "side information")?.to_vec();
        if r.pos != bytes.len() {
            return Err(r.error_at(r.pos, "trailing bytes after side information"));
        }
        if let Some(t) = data.iter().position(|&x| x as usize >= q) {
            return Err(r.error_at(side_at + t, &format!("support index {} >= q = {q}", data[t])));
        }
        let support = f_plus.support().clone();
        Ok(Instance {
            truth,
            side_info: SideInfo { n, support, data },
            f_plus,
            f_minus,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn to_json(&self) -> Result<String, InstanceError> {
        if self.n() > JSON_MAX_N {
            return Err(InstanceError::TooLargeForJson(self.n()));
        }
        let doc = JsonInstance {
            format: "OCLB1".into(),
            n: self.n(),
            k: self.k(),
            q: self.side_info.q(),
            seed: self.seed,
            f_plus: self.f_plus.to_string(),
            f_minus: self.f_minus.to_string(),
            labels: self.truth.labels().to_vec(),
            side_info: self.side_info.data.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: JsonInstance = serde_json::from_str(text)?;
        if doc.format != "OCLB1" {
            return Err(InstanceError::Invalid(format!("unknown format `{}`", doc.format)));
        }
        let f_plus: Distribution = doc.f_plus.parse()?;
        let f_minus: Distribution = doc.f_minus.parse()?;
        if !f_plus.shares_support(&f_minus) {
            return Err(DivergenceError::SupportMismatch.into());
        }
        if f_plus.q() != doc.q {
            return Err(InstanceError::Invalid(format!(
                "q = {} but distributions have {} points",
                doc.q,
                f_plus.q()
            )));
        }
        if doc.labels.len() != doc.n {
            return Err(InstanceError::Invalid(format!(
                "{} labels for n = {}",
                doc.labels.len(),
                doc.n
            )));
        }
        let truth = Partition::from_labels(doc.labels, doc.k)?;
        let side_info = SideInfo::from_parts(doc.n, f_plus.support().clone(), doc.side_info)?;
        Ok(Instance {
            truth,
            side_info,
            f_plus,
            f_minus,
            seed: doc.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonInstance {
    format: String,
    n: usize,
    k: usize,
    q: usize,
    seed: u64,
    f_plus: String,
    f_minus: String,
    labels: Vec<u32>,
    side_info: Vec<u8>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error_at(&self, offset: usize, message: &str) -> InstanceError {
        InstanceError::Parse {
            offset,
            message: message.to_string(),
        }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8], InstanceError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error_at(
                self.bytes.len(),
                &format!("truncated while reading {what} ({len} bytes needed at offset {})", self.pos),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32, InstanceError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, InstanceError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn distribution(&mut self, what: &str) -> Result<Distribution, InstanceError> {
        let len = self.u32(what)? as usize;
        let at = self.pos;
        let raw = self.take(len, what)?;
        let text = std::str::from_utf8(raw).map_err(|e| self.error_at(at, &format!("{what}: {e}")))?;
        text.parse()
            .map_err(|e: DivergenceError| self.error_at(at, &format!("{what}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Distribution {
        Distribution::bernoulli(p).unwrap()
    }

    fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |u| (u + 1..n).map(move |v| (u, v)))
    }

    #[test]
    fn pair_index_enumerates_triangle() {
        let n = 7;
        for (t, (u, v)) in all_pairs(n).enumerate() {
            assert_eq!(pair_index(n, u, v), t);
            assert_eq!(pair_index(n, v, u), t);
        }
    }

    #[test]
    fn degenerate_single_cluster() {
        let inst = generate(4, &ClusterSpec::ExplicitSizes(vec![4]), &bern(1.0), &bern(0.0), 7).unwrap();
        assert_eq!(inst.side_info.as_bytes(), &[1; 6]);
    }

    #[test]
    fn degenerate_two_pairs() {
        let inst = generate(4, &ClusterSpec::ExplicitSizes(vec![2, 2]), &bern(1.0), &bern(0.0), 3).unwrap();
        let mut ones = 0;
        for (u, v) in all_pairs(4) {
            let w = inst.side_info.get(u, v);
            assert_eq!(w == 1, inst.truth.same(u, v));
            ones += w;
        }
        assert_eq!(ones, 2);
    }

    #[test]
    fn intra_frequency_law_of_large_numbers() {
        let inst = generate(2000, &ClusterSpec::Balanced(10), &bern(0.7), &bern(0.3), 11).unwrap();
        let (mut intra, mut ones) = (0usize, 0usize);
        for (u, v) in all_pairs(2000) {
            if inst.truth.same(u, v) {
                intra += 1;
                ones += inst.side_info.get(u, v);
            }
        }
        let freq = ones as f64 / intra as f64;
        assert!((freq - 0.7).abs() < 0.01, "{freq}");
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            ClusterSpec::ExplicitSizes(vec![2, 3]).sizes(4),
            Err(InstanceError::SizeMismatch { sum: 5, n: 4 })
        ));
        assert!(matches!(
            ClusterSpec::ExplicitSizes(vec![2, 0, 2]).sizes(4),
            Err(InstanceError::EmptyCluster(1))
        ));
        assert!(matches!(ClusterSpec::Balanced(5).sizes(4), Err(InstanceError::EmptyCluster(_))));
        assert!(matches!(ClusterSpec::Balanced(0).sizes(4), Err(InstanceError::NoClusters)));
        assert_eq!(ClusterSpec::Balanced(3).sizes(10).unwrap(), vec![4, 3, 3]);
        assert_eq!(
            ClusterSpec::ExplicitSizes(vec![5, 1, 1]).sizes(7).unwrap(),
            vec![5, 1, 1]
        );
        let skew = ClusterSpec::Skewed { k: 4, ratio: 8.0 }.sizes(100).unwrap();
        assert_eq!(skew.iter().sum::<usize>(), 100);
        assert!(skew.windows(2).all(|w| w[0] >= w[1]), "{skew:?}");
        assert!(skew[0] >= 6 * skew[3], "{skew:?}");
        assert!(matches!(
            ClusterSpec::Skewed { k: 2, ratio: 0.5 }.sizes(10),
            Err(InstanceError::BadRatio(_))
        ));
    }

    #[test]
    fn mismatched_supports_rejected() {
        let tri: Distribution = "0:0.2,1:0.3,2:0.5".parse().unwrap();
        assert!(matches!(
            generate(5, &ClusterSpec::Balanced(2), &bern(0.5), &tri, 0),
            Err(InstanceError::Divergence(DivergenceError::SupportMismatch))
        ));
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let inst = generate(30, &ClusterSpec::Balanced(3), &bern(0.8), &bern(0.25), 99).unwrap();
        let bytes = inst.to_bytes();
        assert_eq!(Instance::from_bytes(&bytes).unwrap(), inst);
        for cut in [0, 3, 10, 30, bytes.len() - 1] {
            match Instance::from_bytes(&bytes[..cut]) {
                Err(InstanceError::Parse { offset, .. }) => assert!(offset <= cut),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(Instance::from_bytes(&extra), Err(InstanceError::Parse { .. })));
    }

    #[test]
    fn load_rechecks_invariants() {
        let inst = generate(100, &ClusterSpec::Balanced(4), &bern(0.9), &bern(0.1), 5).unwrap();
        let bytes = inst.to_bytes();
        let side_at = bytes.len() - inst.side_info.as_bytes().len();

        let mut bad_entry = bytes.clone();
        bad_entry[side_at + 17] = 2;
        match Instance::from_bytes(&bad_entry) {
            Err(InstanceError::Parse { offset, .. }) => assert_eq!(offset, side_at + 17),
            other => panic!("{other:?}"),
        }

        let labels_at = side_at - 4 * 100;
        let mut bad_label = bytes.clone();
        bad_label[labels_at..labels_at + 4].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            Instance::from_bytes(&bad_label),
            Err(InstanceError::Parse { offset, .. }) if offset == labels_at
        ));

        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(matches!(
            Instance::from_bytes(&bad_magic),
            Err(InstanceError::Parse { offset: 0, .. })
        ));
    }

    #[test]
    fn json_sidecar() {
        let inst = generate(12, &ClusterSpec::ExplicitSizes(vec![6, 5, 1]), &bern(0.6), &bern(0.4), 1).unwrap();
        let text = inst.to_json().unwrap();
        assert_eq!(Instance::from_json(&text).unwrap(), inst);
        let big = generate(201, &ClusterSpec::Balanced(2), &bern(0.6), &bern(0.4), 1).unwrap();
        assert!(matches!(big.to_json(), Err(InstanceError::TooLargeForJson(201))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(300, &ClusterSpec::Balanced(7), &bern(0.6), &bern(0.3), 1234).unwrap();
        let b = generate(300, &ClusterSpec::Balanced(7), &bern(0.6), &bern(0.3), 1234).unwrap();
        let c = generate(300, &ClusterSpec::Balanced(7), &bern(0.6), &bern(0.3), 1235).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.side_info, c.side_info);
    }
}
