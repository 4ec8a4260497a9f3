//! Ground-truth partitions and comparison of recovered clusterings against them.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("label {label} of element {element} is not below k = {k}")]
    LabelOutOfRange { element: usize, label: u32, k: usize },
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("a partition needs at least one cluster")]
    NoClusters,
}

/// A partition of `0..n` into `k` nonempty blocks, stored as one label per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    k: usize,
}

impl Partition {
    pub fn from_labels(labels: Vec<u32>, k: usize) -> Result<Self, PartitionError> {
        if k == 0 {
            return Err(PartitionError::NoClusters);
        }
        let mut seen = vec![false; k];
        for (element, &label) in labels.iter().enumerate() {
            match seen.get_mut(label as usize) {
                Some(s) => *s = true,
                None => return Err(PartitionError::LabelOutOfRange { element, label, k }),
            }
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(PartitionError::EmptyCluster(empty));
        }
        Ok(Self { labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn same(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Blocks indexed by label, members in increasing order.
    pub fn blocks(&self) -> Vec<Vec<u32>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(v as u32);
        }
        blocks
    }

    /// Blocks in canonical form: members sorted, blocks ordered by smallest member.
    pub fn canonical_blocks(&self) -> Vec<Vec<u32>> {
        canonicalize(self.blocks())
    }

    /// Number of elements that a recovered clustering puts in the wrong place.
    ///
    /// An element counts as misassigned when its recovered cluster's dominant
    /// true label differs from its own label, or when its true cluster's
    /// dominant recovered cluster is not the one it sits in. Unclustered
    /// elements always count. The result is zero iff `recovered` equals the
    /// partition exactly.
    pub fn misassigned(&self, recovered: &[Vec<u32>]) -> usize {
        let n = self.n();
        let mut out_of = vec![usize::MAX; n];
        for (c, members) in recovered.iter().enumerate() {
            for &v in members {
                out_of[v as usize] = c;
            }
        }
        let mut overlap: HashMap<(usize, u32), usize> = HashMap::new();
        for v in 0..n {
            if out_of[v] != usize::MAX {
                *overlap.entry((out_of[v], self.labels[v])).or_default() += 1;
            }
        }
        // Dominant label per recovered cluster and dominant cluster per label;
        // ties go to the smaller index.
        let mut dom_label: HashMap<usize, (usize, u32)> = HashMap::new();
        let mut dom_cluster: HashMap<u32, (usize, usize)> = HashMap::new();
        let mut keys: Vec<_> = overlap.iter().map(|(&k, &c)| (k, c)).collect();
        keys.sort_unstable();
        for ((c, l), count) in keys {
            let e = dom_label.entry(c).or_insert((count, l));
            if count > e.0 {
                *e = (count, l);
            }
            let e = dom_cluster.entry(l).or_insert((count, c));
            if count > e.0 {
                *e = (count, c);
            }
        }
        (0..n)
            .filter(|&v| {
                let c = out_of[v];
                if c == usize::MAX {
                    return true;
                }
                let l = self.labels[v];
                dom_label[&c].1 != l || dom_cluster[&l].1 != c
            })
            .count()
    }
}

/// Sorts members within each block and blocks by their smallest member.
pub fn canonicalize(mut blocks: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    blocks.retain(|b| !b.is_empty());
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    blocks
}
