//! Networks, partitions and block sufficient statistics.
//!
//! Labels are 0-based inside the crate. File formats and user-facing output
//! shift them to 1-based.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected binary network without self-loops, stored as a dense
/// symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    n: usize,
    adjacency: Vec<u8>,
}

impl Network {
    /// Network on `n` nodes with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork("a network needs at least one node".into()));
        }
        Ok(Self {
            n,
            adjacency: vec![0; n * n],
        })
    }

    /// Builds a network from a square 0/1 matrix. The matrix must be
    /// symmetric with a zero diagonal; violations are rejected, never repaired.
    pub fn from_adjacency(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut net = Self::empty(n)?;
        for (v, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidNetwork(format!(
                    "row {} has {} entries, expected {n}",
                    v + 1,
                    row.len()
                )));
            }
            for (u, &y) in row.iter().enumerate() {
                if y > 1 {
                    return Err(Error::InvalidNetwork(format!(
                        "entry ({}, {}) is {y}, expected 0 or 1",
                        v + 1,
                        u + 1
                    )));
                }
                net.adjacency[v * n + u] = y;
            }
        }
        net.validate()?;
        Ok(net)
    }

    /// Builds a network from 0-based undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::empty(n)?;
        for &(v, u) in edges {
            if v >= n || u >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({v}, {u}) references a node outside 0..{n}"
                )));
            }
            if v == u {
                return Err(Error::InvalidNetwork(format!("self-loop on node {v}")));
            }
            net.set_edge(v, u, true);
        }
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        for v in 0..self.n {
            if self.adjacency[v * self.n + v] != 0 {
                return Err(Error::InvalidNetwork(format!("self-loop on node {}", v + 1)));
            }
            for u in 0..v {
                if self.adjacency[v * self.n + u] != self.adjacency[u * self.n + v] {
                    return Err(Error::InvalidNetwork(format!(
                        "asymmetric entries at ({}, {})",
                        v + 1,
                        u + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, v: usize, u: usize) -> bool {
        self.adjacency[v * self.n + u] != 0
    }

    /// Adjacency row of node `v`.
    #[inline]
    pub fn row(&self, v: usize) -> &[u8] {
        &self.adjacency[v * self.n..(v + 1) * self.n]
    }

    /// Sets or clears the undirected edge between two distinct nodes.
    pub fn set_edge(&mut self, v: usize, u: usize, present: bool) {
        assert!(v != u, "self-loops are not allowed");
        let y = u8::from(present);
        self.adjacency[v * self.n + u] = y;
        self.adjacency[u * self.n + v] = y;
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|v| self.row(v)[..v].iter().filter(|&&y| y != 0).count())
            .sum()
    }

    /// Number of unordered node pairs, `n(n-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Adjacency as nested rows.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|v| self.row(v).to_vec()).collect()
    }

    /// Subnetwork induced by deleting node `v`.
    pub fn without_node(&self, v: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(Error::InvalidNetwork("cannot delete the only node".into()));
        }
        let rows: Vec<Vec<u8>> = (0..self.n)
            .filter(|&r| r != v)
            .map(|r| {
                self.row(r)
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != v)
                    .map(|(_, &y)| y)
                    .collect()
            })
            .collect();
        Self::from_adjacency(&rows)
    }
}

/// A set partition of the nodes in canonical form: labels are `0..H` and
/// label `k` first appears before label `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    num_groups: usize,
}

/// Relabels any sequence by order of first appearance.
pub fn canonicalize<T: Eq + Hash + Copy>(raw: &[T]) -> Result<Partition> {
    Partition::from_labels(raw)
}

impl Partition {
    pub fn from_labels<T: Eq + Hash + Copy>(raw: &[T]) -> Result<Self> {
        Ok(Self::from_labels_with_map(raw)?.0)
    }

    /// Canonicalizes `raw` and returns the original-to-canonical map as
    /// `(original, canonical)` pairs in order of first appearance.
    pub fn from_labels_with_map<T: Eq + Hash + Copy>(raw: &[T]) -> Result<(Self, Vec<(T, usize)>)> {
        if raw.is_empty() {
            return Err(Error::Empty("a partition needs at least one node"));
        }
        let mut map: HashMap<T, usize> = HashMap::new();
        let mut order = Vec::new();
        let labels = raw
            .iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert_with(|| {
                    order.push((*x, next));
                    next
                })
            })
            .collect();
        Ok((
            Self {
                labels,
                num_groups: map.len(),
            },
            order,
        ))
    }

    /// Every node in its own group.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    /// All nodes in one group.
    pub fn single_cluster(n: usize) -> Result<Self> {
        Self::from_labels(&vec![0usize; n])
    }

    /// Wraps labels that are already canonical. Callers guarantee the form.
    pub(crate) fn from_canonical_unchecked(labels: Vec<usize>, num_groups: usize) -> Self {
        debug_assert!(is_canonical(&labels));
        Self { labels, num_groups }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Labels shifted to `1..=H`.
    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|h| h + 1).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_groups];
        for &h in &self.labels {
            sizes[h] += 1;
        }
        sizes
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.num_groups];
        self.labels
            .iter()
            .zip(&coarser.labels)
            .all(|(&fine, &coarse)| match image[fine] {
                usize::MAX => {
                    image[fine] = coarse;
                    true
                }
                seen => seen == coarse,
            })
    }
}

pub(crate) fn is_canonical(labels: &[usize]) -> bool {
    let mut next = 0;
    for &h in labels {
        if h == next {
            next += 1;
        } else if h > next {
            return false;
        }
    }
    true
}

/// Edge and non-edge counts for every pair of blocks, plus block sizes.
///
/// Each matrix is symmetric; the diagonal counts pairs inside a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    edges: Vec<Vec<u64>>,
    non_edges: Vec<Vec<u64>>,
    sizes: Vec<u64>,
}

impl BlockStats {
    /// Statistics of `part` on `net`, counted from scratch.
    pub fn compute(net: &Network, part: &Partition) -> Result<Self> {
        if part.len() != net.n() {
            return Err(Error::LengthMismatch {
                expected: net.n(),
                found: part.len(),
            });
        }
        Ok(Self::from_labels(net, part.labels(), part.num_groups(), None))
    }

    /// Statistics for arbitrary integer labels. Blocks are ordered by
    /// ascending label value rather than first appearance.
    pub fn compute_with_labels(net: &Network, labels: &[usize]) -> Result<Self> {
        if labels.len() != net.n() {
            return Err(Error::LengthMismatch {
                expected: net.n(),
                found: labels.len(),
            });
        }
        let mut distinct = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let compact: Vec<usize> = labels
            .iter()
            .map(|h| distinct.binary_search(h).expect("label present"))
            .collect();
        Ok(Self::from_labels(net, &compact, distinct.len(), None))
    }

    /// Counts over contiguous labels `0..num_groups`, skipping `skip`.
    pub(crate) fn from_labels(net: &Network, labels: &[usize], num_groups: usize, skip: Option<usize>) -> Self {
        let mut stats = Self {
            edges: vec![vec![0; num_groups]; num_groups],
            non_edges: vec![vec![0; num_groups]; num_groups],
            sizes: vec![0; num_groups],
        };
        for v in 0..net.n() {
            if Some(v) == skip {
                continue;
            }
            let hv = labels[v];
            stats.sizes[hv] += 1;
            let row = net.row(v);
            for u in 0..v {
                if Some(u) == skip {
                    continue;
                }
                let hu = labels[u];
                if row[u] != 0 {
                    stats.edges[hv][hu] += 1;
                } else {
                    stats.non_edges[hv][hu] += 1;
                }
            }
        }
        // fold lower and upper triangles into a symmetric matrix
        for h in 0..num_groups {
            for k in 0..h {
                let e = stats.edges[h][k] + stats.edges[k][h];
                let ne = stats.non_edges[h][k] + stats.non_edges[k][h];
                stats.edges[h][k] = e;
                stats.edges[k][h] = e;
                stats.non_edges[h][k] = ne;
                stats.non_edges[k][h] = ne;
            }
        }
        stats
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn edges(&self, h: usize, k: usize) -> u64 {
        self.edges[h][k]
    }

    #[inline]
    pub fn non_edges(&self, h: usize, k: usize) -> u64 {
        self.non_edges[h][k]
    }

    #[inline]
    pub fn size(&self, h: usize) -> u64 {
        self.sizes[h]
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn node_count(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Number of node pairs between blocks `h` and `k` (inside `h` if equal).
    pub fn pairs(&self, h: usize, k: usize) -> u64 {
        if h == k {
            self.sizes[h] * self.sizes[h].saturating_sub(1) / 2
        } else {
            self.sizes[h] * self.sizes[k]
        }
    }

    /// Checks the count-conservation invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let hn = self.num_groups();
        for h in 0..hn {
            if self.sizes[h] == 0 {
                return Err(Error::Inconsistent(format!("block {h} is empty")));
            }
            for k in 0..hn {
                if self.edges[h][k] != self.edges[k][h] || self.non_edges[h][k] != self.non_edges[k][h] {
                    return Err(Error::Inconsistent(format!("asymmetric counts at ({h}, {k})")));
                }
                if self.edges[h][k] + self.non_edges[h][k] != self.pairs(h, k) {
                    return Err(Error::Inconsistent(format!(
                        "counts at ({h}, {k}) do not add up to the pair count"
                    )));
                }
            }
        }
        Ok(())
    }

    fn push_group(&mut self) {
        for row in self.edges.iter_mut().chain(self.non_edges.iter_mut()) {
            row.push(0);
        }
        let width = self.sizes.len() + 1;
        self.edges.push(vec![0; width]);
        self.non_edges.push(vec![0; width]);
        self.sizes.push(0);
    }

    fn remove_group(&mut self, h: usize) {
        for row in self.edges.iter_mut().chain(self.non_edges.iter_mut()) {
            row.remove(h);
        }
        self.edges.remove(h);
        self.non_edges.remove(h);
        self.sizes.remove(h);
    }

    /// Reorders blocks so that new block `i` is old block `order[i]`.
    fn permute(&mut self, order: &[usize]) {
        let pick = |m: &Vec<Vec<u64>>| -> Vec<Vec<u64>> {
            order
                .iter()
                .map(|&h| order.iter().map(|&k| m[h][k]).collect())
                .collect()
        };
        self.edges = pick(&self.edges);
        self.non_edges = pick(&self.non_edges);
        self.sizes = order.iter().map(|&h| self.sizes[h]).collect();
    }
}

/// Placeholder label for a node that has been taken out of the assignment.
pub const UNASSIGNED: usize = usize::MAX;

/// Mutable cluster assignment with incrementally maintained block
/// statistics. At most one node is detached at a time, which is exactly
/// what a single-site Gibbs update needs.
#[derive(Debug, Clone)]
pub struct Assignment {
    labels: Vec<usize>,
    stats: BlockStats,
    detached: Option<usize>,
}

impl Assignment {
    pub fn new(net: &Network, part: &Partition) -> Result<Self> {
        let stats = BlockStats::compute(net, part)?;
        Ok(Self {
            labels: part.labels().to_vec(),
            stats,
            detached: None,
        })
    }

    pub fn stats(&self) -> &BlockStats {
        &self.stats
    }

    /// Current labels; the detached node, if any, holds [`UNASSIGNED`].
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn detached(&self) -> Option<usize> {
        self.detached
    }

    pub fn num_groups(&self) -> usize {
        self.stats.num_groups()
    }

    /// Canonical partition of the current labels.
    pub fn partition(&self) -> Result<Partition> {
        if let Some(v) = self.detached {
            return Err(Error::Inconsistent(format!("node {v} is detached")));
        }
        Partition::from_labels(&self.labels)
    }

    /// Counts the neighbours of `v` in every block, ignoring `v` itself and
    /// any detached node.
    pub fn neighbor_counts(&self, net: &Network, v: usize, out: &mut Vec<u64>) {
        out.clear();
        out.resize(self.num_groups(), 0);
        for (u, &y) in net.row(v).iter().enumerate() {
            if y != 0 && u != v {
                let h = self.labels[u];
                if h != UNASSIGNED {
                    out[h] += 1;
                }
            }
        }
    }

    /// Detaches node `v`. If its block becomes empty the block is dropped
    /// and the remaining labels are put back into canonical order.
    pub fn remove_node(&mut self, net: &Network, v: usize) -> Result<()> {
        if v >= self.labels.len() {
            return Err(Error::Domain(format!("node {v} out of range")));
        }
        if let Some(d) = self.detached {
            return Err(Error::Inconsistent(format!("node {d} is already detached")));
        }
        let hv = self.labels[v];
        let mut counts = Vec::new();
        self.neighbor_counts(net, v, &mut counts);
        for (k, &e) in counts.iter().enumerate() {
            let others = if k == hv {
                self.stats.sizes[k] - 1
            } else {
                self.stats.sizes[k]
            };
            let ne = others
                .checked_sub(e)
                .ok_or_else(|| Error::Inconsistent(format!("block {k} has fewer nodes than neighbours of {v}")))?;
            let sub = |m: &mut Vec<Vec<u64>>, x: u64| -> Result<()> {
                let cell = m[hv][k]
                    .checked_sub(x)
                    .ok_or_else(|| Error::Inconsistent(format!("negative count at ({hv}, {k})")))?;
                m[hv][k] = cell;
                m[k][hv] = cell;
                Ok(())
            };
            sub(&mut self.stats.edges, e)?;
            sub(&mut self.stats.non_edges, ne)?;
        }
        self.stats.sizes[hv] -= 1;
        self.labels[v] = UNASSIGNED;
        self.detached = Some(v);
        if self.stats.sizes[hv] == 0 {
            self.stats.remove_group(hv);
            self.recanonicalize(hv);
        }
        Ok(())
    }

    /// Drops the label gap left by removed block `gone` and restores
    /// first-appearance order among the attached nodes.
    fn recanonicalize(&mut self, gone: usize) {
        let hn = self.stats.num_groups();
        let mut new_of_old = vec![UNASSIGNED; hn];
        let mut order = Vec::with_capacity(hn);
        for label in self.labels.iter_mut() {
            if *label == UNASSIGNED {
                continue;
            }
            if *label > gone {
                *label -= 1;
            }
            if new_of_old[*label] == UNASSIGNED {
                new_of_old[*label] = order.len();
                order.push(*label);
            }
            *label = new_of_old[*label];
        }
        self.stats.permute(&order);
    }

    /// Attaches the detached node `v` to block `h`; `h == num_groups()`
    /// opens a new block.
    pub fn insert_node(&mut self, net: &Network, v: usize, h: usize) -> Result<()> {
        if self.detached != Some(v) {
            return Err(Error::Inconsistent(format!("node {v} is not detached")));
        }
        let hn = self.num_groups();
        if h > hn {
            return Err(Error::Domain(format!("target block {h} out of range 0..={hn}")));
        }
        let mut counts = Vec::new();
        self.neighbor_counts(net, v, &mut counts);
        self.apply_insert(v, h, &counts);
        Ok(())
    }

    /// Insertion with neighbour counts already computed against the
    /// detached state.
    pub(crate) fn apply_insert(&mut self, v: usize, h: usize, counts: &[u64]) {
        debug_assert_eq!(self.detached, Some(v));
        if h == self.num_groups() {
            self.stats.push_group();
        }
        for (k, &e) in counts.iter().enumerate() {
            let ne = self.stats.sizes[k] - e;
            let add = |m: &mut Vec<Vec<u64>>, x: u64| {
                let cell = m[h][k] + x;
                m[h][k] = cell;
                m[k][h] = cell;
            };
            add(&mut self.stats.edges, e);
            add(&mut self.stats.non_edges, ne);
        }
        self.stats.sizes[h] += 1;
        self.labels[v] = h;
        self.detached = None;
    }

    /// Compares the maintained statistics against a from-scratch count.
    pub fn audit(&self, net: &Network) -> Result<()> {
        let fresh = BlockStats::from_labels(net, &self.labels, self.num_groups(), self.detached);
        if fresh != self.stats {
            return Err(Error::Inconsistent(
                "incremental block statistics diverged from a fresh count".into(),
            ));
        }
        self.stats.check_invariants()
    }
}
