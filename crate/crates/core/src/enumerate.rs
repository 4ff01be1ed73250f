//! Exhaustive enumeration of set partitions as restricted growth strings.
//!
//! A restricted growth string `a` has `a[0] = 0` and
//! `a[i] <= 1 + max(a[0..i])`, which is exactly the canonical label form
//! used by [`Partition`]. Strings are produced in lexicographic order.

use crate::network::Partition;

/// Iterator over every partition of `{0, .., n-1}`.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    labels: Vec<usize>,
    // prefix_max[i] = max(labels[0..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }

    fn advance(&mut self) {
        let n = self.labels.len();
        for i in (1..n).rev() {
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for SetPartitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let groups = self.prefix_max.last().map_or(0, |m| m + 1);
        let out = Partition::from_canonical_unchecked(self.labels.clone(), groups);
        self.advance();
        Some(out)
    }
}

/// Bell number `B(n)`, the count of partitions of an `n`-set, via the
/// Bell triangle. Saturates at `u64::MAX`.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let prev = *next.last().unwrap();
            next.push(prev.saturating_add(x));
        }
        row = next;
    }
    row[0]
}
