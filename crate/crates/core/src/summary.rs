//! Posterior summaries of sampled partitions: co-clustering frequencies,
//! variation of information, the VI point estimate and VI credible balls.
//!
//! VI is measured in bits.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Partition;
use crate::sampler::ChainTrace;

/// Posterior co-clustering frequencies `c_vu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoClusteringMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CoClusteringMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize, u: usize) -> f64 {
        self.values[v * self.n + u]
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * self.n..(v + 1) * self.n]
    }
}

/// Distinct sampled partitions with multiplicities, in order of first
/// appearance.
fn deduplicate(samples: &[Partition]) -> Vec<(&Partition, usize)> {
    let mut index: HashMap<&Partition, usize> = HashMap::new();
    let mut out: Vec<(&Partition, usize)> = Vec::new();
    for p in samples {
        match index.get(p) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(p, out.len());
                out.push((p, 1));
            }
        }
    }
    out
}

pub fn co_clustering(trace: &ChainTrace) -> Result<CoClusteringMatrix> {
    let n = trace
        .node_count()
        .ok_or(Error::Empty("co-clustering needs a non-empty trace"))?;
    let mut counts = vec![0usize; n * n];
    for (p, w) in deduplicate(trace.samples()) {
        let labels = p.labels();
        for v in 0..n {
            for u in 0..v {
                if labels[v] == labels[u] {
                    counts[v * n + u] += w;
                }
            }
        }
    }
    let total = trace.len() as f64;
    let mut values = vec![0.0; n * n];
    for v in 0..n {
        values[v * n + v] = 1.0;
        for u in 0..v {
            let c = counts[v * n + u] as f64 / total;
            values[v * n + u] = c;
            values[u * n + v] = c;
        }
    }
    Ok(CoClusteringMatrix { n, values })
}

/// Scratch space for repeated VI evaluations.
#[derive(Debug, Default)]
struct ViScratch {
    table: Vec<u32>,
    p_sizes: Vec<u32>,
    q_sizes: Vec<u32>,
    terms: Vec<f64>,
}

impl ViScratch {
    fn vi(&mut self, p: &Partition, q: &Partition) -> f64 {
        let (hp, hq) = (p.num_groups(), q.num_groups());
        self.table.clear();
        self.table.resize(hp * hq, 0);
        self.p_sizes.clear();
        self.p_sizes.resize(hp, 0);
        self.q_sizes.clear();
        self.q_sizes.resize(hq, 0);
        for (&i, &j) in p.labels().iter().zip(q.labels()) {
            self.table[i * hq + j] += 1;
            self.p_sizes[i] += 1;
            self.q_sizes[j] += 1;
        }
        self.terms.clear();
        for i in 0..hp {
            for j in 0..hq {
                let nij = self.table[i * hq + j];
                if nij == 0 {
                    continue;
                }
                let nij_f = f64::from(nij);
                let t =
                    nij_f * ((f64::from(self.p_sizes[i]) / nij_f).log2() + (f64::from(self.q_sizes[j]) / nij_f).log2());
                self.terms.push(t);
            }
        }
        // sorted summation makes the result independent of argument order and labeling
        self.terms.sort_by(f64::total_cmp);
        self.terms.iter().sum::<f64>() / p.len() as f64
    }
}

/// Variation of information `H(p) + H(q) - 2 I(p, q)` in bits.
pub fn vi_distance(p: &Partition, q: &Partition) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(ViScratch::default().vi(p, q))
}

/// Search space for the VI point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointEstimateSearch {
    /// Minimize over the distinct sampled partitions.
    #[default]
    Sampled,
    /// Start from the sampled minimizer, then apply single-node moves while
    /// they lower the expected VI.
    Greedy,
}

/// VI point estimate together with its posterior expected VI.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub partition: Partition,
    pub expected_vi: f64,
}

fn expected_vi(candidate: &Partition, support: &[(&Partition, usize)], total: f64, scratch: &mut ViScratch) -> f64 {
    let sum: f64 = support.iter().map(|(q, w)| *w as f64 * scratch.vi(candidate, q)).sum();
    sum / total
}

/// Partition with the lowest posterior expected VI to the trace.
pub fn vi_point_estimate(trace: &ChainTrace) -> Result<Partition> {
    Ok(vi_point_estimate_with(trace, PointEstimateSearch::Sampled)?.partition)
}

pub fn vi_point_estimate_with(trace: &ChainTrace, search: PointEstimateSearch) -> Result<PointEstimate> {
    if trace.is_empty() {
        return Err(Error::Empty("point estimate needs a non-empty trace"));
    }
    let support = deduplicate(trace.samples());
    let total = trace.len() as f64;
    let scores: Vec<f64> = support
        .par_iter()
        .map_init(ViScratch::default, |scratch, (c, _)| {
            expected_vi(c, &support, total, scratch)
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let mut estimate = PointEstimate {
        partition: support[best].0.clone(),
        expected_vi: scores[best],
    };
    if search == PointEstimateSearch::Greedy {
        estimate = greedy_refine(estimate, &support, total);
    }
    Ok(estimate)
}

const GREEDY_MAX_PASSES: usize = 100;
const GREEDY_MIN_GAIN: f64 = 1e-12;

fn greedy_refine(mut current: PointEstimate, support: &[(&Partition, usize)], total: f64) -> PointEstimate {
    let n = current.partition.len();
    let mut scratch = ViScratch::default();
    for _ in 0..GREEDY_MAX_PASSES {
        let mut improved = false;
        for v in 0..n {
            let groups = current.partition.num_groups();
            let mut labels = current.partition.labels().to_vec();
            let original = labels[v];
            for target in 0..=groups {
                if target == original {
                    continue;
                }
                labels[v] = target;
                let candidate = Partition::from_labels(&labels).expect("non-empty labels");
                let score = expected_vi(&candidate, support, total, &mut scratch);
                if score < current.expected_vi - GREEDY_MIN_GAIN {
                    current = PointEstimate {
                        partition: candidate,
                        expected_vi: score,
                    };
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    current
}

/// VI ball around a center partition holding at least `level` of the
/// trace mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleBall {
    pub center: Partition,
    pub level: f64,
    pub threshold: f64,
    /// 0-based trace indices inside the ball.
    pub member_indices: Vec<usize>,
}

/// Ball radius is the order statistic `d_(k)` of the distances from the
/// center, `k = ceil((1 - delta) R)`; the ball is closed.
pub fn credible_ball(trace: &ChainTrace, center: &Partition, delta: f64) -> Result<CredibleBall> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let r = trace.len();
    if r == 0 {
        return Err(Error::Empty("credible ball needs a non-empty trace"));
    }
    if let Some(n) = trace.node_count() {
        if n != center.len() {
            return Err(Error::LengthMismatch {
                expected: n,
                found: center.len(),
            });
        }
    }
    let mut scratch = ViScratch::default();
    let distances: Vec<f64> = trace.samples().iter().map(|q| scratch.vi(center, q)).collect();
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let level = 1.0 - delta;
    // guard against (1 - delta) * R landing a hair above an integer
    let k = ((level * r as f64 - 1e-9).ceil() as usize).clamp(1, r);
    let threshold = sorted[k - 1];
    let member_indices = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(CredibleBall {
        center: center.clone(),
        level,
        threshold,
        member_indices,
    })
}

pub fn ball_contains(ball: &CredibleBall, z_star: &Partition) -> Result<bool> {
    Ok(vi_distance(&ball.center, z_star)? <= ball.threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::network::{canonicalize, Network};

    fn p(raw: &[usize]) -> Partition {
        canonicalize(raw).unwrap()
    }

    fn trace(parts: Vec<Partition>) -> ChainTrace {
        let n = parts[0].len();
        ChainTrace::from_partitions(parts, &Network::empty(n).unwrap(), &ModelConfig::default()).unwrap()
    }

    fn three_groups() -> Partition {
        let raw: Vec<usize> = (0..60).map(|v| v / 20).collect();
        p(&raw)
    }

    #[test]
    fn co_clustering_examples() {
        let c = co_clustering(&trace(vec![p(&[1, 1, 2]); 4])).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(1, 2), 0.0);
        let c = co_clustering(&trace(vec![p(&[1, 1]), p(&[1, 2])])).unwrap();
        assert_eq!(c.get(0, 1), 0.5);
        assert_eq!(c.get(1, 0), 0.5);
        for v in 0..2 {
            assert_eq!(c.get(v, v), 1.0);
        }
        assert!(co_clustering(&ChainTrace::new(vec![], vec![]).unwrap()).is_err());
    }

    #[test]
    fn vi_examples() {
        let z0 = three_groups();
        assert_eq!(vi_distance(&z0, &z0).unwrap(), 0.0);
        let split: Vec<usize> = (0..60).map(|v| v / 10).collect();
        assert!((vi_distance(&z0, &p(&split)).unwrap() - 1.0).abs() < 1e-12);
        let merged: Vec<usize> = (0..60).map(|v| usize::from(v >= 20)).collect();
        assert!((vi_distance(&z0, &p(&merged)).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(vi_distance(&z0, &p(&[1, 2])).is_err());
    }

    #[test]
    fn vi_against_entropy_formula() {
        // H(p) + H(q) - 2 I(p, q) with explicit marginal/joint entropies
        let a = p(&[0, 0, 1, 1, 2, 2, 2, 3]);
        let b = p(&[0, 1, 1, 1, 2, 0, 2, 2]);
        let n = a.len() as f64;
        let h = |sizes: Vec<usize>| -> f64 {
            sizes
                .iter()
                .filter(|&&s| s > 0)
                .map(|&s| {
                    let r = s as f64 / n;
                    -r * r.log2()
                })
                .sum()
        };
        let mut joint = HashMap::new();
        for (&i, &j) in a.labels().iter().zip(b.labels()) {
            *joint.entry((i, j)).or_insert(0usize) += 1;
        }
        let hj = h(joint.values().copied().collect());
        let (ha, hb) = (h(a.group_sizes()), h(b.group_sizes()));
        let mutual = ha + hb - hj;
        let expected = ha + hb - 2.0 * mutual;
        assert!((vi_distance(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn point_estimate_examples() {
        let t = trace(vec![p(&[1, 2, 2, 3]); 5]);
        assert_eq!(vi_point_estimate(&t).unwrap(), p(&[1, 2, 2, 3]));

        let mut parts = vec![p(&[1, 1, 2]); 9];
        parts.push(p(&[1, 2, 3]));
        let t = trace(parts);
        // brute force: E[VI] of (1,1,2) is VI/10, of (1,2,3) is 9 VI/10
        assert_eq!(vi_point_estimate(&t).unwrap(), p(&[1, 1, 2]));
    }

    #[test]
    fn point_estimate_tie_breaks_by_first_occurrence() {
        let t = trace(vec![p(&[1, 2, 3]), p(&[1, 1, 1])]);
        let est = vi_point_estimate_with(&t, PointEstimateSearch::Sampled).unwrap();
        assert_eq!(est.partition, p(&[1, 2, 3]));
    }

    #[test]
    fn greedy_never_worse_than_sampled() {
        let parts = vec![
            p(&[1, 1, 2, 2, 3]),
            p(&[1, 1, 2, 2, 2]),
            p(&[1, 2, 2, 2, 3]),
            p(&[1, 1, 1, 2, 3]),
        ];
        let t = trace(parts);
        let sampled = vi_point_estimate_with(&t, PointEstimateSearch::Sampled).unwrap();
        let greedy = vi_point_estimate_with(&t, PointEstimateSearch::Greedy).unwrap();
        assert!(greedy.expected_vi <= sampled.expected_vi);
    }

    #[test]
    fn credible_ball_examples() {
        let c = p(&[1, 1, 2]);
        let ball = credible_ball(&trace(vec![c.clone(); 6]), &c, 0.05).unwrap();
        assert_eq!(ball.threshold, 0.0);
        assert_eq!(ball.member_indices.len(), 6);
        assert!(ball_contains(&ball, &c).unwrap());

        // three samples at distance 0, one at distance 1: 95% needs all four
        let z0 = three_groups();
        let split: Vec<usize> = (0..60).map(|v| v / 10).collect();
        let far = p(&split);
        let t = trace(vec![z0.clone(), z0.clone(), z0.clone(), far.clone()]);
        let ball = credible_ball(&t, &z0, 0.05).unwrap();
        assert!((ball.threshold - 1.0).abs() < 1e-12);
        assert_eq!(ball.member_indices, vec![0, 1, 2, 3]);
        assert!(ball_contains(&ball, &far).unwrap());

        let ball = credible_ball(&t, &z0, 0.3).unwrap();
        assert_eq!(ball.threshold, 0.0);
        assert!(!ball_contains(&ball, &far).unwrap());

        assert!(credible_ball(&t, &z0, 0.0).is_err());
        assert!(credible_ball(&t, &z0, 1.0).is_err());
    }

    #[test]
    fn ball_quantile_rule_is_exact_on_round_levels() {
        // 100 samples, 95 at the center: k = 95 must give radius 0
        let z0 = three_groups();
        let split: Vec<usize> = (0..60).map(|v| v / 10).collect();
        let mut parts = vec![z0.clone(); 95];
        parts.extend(vec![p(&split); 5]);
        let ball = credible_ball(&trace(parts), &z0, 0.05).unwrap();
        assert_eq!(ball.threshold, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn labels(n: usize) -> impl Strategy<Value = Partition> {
            prop::collection::vec(0usize..5, n).prop_map(|raw| canonicalize(&raw).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn vi_is_a_metric((a, b, c) in (1usize..=20).prop_flat_map(|n| (labels(n), labels(n), labels(n)))) {
                let ab = vi_distance(&a, &b).unwrap();
                let ba = vi_distance(&b, &a).unwrap();
                let bc = vi_distance(&b, &c).unwrap();
                let ac = vi_distance(&a, &c).unwrap();
                prop_assert_eq!(ab, ba);
                prop_assert!(ac <= ab + bc + 1e-12);
                prop_assert_eq!(ab == 0.0, a == b);
                prop_assert!(ab >= 0.0 && ab <= (a.len() as f64).log2() + 1e-12);
            }

            #[test]
            fn vi_relabel_invariant(
                raw in prop::collection::vec(0usize..5, 1..20),
                other in prop::collection::vec(0usize..5, 20),
                perm in Just((0usize..5).collect::<Vec<_>>()).prop_shuffle(),
            ) {
                let a = canonicalize(&raw).unwrap();
                let b = canonicalize(&other[..raw.len()]).unwrap();
                let relabeled: Vec<usize> = b.labels().iter().map(|&h| perm[h]).collect();
                // the raw relabeled vector is what a caller would hand in
                let b2 = canonicalize(&relabeled).unwrap();
                prop_assert_eq!(vi_distance(&a, &b).unwrap(), vi_distance(&a, &b2).unwrap());
            }
        }
    }
}
