//! Beta-Bernoulli block model with a Chinese restaurant process prior.
//!
//! Block probabilities are integrated out, so the likelihood of a partition
//! is a product over block pairs of `B(a + m, b + m̄) / B(a, b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{BlockStats, Network, Partition};
use crate::special::{ln_beta_pos, ln_gamma_pos};

/// Hyper-parameters: `Beta(a, b)` on block probabilities and CRP
/// concentration `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            alpha: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn new(a: f64, b: f64, alpha: f64) -> Result<Self> {
        let cfg = Self { a, b, alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("a", self.a), ("b", self.b), ("alpha", self.alpha)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and positive, got {x}")));
            }
        }
        Ok(())
    }

    /// `ln[B(a + m, b + m̄) / B(a, b)]` for one block pair.
    #[inline]
    pub fn block_log_marginal(&self, edges: u64, non_edges: u64) -> f64 {
        ln_beta_pos(self.a + edges as f64, self.b + non_edges as f64) - ln_beta_pos(self.a, self.b)
    }
}

/// Collapsed log-likelihood `ln p(Y | z)` from block statistics.
///
/// Block terms are summed in sorted order, so any relabeling of the same
/// partition produces a bit-identical result.
pub fn log_likelihood(stats: &BlockStats, cfg: &ModelConfig) -> f64 {
    let hn = stats.num_groups();
    let mut terms = Vec::with_capacity(hn * (hn + 1) / 2);
    for h in 0..hn {
        for k in 0..=h {
            terms.push(cfg.block_log_marginal(stats.edges(h, k), stats.non_edges(h, k)));
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Log-likelihood of a partition on a network.
pub fn partition_log_likelihood(net: &Network, part: &Partition, cfg: &ModelConfig) -> Result<f64> {
    Ok(log_likelihood(&BlockStats::compute(net, part)?, cfg))
}

/// Log of the joint CRP mass `α^H ∏(n_h - 1)! / ∏_{v=1..n}(v - 1 + α)`.
pub fn crp_log_pmf(part: &Partition, cfg: &ModelConfig) -> f64 {
    let mut sizes = part.group_sizes();
    sizes.sort_unstable();
    let n = part.len() as f64;
    let groups = part.num_groups() as f64;
    let ln_sizes: f64 = sizes.iter().map(|&s| ln_gamma_pos(s as f64)).sum();
    // ∏_{v=1..n}(v - 1 + α) = Γ(n + α) / Γ(α)
    groups * cfg.alpha.ln() + ln_sizes - (ln_gamma_pos(n + cfg.alpha) - ln_gamma_pos(cfg.alpha))
}

/// Urn weights `ln pr(z_v = h | z_{-v})` for every existing block and, last,
/// a new block.
pub fn crp_predictive_log_weights(sizes: &[u64], n_minus_1: usize, cfg: &ModelConfig) -> Result<Vec<f64>> {
    if sizes.contains(&0) {
        return Err(Error::Domain("block sizes must be positive".into()));
    }
    let total: u64 = sizes.iter().sum();
    if total != n_minus_1 as u64 {
        return Err(Error::Domain(format!(
            "block sizes sum to {total}, expected {n_minus_1}"
        )));
    }
    let denom = (n_minus_1 as f64 + cfg.alpha).ln();
    Ok(sizes
        .iter()
        .map(|&s| (s as f64).ln() - denom)
        .chain(std::iter::once(cfg.alpha.ln() - denom))
        .collect())
}

/// Posterior-mean block probabilities given a fixed partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockProbEstimate {
    theta: Vec<Vec<f64>>,
}

impl BlockProbEstimate {
    pub fn num_groups(&self) -> usize {
        self.theta.len()
    }

    pub fn get(&self, h: usize, k: usize) -> f64 {
        self.theta[h][k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.theta
    }
}

/// `θ̂_hk = (a + m_hk) / (a + b + m_hk + m̄_hk)`.
pub fn plug_in_theta(stats: &BlockStats, cfg: &ModelConfig) -> BlockProbEstimate {
    let hn = stats.num_groups();
    let theta = (0..hn)
        .map(|h| {
            (0..hn)
                .map(|k| {
                    let m = stats.edges(h, k) as f64;
                    let mbar = stats.non_edges(h, k) as f64;
                    (cfg.a + m) / (cfg.a + m + cfg.b + mbar)
                })
                .collect()
        })
        .collect();
    BlockProbEstimate { theta }
}

/// Probability threshold above which a pair is predicted to be an edge.
pub const EDGE_THRESHOLD: f64 = 0.5;

/// Fraction of node pairs whose edge indicator disagrees with the
/// prediction `θ̂_{z_v z_u} >= 0.5`.
pub fn misclassification_error(net: &Network, part: &Partition, est: &BlockProbEstimate) -> Result<f64> {
    if part.len() != net.n() {
        return Err(Error::LengthMismatch {
            expected: net.n(),
            found: part.len(),
        });
    }
    if est.num_groups() != part.num_groups() {
        return Err(Error::LengthMismatch {
            expected: part.num_groups(),
            found: est.num_groups(),
        });
    }
    let pairs = net.pair_count();
    if pairs == 0 {
        return Ok(0.0);
    }
    let labels = part.labels();
    let mut wrong = 0usize;
    for v in 1..net.n() {
        let row = net.row(v);
        for u in 0..v {
            let predicted = est.get(labels[v], labels[u]) >= EDGE_THRESHOLD;
            if predicted != (row[u] != 0) {
                wrong += 1;
            }
        }
    }
    Ok(wrong as f64 / pairs as f64)
}

/// Precomputed `ln Γ(a + i)`, `ln Γ(b + i)`, `ln Γ(a + b + i)` so that block
/// marginals with integer counts cost three table lookups.
#[derive(Debug, Clone)]
pub(crate) struct LogBetaCache {
    cfg: ModelConfig,
    ln_gamma_a: Vec<f64>,
    ln_gamma_b: Vec<f64>,
    ln_gamma_ab: Vec<f64>,
    ln_beta_prior: f64,
}

const CACHE_LIMIT: usize = 1 << 20;

impl LogBetaCache {
    pub(crate) fn new(cfg: &ModelConfig, max_count: usize) -> Self {
        let len = max_count.min(CACHE_LIMIT) + 1;
        let table = |offset: f64| (0..len).map(|i| ln_gamma_pos(offset + i as f64)).collect();
        Self {
            cfg: *cfg,
            ln_gamma_a: table(cfg.a),
            ln_gamma_b: table(cfg.b),
            ln_gamma_ab: table(cfg.a + cfg.b),
            ln_beta_prior: ln_beta_pos(cfg.a, cfg.b),
        }
    }

    /// `ln B(a + m, b + m̄)`.
    #[inline]
    pub(crate) fn ln_beta(&self, edges: u64, non_edges: u64) -> f64 {
        let (m, mbar) = (edges as usize, non_edges as usize);
        if m + mbar < self.ln_gamma_ab.len() {
            self.ln_gamma_a[m] + self.ln_gamma_b[mbar] - self.ln_gamma_ab[m + mbar]
        } else {
            ln_beta_pos(self.cfg.a + edges as f64, self.cfg.b + non_edges as f64)
        }
    }

    #[inline]
    pub(crate) fn ln_beta_prior(&self) -> f64 {
        self.ln_beta_prior
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::canonicalize;
    use crate::special::ln_beta;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn likelihood_examples() {
        let cfg = ModelConfig::default();
        let pair = Network::from_edges(2, &[(0, 1)]).unwrap();
        let ll = partition_log_likelihood(&pair, &canonicalize(&[1, 1]).unwrap(), &cfg).unwrap();
        assert!(close(ll, 0.5f64.ln()));

        let tri = Network::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let ll = partition_log_likelihood(&tri, &Partition::single_cluster(3).unwrap(), &cfg).unwrap();
        assert!(close(ll, 0.25f64.ln()));

        let one = Network::empty(1).unwrap();
        let ll = partition_log_likelihood(&one, &Partition::single_cluster(1).unwrap(), &cfg).unwrap();
        assert_eq!(ll, 0.0);
    }

    #[test]
    fn crp_pmf_examples() {
        let cfg = ModelConfig::default();
        assert!(crp_log_pmf(&Partition::single_cluster(1).unwrap(), &cfg).abs() < 1e-14);
        let p = canonicalize(&[1, 1, 2]).unwrap();
        assert!(close(crp_log_pmf(&p, &cfg), (1.0f64 / 6.0).ln()));
        let p = canonicalize(&[1, 1]).unwrap();
        assert!(close(crp_log_pmf(&p, &cfg), 0.5f64.ln()));
    }

    #[test]
    fn crp_pmf_matches_sequential_product() {
        // Direct α^H ∏(n_h-1)! / ∏(v-1+α) with explicit loops.
        let cfg = ModelConfig::new(1.0, 1.0, 2.5).unwrap();
        let p = canonicalize(&[1, 2, 1, 3, 3, 3, 1]).unwrap();
        let mut direct = 1.0f64;
        for _ in 0..p.num_groups() {
            direct *= cfg.alpha;
        }
        for s in p.group_sizes() {
            for j in 1..s {
                direct *= j as f64;
            }
        }
        for v in 1..=p.len() {
            direct /= v as f64 - 1.0 + cfg.alpha;
        }
        assert!((crp_log_pmf(&p, &cfg) - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn predictive_weight_examples() {
        let cfg = ModelConfig::default();
        let w: Vec<f64> = crp_predictive_log_weights(&[2], 2, &cfg)
            .unwrap()
            .iter()
            .map(|x| x.exp())
            .collect();
        assert!(close(w[0], 2.0 / 3.0) && close(w[1], 1.0 / 3.0));

        let cfg = ModelConfig::new(1.0, 1.0, 2.0).unwrap();
        let w: Vec<f64> = crp_predictive_log_weights(&[1, 1], 2, &cfg)
            .unwrap()
            .iter()
            .map(|x| x.exp())
            .collect();
        assert!(close(w[0], 0.25) && close(w[1], 0.25) && close(w[2], 0.5));

        assert!(crp_predictive_log_weights(&[1, 1], 3, &cfg).is_err());
        assert!(crp_predictive_log_weights(&[0, 2], 2, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelConfig::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelConfig::new(1.0, 1.0, f64::NAN).is_err());
        assert!(ModelConfig::new(0.5, 2.0, 0.1).is_ok());
    }

    #[test]
    fn plug_in_examples() {
        let cfg = ModelConfig::default();
        // n=5 single block: 10 pairs; 8 edges, 2 non-edges
        let edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3)];
        let net = Network::from_edges(5, &edges).unwrap();
        let stats = BlockStats::compute(&net, &Partition::single_cluster(5).unwrap()).unwrap();
        assert!(close(plug_in_theta(&stats, &cfg).get(0, 0), 0.75));

        let tri = Network::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let stats = BlockStats::compute(&tri, &Partition::single_cluster(3).unwrap()).unwrap();
        assert!(close(plug_in_theta(&stats, &cfg).get(0, 0), 0.8));

        let stats = BlockStats::compute(&tri, &Partition::singletons(3).unwrap()).unwrap();
        let est = plug_in_theta(&stats, &cfg);
        assert!(close(est.get(0, 0), 0.5));
        assert!(close(est.get(1, 0), 2.0 / 3.0));
    }

    #[test]
    fn misclassification_examples() {
        let cfg = ModelConfig::default();
        let tri = Network::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let part = Partition::single_cluster(3).unwrap();
        let est = plug_in_theta(&BlockStats::compute(&tri, &part).unwrap(), &cfg);
        assert_eq!(misclassification_error(&tri, &part, &est).unwrap(), 0.0);

        let empty = Network::empty(4).unwrap();
        let part = Partition::single_cluster(4).unwrap();
        let est = plug_in_theta(&BlockStats::compute(&empty, &part).unwrap(), &cfg);
        assert!(est.get(0, 0) < 0.5);
        assert_eq!(misclassification_error(&empty, &part, &est).unwrap(), 0.0);

        // path 0-1-2 in one block: θ̂ = 3/5, every pair predicted an edge, one wrong
        let path = Network::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let part = Partition::single_cluster(3).unwrap();
        let est = plug_in_theta(&BlockStats::compute(&path, &part).unwrap(), &cfg);
        assert!(close(misclassification_error(&path, &part, &est).unwrap(), 1.0 / 3.0));
    }

    #[test]
    fn single_block_marginal_matches_polya_urn() {
        // B(a+m, b+m̄)/B(a,b) equals the sequential Beta-Bernoulli predictive product.
        let cfg = ModelConfig::new(1.7, 0.6, 1.0).unwrap();
        for (m, mbar) in [(0u64, 0u64), (3, 0), (0, 4), (5, 7), (20, 3)] {
            let mut ln_seq = 0.0;
            let (mut s, mut t) = (0.0, 0.0);
            for _ in 0..m {
                ln_seq += ((cfg.a + s) / (cfg.a + cfg.b + t)).ln();
                s += 1.0;
                t += 1.0;
            }
            for _ in 0..mbar {
                ln_seq += ((cfg.b + (t - s)) / (cfg.a + cfg.b + t)).ln();
                t += 1.0;
            }
            assert!(
                (cfg.block_log_marginal(m, mbar) - ln_seq).abs() < 1e-11,
                "m={m} mbar={mbar}"
            );
        }
    }

    #[test]
    fn likelihood_is_a_distribution_over_edge_configurations() {
        // Summing p(Y | z) over all 2^pairs networks gives 1.
        let cfg = ModelConfig::new(0.8, 1.3, 1.0).unwrap();
        let cases: [&[u8]; 5] = [&[1, 1, 1], &[1, 2, 1], &[1, 1, 1, 1], &[1, 1, 2, 2], &[1, 2, 3, 1]];
        for raw in cases {
            let n = raw.len();
            let part = canonicalize(raw).unwrap();
            let pairs: Vec<(usize, usize)> = (1..n).flat_map(|v| (0..v).map(move |u| (v, u))).collect();
            let mut total = 0.0;
            for mask in 0..(1u32 << pairs.len()) {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &e)| e)
                    .collect();
                let net = Network::from_edges(n, &edges).unwrap();
                total += partition_log_likelihood(&net, &part, &cfg).unwrap().exp();
            }
            assert!((total - 1.0).abs() < 1e-12, "{raw:?}: {total}");
        }
    }

    #[test]
    fn likelihood_relabeling_is_bit_exact() {
        let cfg = ModelConfig::new(1.3, 0.7, 1.0).unwrap();
        let net = Network::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)]).unwrap();
        let raw = [0usize, 0, 1, 2, 2, 1];
        let base = log_likelihood(&BlockStats::compute_with_labels(&net, &raw).unwrap(), &cfg);
        for perm in [[2usize, 0, 1], [1, 2, 0], [2, 1, 0]] {
            let relabeled: Vec<usize> = raw.iter().map(|&h| perm[h] * 10 + 3).collect();
            let stats = BlockStats::compute_with_labels(&net, &relabeled).unwrap();
            assert_eq!(log_likelihood(&stats, &cfg).to_bits(), base.to_bits());
        }
    }

    #[test]
    fn cache_agrees_with_direct_beta() {
        let cfg = ModelConfig::new(0.7, 2.2, 1.0).unwrap();
        let cache = LogBetaCache::new(&cfg, 50);
        for (m, mbar) in [(0u64, 0u64), (10, 40), (49, 1), (200, 300)] {
            let direct = ln_beta(cfg.a + m as f64, cfg.b + mbar as f64).unwrap();
            assert!((cache.ln_beta(m, mbar) - direct).abs() < 1e-12);
        }
        assert!((cache.ln_beta_prior() - ln_beta(0.7, 2.2).unwrap()).abs() < 1e-15);
    }
}
