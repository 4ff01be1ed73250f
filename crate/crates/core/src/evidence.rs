//! Marginal likelihoods and Bayes factors between the CRP block model and a
//! block model with a fixed exogenous partition.
//!
//! Bayes factors are reported as `2 ln B` with natural logs and classified
//! with the Kass–Raftery bands at 0, 2, 6 and 10.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::enumerate::SetPartitions;
use crate::error::{Error, Result};
use crate::model::{crp_log_pmf, log_likelihood, partition_log_likelihood, ModelConfig};
use crate::network::{BlockStats, Network, Partition};
use crate::sampler::ChainTrace;
use crate::special::LogSumExpAccumulator;

/// Largest network accepted by [`exact_log_evidence`].
pub const MAX_EXACT_NODES: usize = 12;

/// Kass–Raftery strength of evidence for `2 ln B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceCategory {
    Negative,
    Weak,
    Positive,
    Strong,
    VeryStrong,
}

impl EvidenceCategory {
    pub fn from_two_log_bf(x: f64) -> Self {
        if x < 0.0 {
            Self::Negative
        } else if x < 2.0 {
            Self::Weak
        } else if x < 6.0 {
            Self::Positive
        } else if x < 10.0 {
            Self::Strong
        } else {
            Self::VeryStrong
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Negative => "negative",
            Self::Weak => "weak",
            Self::Positive => "positive",
            Self::Strong => "strong",
            Self::VeryStrong => "very strong",
        }
    }
}

impl fmt::Display for EvidenceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of testing one exogenous partition against the CRP model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    /// `ln p̂(Y | M)`, harmonic-mean estimate under the CRP model.
    pub log_evidence_endogenous: f64,
    /// `ln p(Y | M*)`, closed form under the fixed partition.
    pub log_evidence_exogenous: f64,
    /// `2 ln B_{M,M*}`.
    pub two_log_bf: f64,
    pub category: EvidenceCategory,
    /// `ln p(M) - ln p(M*)`.
    pub prior_log_odds: f64,
    /// `2 ln` of the posterior odds, i.e. `two_log_bf + 2 * prior_log_odds`.
    pub two_log_posterior_odds: f64,
}

impl EvidenceReport {
    pub fn from_log_evidences(endogenous: f64, exogenous: f64, prior_log_odds: f64) -> Self {
        let two_log_bf = 2.0 * (endogenous - exogenous);
        Self {
            log_evidence_endogenous: endogenous,
            log_evidence_exogenous: exogenous,
            two_log_bf,
            category: EvidenceCategory::from_two_log_bf(two_log_bf),
            prior_log_odds,
            two_log_posterior_odds: two_log_bf + 2.0 * prior_log_odds,
        }
    }
}

/// `ln p(Y | z*)`.
pub fn exogenous_log_evidence(net: &Network, z_star: &Partition, cfg: &ModelConfig) -> Result<f64> {
    partition_log_likelihood(net, z_star, cfg)
}

/// Harmonic-mean estimate `-ln[(1/R) Σ_r exp(-ℓ_r)]`.
pub fn harmonic_mean_log_evidence(trace: &ChainTrace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::Empty("harmonic mean needs a non-empty trace"));
    }
    let mut acc = LogSumExpAccumulator::new();
    for &ll in trace.log_lik() {
        acc.push(-ll);
    }
    Ok(finish_harmonic(&acc))
}

fn finish_harmonic(acc: &LogSumExpAccumulator) -> f64 {
    -(acc.value() - (acc.count() as f64).ln())
}

/// Running harmonic-mean estimate over the first `r` samples, `r = 1..=R`.
pub fn harmonic_mean_trajectory(trace: &ChainTrace) -> Vec<f64> {
    let mut acc = LogSumExpAccumulator::new();
    trace
        .log_lik()
        .iter()
        .map(|&ll| {
            acc.push(-ll);
            finish_harmonic(&acc)
        })
        .collect()
}

/// `ln Σ_z p(Y | z) p(z)` by enumerating every partition. Only for tiny
/// networks; the sum runs sequentially in lexicographic partition order.
pub fn exact_log_evidence(net: &Network, cfg: &ModelConfig) -> Result<f64> {
    let mut acc = LogSumExpAccumulator::new();
    for_each_partition_log_joint(net, cfg, |_, lj| acc.push(lj))?;
    Ok(acc.value())
}

/// Calls `f` with every partition of the network and its log joint
/// `ln p(Y | z) + ln p(z)`.
pub fn for_each_partition_log_joint<F>(net: &Network, cfg: &ModelConfig, mut f: F) -> Result<()>
where
    F: FnMut(&Partition, f64),
{
    if net.n() > MAX_EXACT_NODES {
        return Err(Error::Domain(format!(
            "exact enumeration supports at most {MAX_EXACT_NODES} nodes, got {}",
            net.n()
        )));
    }
    cfg.validate()?;
    for part in SetPartitions::new(net.n()) {
        let stats = BlockStats::compute(net, &part)?;
        f(&part, log_likelihood(&stats, cfg) + crp_log_pmf(&part, cfg));
    }
    Ok(())
}

/// Assembles the report for one exogenous partition.
pub fn bayes_factor_test(
    net: &Network,
    z_star: &Partition,
    trace: &ChainTrace,
    cfg: &ModelConfig,
    prior_log_odds: f64,
) -> Result<EvidenceReport> {
    if z_star.len() != net.n() {
        return Err(Error::LengthMismatch {
            expected: net.n(),
            found: z_star.len(),
        });
    }
    if let Some(n) = trace.node_count() {
        if n != net.n() {
            return Err(Error::LengthMismatch {
                expected: net.n(),
                found: n,
            });
        }
    }
    let endogenous = harmonic_mean_log_evidence(trace)?;
    let exogenous = exogenous_log_evidence(net, z_star, cfg)?;
    Ok(EvidenceReport::from_log_evidences(
        endogenous,
        exogenous,
        prior_log_odds,
    ))
}

/// Closed-form comparison of two exogenous partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousComparison {
    pub log_evidence_first: f64,
    pub log_evidence_second: f64,
    /// `2 ln [p(Y | z_first) / p(Y | z_second)]`.
    pub two_log_bf: f64,
    pub category: EvidenceCategory,
}

pub fn compare_exogenous(
    net: &Network,
    first: &Partition,
    second: &Partition,
    cfg: &ModelConfig,
) -> Result<ExogenousComparison> {
    let a = exogenous_log_evidence(net, first, cfg)?;
    let b = exogenous_log_evidence(net, second, cfg)?;
    let two_log_bf = 2.0 * (a - b);
    Ok(ExogenousComparison {
        log_evidence_first: a,
        log_evidence_second: b,
        two_log_bf,
        category: EvidenceCategory::from_two_log_bf(two_log_bf),
    })
}
