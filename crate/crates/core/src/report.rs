//! Per-partition test results combining the Bayes factor with the VI
//! summaries of the endogenous posterior.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evidence::{bayes_factor_test, EvidenceReport};
use crate::model::ModelConfig;
use crate::network::{Network, Partition};
use crate::sampler::ChainTrace;
use crate::summary::{ball_contains, vi_distance, CredibleBall};

/// One row of a test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousAssessment {
    pub name: String,
    pub evidence: EvidenceReport,
    /// VI in bits between the point estimate and the exogenous partition.
    pub vi_to_estimate: f64,
    pub in_credible_ball: bool,
}

/// Runs the test for every named exogenous partition against one chain.
pub fn assess_exogenous(
    net: &Network,
    trace: &ChainTrace,
    ball: &CredibleBall,
    candidates: &[(String, Partition)],
    cfg: &ModelConfig,
    prior_log_odds: f64,
) -> Result<Vec<ExogenousAssessment>> {
    candidates
        .iter()
        .map(|(name, z)| {
            Ok(ExogenousAssessment {
                name: name.clone(),
                evidence: bayes_factor_test(net, z, trace, cfg, prior_log_odds)?,
                vi_to_estimate: vi_distance(&ball.center, z)?,
                in_credible_ball: ball_contains(ball, z)?,
            })
        })
        .collect()
}
