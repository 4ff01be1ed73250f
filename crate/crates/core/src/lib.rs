//! Bayesian tests of whether an exogenous node partition explains the block
//! structure of a binary network as well as the partition inferred by an
//! infinite relational model.
//!
//! The endogenous model places a Chinese restaurant process prior on the
//! node partition and integrates the Beta-distributed block probabilities
//! out. A collapsed Gibbs sampler ([`sampler`]) draws partitions, the
//! harmonic-mean estimator turns their likelihoods into a marginal
//! likelihood ([`evidence`]), and VI-based summaries ([`summary`]) give a
//! point estimate and a credible ball for the partition.

pub mod enumerate;
pub mod error;
pub mod evidence;
pub mod io;
pub mod model;
pub mod network;
pub mod report;
pub mod sampler;
pub mod scenario;
pub mod special;
pub mod summary;

pub use error::{Error, Result};
pub use evidence::{
    bayes_factor_test, compare_exogenous, exact_log_evidence, exogenous_log_evidence, harmonic_mean_log_evidence,
    harmonic_mean_trajectory, EvidenceCategory, EvidenceReport, ExogenousComparison,
};
pub use model::{
    crp_log_pmf, crp_predictive_log_weights, log_likelihood, misclassification_error, partition_log_likelihood,
    plug_in_theta, BlockProbEstimate, ModelConfig,
};
pub use network::{canonicalize, Assignment, BlockStats, Network, Partition};
pub use report::{assess_exogenous, ExogenousAssessment};
pub use sampler::{run_chain, run_chains, ChainTrace, GibbsSampler, InitPartition, SamplerSettings};
pub use scenario::{simulate_sbm, standard_scenario, SbmSpec, Scenario};
pub use summary::{
    ball_contains, co_clustering, credible_ball, vi_distance, vi_point_estimate, vi_point_estimate_with,
    CoClusteringMatrix, CredibleBall, PointEstimate, PointEstimateSearch,
};
