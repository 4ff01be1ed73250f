//! Collapsed Gibbs sampler for the partition under the CRP block model.
//!
//! One sweep visits nodes `0..n` in order. Each visit detaches the node,
//! drops its block if it empties, scores every existing block plus a fresh
//! one, and reattaches the node to a block drawn from the normalized
//! full conditional.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; chain
//! `i` of a multi-chain run uses stream `i` of the same seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_likelihood, LogBetaCache, ModelConfig};
use crate::network::{Assignment, Network, Partition};
use crate::special::normalize_log_weights;

/// Starting partition of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitPartition {
    #[default]
    Singletons,
    SingleCluster,
    Given(Partition),
}

impl InitPartition {
    fn build(&self, n: usize) -> Result<Partition> {
        match self {
            InitPartition::Singletons => Partition::singletons(n),
            InitPartition::SingleCluster => Partition::single_cluster(n),
            InitPartition::Given(p) if p.len() == n => Ok(p.clone()),
            InitPartition::Given(p) => Err(Error::LengthMismatch {
                expected: n,
                found: p.len(),
            }),
        }
    }
}

/// Run length and seeding. One sample is one full sweep; sweeps
/// `burn_in, burn_in + thin, ...` below `total_samples` are retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub total_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: InitPartition,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            total_samples: 15_000,
            burn_in: 2_000,
            thin: 1,
            seed: 1,
            init: InitPartition::Singletons,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.total_samples <= self.burn_in {
            return Err(Error::Settings(format!(
                "total samples ({}) must exceed burn-in ({})",
                self.total_samples, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Settings("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of samples a run keeps.
    pub fn retained(&self) -> usize {
        (self.total_samples - self.burn_in).div_ceil(self.thin)
    }
}

/// Retained partitions with their log-likelihoods and group counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    samples: Vec<Partition>,
    log_lik: Vec<f64>,
    num_groups: Vec<usize>,
    settings: Option<SamplerSettings>,
}

impl ChainTrace {
    /// Assembles a trace from stored samples and log-likelihoods.
    pub fn new(samples: Vec<Partition>, log_lik: Vec<f64>) -> Result<Self> {
        if samples.len() != log_lik.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                found: log_lik.len(),
            });
        }
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|p| p.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        let num_groups = samples.iter().map(Partition::num_groups).collect();
        Ok(Self {
            samples,
            log_lik,
            num_groups,
            settings: None,
        })
    }

    /// Trace whose log-likelihoods are evaluated on `net`.
    pub fn from_partitions(samples: Vec<Partition>, net: &Network, cfg: &ModelConfig) -> Result<Self> {
        let log_lik = samples
            .iter()
            .map(|p| crate::model::partition_log_likelihood(net, p, cfg))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, log_lik)
    }

    pub fn with_settings(mut self, settings: SamplerSettings) -> Self {
        self.settings = Some(settings);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Node count of the sampled partitions, if any.
    pub fn node_count(&self) -> Option<usize> {
        self.samples.first().map(Partition::len)
    }

    pub fn samples(&self) -> &[Partition] {
        &self.samples
    }

    pub fn log_lik(&self) -> &[f64] {
        &self.log_lik
    }

    pub fn num_groups(&self) -> &[usize] {
        &self.num_groups
    }

    pub fn settings(&self) -> Option<&SamplerSettings> {
        self.settings.as_ref()
    }

    /// Most frequent group count; ties go to the smaller count.
    pub fn modal_num_groups(&self) -> Option<usize> {
        let max = *self.num_groups.iter().max()?;
        let mut freq = vec![0usize; max + 1];
        for &h in &self.num_groups {
            freq[h] += 1;
        }
        let best = *freq.iter().max()?;
        freq.iter().position(|&c| c == best)
    }

    /// Checks every stored log-likelihood against a fresh evaluation.
    pub fn audit(&self, net: &Network, cfg: &ModelConfig) -> Result<()> {
        for (r, (p, &ll)) in self.samples.iter().zip(&self.log_lik).enumerate() {
            let fresh = crate::model::partition_log_likelihood(net, p, cfg)?;
            if fresh != ll {
                return Err(Error::Inconsistent(format!(
                    "sample {}: stored log-likelihood {ll} differs from recomputed {fresh}",
                    r + 1
                )));
            }
        }
        Ok(())
    }
}

/// Gibbs sampler state bound to one network.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    net: &'a Network,
    cfg: ModelConfig,
    state: Assignment,
    cache: LogBetaCache,
    counts: Vec<u64>,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(net: &'a Network, cfg: &ModelConfig, init: &Partition) -> Result<Self> {
        cfg.validate()?;
        let state = Assignment::new(net, init)?;
        Ok(Self {
            net,
            cfg: *cfg,
            state,
            cache: LogBetaCache::new(cfg, net.pair_count()),
            counts: Vec::new(),
            log_weights: Vec::new(),
            probs: Vec::new(),
        })
    }

    pub fn assignment(&self) -> &Assignment {
        &self.state
    }

    pub fn partition(&self) -> Result<Partition> {
        self.state.partition()
    }

    pub fn log_likelihood(&self) -> f64 {
        log_likelihood(self.state.stats(), &self.cfg)
    }

    /// Takes node `v` out of the assignment.
    pub fn detach(&mut self, v: usize) -> Result<()> {
        self.state.remove_node(self.net, v)
    }

    /// Puts the detached node `v` into block `h` (`h == H_{-v}` opens a new one).
    pub fn attach(&mut self, v: usize, h: usize) -> Result<()> {
        self.state.insert_node(self.net, v, h)
    }

    /// Unnormalized log full conditional of the detached node `v` over
    /// blocks `0..H_{-v}` and a new block. Terms shared by every candidate
    /// are dropped.
    pub fn full_conditional_log_weights(&mut self, v: usize) -> Result<Vec<f64>> {
        if self.state.detached() != Some(v) {
            return Err(Error::Inconsistent(format!("node {v} must be detached first")));
        }
        self.score(v);
        Ok(self.log_weights.clone())
    }

    fn score(&mut self, v: usize) {
        self.state.neighbor_counts(self.net, v, &mut self.counts);
        let stats = self.state.stats();
        let hn = stats.num_groups();
        let cache = &self.cache;
        self.log_weights.clear();
        for h in 0..hn {
            let mut delta = (stats.size(h) as f64).ln();
            for (k, &e) in self.counts.iter().enumerate() {
                let (m, mbar) = (stats.edges(h, k), stats.non_edges(h, k));
                let ne = stats.size(k) - e;
                delta += cache.ln_beta(m + e, mbar + ne) - cache.ln_beta(m, mbar);
            }
            self.log_weights.push(delta);
        }
        let mut fresh = self.cfg.alpha.ln();
        for (k, &e) in self.counts.iter().enumerate() {
            fresh += cache.ln_beta(e, stats.size(k) - e) - cache.ln_beta_prior();
        }
        self.log_weights.push(fresh);
    }

    /// Draws a block for the detached node `v` without attaching it.
    pub fn draw_block<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> Result<usize> {
        if self.state.detached() != Some(v) {
            return Err(Error::Inconsistent(format!("node {v} must be detached first")));
        }
        self.score(v);
        Ok(self.draw_from_scores(rng))
    }

    fn draw_from_scores<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        normalize_log_weights(&self.log_weights, &mut self.probs);
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for (h, p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return h;
            }
        }
        self.probs.len() - 1
    }

    /// Resamples the block of node `v`.
    pub fn update_node<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> Result<()> {
        self.state.remove_node(self.net, v)?;
        self.score(v);
        let h = self.draw_from_scores(rng);
        // counts were taken against the detached state, which is unchanged
        let counts = std::mem::take(&mut self.counts);
        self.state.apply_insert(v, h, &counts);
        self.counts = counts;
        Ok(())
    }

    /// One systematic-scan sweep over every node.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for v in 0..self.net.n() {
            self.update_node(v, rng)?;
        }
        if cfg!(debug_assertions) {
            self.state.audit(self.net)?;
        }
        Ok(())
    }
}

/// Random stream used by chain `index` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs one chain. Deterministic given `settings.seed`.
pub fn run_chain(net: &Network, cfg: &ModelConfig, settings: &SamplerSettings) -> Result<ChainTrace> {
    run_chain_with_stream(net, cfg, settings, 0)
}

fn run_chain_with_stream(
    net: &Network,
    cfg: &ModelConfig,
    settings: &SamplerSettings,
    stream: u64,
) -> Result<ChainTrace> {
    settings.validate()?;
    let init = settings.init.build(net.n())?;
    let mut sampler = GibbsSampler::new(net, cfg, &init)?;
    let mut rng = chain_rng(settings.seed, stream);
    let keep = settings.retained();
    let mut samples = Vec::with_capacity(keep);
    let mut log_lik = Vec::with_capacity(keep);
    for r in 0..settings.total_samples {
        sampler.sweep(&mut rng)?;
        if r >= settings.burn_in && (r - settings.burn_in).is_multiple_of(settings.thin) {
            let ll = sampler.log_likelihood();
            if !ll.is_finite() {
                return Err(Error::Inconsistent(format!("non-finite log-likelihood at sweep {r}")));
            }
            samples.push(sampler.partition()?);
            log_lik.push(ll);
        }
    }
    Ok(ChainTrace::new(samples, log_lik)?.with_settings(settings.clone()))
}

/// Runs `chains` independent chains in parallel; chain `i` uses stream `i`.
pub fn run_chains(
    net: &Network,
    cfg: &ModelConfig,
    settings: &SamplerSettings,
    chains: usize,
) -> Result<Vec<ChainTrace>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|i| run_chain_with_stream(net, cfg, settings, i))
        .collect()
}
