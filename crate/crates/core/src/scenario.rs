//! Synthetic block-model networks and the four exogenous partitions of the
//! reference simulation study: the planted partition, a random
//! permutation of it, a refinement and a coarsening.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, Partition};
use crate::sampler::chain_rng;

/// Planted partition, block probabilities and seed of a simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub z0: Partition,
    pub theta: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SbmSpec {
    pub fn n(&self) -> usize {
        self.z0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.z0.num_groups();
        if self.theta.len() != h || self.theta.iter().any(|row| row.len() != h) {
            return Err(Error::Domain(format!("theta must be {h} x {h}")));
        }
        for i in 0..h {
            for j in 0..h {
                let t = self.theta[i][j];
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::Domain(format!("theta[{i}][{j}] = {t} is outside (0, 1)")));
                }
                if t != self.theta[j][i] {
                    return Err(Error::Domain("theta must be symmetric".into()));
                }
            }
        }
        Ok(())
    }

    /// Equal-size contiguous groups with `within` on the diagonal and
    /// `between` elsewhere.
    pub fn planted(groups: usize, group_size: usize, within: f64, between: f64, seed: u64) -> Result<Self> {
        if groups == 0 || group_size == 0 {
            return Err(Error::Domain("need at least one non-empty group".into()));
        }
        let raw: Vec<usize> = (0..groups * group_size).map(|v| v / group_size).collect();
        let theta = (0..groups)
            .map(|h| (0..groups).map(|k| if h == k { within } else { between }).collect())
            .collect();
        let spec = Self {
            z0: Partition::from_labels(&raw)?,
            theta,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws `y_vu ~ Bernoulli(theta[z_v][z_u])` independently for `v > u`.
pub fn simulate_sbm(spec: &SbmSpec) -> Result<Network> {
    spec.validate()?;
    let mut rng = chain_rng(spec.seed, 0);
    draw_network(spec, &mut rng)
}

fn draw_network<R: Rng>(spec: &SbmSpec, rng: &mut R) -> Result<Network> {
    let labels = spec.z0.labels();
    let mut net = Network::empty(spec.n())?;
    for v in 1..spec.n() {
        for u in 0..v {
            if rng.random::<f64>() < spec.theta[labels[v]][labels[u]] {
                net.set_edge(v, u, true);
            }
        }
    }
    Ok(net)
}

/// Network plus the four exogenous partitions under test.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    /// Planted partition: three contiguous groups of 20.
    pub z0: Partition,
    /// Seeded random permutation of the entries of `z0`.
    pub z1: Partition,
    /// Each group of `z0` cut into two contiguous halves.
    pub z2: Partition,
    /// Groups 2 and 3 of `z0` merged.
    pub z3: Partition,
}

impl Scenario {
    /// The exogenous partitions with their conventional names.
    pub fn exogenous(&self) -> [(&'static str, &Partition); 4] {
        [("z0", &self.z0), ("z1", &self.z1), ("z2", &self.z2), ("z3", &self.z3)]
    }
}

pub const SCENARIO_GROUPS: usize = 3;
pub const SCENARIO_GROUP_SIZE: usize = 20;
pub const SCENARIO_WITHIN: f64 = 0.8;
pub const SCENARIO_BETWEEN: f64 = 0.2;

/// Simulation-study network (n = 60, three groups, 0.8 within / 0.2
/// between) with its exogenous partitions. The network uses stream 0 of
/// `seed`, the permutation stream 1.
pub fn standard_scenario(seed: u64) -> Result<Scenario> {
    let spec = SbmSpec::planted(
        SCENARIO_GROUPS,
        SCENARIO_GROUP_SIZE,
        SCENARIO_WITHIN,
        SCENARIO_BETWEEN,
        seed,
    )?;
    let network = simulate_sbm(&spec)?;
    let z0 = spec.z0.clone();
    let n = z0.len();

    let mut shuffled = z0.labels().to_vec();
    shuffled.shuffle(&mut chain_rng(seed, 1));
    let z1 = Partition::from_labels(&shuffled)?;

    let half = SCENARIO_GROUP_SIZE / 2;
    let refined: Vec<usize> = (0..n).map(|v| v / half).collect();
    let z2 = Partition::from_labels(&refined)?;

    let coarse: Vec<usize> = z0.labels().iter().map(|&h| h.min(1)).collect();
    let z3 = Partition::from_labels(&coarse)?;

    Ok(Scenario {
        network,
        z0,
        z1,
        z2,
        z3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::vi_distance;

    fn block_densities(net: &Network, z: &Partition) -> (f64, f64) {
        let (mut win, mut wtot, mut bin, mut btot) = (0.0, 0.0, 0.0, 0.0);
        for v in 1..net.n() {
            for u in 0..v {
                let y = f64::from(u8::from(net.has_edge(v, u)));
                if z.labels()[v] == z.labels()[u] {
                    win += y;
                    wtot += 1.0;
                } else {
                    bin += y;
                    btot += 1.0;
                }
            }
        }
        (win / wtot, bin / btot)
    }

    #[test]
    fn degenerate_probabilities() {
        let spec = SbmSpec::planted(2, 5, 1e-12, 1e-12, 3).unwrap();
        assert_eq!(simulate_sbm(&spec).unwrap().edge_count(), 0);
        let spec = SbmSpec::planted(2, 5, 1.0 - 1e-12, 1.0 - 1e-12, 3).unwrap();
        let net = simulate_sbm(&spec).unwrap();
        assert_eq!(net.edge_count(), net.pair_count());
    }

    #[test]
    fn spec_validation() {
        assert!(SbmSpec::planted(2, 5, 0.0, 0.5, 1).is_err());
        assert!(SbmSpec::planted(2, 5, 0.5, 1.0, 1).is_err());
        assert!(SbmSpec::planted(0, 5, 0.5, 0.5, 1).is_err());
        let mut spec = SbmSpec::planted(2, 2, 0.5, 0.3, 1).unwrap();
        spec.theta[0][1] = 0.4;
        assert!(simulate_sbm(&spec).is_err());
    }

    #[test]
    fn densities_match_design_over_seeds() {
        let (mut within, mut between) = (0.0, 0.0);
        let seeds = 20;
        for seed in 0..seeds {
            let s = standard_scenario(seed).unwrap();
            let (w, b) = block_densities(&s.network, &s.z0);
            within += w;
            between += b;
        }
        within /= seeds as f64;
        between /= seeds as f64;
        assert!((within - 0.8).abs() < 0.05, "within {within}");
        assert!((between - 0.2).abs() < 0.05, "between {between}");
    }

    #[test]
    fn scenario_partitions() {
        let s = standard_scenario(7).unwrap();
        assert_eq!(s.z0.group_sizes(), vec![20, 20, 20]);
        let mut sizes = s.z1.group_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![20, 20, 20]);
        assert_eq!(s.z2.num_groups(), 6);
        assert_eq!(s.z3.group_sizes(), vec![20, 40]);
        assert!(s.z2.refines(&s.z0));
        assert!(s.z0.refines(&s.z3));
        assert!((vi_distance(&s.z0, &s.z2).unwrap() - 1.0).abs() < 1e-12);
        assert!((vi_distance(&s.z0, &s.z3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scenario_is_seeded() {
        assert_eq!(standard_scenario(3).unwrap(), standard_scenario(3).unwrap());
        assert_ne!(
            standard_scenario(3).unwrap().network,
            standard_scenario(4).unwrap().network
        );
    }
}
