//! Model generation: topology families and random conditional tables.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::ModelError;
use crate::graph::{Dag, MAX_FAN_IN};
use crate::net::BayesNet;

/// Supported topology families for generated models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// No edges (product distribution).
    Empty,
    /// `0 -> 1 -> ... -> d-1`.
    Chain,
    /// Every node takes the `fan_in` immediately preceding nodes as parents.
    Tree { fan_in: usize },
    /// Every node draws a uniform number (up to `max_fan_in`) of distinct
    /// random parents from the nodes before it.
    RandomDag { max_fan_in: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("infeasible topology: {0}")]
    InfeasibleTopology(String),
    #[error("balance parameter {0} is outside (0, 0.5]")]
    InvalidBalance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Builds a DAG of the requested family on `d` nodes. Only `RandomDag`
/// consumes randomness.
pub fn build_dag(topology: Topology, d: usize, seed: u64) -> Result<Dag, GenError> {
    if d == 0 {
        return Err(GenError::InfeasibleTopology("node count must be positive".into()));
    }
    let dag = match topology {
        Topology::Empty => Dag::empty(d)?,
        Topology::Chain => Dag::chain(d)?,
        Topology::Tree { fan_in } => {
            if fan_in == 0 || fan_in > MAX_FAN_IN {
                return Err(GenError::InfeasibleTopology(format!(
                    "tree fan-in {fan_in} is outside 1..={MAX_FAN_IN}"
                )));
            }
            let parents = (0..d)
                .map(|i| (i.saturating_sub(fan_in)..i).collect())
                .collect();
            Dag::new(parents)?
        }
        Topology::RandomDag { max_fan_in } => {
            if max_fan_in > MAX_FAN_IN {
                return Err(GenError::InfeasibleTopology(format!(
                    "max fan-in {max_fan_in} exceeds {MAX_FAN_IN}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut parents = Vec::with_capacity(d);
            for i in 0..d {
                let cap = max_fan_in.min(i);
                let count = if cap == 0 { 0 } else { rng.random_range(0..=cap) };
                let mut pool: Vec<usize> = (0..i).collect();
                // Partial Fisher-Yates: the first `count` entries end up a
                // uniform sample without replacement.
                for j in 0..count {
                    let pick = rng.random_range(j..pool.len());
                    pool.swap(j, pick);
                }
                let mut list: Vec<usize> = pool[..count].to_vec();
                list.sort_unstable();
                parents.push(list);
            }
            Dag::new(parents)?
        }
    };
    Ok(dag)
}

/// Fills a conditional table with entries drawn uniformly from `[c, 1-c]`.
/// `c = 0.5` degenerates to the all-half table.
pub fn random_cpt_net(dag: Dag, c: f64, seed: u64) -> Result<BayesNet, GenError> {
    if !(c > 0.0 && c <= 0.5) || c.is_nan() {
        return Err(GenError::InvalidBalance(c));
    }
    let m = crate::graph::ConfigTable::new(&dag)?.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cpt = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            c + u * (1.0 - 2.0 * c)
        })
        .collect();
    Ok(BayesNet::new(dag, cpt)?)
}

/// Random DAG plus random conditional table; the workhorse instance
/// generator for tests and experiments. `margin = 0.5` pins every entry to
/// one half; small margins allow nearly degenerate entries.
pub fn random_net(d: usize, max_fan_in: usize, margin: f64, seed: u64) -> BayesNet {
    let dag = build_dag(Topology::RandomDag { max_fan_in }, d, seed).expect("valid topology");
    let margin = margin.max(1e-9);
    random_cpt_net(dag, margin, seed.wrapping_add(0x9e37_79b9)).expect("valid balance")
}
