//! Robust estimation of Bayesian network parameters from corrupted samples.
//!
//! Given the structure of a Bayesian network over `{0,1}^d` and samples of
//! which an adversary controls an `eps` fraction, the [`filter`] module
//! iteratively removes coordinated outliers by looking at the spectrum of a
//! second-moment matrix of conditional-mean-filled sample vectors, until the
//! surviving empirical conditional probability table can be certified.
//!
//! The crate also ships the supporting cast that makes the procedure
//! testable end to end: exact distribution tables and distances ([`dist`]),
//! the filling transform itself ([`transform`]), dataset contamination under
//! mixture and replacement adversaries ([`contamination`]), brute-force
//! reference computations ([`oracle`]), model generators ([`gen`]), and file
//! formats ([`io`]).

pub mod contamination;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod filter;
pub mod gen;
pub mod graph;
pub mod io;
pub mod net;
pub mod oracle;
pub mod transform;

pub use dataset::{Dataset, LabeledDataset, Provenance};
pub use dist::DistributionTable;
pub use error::ModelError;
pub use graph::{ConfigTable, Dag};
pub use net::{BayesNet, ProbMode, DEFAULT_D_EXACT};

/// Stable mixing of a master seed with stream indices, so every trial,
/// corruption pass, and sampler in an experiment gets an independent,
/// reproducible seed. SplitMix64 finalizer over the concatenated words.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master;
    for word in [stream, index] {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(word);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}
