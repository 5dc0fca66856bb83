//! Bayesian networks over `{0,1}^d`: a DAG plus a conditional probability
//! table, with ancestral sampling, pmf evaluation, and exact or Monte Carlo
//! configuration probabilities.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::dist::DistributionTable;
use crate::error::ModelError;
use crate::graph::{ConfigTable, Dag};

/// Default cutoff above which exact (exhaustive) computations refuse to run.
pub const DEFAULT_D_EXACT: usize = 20;

/// How a probability over `{0,1}^d` should be computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbMode {
    /// Sum the pmf over the event; errors when `d > d_exact`.
    Exact { d_exact: usize },
    /// Empirical frequency over `n` fresh samples.
    MonteCarlo { n: usize, seed: u64 },
}

impl ProbMode {
    pub fn exact() -> Self {
        ProbMode::Exact { d_exact: DEFAULT_D_EXACT }
    }
}

/// A fixed-structure Bayesian network: DAG plus conditional probability
/// table indexed by parental configuration.
///
/// Entry `k = (i, a)` of the table is `Pr[X_i = 1 | parents of i read a]`.
/// Degenerate entries (0 or 1) are legal here; balance is only checked where
/// an algorithm needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    table: ConfigTable,
    cpt: Vec<f64>,
}

impl BayesNet {
    pub fn new(dag: Dag, cpt: Vec<f64>) -> Result<Self, ModelError> {
        let table = ConfigTable::new(&dag)?;
        if cpt.len() != table.len() {
            return Err(ModelError::CptLength { got: cpt.len(), expected: table.len() });
        }
        for (index, &value) in cpt.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(ModelError::CptRange { index, value });
            }
        }
        Ok(Self { table, cpt })
    }

    /// A network whose conditional probabilities are all `p`.
    pub fn constant(dag: Dag, p: f64) -> Result<Self, ModelError> {
        let table = ConfigTable::new(&dag)?;
        let m = table.len();
        Self::new(dag, vec![p; m])
    }

    pub fn dag(&self) -> &Dag {
        self.table.dag()
    }

    pub fn config_table(&self) -> &ConfigTable {
        &self.table
    }

    pub fn cpt(&self) -> &[f64] {
        &self.cpt
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// Number of parental configurations, `m`.
    pub fn num_configs(&self) -> usize {
        self.table.len()
    }

    /// True iff every conditional probability lies in the closed interval
    /// `[c, 1-c]`. Callers must pass `c` in `(0, 0.5]`.
    pub fn is_balanced(&self, c: f64) -> bool {
        self.cpt.iter().all(|&p| p >= c && p <= 1.0 - c)
    }

    /// The balance margin `min_k min(p_k, 1 - p_k)`.
    pub fn balance_margin(&self) -> f64 {
        self.cpt
            .iter()
            .map(|&p| p.min(1.0 - p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes one ancestral sample into `row`.
    pub(crate) fn sample_row_into<R: Rng>(&self, rng: &mut R, row: &mut [u8]) {
        for i in 0..self.dim() {
            let k = self.table.active_config(row, i);
            let u: f64 = rng.random();
            row[i] = u8::from(u < self.cpt[k]);
        }
    }

    /// Draws `n` i.i.d. samples by ancestral sampling in node-index order.
    /// Deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> Dataset {
        let d = self.dim();
        let mut data = Dataset::with_capacity(d, n);
        let mut row = vec![0u8; d];
        for _ in 0..n {
            row.fill(0);
            self.sample_row_into(rng, &mut row);
            data.push_row(&row);
        }
        data
    }

    /// Probability of the point `x`.
    pub fn pmf(&self, x: &[u8]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point length must equal the dimension");
        let mut p = 1.0;
        for i in 0..self.dim() {
            let pk = self.cpt[self.table.active_config(x, i)];
            p *= if x[i] == 1 { pk } else { 1.0 - pk };
        }
        p
    }

    /// Materializes the full pmf over `{0,1}^d`.
    pub fn to_table(&self, d_exact: usize) -> Result<DistributionTable, ModelError> {
        let d = self.dim();
        if d > d_exact {
            return Err(ModelError::DimensionTooLarge { d, d_exact });
        }
        let mut probs = vec![0.0; 1usize << d];
        let mut x = vec![0u8; d];
        for (idx, slot) in probs.iter_mut().enumerate() {
            crate::dist::bits_from_index(idx, &mut x);
            *slot = self.pmf(&x);
        }
        DistributionTable::new(d, probs)
    }

    /// `Pr[Π_k]` for every configuration `k` at once.
    pub fn config_probs(&self, mode: ProbMode) -> Result<Vec<f64>, ModelError> {
        let d = self.dim();
        let mut probs = vec![0.0; self.num_configs()];
        match mode {
            ProbMode::Exact { d_exact } => {
                if d > d_exact {
                    return Err(ModelError::DimensionTooLarge { d, d_exact });
                }
                let mut x = vec![0u8; d];
                for idx in 0..(1usize << d) {
                    crate::dist::bits_from_index(idx, &mut x);
                    let px = self.pmf(&x);
                    for i in 0..d {
                        probs[self.table.active_config(&x, i)] += px;
                    }
                }
            }
            ProbMode::MonteCarlo { n, seed } => {
                let data = self.sample(n, seed);
                for row in data.rows() {
                    for i in 0..d {
                        probs[self.table.active_config(row, i)] += 1.0;
                    }
                }
                for p in &mut probs {
                    *p /= n as f64;
                }
            }
        }
        Ok(probs)
    }

    /// `Pr[Π_k]` for a single configuration.
    pub fn config_prob(&self, k: usize, mode: ProbMode) -> Result<f64, ModelError> {
        if k >= self.num_configs() {
            return Err(ModelError::ConfigIndexOutOfRange { index: k, m: self.num_configs() });
        }
        Ok(self.config_probs(mode)?[k])
    }

    /// `min_k Pr[Π_k]`, the quantity the error guarantee divides by.
    pub fn min_config_prob(&self, mode: ProbMode) -> Result<f64, ModelError> {
        Ok(self
            .config_probs(mode)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain2(p0: f64, p_given0: f64, p_given1: f64) -> BayesNet {
        BayesNet::new(Dag::chain(2).unwrap(), vec![p0, p_given0, p_given1]).unwrap()
    }

    #[test]
    fn all_one_cpt_samples_all_ones() {
        let net = BayesNet::constant(Dag::new(vec![vec![], vec![0], vec![0, 1]]).unwrap(), 1.0).unwrap();
        let data = net.sample(50, 7);
        assert!(data.rows().all(|r| r.iter().all(|&b| b == 1)));
    }

    #[test]
    fn bernoulli_sample_mean_concentrates() {
        let net = BayesNet::new(Dag::empty(1).unwrap(), vec![0.5]).unwrap();
        let data = net.sample(100_000, 42);
        let mean = data.rows().map(|r| r[0] as f64).sum::<f64>() / 100_000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn deterministic_chain_sampling() {
        let net = chain2(1.0, 0.7, 0.0);
        let data = net.sample(200, 3);
        assert!(data.rows().all(|r| r == [1, 0]));
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let net = chain2(0.6, 0.1, 0.9);
        assert_eq!(net.sample(100, 5), net.sample(100, 5));
        assert_ne!(net.sample(100, 5), net.sample(100, 6));
    }

    #[test]
    fn pmf_product_structure() {
        let net = BayesNet::new(Dag::empty(2).unwrap(), vec![0.5, 0.5]).unwrap();
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!((net.pmf(&x) - 0.25).abs() < 1e-15);
        }
        let net = chain2(0.6, 0.1, 0.9);
        assert!((net.pmf(&[1, 1]) - 0.54).abs() < 1e-15);
    }

    #[test]
    fn pmf_sums_to_one() {
        for seed in 0..5u64 {
            let net = crate::gen::random_net(6, 2, 0.01, seed);
            let mut x = vec![0u8; 6];
            let total: f64 = (0..64)
                .map(|idx| {
                    crate::dist::bits_from_index(idx, &mut x);
                    net.pmf(&x)
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "sum = {total}");
        }
    }

    #[test]
    fn table_matches_pmf() {
        let net = crate::gen::random_net(5, 3, 0.05, 11);
        let table = net.to_table(DEFAULT_D_EXACT).unwrap();
        let mut x = vec![0u8; 5];
        for idx in 0..32 {
            crate::dist::bits_from_index(idx, &mut x);
            assert!((table.prob(idx) - net.pmf(&x)).abs() < 1e-14);
        }
    }

    #[test]
    fn bernoulli_table() {
        let net = BayesNet::new(Dag::empty(1).unwrap(), vec![0.3]).unwrap();
        let table = net.to_table(DEFAULT_D_EXACT).unwrap();
        assert!((table.prob(0) - 0.7).abs() < 1e-15);
        assert!((table.prob(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dimension_guard() {
        let net = BayesNet::constant(Dag::empty(21).unwrap(), 0.5).unwrap();
        assert_eq!(
            net.to_table(20).unwrap_err(),
            ModelError::DimensionTooLarge { d: 21, d_exact: 20 }
        );
        assert!(net.config_probs(ProbMode::Exact { d_exact: 20 }).is_err());
    }

    #[test]
    fn config_probs_exact() {
        // Root configurations always hold.
        let net = chain2(0.6, 0.1, 0.9);
        let probs = net.config_probs(ProbMode::exact()).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-15);
        assert!((probs[1] - 0.4).abs() < 1e-15);
        assert!((probs[2] - 0.6).abs() < 1e-15);

        // Collider: Pr[parents of node 2 both one] = 0.3 * 0.5.
        let dag = Dag::new(vec![vec![], vec![], vec![0, 1]]).unwrap();
        let net = BayesNet::new(dag, vec![0.3, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let table = net.config_table().clone();
        let probs = net.config_probs(ProbMode::exact()).unwrap();
        assert!((probs[table.flat_index(2, 3)] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn config_probs_two_exact_routes_agree() {
        // Accumulating over one pmf sweep must match per-configuration
        // brute-force summation.
        let net = crate::gen::random_net(8, 2, 0.05, 23);
        let probs = net.config_probs(ProbMode::exact()).unwrap();
        let table = net.config_table();
        let mut x = vec![0u8; 8];
        for k in 0..net.num_configs() {
            let mut direct = 0.0;
            for idx in 0..(1usize << 8) {
                crate::dist::bits_from_index(idx, &mut x);
                if table.active_config(&x, table.entry(k).0) == k {
                    direct += net.pmf(&x);
                }
            }
            assert!((probs[k] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn min_config_prob_cases() {
        let net = BayesNet::constant(Dag::empty(4).unwrap(), 0.2).unwrap();
        assert!((net.min_config_prob(ProbMode::exact()).unwrap() - 1.0).abs() < 1e-15);
        let net = chain2(0.6, 0.5, 0.5);
        assert!((net.min_config_prob(ProbMode::exact()).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let net = crate::gen::random_net(6, 2, 0.1, 31);
        let exact = net.config_probs(ProbMode::exact()).unwrap();
        let n = 200_000;
        let mc = net.config_probs(ProbMode::MonteCarlo { n, seed: 9 }).unwrap();
        for (k, (&e, &f)) in exact.iter().zip(&mc).enumerate() {
            let sigma = (e * (1.0 - e) / n as f64).sqrt();
            assert!(
                (e - f).abs() <= 5.0 * sigma + 1e-9,
                "config {k}: exact {e}, mc {f}"
            );
        }
    }

    #[test]
    fn balance_checks() {
        let net = BayesNet::constant(Dag::empty(3).unwrap(), 0.5).unwrap();
        assert!(net.is_balanced(0.3));
        let net = BayesNet::new(Dag::empty(2).unwrap(), vec![0.5, 0.2]).unwrap();
        assert!(!net.is_balanced(0.3));
        // Boundary entries count as balanced (closed interval).
        let net = BayesNet::new(Dag::empty(2).unwrap(), vec![0.3, 0.7]).unwrap();
        assert!(net.is_balanced(0.3));
    }

    #[test]
    fn cpt_validation() {
        assert_eq!(
            BayesNet::new(Dag::empty(2).unwrap(), vec![0.5]).unwrap_err(),
            ModelError::CptLength { got: 1, expected: 2 }
        );
        assert!(matches!(
            BayesNet::new(Dag::empty(1).unwrap(), vec![1.5]).unwrap_err(),
            ModelError::CptRange { index: 0, .. }
        ));
        // Degenerate entries are legal.
        assert!(BayesNet::new(Dag::empty(2).unwrap(), vec![0.0, 1.0]).is_ok());
    }
}
