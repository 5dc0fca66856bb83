//! Dense pmfs over `{0,1}^d` and distances between distributions, both
//! exact (on tables) and bounded through conditional probability tables.

use crate::error::ModelError;
use crate::net::BayesNet;

/// Writes the bits of `index` into `out`, bit `i` of the index being `x_i`.
pub fn bits_from_index(index: usize, out: &mut [u8]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = ((index >> i) & 1) as u8;
    }
}

/// Integer encoding of `x`, inverse of [`bits_from_index`].
pub fn index_from_bits(x: &[u8]) -> usize {
    x.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
}

/// A dense pmf over `{0,1}^d`, indexed by the integer encoding of the point.
///
/// This is the brute-force oracle representation; it is only usable at small
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    d: usize,
    probs: Vec<f64>,
}

impl DistributionTable {
    /// Validates length `2^d`, nonnegativity, and normalization to 1 within
    /// `1e-12`.
    pub fn new(d: usize, probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.len() != 1usize << d {
            return Err(ModelError::DimensionMismatch(probs.len(), 1usize << d));
        }
        let mut sum = KahanSum::default();
        for (index, &value) in probs.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(ModelError::NegativeProbability { index, value });
            }
            sum.add(value);
        }
        let total = sum.value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::NotNormalized(total));
        }
        Ok(Self { d, probs })
    }

    /// All mass on the point with the given integer encoding.
    pub fn point_mass(d: usize, index: usize) -> Self {
        let mut probs = vec![0.0; 1usize << d];
        probs[index] = 1.0;
        Self { d, probs }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn prob_of(&self, x: &[u8]) -> f64 {
        self.probs[index_from_bits(x)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Compensated (Kahan) accumulator used wherever sums feed tight tolerances.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

fn check_same_dim(a: &DistributionTable, b: &DistributionTable) -> Result<(), ModelError> {
    if a.dim() != b.dim() {
        return Err(ModelError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Total variation distance `(1/2) Σ_x |A(x) - B(x)|`.
pub fn tv_exact(a: &DistributionTable, b: &DistributionTable) -> Result<f64, ModelError> {
    check_same_dim(a, b)?;
    let mut sum = KahanSum::default();
    for (&pa, &pb) in a.probs.iter().zip(&b.probs) {
        sum.add((pa - pb).abs());
    }
    Ok(0.5 * sum.value())
}

/// Hellinger distance, with `d_H^2 = 1 - Σ_x sqrt(A(x) B(x))`.
pub fn hellinger_exact(a: &DistributionTable, b: &DistributionTable) -> Result<f64, ModelError> {
    check_same_dim(a, b)?;
    let mut overlap = KahanSum::default();
    for (&pa, &pb) in a.probs.iter().zip(&b.probs) {
        overlap.add((pa * pb).sqrt());
    }
    // Rounding can push the overlap a hair past 1 for identical tables.
    Ok((1.0 - overlap.value()).max(0.0).sqrt())
}

fn check_same_dag(p: &BayesNet, q: &BayesNet) -> Result<(), ModelError> {
    if p.dag() != q.dag() {
        return Err(ModelError::DagMismatch);
    }
    Ok(())
}

/// Upper bound on the squared Hellinger distance between two same-graph
/// networks in terms of their conditional tables:
/// `2 Σ_k sqrt(Pr_P[Π_k] Pr_Q[Π_k]) (p_k - q_k)^2 / ((p_k + q_k)(2 - p_k - q_k))`.
///
/// Terms with `p_k = q_k` contribute zero even when the denominator
/// vanishes, matching the limit of the expression.
pub fn hellinger_cpt_bound_with(
    p: &BayesNet,
    q: &BayesNet,
    p_probs: &[f64],
    q_probs: &[f64],
) -> Result<f64, ModelError> {
    check_same_dag(p, q)?;
    let m = p.num_configs();
    if p_probs.len() != m || q_probs.len() != m {
        return Err(ModelError::DimensionMismatch(p_probs.len().min(q_probs.len()), m));
    }
    let mut sum = KahanSum::default();
    for k in 0..m {
        let pk = p.cpt()[k];
        let qk = q.cpt()[k];
        if pk == qk {
            continue;
        }
        let denom = (pk + qk) * (2.0 - pk - qk);
        sum.add((p_probs[k] * q_probs[k]).sqrt() * (pk - qk).powi(2) / denom);
    }
    Ok(2.0 * sum.value())
}

/// [`hellinger_cpt_bound_with`] computing both configuration-probability
/// vectors exactly; errors when `d > d_exact`.
pub fn hellinger_cpt_bound(p: &BayesNet, q: &BayesNet, d_exact: usize) -> Result<f64, ModelError> {
    check_same_dag(p, q)?;
    let mode = crate::net::ProbMode::Exact { d_exact };
    let pp = p.config_probs(mode)?;
    let qp = q.config_probs(mode)?;
    hellinger_cpt_bound_with(p, q, &pp, &qp)
}

/// Configuration-weighted L2 gap between two conditional tables:
/// `sqrt(Σ_k Pr_P[Π_k] (p_k - q_k)^2)`, with the weights taken under `P`.
pub fn cpt_l2(p: &BayesNet, q: &BayesNet, p_probs: &[f64]) -> Result<f64, ModelError> {
    check_same_dag(p, q)?;
    if p_probs.len() != p.num_configs() {
        return Err(ModelError::DimensionMismatch(p_probs.len(), p.num_configs()));
    }
    let mut sum = KahanSum::default();
    for k in 0..p.num_configs() {
        sum.add(p_probs[k] * (p.cpt()[k] - q.cpt()[k]).powi(2));
    }
    Ok(sum.value().max(0.0).sqrt())
}

/// The balanced-network total-variation surrogate `(3/c) sqrt(Σ_k Pr_P[Π_k]
/// (p_k - q_k)^2)`.
///
/// When the minimum configuration probability is at least twice this score
/// and one of the networks is `c`-balanced, the score upper-bounds the total
/// variation distance between the networks.
pub fn tv_surrogate(p: &BayesNet, q: &BayesNet, c: f64, d_exact: usize) -> Result<f64, ModelError> {
    if !(c > 0.0 && c <= 0.5) || c.is_nan() {
        return Err(ModelError::InvalidBalance(c));
    }
    check_same_dag(p, q)?;
    let probs = p.config_probs(crate::net::ProbMode::Exact { d_exact })?;
    Ok(3.0 / c * cpt_l2(p, q, &probs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;
    use crate::net::DEFAULT_D_EXACT;

    fn bernoulli(p: f64) -> DistributionTable {
        DistributionTable::new(1, vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn tv_basics() {
        let a = bernoulli(0.5);
        assert_eq!(tv_exact(&a, &a).unwrap(), 0.0);
        let p0 = DistributionTable::point_mass(1, 0);
        let p1 = DistributionTable::point_mass(1, 1);
        assert!((tv_exact(&p0, &p1).unwrap() - 1.0).abs() < 1e-15);
        assert!((tv_exact(&bernoulli(0.5), &bernoulli(0.6)).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hellinger_basics() {
        let a = bernoulli(0.3);
        assert!(hellinger_exact(&a, &a).unwrap().abs() < 1e-9);
        let p0 = DistributionTable::point_mass(1, 0);
        let p1 = DistributionTable::point_mass(1, 1);
        // Disjoint supports: zero overlap.
        assert!((hellinger_exact(&p0, &p1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sandwich_inequality_exhaustive() {
        // d_H^2 <= d_TV <= sqrt(2) d_H over random same-dimension pairs.
        for seed in 0..40u64 {
            let d = 1 + (seed % 8) as usize;
            let a = crate::gen::random_net(d, 3, 0.02, seed).to_table(DEFAULT_D_EXACT).unwrap();
            let b = crate::gen::random_net(d, 3, 0.02, seed + 1000).to_table(DEFAULT_D_EXACT).unwrap();
            let tv = tv_exact(&a, &b).unwrap();
            let h = hellinger_exact(&a, &b).unwrap();
            assert!(h * h <= tv + 1e-12, "seed {seed}: h^2 {} > tv {}", h * h, tv);
            assert!(tv <= 2f64.sqrt() * h + 1e-12, "seed {seed}: tv {} > sqrt2 h {}", tv, h);
        }
    }

    #[test]
    fn cpt_bound_zero_for_equal_nets() {
        let p = crate::gen::random_net(5, 2, 0.1, 3);
        assert_eq!(hellinger_cpt_bound(&p, &p, DEFAULT_D_EXACT).unwrap(), 0.0);
    }

    #[test]
    fn cpt_bound_single_bernoulli() {
        let p = BayesNet::new(Dag::empty(1).unwrap(), vec![0.4]).unwrap();
        let q = BayesNet::new(Dag::empty(1).unwrap(), vec![0.6]).unwrap();
        let bound = hellinger_cpt_bound(&p, &q, DEFAULT_D_EXACT).unwrap();
        assert!((bound - 0.08).abs() < 1e-12, "bound = {bound}");
        let h = hellinger_exact(
            &p.to_table(DEFAULT_D_EXACT).unwrap(),
            &q.to_table(DEFAULT_D_EXACT).unwrap(),
        )
        .unwrap();
        assert!(h * h <= bound + 1e-12);
    }

    #[test]
    fn cpt_bound_handles_degenerate_equal_entries() {
        let p = BayesNet::new(Dag::empty(2).unwrap(), vec![1.0, 0.3]).unwrap();
        let q = BayesNet::new(Dag::empty(2).unwrap(), vec![1.0, 0.6]).unwrap();
        let bound = hellinger_cpt_bound(&p, &q, DEFAULT_D_EXACT).unwrap();
        assert!(bound.is_finite());
        let h = hellinger_exact(
            &p.to_table(DEFAULT_D_EXACT).unwrap(),
            &q.to_table(DEFAULT_D_EXACT).unwrap(),
        )
        .unwrap();
        assert!(h * h <= bound + 1e-12);
    }

    #[test]
    fn surrogate_basics() {
        let p = BayesNet::new(Dag::empty(1).unwrap(), vec![0.5]).unwrap();
        assert_eq!(tv_surrogate(&p, &p, 0.3, DEFAULT_D_EXACT).unwrap(), 0.0);
        let q = BayesNet::new(Dag::empty(1).unwrap(), vec![0.53]).unwrap();
        let s = tv_surrogate(&p, &q, 0.3, DEFAULT_D_EXACT).unwrap();
        assert!((s - 0.3).abs() < 1e-12, "score = {s}");
        assert!(matches!(
            tv_surrogate(&p, &q, 0.0, DEFAULT_D_EXACT),
            Err(ModelError::InvalidBalance(_))
        ));
        assert!(matches!(
            tv_surrogate(&p, &q, 0.7, DEFAULT_D_EXACT),
            Err(ModelError::InvalidBalance(_))
        ));
    }

    #[test]
    fn surrogate_bounds_tv_when_conditions_hold() {
        // Same-graph balanced pairs with small table gaps: whenever the
        // score is at most half the minimum configuration probability, it
        // must dominate the exact total variation distance.
        let mut checked = 0;
        for seed in 0..60u64 {
            let d = 2 + (seed % 7) as usize;
            let p = crate::gen::random_net(d, 1, 0.25, seed);
            let mut cpt = p.cpt().to_vec();
            let mut rng_state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            for v in &mut cpt {
                // Small deterministic perturbation in [-0.002, 0.002].
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (rng_state >> 11) as f64 / (1u64 << 53) as f64;
                *v = (*v + 0.004 * (u - 0.5)).clamp(0.05, 0.95);
            }
            let q = BayesNet::new(p.dag().clone(), cpt).unwrap();
            let c = 0.2;
            if !p.is_balanced(c) {
                continue;
            }
            let score = tv_surrogate(&p, &q, c, DEFAULT_D_EXACT).unwrap();
            let min_prob = p.min_config_prob(crate::net::ProbMode::exact()).unwrap();
            if score > min_prob / 2.0 {
                continue;
            }
            let tv = tv_exact(
                &p.to_table(DEFAULT_D_EXACT).unwrap(),
                &q.to_table(DEFAULT_D_EXACT).unwrap(),
            )
            .unwrap();
            assert!(tv <= score + 1e-12, "seed {seed}: tv {tv} > score {score}");
            checked += 1;
        }
        assert!(checked >= 30, "only {checked} instances met the hypotheses");
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            DistributionTable::new(2, vec![0.5, 0.5]),
            Err(ModelError::DimensionMismatch(2, 4))
        ));
        assert!(matches!(
            DistributionTable::new(1, vec![-0.1, 1.1]),
            Err(ModelError::NegativeProbability { index: 0, .. })
        ));
        assert!(matches!(
            DistributionTable::new(1, vec![0.6, 0.6]),
            Err(ModelError::NotNormalized(_))
        ));
        assert!(matches!(
            tv_exact(&DistributionTable::point_mass(1, 0), &DistributionTable::point_mass(2, 0)),
            Err(ModelError::DimensionMismatch(1, 2))
        ));
    }
}
