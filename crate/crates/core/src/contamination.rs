//! Adversarial corruption of datasets and the exact additive/subtractive
//! decomposition of the gap between two distributions.
//!
//! Two corruption semantics are supported. The mixture (Huber) model draws
//! each sample from the clean network with probability `1 - eps` and from an
//! adversarial noise distribution otherwise. The replacement model is
//! stronger: the adversary inspects the whole clean dataset, deletes up to
//! `floor(eps N)` points of its choosing, and inserts the same number of
//! arbitrary points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, LabeledDataset, Provenance};
use crate::dist::{DistributionTable, KahanSum};
use crate::error::ModelError;
use crate::net::BayesNet;
use crate::transform::sparse_projection;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContaminationError {
    #[error("corruption fraction {0} is outside [0, 0.5)")]
    InvalidEps(f64),

    #[error("the distributions are identical; the decomposition is undefined")]
    IdenticalDistributions,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("shifting entry {index} by {magnitude} leaves [0, 1]")]
    InvalidShift { index: usize, magnitude: f64 },

    #[error("adversary {strategy} cannot be used with the {kind} noise kind")]
    AdversaryKindMismatch { strategy: &'static str, kind: &'static str },

    #[error("the {0} adversary needs the clean model to build its noise distribution")]
    MissingModel(&'static str),

    #[error("invalid adversary: {0}")]
    BadAdversary(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Concrete attack strategies. The additive strategies define a noise
/// distribution for mixture corruption; `SubtractiveTail` only makes sense
/// for replacement corruption, where it deletes the points with the largest
/// projection magnitude along a chosen direction.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryStrategy {
    /// Independent bits with the given means (diffuse additive noise).
    ProductNoise { means: Vec<f64> },
    /// Every corrupt sample equals one fixed point (directional additive
    /// noise).
    PointMass { point: Vec<u8> },
    /// Noise distribution equal to the clean network with one conditional
    /// probability shifted.
    CptShift { target: usize, magnitude: f64 },
    /// Deletes the points with the largest `|direction . (F(x, reference) -
    /// reference)|`; inserts copies of the most central surviving point.
    SubtractiveTail { direction: Vec<f64>, reference: Vec<f64> },
}

impl AdversaryStrategy {
    fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::ProductNoise { .. } => "product_noise",
            AdversaryStrategy::PointMass { .. } => "point_mass",
            AdversaryStrategy::CptShift { .. } => "cpt_shift",
            AdversaryStrategy::SubtractiveTail { .. } => "subtractive_tail",
        }
    }
}

/// Which corruption semantics to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    HuberAdditive,
    TvReplacement,
}

impl NoiseKind {
    fn name(&self) -> &'static str {
        match self {
            NoiseKind::HuberAdditive => "huber_additive",
            NoiseKind::TvReplacement => "tv_replacement",
        }
    }
}

/// A validated corruption specification.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    eps: f64,
    adversary: AdversaryStrategy,
}

impl NoiseModel {
    pub fn new(
        kind: NoiseKind,
        eps: f64,
        adversary: AdversaryStrategy,
    ) -> Result<Self, ContaminationError> {
        if !(0.0..0.5).contains(&eps) || eps.is_nan() {
            return Err(ContaminationError::InvalidEps(eps));
        }
        if matches!(adversary, AdversaryStrategy::SubtractiveTail { .. })
            && kind == NoiseKind::HuberAdditive
        {
            return Err(ContaminationError::AdversaryKindMismatch {
                strategy: "subtractive_tail",
                kind: "huber_additive",
            });
        }
        if let AdversaryStrategy::ProductNoise { means } = &adversary {
            if let Some(&bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(ContaminationError::BadAdversary(format!(
                    "product noise mean {bad} outside [0, 1]"
                )));
            }
        }
        if let AdversaryStrategy::SubtractiveTail { direction, .. } = &adversary {
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(ContaminationError::BadAdversary(format!(
                    "subtractive direction has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { kind, eps, adversary })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn adversary(&self) -> &AdversaryStrategy {
        &self.adversary
    }
}

/// Additive/subtractive split of the gap between two distributions on the
/// same cube: `Q = P + w E - w L` with `E` and `L` supported on disjoint
/// sets and `w` the total variation distance.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Where `Q` exceeds `P`, normalized.
    pub additive: DistributionTable,
    /// Where `P` exceeds `Q`, normalized.
    pub subtractive: DistributionTable,
    /// `d_TV(P, Q)`.
    pub weight: f64,
}

/// Splits `Q - P` into normalized positive and negative parts.
pub fn decompose(
    p: &DistributionTable,
    q: &DistributionTable,
) -> Result<Decomposition, ContaminationError> {
    if p.dim() != q.dim() {
        return Err(ContaminationError::DimensionMismatch(p.dim(), q.dim()));
    }
    let mut pos = KahanSum::default();
    for (&pp, &qq) in p.probs().iter().zip(q.probs()) {
        pos.add((qq - pp).max(0.0));
    }
    let weight = pos.value();
    if weight <= 0.0 {
        return Err(ContaminationError::IdenticalDistributions);
    }
    let additive: Vec<f64> =
        p.probs().iter().zip(q.probs()).map(|(&pp, &qq)| (qq - pp).max(0.0) / weight).collect();
    let subtractive: Vec<f64> =
        p.probs().iter().zip(q.probs()).map(|(&pp, &qq)| (pp - qq).max(0.0) / weight).collect();
    Ok(Decomposition {
        additive: DistributionTable::new(p.dim(), additive)?,
        subtractive: DistributionTable::new(p.dim(), subtractive)?,
        weight,
    })
}

/// Pointwise mixture `(1 - eps) P + eps R`.
pub fn mixture_table(
    p: &DistributionTable,
    noise: &DistributionTable,
    eps: f64,
) -> Result<DistributionTable, ContaminationError> {
    if p.dim() != noise.dim() {
        return Err(ContaminationError::DimensionMismatch(p.dim(), noise.dim()));
    }
    if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
        return Err(ContaminationError::InvalidEps(eps));
    }
    let probs = p
        .probs()
        .iter()
        .zip(noise.probs())
        .map(|(&pp, &rr)| (1.0 - eps) * pp + eps * rr)
        .collect();
    Ok(DistributionTable::new(p.dim(), probs)?)
}

/// Builds the conditional-shift attack: a strategy whose noise distribution
/// is `net` with `cpt[target] += magnitude`, plus that shifted network for
/// reference computations.
pub fn cpt_shift_attack(
    net: &BayesNet,
    target: usize,
    magnitude: f64,
) -> Result<(AdversaryStrategy, BayesNet), ContaminationError> {
    if target >= net.num_configs() {
        return Err(ContaminationError::Model(ModelError::ConfigIndexOutOfRange {
            index: target,
            m: net.num_configs(),
        }));
    }
    let shifted_entry = net.cpt()[target] + magnitude;
    if !(0.0..=1.0).contains(&shifted_entry) || shifted_entry.is_nan() {
        return Err(ContaminationError::InvalidShift { index: target, magnitude });
    }
    let mut cpt = net.cpt().to_vec();
    cpt[target] = shifted_entry;
    let shifted = BayesNet::new(net.dag().clone(), cpt)?;
    Ok((AdversaryStrategy::CptShift { target, magnitude }, shifted))
}

/// A sampler for the noise distribution of an additive adversary.
#[derive(Debug, Clone)]
pub(crate) enum NoiseSampler {
    Product(Vec<f64>),
    Point(Vec<u8>),
    Net(BayesNet),
}

impl NoiseSampler {
    pub(crate) fn resolve(
        adversary: &AdversaryStrategy,
        model: Option<&BayesNet>,
        d: usize,
    ) -> Result<Self, ContaminationError> {
        match adversary {
            AdversaryStrategy::ProductNoise { means } => {
                if means.len() != d {
                    return Err(ContaminationError::DimensionMismatch(means.len(), d));
                }
                Ok(NoiseSampler::Product(means.clone()))
            }
            AdversaryStrategy::PointMass { point } => {
                if point.len() != d {
                    return Err(ContaminationError::DimensionMismatch(point.len(), d));
                }
                Ok(NoiseSampler::Point(point.clone()))
            }
            AdversaryStrategy::CptShift { target, magnitude } => {
                let net = model.ok_or(ContaminationError::MissingModel("cpt_shift"))?;
                let (_, shifted) = cpt_shift_attack(net, *target, *magnitude)?;
                Ok(NoiseSampler::Net(shifted))
            }
            AdversaryStrategy::SubtractiveTail { .. } => {
                Err(ContaminationError::AdversaryKindMismatch {
                    strategy: "subtractive_tail",
                    kind: "huber_additive",
                })
            }
        }
    }

    pub(crate) fn draw_into<R: Rng>(&self, rng: &mut R, row: &mut [u8]) {
        match self {
            NoiseSampler::Product(means) => {
                for (slot, &mean) in row.iter_mut().zip(means) {
                    let u: f64 = rng.random();
                    *slot = u8::from(u < mean);
                }
            }
            NoiseSampler::Point(point) => row.copy_from_slice(point),
            NoiseSampler::Net(net) => {
                row.fill(0);
                net.sample_row_into(rng, row);
            }
        }
    }
}

/// Mixture corruption: each of `n` samples is drawn from the adversary's
/// noise distribution with probability `eps` and from the clean network
/// otherwise. Labels record the true provenance.
pub fn corrupt_huber(
    net: &BayesNet,
    n: usize,
    model: &NoiseModel,
    seed: u64,
) -> Result<LabeledDataset, ContaminationError> {
    if model.kind != NoiseKind::HuberAdditive {
        return Err(ContaminationError::AdversaryKindMismatch {
            strategy: model.adversary.name(),
            kind: model.kind.name(),
        });
    }
    let sampler = NoiseSampler::resolve(&model.adversary, Some(net), net.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = net.dim();
    let mut data = Dataset::with_capacity(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0u8; d];
    for _ in 0..n {
        let u: f64 = rng.random();
        if u < model.eps {
            sampler.draw_into(&mut rng, &mut row);
            labels.push(Provenance::Corrupt);
        } else {
            row.fill(0);
            net.sample_row_into(&mut rng, &mut row);
            labels.push(Provenance::Clean);
        }
        data.push_row(&row);
    }
    Ok(LabeledDataset::new(data, labels))
}

/// Replacement corruption: deletes `floor(eps N)` points from the clean
/// dataset and inserts the same number of adversarial points, preserving the
/// dataset size. Inserted points are labeled corrupt; survivors keep their
/// original order.
///
/// `SubtractiveTail` deletes the points with the largest projection
/// magnitude and inserts copies of the surviving point with the smallest;
/// the additive strategies delete a random subset and insert draws from
/// their noise distribution (`CptShift` needs `model` for that).
pub fn corrupt_replacement(
    clean: &Dataset,
    noise: &NoiseModel,
    model: Option<&BayesNet>,
    seed: u64,
) -> Result<LabeledDataset, ContaminationError> {
    if noise.kind != NoiseKind::TvReplacement {
        return Err(ContaminationError::AdversaryKindMismatch {
            strategy: noise.adversary.name(),
            kind: noise.kind.name(),
        });
    }
    let n = clean.len();
    let d = clean.dim();
    let n_corrupt = (noise.eps * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if n_corrupt == 0 {
        return Ok(LabeledDataset::all_clean(clean.clone()));
    }

    match &noise.adversary {
        AdversaryStrategy::SubtractiveTail { direction, reference } => {
            let table = match model {
                Some(net) => net.config_table().clone(),
                None => return Err(ContaminationError::MissingModel("subtractive_tail")),
            };
            if table.dim() != d {
                return Err(ContaminationError::DimensionMismatch(table.dim(), d));
            }
            if direction.len() != table.len() || reference.len() != table.len() {
                return Err(ContaminationError::DimensionMismatch(direction.len(), table.len()));
            }
            let mut scored: Vec<(usize, f64)> = (0..n)
                .map(|i| (i, sparse_projection(clean.row(i), reference, direction, &table).abs()))
                .collect();
            // Largest magnitudes first; ties broken by index for determinism.
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let deleted: std::collections::HashSet<usize> =
                scored[..n_corrupt].iter().map(|&(i, _)| i).collect();
            let central = scored.last().map(|&(i, _)| i).expect("nonempty dataset");
            let mut data = Dataset::with_capacity(d, n);
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                if !deleted.contains(&i) {
                    data.push_row(clean.row(i));
                    labels.push(Provenance::Clean);
                }
            }
            for _ in 0..n_corrupt {
                data.push_row(clean.row(central));
                labels.push(Provenance::Corrupt);
            }
            Ok(LabeledDataset::new(data, labels))
        }
        adversary => {
            let sampler = NoiseSampler::resolve(adversary, model, d)?;
            // Partial Fisher-Yates over indices: the first n_corrupt entries
            // are a uniform random subset to delete.
            let mut indices: Vec<usize> = (0..n).collect();
            for j in 0..n_corrupt {
                let pick = rng.random_range(j..n);
                indices.swap(j, pick);
            }
            let deleted: std::collections::HashSet<usize> =
                indices[..n_corrupt].iter().copied().collect();
            let mut data = Dataset::with_capacity(d, n);
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                if !deleted.contains(&i) {
                    data.push_row(clean.row(i));
                    labels.push(Provenance::Clean);
                }
            }
            let mut row = vec![0u8; d];
            for _ in 0..n_corrupt {
                sampler.draw_into(&mut rng, &mut row);
                data.push_row(&row);
                labels.push(Provenance::Corrupt);
            }
            Ok(LabeledDataset::new(data, labels))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tv_exact;
    use crate::gen::random_net;
    use crate::graph::Dag;
    use crate::net::DEFAULT_D_EXACT;

    fn bernoulli(p: f64) -> DistributionTable {
        DistributionTable::new(1, vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn decompose_bernoulli_pair() {
        let d = decompose(&bernoulli(0.5), &bernoulli(0.6)).unwrap();
        assert!((d.weight - 0.1).abs() < 1e-12);
        assert!((d.additive.prob(1) - 1.0).abs() < 1e-12);
        assert!((d.subtractive.prob(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_identical_fails() {
        let b = bernoulli(0.4);
        assert!(matches!(decompose(&b, &b), Err(ContaminationError::IdenticalDistributions)));
    }

    #[test]
    fn decomposition_invariants_random_pairs() {
        for seed in 0..30u64 {
            let d = 1 + (seed % 8) as usize;
            let p = random_net(d, 3, 0.02, seed).to_table(DEFAULT_D_EXACT).unwrap();
            let q = random_net(d, 3, 0.02, seed + 500).to_table(DEFAULT_D_EXACT).unwrap();
            let dec = decompose(&p, &q).unwrap();
            assert!((dec.weight - tv_exact(&p, &q).unwrap()).abs() < 1e-12);
            for idx in 0..p.len() {
                let e = dec.additive.prob(idx);
                let l = dec.subtractive.prob(idx);
                // Disjoint supports.
                assert!(e == 0.0 || l == 0.0, "seed {seed} idx {idx}");
                // Reconstruction identity.
                let rebuilt = p.prob(idx) + dec.weight * e - dec.weight * l;
                assert!((rebuilt - q.prob(idx)).abs() < 1e-12);
                // Subtracted mass never exceeds what is there.
                assert!(dec.weight * l <= p.prob(idx) + 1e-12);
            }
        }
    }

    #[test]
    fn mixture_edges_and_weight() {
        let p = bernoulli(0.3);
        let r = bernoulli(0.9);
        assert_eq!(mixture_table(&p, &r, 0.0).unwrap(), p);
        assert_eq!(mixture_table(&p, &r, 1.0).unwrap(), r);
        for seed in 0..20u64 {
            let d = 1 + (seed % 8) as usize;
            let p = random_net(d, 2, 0.02, seed).to_table(DEFAULT_D_EXACT).unwrap();
            let r = random_net(d, 2, 0.02, seed + 900).to_table(DEFAULT_D_EXACT).unwrap();
            let eps = 0.01 + 0.03 * (seed % 5) as f64;
            let mix = mixture_table(&p, &r, eps).unwrap();
            match decompose(&p, &mix) {
                Ok(dec) => assert!(dec.weight <= eps + 1e-12, "seed {seed}"),
                Err(ContaminationError::IdenticalDistributions) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn huber_eps_zero_is_clean() {
        let net = random_net(4, 2, 0.1, 1);
        let model = NoiseModel::new(
            NoiseKind::HuberAdditive,
            0.0,
            AdversaryStrategy::PointMass { point: vec![1, 1, 1, 1] },
        )
        .unwrap();
        let out = corrupt_huber(&net, 500, &model, 3).unwrap();
        assert_eq!(out.corrupt_count(), 0);
    }

    #[test]
    fn huber_tiny_eps_rarely_corrupts() {
        let net = random_net(3, 1, 0.1, 2);
        let model = NoiseModel::new(
            NoiseKind::HuberAdditive,
            1e-9,
            AdversaryStrategy::PointMass { point: vec![1, 1, 1] },
        )
        .unwrap();
        let out = corrupt_huber(&net, 100, &model, 4).unwrap();
        assert_eq!(out.corrupt_count(), 0);
    }

    #[test]
    fn huber_corrupt_count_concentrates() {
        let net = random_net(4, 2, 0.1, 5);
        let model = NoiseModel::new(
            NoiseKind::HuberAdditive,
            0.05,
            AdversaryStrategy::ProductNoise { means: vec![0.9, 0.9, 0.9, 0.9] },
        )
        .unwrap();
        let n = 100_000;
        let out = corrupt_huber(&net, n, &model, 7).unwrap();
        let sigma = (n as f64 * 0.05 * 0.95).sqrt();
        let got = out.corrupt_count() as f64;
        assert!((got - 5000.0).abs() <= 5.0 * sigma, "corrupt count {got}");
    }

    #[test]
    fn huber_is_deterministic() {
        let net = random_net(4, 2, 0.1, 5);
        let model = NoiseModel::new(
            NoiseKind::HuberAdditive,
            0.1,
            AdversaryStrategy::PointMass { point: vec![1, 0, 1, 0] },
        )
        .unwrap();
        assert_eq!(corrupt_huber(&net, 1000, &model, 8), corrupt_huber(&net, 1000, &model, 8));
    }

    #[test]
    fn replacement_eps_zero_is_identity() {
        let net = random_net(4, 2, 0.1, 6);
        let clean = net.sample(200, 9);
        let model = NoiseModel::new(
            NoiseKind::TvReplacement,
            0.0,
            AdversaryStrategy::PointMass { point: vec![1, 1, 1, 1] },
        )
        .unwrap();
        let out = corrupt_replacement(&clean, &model, None, 10).unwrap();
        assert_eq!(out.data, clean);
        assert_eq!(out.corrupt_count(), 0);
    }

    #[test]
    fn replacement_point_mass_inserts_exact_count() {
        let net = random_net(3, 1, 0.2, 7);
        let clean = net.sample(1000, 11);
        let point = vec![1u8, 1, 1];
        let model = NoiseModel::new(
            NoiseKind::TvReplacement,
            0.1,
            AdversaryStrategy::PointMass { point: point.clone() },
        )
        .unwrap();
        let out = corrupt_replacement(&clean, &model, None, 12).unwrap();
        assert_eq!(out.len(), 1000);
        let corrupt_copies = out
            .labels
            .iter()
            .zip(out.data.rows())
            .filter(|(&l, row)| l == Provenance::Corrupt && *row == point.as_slice())
            .count();
        assert_eq!(corrupt_copies, 100);
        assert_eq!(out.corrupt_count(), 100);
    }

    #[test]
    fn subtractive_tail_shrinks_projection_tail() {
        let net = random_net(5, 2, 0.2, 8);
        let table = net.config_table();
        let m = table.len();
        let mut direction = vec![0.0; m];
        direction[0] = 1.0;
        let reference = net.cpt().to_vec();
        let clean = net.sample(2000, 13);
        let mean_abs = |data: &Dataset| {
            data.rows()
                .map(|r| sparse_projection(r, &reference, &direction, table).abs())
                .sum::<f64>()
                / data.len() as f64
        };
        let model = NoiseModel::new(
            NoiseKind::TvReplacement,
            0.2,
            AdversaryStrategy::SubtractiveTail {
                direction: direction.clone(),
                reference: reference.clone(),
            },
        )
        .unwrap();
        let out = corrupt_replacement(&clean, &model, Some(&net), 14).unwrap();
        assert_eq!(out.len(), clean.len());
        assert!(mean_abs(&out.data) < mean_abs(&clean));
    }

    #[test]
    fn cpt_shift_attack_bernoulli_mixture_mean() {
        let net = BayesNet::new(Dag::empty(1).unwrap(), vec![0.5]).unwrap();
        let (strategy, shifted) = cpt_shift_attack(&net, 0, 0.5).unwrap();
        assert_eq!(strategy, AdversaryStrategy::CptShift { target: 0, magnitude: 0.5 });
        assert!((shifted.cpt()[0] - 1.0).abs() < 1e-15);
        let mix = mixture_table(
            &net.to_table(DEFAULT_D_EXACT).unwrap(),
            &shifted.to_table(DEFAULT_D_EXACT).unwrap(),
            0.1,
        )
        .unwrap();
        // Mixture mean 0.55: the plain empirical estimator inherits a 0.05
        // bias.
        assert!((mix.prob(1) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn cpt_shift_zero_magnitude_is_noop() {
        let net = random_net(4, 2, 0.1, 21);
        let (_, shifted) = cpt_shift_attack(&net, 2, 0.0).unwrap();
        assert_eq!(shifted.cpt(), net.cpt());
    }

    #[test]
    fn cpt_shift_multi_coordinate_mixture_matches_analytic() {
        // Shift both configurations of node 1 in a chain; the mixture's
        // conditional table moves by eps * delta on those coordinates.
        let net = BayesNet::new(Dag::chain(3).unwrap(), vec![0.4, 0.3, 0.5, 0.6, 0.2]).unwrap();
        let eps = 0.05;
        let delta = 0.4;
        let mut cpt = net.cpt().to_vec();
        cpt[1] += delta;
        cpt[2] += delta;
        let shifted = BayesNet::new(net.dag().clone(), cpt).unwrap();
        let mix = mixture_table(
            &net.to_table(DEFAULT_D_EXACT).unwrap(),
            &shifted.to_table(DEFAULT_D_EXACT).unwrap(),
            eps,
        )
        .unwrap();
        let mix_cpt = crate::oracle::conditional_table(&mix, net.config_table()).unwrap();
        assert!((mix_cpt[1] - (net.cpt()[1] + eps * delta)).abs() < 1e-10);
        assert!((mix_cpt[2] - (net.cpt()[2] + eps * delta)).abs() < 1e-10);
        // Unshifted coordinates keep their conditionals.
        assert!((mix_cpt[0] - net.cpt()[0]).abs() < 1e-10);
    }

    #[test]
    fn invalid_shift_rejected() {
        let net = BayesNet::new(Dag::empty(1).unwrap(), vec![0.8]).unwrap();
        assert!(matches!(
            cpt_shift_attack(&net, 0, 0.5),
            Err(ContaminationError::InvalidShift { .. })
        ));
    }

    #[test]
    fn noise_model_validation() {
        assert!(matches!(
            NoiseModel::new(NoiseKind::HuberAdditive, 0.5, AdversaryStrategy::PointMass { point: vec![1] }),
            Err(ContaminationError::InvalidEps(_))
        ));
        assert!(matches!(
            NoiseModel::new(
                NoiseKind::HuberAdditive,
                0.1,
                AdversaryStrategy::SubtractiveTail { direction: vec![1.0], reference: vec![0.5] }
            ),
            Err(ContaminationError::AdversaryKindMismatch { .. })
        ));
    }
}
