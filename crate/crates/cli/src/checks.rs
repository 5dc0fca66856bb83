//! The oracle-backed verification suite: every identity and inequality the
//! estimators rely on, checked numerically against exhaustive computation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbn_core::contamination;
use rbn_core::dist::{self, DistributionTable};
use rbn_core::gen::{self, Topology};
use rbn_core::graph::ConfigTable;
use rbn_core::net::{ProbMode, DEFAULT_D_EXACT};
use rbn_core::oracle;
use rbn_core::transform;
use rbn_core::{BayesNet, Dag};

pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str, instances: usize, max_violation: f64, tolerance: f64) -> Self {
        Self { name, instances, max_violation, tolerance, passed: max_violation <= tolerance, note: None }
    }
}

fn mixed_net(index: u64, max_d: usize, margin: f64) -> BayesNet {
    let d = 2 + (index as usize * 3 + 1) % (max_d - 1);
    let dag = match index % 4 {
        0 => gen::build_dag(Topology::Empty, d, index).unwrap(),
        1 => gen::build_dag(Topology::Chain, d, index).unwrap(),
        2 => gen::build_dag(Topology::Tree { fan_in: 2.min(d - 1).max(1) }, d, index).unwrap(),
        _ => gen::build_dag(Topology::RandomDag { max_fan_in: 3 }, d, index).unwrap(),
    };
    gen::random_cpt_net(dag, margin, index.wrapping_mul(0x2545_f491_4f6c_dd1d)).unwrap()
}

fn random_unit(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn random_reference(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m).map(|_| rng.random()).collect()
}

/// Squared-Hellinger upper bound through the conditional tables.
fn check_hellinger_bound(instances: usize) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    for index in 0..instances as u64 {
        let p = mixed_net(index, 8, 0.02);
        let q = gen::random_cpt_net(p.dag().clone(), 0.02, index + 31_337).unwrap();
        let bound = dist::hellinger_cpt_bound(&p, &q, DEFAULT_D_EXACT).unwrap();
        let h = dist::hellinger_exact(
            &p.to_table(DEFAULT_D_EXACT).unwrap(),
            &q.to_table(DEFAULT_D_EXACT).unwrap(),
        )
        .unwrap();
        worst = worst.max(h * h - bound);
    }
    CheckResult::new("hellinger-cpt-bound", instances, worst, 1e-12)
}

/// Filled vectors decode back to the sample that produced them.
fn check_transform_inverse(max_d: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut instances = 0usize;
    let mut failures = 0usize;
    for index in 0..10u64 {
        let net = mixed_net(index, max_d, 0.02);
        let table = net.config_table();
        let d = net.dim();
        for _ in 0..5 {
            let reference = random_reference(table.len(), &mut rng);
            let mut x = vec![0u8; d];
            for idx in 0..(1usize << d) {
                dist::bits_from_index(idx, &mut x);
                let fv = transform::fill_transform(&x, &reference, table).unwrap();
                instances += 1;
                if transform::recover_sample(&fv, table).unwrap() != x {
                    failures += 1;
                }
            }
        }
    }
    CheckResult::new("transform-inverse", instances, failures as f64, 0.0)
}

/// Conditioning on any realized prefix of filled coordinates leaves the
/// next coordinate's mean at its table value.
fn check_martingale_mean(max_d: usize) -> CheckResult {
    use std::collections::HashMap;
    let mut worst = 0.0f64;
    let mut instances = 0usize;
    for index in 0..6u64 {
        let d = 2 + (index as usize % (max_d - 1));
        let net = gen::random_net(d, 2, 0.05, index + 900);
        let table = net.config_table();
        let m = net.num_configs();
        let mut x = vec![0u8; d];
        for k in 1..m {
            let mut groups: HashMap<Vec<u64>, (f64, f64)> = HashMap::new();
            for idx in 0..(1usize << d) {
                dist::bits_from_index(idx, &mut x);
                let w = net.pmf(&x);
                if w == 0.0 {
                    continue;
                }
                let fv = transform::fill_transform(&x, net.cpt(), table).unwrap();
                let prefix: Vec<u64> = fv.values()[..k].iter().map(|v| v.to_bits()).collect();
                let entry = groups.entry(prefix).or_insert((0.0, 0.0));
                entry.0 += w;
                entry.1 += w * fv.values()[k];
            }
            for (_, (mass, weighted)) in groups {
                if mass > 0.0 {
                    worst = worst.max((weighted / mass - net.cpt()[k]).abs());
                    instances += 1;
                }
            }
        }
    }
    CheckResult::new("martingale-conditional-mean", instances, worst, 1e-10)
}

/// Mean and covariance of the filled vector at the true table, via the
/// moment-gap helper so that sensitivity can be tested with a sabotaged
/// filling map.
pub(crate) fn fill_moment_gap<F>(net: &BayesNet, fill: F) -> f64
where
    F: Fn(&[u8], &[f64], &ConfigTable) -> Vec<f64>,
{
    let table = net.config_table();
    let d = net.dim();
    let m = net.num_configs();
    let probs = net.config_probs(ProbMode::exact()).unwrap();
    let mut mean = vec![0.0; m];
    let mut second = DMatrix::<f64>::zeros(m, m);
    let mut x = vec![0u8; d];
    for idx in 0..(1usize << d) {
        dist::bits_from_index(idx, &mut x);
        let w = net.pmf(&x);
        let values = fill(&x, net.cpt(), table);
        for a in 0..m {
            mean[a] += w * values[a];
            for b in 0..m {
                second[(a, b)] += w * (values[a] - net.cpt()[a]) * (values[b] - net.cpt()[b]);
            }
        }
    }
    let mut gap = 0.0f64;
    for a in 0..m {
        gap = gap.max((mean[a] - net.cpt()[a]).abs());
        for b in 0..m {
            let want = if a == b { probs[a] * net.cpt()[a] * (1.0 - net.cpt()[a]) } else { 0.0 };
            gap = gap.max((second[(a, b)] - want).abs());
        }
    }
    gap
}

fn check_fill_moments(instances: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let net = mixed_net(index, 7, 0.03);
        worst = worst.max(fill_moment_gap(&net, |x, reference, table| {
            transform::fill_transform(x, reference, table).unwrap().into_values()
        }));
    }
    CheckResult::new("fill-moment-identities", instances, worst, 1e-10)
}

/// Sub-Gaussian projection tails at any reference table.
fn check_azuma_tail(nets: usize, directions: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    let mut instances = 0usize;
    for index in 0..nets as u64 {
        let net = mixed_net(index, 8, 0.02);
        let table = net.config_table();
        let m = table.len();
        let dist_table = net.to_table(DEFAULT_D_EXACT).unwrap();
        let mut reference = net.cpt().to_vec();
        let dir = random_unit(m, &mut rng);
        let scale = rng.random::<f64>() * 0.5;
        for (r, g) in reference.iter_mut().zip(&dir) {
            *r = (*r + g * scale).clamp(0.0, 1.0);
        }
        let gap = reference
            .iter()
            .zip(net.cpt())
            .map(|(r, p)| (r - p) * (r - p))
            .sum::<f64>()
            .sqrt();
        for _ in 0..directions {
            let v = random_unit(m, &mut rng);
            for step in 1..=8 {
                let t = 0.5 * step as f64;
                let tail =
                    oracle::exact_tail(&dist_table, &v, &reference, t + gap, table).unwrap();
                worst = worst.max(tail - 2.0 * (-t * t / 2.0).exp());
                instances += 1;
            }
        }
    }
    CheckResult::new("projection-tail-bound", instances, worst, 1e-12)
}

/// Additive/subtractive split: disjoint supports, reconstruction, and the
/// subtractive cap.
fn check_decomposition(instances: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let d = 1 + (index as usize % 8);
        let p = gen::random_net(d, 3, 0.02, index).to_table(DEFAULT_D_EXACT).unwrap();
        let q = gen::random_net(d, 3, 0.02, index + 77_000).to_table(DEFAULT_D_EXACT).unwrap();
        let dec = contamination::decompose(&p, &q).unwrap();
        for idx in 0..p.len() {
            let e = dec.additive.prob(idx);
            let l = dec.subtractive.prob(idx);
            if e > 0.0 && l > 0.0 {
                worst = worst.max(e.min(l));
            }
            worst = worst.max((p.prob(idx) + dec.weight * (e - l) - q.prob(idx)).abs());
            worst = worst.max(dec.weight * l - p.prob(idx));
        }
    }
    CheckResult::new("tv-decomposition", instances, worst, 1e-12)
}

/// The shifted-mean identity: the mean of the filled vector moves by the
/// configuration probability times the table gap.
fn check_shifted_mean(instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let net = mixed_net(index, 8, 0.02);
        let table = net.config_table();
        let reference = random_reference(table.len(), &mut rng);
        let dist_table = net.to_table(DEFAULT_D_EXACT).unwrap();
        let mean = oracle::exact_mean_f(&dist_table, &reference, table).unwrap();
        let probs = net.config_probs(ProbMode::exact()).unwrap();
        for k in 0..table.len() {
            let want = probs[k] * (net.cpt()[k] - reference[k]);
            worst = worst.max((mean[k] - reference[k] - want).abs());
        }
    }
    CheckResult::new("shifted-mean-identity", instances, worst, 1e-10)
}

/// Clean moment-matrix norm bounds: the quadratic-gap form on product
/// structures, and the provable sqrt(2 d S) relaxation on general graphs
/// (conditioning on a later parental configuration pins earlier bits, which
/// breaks the quadratic form off product structures).
fn check_clean_moment_norm(instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let product = index % 2 == 0;
        let d = 2 + (index as usize % 6);
        let net = if product {
            gen::random_cpt_net(Dag::empty(d).unwrap(), 0.05, index).unwrap()
        } else {
            mixed_net(index, 7, 0.05)
        };
        let table = net.config_table();
        let reference: Vec<f64> = net
            .cpt()
            .iter()
            .map(|&p| (p + 0.3 * (rng.random::<f64>() - 0.5)).clamp(0.01, 0.99))
            .collect();
        let dist_table = net.to_table(DEFAULT_D_EXACT).unwrap();
        let moment = oracle::exact_second_moment(&dist_table, &reference, table, true).unwrap();
        let norm = oracle::spectral_norm_dense(&moment).unwrap();
        let probs = net.config_probs(ProbMode::exact()).unwrap();
        let weighted: f64 = (0..table.len())
            .map(|k| probs[k] * (net.cpt()[k] - reference[k]).powi(2))
            .sum();
        let bound = if product { weighted } else { (2.0 * d as f64 * weighted).sqrt() };
        worst = worst.max(norm - bound);
    }
    CheckResult::new("clean-moment-norm-bound", instances, worst, 1e-10)
}

/// Mean shifts of the error components are controlled by their second
/// moments.
fn check_mean_vs_covariance(instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let d = 2 + (index as usize % 6);
        let p_net = gen::random_net(d, 2, 0.03, index + 300);
        let table = p_net.config_table();
        let p = p_net.to_table(DEFAULT_D_EXACT).unwrap();
        let r = gen::random_net(d, 2, 0.03, index + 400).to_table(DEFAULT_D_EXACT).unwrap();
        let mixed = contamination::mixture_table(&p, &r, 0.1 + 0.2 * rng.random::<f64>()).unwrap();
        let dec = match contamination::decompose(&p, &mixed) {
            Ok(dec) => dec,
            Err(_) => continue,
        };
        let reference = random_reference(table.len(), &mut rng);
        for component in [&dec.additive, &dec.subtractive] {
            let mean = oracle::exact_mean_f(component, &reference, table).unwrap();
            let shift: f64 = mean
                .iter()
                .zip(&reference)
                .map(|(m, q)| (m - q) * (m - q))
                .sum::<f64>()
                .sqrt();
            let moment = oracle::exact_second_moment(component, &reference, table, false).unwrap();
            let norm = oracle::spectral_norm_dense(&moment).unwrap();
            worst = worst.max(shift - norm.sqrt());
        }
    }
    CheckResult::new("mean-vs-second-moment", instances, worst, 1e-10)
}

/// Linearity of the off-diagonal moment matrix across the contamination
/// split.
fn check_mixture_moment_identity(instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let d = 2 + (index as usize % 6);
        let p_net = gen::random_net(d, 2, 0.03, index + 600);
        let table = p_net.config_table();
        let m = table.len();
        let p = p_net.to_table(DEFAULT_D_EXACT).unwrap();
        let r = gen::random_net(d, 2, 0.03, index + 700).to_table(DEFAULT_D_EXACT).unwrap();
        let mixed = contamination::mixture_table(&p, &r, 0.05 + 0.25 * rng.random::<f64>()).unwrap();
        let dec = match contamination::decompose(&p, &mixed) {
            Ok(dec) => dec,
            Err(_) => continue,
        };
        let reference = random_reference(m, &mut rng);
        let m_mixed = oracle::exact_second_moment(&mixed, &reference, table, true).unwrap();
        let m_clean = oracle::exact_second_moment(&p, &reference, table, true).unwrap();
        let m_add = oracle::exact_second_moment(&dec.additive, &reference, table, false).unwrap();
        let m_sub =
            oracle::exact_second_moment(&dec.subtractive, &reference, table, false).unwrap();
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    let rebuilt =
                        m_clean[(a, b)] + dec.weight * (m_add[(a, b)] - m_sub[(a, b)]);
                    worst = worst.max((m_mixed[(a, b)] - rebuilt).abs());
                }
            }
        }
    }
    CheckResult::new("mixture-moment-identity", instances, worst, 1e-10)
}

/// Subtractive error keeps a small second moment: removing an eps-tail in
/// any direction contributes at most O(eps log(1/eps) + eps gap^2), tested
/// with an explicit allowance of 10x.
fn check_subtractive_norm() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_ratio = 0.0f64;
    let mut instances = 0usize;
    for index in 0..12u64 {
        let d = 3 + (index as usize % 5);
        let net = gen::random_net(d, 2, 0.1, index + 50);
        let table = net.config_table();
        let m = table.len();
        let p = net.to_table(DEFAULT_D_EXACT).unwrap();
        let v = random_unit(m, &mut rng);
        let mut reference = net.cpt().to_vec();
        let scale = rng.random::<f64>() * 0.5;
        for r in reference.iter_mut() {
            *r = (*r + scale * (rng.random::<f64>() - 0.5)).clamp(0.01, 0.99);
        }
        let gap_sq: f64 = reference
            .iter()
            .zip(net.cpt())
            .map(|(r, pk)| (r - pk) * (r - pk))
            .sum();

        for eps in [0.01, 0.02, 0.05] {
            // Remove the eps-tail of the projection magnitudes: the
            // subtractive component is the clean distribution restricted to
            // its own extreme region.
            let mut order: Vec<usize> = (0..p.len()).collect();
            let mut x = vec![0u8; d];
            let score = |idx: usize, x: &mut Vec<u8>| {
                dist::bits_from_index(idx, x);
                rbn_core::transform::projection(x, &reference, &v, table).unwrap().abs()
            };
            order.sort_by(|&a, &b| {
                let sa = score(a, &mut x);
                let sb = score(b, &mut x);
                sb.partial_cmp(&sa).unwrap().then(a.cmp(&b))
            });
            let mut remaining = eps;
            let mut sub = vec![0.0; p.len()];
            for &idx in &order {
                if remaining <= 0.0 {
                    break;
                }
                let take = p.prob(idx).min(remaining);
                sub[idx] = take / eps;
                remaining -= take;
            }
            if remaining > 1e-12 {
                continue;
            }
            let sub_table = DistributionTable::new(d, sub).unwrap();
            let moment =
                oracle::exact_second_moment(&sub_table, &reference, table, false).unwrap();
            let norm = oracle::spectral_norm_dense(&moment).unwrap();
            let w_l = eps / (1.0 - eps);
            let budget = eps * (1.0 / eps).ln() + eps * gap_sq;
            worst_ratio = worst_ratio.max(w_l * norm / budget);
            instances += 1;
        }
    }
    let mut result = CheckResult::new("subtractive-tail-norm", instances, worst_ratio, 10.0);
    if worst_ratio > 8.0 && worst_ratio <= 10.0 {
        result.note = Some(format!("near allowance: worst ratio {worst_ratio:.2}"));
    }
    result
}

/// When the moment norm is large enough to fail the spectral test, the
/// filter slack dominates the true table gap.
fn check_slack_dominates_gap() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = f64::NEG_INFINITY;
    let mut fired = 0usize;
    for index in 0..24u64 {
        let d = 6 + (index as usize % 3);
        let dag = Dag::empty(d).unwrap();
        let cpt: Vec<f64> = (0..d).map(|_| 0.85 + 0.1 * rng.random::<f64>()).collect();
        let net = BayesNet::new(dag, cpt).unwrap();
        let table = net.config_table();
        let eps = 0.2;
        // Reference far below the truth plus a point-mass contamination at
        // the all-ones corner: the clean moment term alone pushes the norm
        // over the spectral threshold.
        let reference: Vec<f64> = net.cpt().iter().map(|_| 0.02 + 0.1 * rng.random::<f64>()).collect();
        let gap: f64 = reference
            .iter()
            .zip(net.cpt())
            .map(|(r, p)| (r - p) * (r - p))
            .sum::<f64>()
            .sqrt();
        let p = net.to_table(DEFAULT_D_EXACT).unwrap();
        let ones = DistributionTable::point_mass(d, (1usize << d) - 1);
        let mixed = contamination::mixture_table(&p, &ones, eps).unwrap();
        let moment = oracle::exact_second_moment(&mixed, &reference, table, true).unwrap();
        let norm = oracle::spectral_norm_dense(&moment).unwrap();
        // Exact minimum configuration probability is 1 on a product
        // structure, so alpha = 1.
        let alpha = 1.0;
        let threshold = 10.0 * eps * (1.0 / eps).ln() / alpha;
        if norm <= threshold {
            continue;
        }
        fired += 1;
        let slack = 3.0 * (eps * norm).sqrt() / alpha;
        worst = worst.max(gap - slack);
    }
    let mut result = CheckResult::new("slack-dominates-gap", fired, worst, 0.0);
    if fired < 8 {
        result.passed = false;
        result.note = Some(format!("only {fired} instances fired the large-norm branch"));
    }
    result
}

/// Iterative eigensolver against the dense reference.
fn check_eigensolver(instances: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for index in 0..instances as u64 {
        let n = 2 + (index as usize % 60);
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random::<f64>() * 2.0 - 1.0;
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        let want = oracle::spectral_norm_dense(&matrix).unwrap();
        let (lambda, _) = rbn_core::filter::power_iteration(&matrix, 1e-13, 400_000, index)
            .expect("random instances converge");
        worst = worst.max((lambda.abs() - want).abs() / want.max(1e-300));
    }
    CheckResult::new("power-vs-dense-eigensolver", instances, worst, 1e-6)
}

pub fn run_all(quick: bool) -> Vec<CheckResult> {
    let scale = |full: usize, reduced: usize| if quick { reduced } else { full };
    vec![
        check_hellinger_bound(scale(100, 20)),
        check_transform_inverse(if quick { 5 } else { 8 }),
        check_martingale_mean(if quick { 4 } else { 6 }),
        check_fill_moments(scale(30, 8)),
        check_azuma_tail(scale(20, 5), scale(20, 5)),
        check_decomposition(scale(100, 25)),
        check_shifted_mean(scale(40, 10)),
        check_clean_moment_norm(scale(40, 10)),
        check_mean_vs_covariance(scale(40, 10)),
        check_mixture_moment_identity(scale(40, 10)),
        check_subtractive_norm(),
        check_slack_dominates_gap(),
        check_eigensolver(scale(60, 15)),
    ]
}

/// Prints the results table; returns true when everything passed.
pub fn print_table(results: &[CheckResult]) -> bool {
    println!("{:<32} {:>9} {:>14} {:>10}  result", "check", "instances", "max-violation", "tolerance");
    let mut all_pass = true;
    for r in results {
        all_pass &= r.passed;
        println!(
            "{:<32} {:>9} {:>14.3e} {:>10.0e}  {}{}",
            r.name,
            r.instances,
            r.max_violation,
            r.tolerance,
            if r.passed { "pass" } else { "FAIL" },
            r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default(),
        );
    }
    println!("{}", if all_pass { "all checks passed" } else { "CHECKS FAILED" });
    all_pass
}
