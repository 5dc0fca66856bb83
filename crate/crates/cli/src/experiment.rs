//! Experiment grids: methods x corruption levels x trials, with medians and
//! interquartile ranges aggregated per cell.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;

use rbn_core::contamination::{self, AdversaryStrategy, NoiseKind, NoiseModel};
use rbn_core::filter::{self, EngineConfig, HuberSource};
use rbn_core::gen::{self, Topology};
use rbn_core::io::{self, fmt_f64};
use rbn_core::{derive_seed, BayesNet, Provenance};

use crate::eval;
use crate::Method;

/// Engine runs need a positive corruption level even on clean grids.
const EPS_FLOOR: f64 = 1e-3;

pub struct ExperimentSpec {
    pub topology: Topology,
    pub d: usize,
    pub c: f64,
    pub eps_grid: Vec<f64>,
    pub trials: u64,
    pub n_override: Option<usize>,
    pub methods: Vec<Method>,
    pub noise_kind: NoiseKind,
    pub adversary: AdversaryStrategy,
    pub seed: u64,
    pub d_exact: usize,
    pub engine_overrides: Option<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Deserialize)]
struct SpecFile {
    topology: String,
    fan_in: Option<usize>,
    max_fan_in: Option<usize>,
    d: usize,
    c: f64,
    eps_grid: Vec<f64>,
    trials: u64,
    n_override: Option<usize>,
    methods: Vec<String>,
    noise_kind: String,
    adversary: serde_json::Value,
    seed: u64,
    d_exact: Option<usize>,
    engine: Option<serde_json::Map<String, serde_json::Value>>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text).context("parsing experiment spec")?;
        let topology = match file.topology.as_str() {
            "empty" => Topology::Empty,
            "chain" => Topology::Chain,
            "tree" => Topology::Tree {
                fan_in: file.fan_in.context("tree topology needs fan_in")?,
            },
            "random_dag" => Topology::RandomDag {
                max_fan_in: file.max_fan_in.context("random_dag topology needs max_fan_in")?,
            },
            other => bail!("unknown topology {other:?}"),
        };
        if file.trials == 0 {
            bail!("trials must be at least 1");
        }
        for &eps in &file.eps_grid {
            if !(0.0..0.25).contains(&eps) {
                bail!("eps {eps} outside [0, 0.25)");
            }
        }
        let methods = file
            .methods
            .iter()
            .map(|name| match name.as_str() {
                "filter" => Ok(Method::Filter),
                "mle" => Ok(Method::Mle),
                other => bail!("unknown method {other:?}"),
            })
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            bail!("at least one method is required");
        }
        let noise_kind = match file.noise_kind.as_str() {
            "huber_additive" => NoiseKind::HuberAdditive,
            "tv_replacement" => NoiseKind::TvReplacement,
            other => bail!("unknown noise kind {other:?}"),
        };
        let adversary = io::adversary_from_json(&file.adversary.to_string())?;
        Ok(Self {
            topology,
            d: file.d,
            c: file.c,
            eps_grid: file.eps_grid,
            trials: file.trials,
            n_override: file.n_override,
            methods,
            noise_kind,
            adversary,
            seed: file.seed,
            d_exact: file.d_exact.unwrap_or(rbn_core::DEFAULT_D_EXACT),
            engine_overrides: file.engine,
        })
    }

    /// The reference model is generated once from the master seed.
    pub fn model(&self) -> Result<BayesNet> {
        let dag = gen::build_dag(self.topology, self.d, derive_seed(self.seed, 0xd, 0))?;
        Ok(gen::random_cpt_net(dag, self.c, derive_seed(self.seed, 0xc, 0))?)
    }

    fn engine_config(&self, eps: f64) -> Result<EngineConfig> {
        let mut fields = self.engine_overrides.clone().unwrap_or_default();
        fields.insert("eps".into(), serde_json::json!(eps.max(EPS_FLOOR)));
        let mut config =
            io::engine_config_from_json(&serde_json::Value::Object(fields).to_string())?;
        if let Some(n) = self.n_override {
            config.main_sample_cap = n;
        }
        Ok(config)
    }
}

/// One grid cell result. Failed trials keep their identity columns and
/// empty metrics.
pub struct Row {
    pub method: &'static str,
    pub eps: f64,
    pub trial: u64,
    pub tv: Option<f64>,
    pub cpt_l2: Option<f64>,
    pub iters: usize,
    pub converged: bool,
    pub clean_rej: f64,
    pub corrupt_rej: f64,
    pub failed: bool,
}

fn run_trial(
    spec: &ExperimentSpec,
    net: &BayesNet,
    method: Method,
    eps_idx: usize,
    eps: f64,
    trial: u64,
) -> Result<Row> {
    let trial_seed = derive_seed(spec.seed, trial, eps_idx as u64);
    let noise = NoiseModel::new(spec.noise_kind, eps, spec.adversary.clone())?;
    let config = spec.engine_config(eps)?;
    let n_data = spec.n_override.unwrap_or_else(|| config.n_main(net.num_configs()));

    let mut iters = 0usize;
    let mut converged = true;
    let mut clean_rej = 0.0;
    let mut corrupt_rej = 0.0;

    let learned: BayesNet = match (method, spec.noise_kind) {
        (Method::Filter, NoiseKind::HuberAdditive) => {
            // Fresh-sample mode: the filter re-draws from the contaminated
            // stream each round.
            let mut source = HuberSource::new(net, &noise, derive_seed(trial_seed, 1, 0))?;
            let report = filter::learn(&mut source, &config, net.dag())?;
            iters = report.iterations.len();
            converged = report.converged;
            clean_rej = report.rejection.clean_rejection_rate().unwrap_or(0.0);
            corrupt_rej = report.rejection.corrupt_rejection_rate().unwrap_or(0.0);
            report.final_net
        }
        (Method::Filter, NoiseKind::TvReplacement) => {
            let clean = net.sample(n_data, derive_seed(trial_seed, 2, 0));
            let labeled = contamination::corrupt_replacement(
                &clean,
                &noise,
                Some(net),
                derive_seed(trial_seed, 3, 0),
            )?;
            // Labels stripped here: the learner sees bare samples only.
            let report = filter::learn_in_place(&labeled.data, &config, net.dag())?;
            iters = report.iterations.len();
            converged = report.converged;
            let table = net.config_table();
            let mut seen = [0usize; 2];
            let mut rejected = [0usize; 2];
            for (row, &label) in labeled.data.rows().zip(&labeled.labels) {
                let idx = usize::from(label == Provenance::Corrupt);
                seen[idx] += 1;
                if !report.filters.accepts(row, table) {
                    rejected[idx] += 1;
                }
            }
            clean_rej = if seen[0] > 0 { rejected[0] as f64 / seen[0] as f64 } else { 0.0 };
            corrupt_rej = if seen[1] > 0 { rejected[1] as f64 / seen[1] as f64 } else { 0.0 };
            report.final_net
        }
        (Method::Mle, NoiseKind::HuberAdditive) => {
            let corrupted =
                contamination::corrupt_huber(net, n_data, &noise, derive_seed(trial_seed, 4, 0))?;
            let (cpt, _) = filter::empirical_cpt(&corrupted.data, net.config_table());
            BayesNet::new(net.dag().clone(), cpt)?
        }
        (Method::Mle, NoiseKind::TvReplacement) => {
            // Same materialized dataset as the filter method sees.
            let clean = net.sample(n_data, derive_seed(trial_seed, 2, 0));
            let labeled = contamination::corrupt_replacement(
                &clean,
                &noise,
                Some(net),
                derive_seed(trial_seed, 3, 0),
            )?;
            let (cpt, _) = filter::empirical_cpt(&labeled.data, net.config_table());
            BayesNet::new(net.dag().clone(), cpt)?
        }
    };

    let metrics = eval::evaluate(net, &learned, spec.d_exact, derive_seed(trial_seed, 5, 0))?;
    Ok(Row {
        method: method.name(),
        eps,
        trial,
        tv: metrics.tv(),
        cpt_l2: Some(metrics.cpt_l2),
        iters,
        converged,
        clean_rej,
        corrupt_rej,
        failed: false,
    })
}

/// Runs the whole grid. Trials are independent (each derives its own seeds)
/// and run in parallel; rows come back in deterministic grid order.
pub fn run(spec: &ExperimentSpec) -> Vec<Row> {
    let net = match spec.model() {
        Ok(net) => net,
        Err(_) => return Vec::new(),
    };
    let mut cells: Vec<(Method, usize, f64, u64)> = Vec::new();
    for (eps_idx, &eps) in spec.eps_grid.iter().enumerate() {
        for trial in 0..spec.trials {
            for &method in &spec.methods {
                cells.push((method, eps_idx, eps, trial));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(method, eps_idx, eps, trial)| {
            run_trial(spec, &net, method, eps_idx, eps, trial).unwrap_or(Row {
                method: method.name(),
                eps,
                trial,
                tv: None,
                cpt_l2: None,
                iters: 0,
                converged: false,
                clean_rej: 0.0,
                corrupt_rej: 0.0,
                failed: true,
            })
        })
        .collect()
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut out = String::from("method,eps,trial,tv,cpt_l2,iters,converged,clean_rej,corrupt_rej\n");
    for row in rows {
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.method,
            fmt_f64(row.eps),
            row.trial,
            cell(row.tv),
            cell(row.cpt_l2),
            row.iters,
            row.converged,
            fmt_f64(row.clean_rej),
            fmt_f64(row.corrupt_rej),
        ));
    }
    out
}

/// Tukey five-number style aggregation: median plus hinge-based IQR.
fn quartiles(values: &mut Vec<f64>) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = |v: &[f64]| -> f64 {
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let n = values.len();
    let med = median(values);
    if n == 1 {
        return Some((med, med, med));
    }
    let half = n / 2;
    let q1 = median(&values[..half]);
    let q3 = median(&values[n - half..]);
    Some((q1, med, q3))
}

pub fn summary_string(spec: &ExperimentSpec, rows: &[Row]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("{\"cells\":[");
    let mut first = true;
    for &eps in spec.eps_grid.iter() {
        for &method in &spec.methods {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.method == method.name() && r.eps == eps)
                .collect();
            let failed = group.iter().filter(|r| r.failed).count();
            let mut tvs: Vec<f64> = group.iter().filter_map(|r| r.tv).collect();
            let mut gaps: Vec<f64> = group.iter().filter_map(|r| r.cpt_l2).collect();
            let ok: Vec<&&Row> = group.iter().filter(|r| !r.failed).collect();
            let converged = ok.iter().filter(|r| r.converged).count();
            let mean_iters = if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|r| r.iters as f64).sum::<f64>() / ok.len() as f64
            };
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(
                out,
                "{{\"method\":\"{}\",\"eps\":{},\"trials\":{},\"failed\":{failed},\"converged\":{converged},\"mean_iters\":{}",
                method.name(),
                fmt_f64(eps),
                group.len(),
                fmt_f64(mean_iters),
            );
            for (name, data) in [("tv", &mut tvs), ("cpt_l2", &mut gaps)] {
                match quartiles(data) {
                    Some((q1, med, q3)) => {
                        let _ = write!(
                            out,
                            ",\"{name}\":{{\"median\":{},\"q1\":{},\"q3\":{},\"iqr\":{}}}",
                            fmt_f64(med),
                            fmt_f64(q1),
                            fmt_f64(q3),
                            fmt_f64(q3 - q1)
                        );
                    }
                    None => {
                        let _ = write!(out, ",\"{name}\":null");
                    }
                }
            }
            out.push('}');
        }
    }
    out.push_str("]}\n");
    out
}
