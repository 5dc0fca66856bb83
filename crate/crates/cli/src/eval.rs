//! Model-vs-model evaluation metrics.

use anyhow::{bail, Result};

use rbn_core::dist;
use rbn_core::io::fmt_f64;
use rbn_core::net::ProbMode;
use rbn_core::BayesNet;

/// Distances between a reference network and a candidate with the same
/// graph. Exact total variation is only available at small dimension; above
/// the cutoff the balanced-network surrogate stands in, and the
/// configuration-weighted table gap is always reported.
pub struct ModelMetrics {
    pub tv_exact: Option<f64>,
    pub tv_surrogate: Option<f64>,
    pub cpt_l2: f64,
}

impl ModelMetrics {
    /// Headline distance: exact when available, surrogate otherwise.
    pub fn tv(&self) -> Option<f64> {
        self.tv_exact.or(self.tv_surrogate)
    }

    pub fn to_json(&self) -> String {
        let (tv, kind) = match (self.tv_exact, self.tv_surrogate) {
            (Some(tv), _) => (fmt_f64(tv), "\"exact\""),
            (None, Some(tv)) => (fmt_f64(tv), "\"surrogate\""),
            (None, None) => ("null".into(), "null"),
        };
        format!(
            "{{\"tv\":{tv},\"tv_kind\":{kind},\"tv_exact\":{},\"tv_surrogate\":{},\"cpt_l2\":{}}}\n",
            self.tv_exact.map(fmt_f64).unwrap_or_else(|| "null".into()),
            self.tv_surrogate.map(fmt_f64).unwrap_or_else(|| "null".into()),
            fmt_f64(self.cpt_l2),
        )
    }
}

/// Computes the metric set. Configuration probabilities are exact up to
/// `d_exact` and Monte Carlo (200k draws on `mc_seed`) beyond it.
pub fn evaluate(
    truth: &BayesNet,
    candidate: &BayesNet,
    d_exact: usize,
    mc_seed: u64,
) -> Result<ModelMetrics> {
    if truth.dag() != candidate.dag() {
        bail!("models have different graphs");
    }
    let exact_probs = truth.dim() <= d_exact;
    let probs = if exact_probs {
        truth.config_probs(ProbMode::Exact { d_exact })?
    } else {
        truth.config_probs(ProbMode::MonteCarlo { n: 200_000, seed: mc_seed })?
    };
    let cpt_l2 = dist::cpt_l2(truth, candidate, &probs)?;
    let tv_exact = if exact_probs {
        Some(dist::tv_exact(
            &truth.to_table(d_exact)?,
            &candidate.to_table(d_exact)?,
        )?)
    } else {
        None
    };
    // The surrogate needs a balance margin; a degenerate reference has none.
    let margin = truth.balance_margin();
    let tv_surrogate = (margin > 0.0).then(|| 3.0 / margin * cpt_l2);
    Ok(ModelMetrics { tv_exact, tv_surrogate, cpt_l2 })
}
