//! Sample sources, the single filtering round, and the outer learning loop.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::eigen::top_eigenpair;
use super::{
    build_m, compute_delta, empirical_cpt, estimate_alpha, find_threshold, spectral_test,
    EngineConfig, EngineError, FilterStack, IterationDiagnostics, IterationOutcome,
    IterationResult, LearnReport, LearnWarning, LinearFilter, RejectionStats, CPT_CLAMP,
};
use crate::contamination::{ContaminationError, NoiseModel, NoiseSampler};
use crate::dataset::{Dataset, Provenance};
use crate::graph::{ConfigTable, Dag};
use crate::net::BayesNet;

/// A supplier of samples for one filtering round. Implementations yield
/// i.i.d. draws from whatever distribution they represent; returning fewer
/// rows than requested signals an exhausted budget.
pub trait SampleSource {
    fn dim(&self) -> usize;
    /// Appends up to `n` samples to `out`; returns the number appended.
    fn draw(&mut self, n: usize, out: &mut Dataset) -> usize;
}

/// A sample supplier that also knows the ground-truth provenance of each
/// draw. Estimators never see these labels; they exist so that rejection
/// bookkeeping can be split by provenance during evaluation.
pub trait LabeledSource {
    fn dim(&self) -> usize;
    /// Appends up to `n` samples and their labels; returns the number
    /// appended.
    fn draw(&mut self, n: usize, out: &mut Dataset, labels: &mut Vec<Provenance>) -> usize;
    /// False when the labels are placeholders rather than ground truth.
    fn labels_known(&self) -> bool {
        true
    }
}

/// Adapter that discards labels, turning any labeled source into a plain
/// one.
pub struct Unlabeled<S>(pub S);

impl<S: LabeledSource> SampleSource for Unlabeled<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn draw(&mut self, n: usize, out: &mut Dataset) -> usize {
        let mut labels = Vec::new();
        self.0.draw(n, out, &mut labels)
    }
}

/// Unlimited clean sampler from a network.
pub struct NetSource {
    net: BayesNet,
    rng: ChaCha8Rng,
}

impl NetSource {
    pub fn new(net: BayesNet, seed: u64) -> Self {
        Self { net, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl LabeledSource for NetSource {
    fn dim(&self) -> usize {
        self.net.dim()
    }

    fn draw(&mut self, n: usize, out: &mut Dataset, labels: &mut Vec<Provenance>) -> usize {
        let mut row = vec![0u8; self.net.dim()];
        for _ in 0..n {
            row.fill(0);
            self.net.sample_row_into(&mut self.rng, &mut row);
            out.push_row(&row);
            labels.push(Provenance::Clean);
        }
        n
    }
}

/// Unlimited sampler from the mixture `(1 - eps) P + eps R`, where `R` is
/// the adversary's noise distribution. Every draw is labeled with the
/// component it came from.
pub struct HuberSource {
    clean: BayesNet,
    sampler: NoiseSampler,
    eps: f64,
    rng: ChaCha8Rng,
}

impl HuberSource {
    pub fn new(net: &BayesNet, model: &NoiseModel, seed: u64) -> Result<Self, ContaminationError> {
        let sampler = NoiseSampler::resolve(model.adversary(), Some(net), net.dim())?;
        Ok(Self {
            clean: net.clone(),
            sampler,
            eps: model.eps(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl LabeledSource for HuberSource {
    fn dim(&self) -> usize {
        self.clean.dim()
    }

    fn draw(&mut self, n: usize, out: &mut Dataset, labels: &mut Vec<Provenance>) -> usize {
        let mut row = vec![0u8; self.clean.dim()];
        for _ in 0..n {
            let u: f64 = self.rng.random();
            if u < self.eps {
                self.sampler.draw_into(&mut self.rng, &mut row);
                labels.push(Provenance::Corrupt);
            } else {
                row.fill(0);
                self.clean.sample_row_into(&mut self.rng, &mut row);
                labels.push(Provenance::Clean);
            }
            out.push_row(&row);
        }
        n
    }
}

/// Finite source reading a materialized dataset front to back.
pub struct DatasetSource<'a> {
    data: &'a Dataset,
    labels: Option<&'a [Provenance]>,
    pos: usize,
}

impl<'a> DatasetSource<'a> {
    pub fn new(data: &'a Dataset, labels: Option<&'a [Provenance]>) -> Self {
        if let Some(l) = labels {
            assert_eq!(l.len(), data.len(), "one label per sample");
        }
        Self { data, labels, pos: 0 }
    }
}

impl LabeledSource for DatasetSource<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn draw(&mut self, n: usize, out: &mut Dataset, labels: &mut Vec<Provenance>) -> usize {
        let take = n.min(self.data.len() - self.pos);
        for i in self.pos..self.pos + take {
            out.push_row(self.data.row(i));
            labels.push(self.labels.map_or(Provenance::Clean, |l| l[i]));
        }
        self.pos += take;
        take
    }

    fn labels_known(&self) -> bool {
        self.labels.is_some()
    }
}

/// Rejection sampling of a labeled source through a filter stack, with
/// per-provenance bookkeeping. Labels never leave this wrapper.
struct FilteredSource<'a> {
    inner: &'a mut dyn LabeledSource,
    stack: &'a FilterStack,
    table: &'a ConfigTable,
    stats: &'a mut RejectionStats,
}

impl SampleSource for FilteredSource<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn draw(&mut self, n: usize, out: &mut Dataset) -> usize {
        let mut added = 0usize;
        // Generous retry budget; the stack rejects only a small fraction of
        // the contaminated distribution when the tail conditions hold.
        let attempt_cap = n.saturating_mul(20) + 1024;
        let mut attempts = 0usize;
        let mut raw = Dataset::new(self.dim());
        let mut labels: Vec<Provenance> = Vec::new();
        while added < n && attempts < attempt_cap {
            let want = (n - added).min(8192);
            raw.clear();
            labels.clear();
            let got = self.inner.draw(want, &mut raw, &mut labels);
            if got == 0 {
                break;
            }
            attempts += got;
            self.stats.raw_drawn += got;
            self.stats.labels_known = self.inner.labels_known();
            for (row, &label) in raw.rows().zip(&labels) {
                match label {
                    Provenance::Clean => self.stats.clean_seen += 1,
                    Provenance::Corrupt => self.stats.corrupt_seen += 1,
                }
                if self.stack.accepts(row, self.table) {
                    out.push_row(row);
                    self.stats.accepted += 1;
                    added += 1;
                    if added == n {
                        break;
                    }
                } else {
                    match label {
                        Provenance::Clean => self.stats.clean_rejected += 1,
                        Provenance::Corrupt => self.stats.corrupt_rejected += 1,
                    }
                }
            }
        }
        added
    }
}

fn draw_exact(
    source: &mut dyn SampleSource,
    n: usize,
    out: &mut Dataset,
) -> Result<(), EngineError> {
    let got = source.draw(n, out);
    if got < n {
        return Err(EngineError::SampleBudgetExhausted { requested: n, got });
    }
    Ok(())
}

/// The heart of one round, operating on already-drawn batches: estimate
/// `alpha` and the empirical table, build the moment matrix, test its top
/// eigenvalue, and either certify the table or search the third batch for a
/// filter threshold.
fn iteration_core(
    alpha_batch: &Dataset,
    main_batch: &Dataset,
    tail_batch: &Dataset,
    config: &EngineConfig,
    table: &ConfigTable,
) -> Result<IterationOutcome, EngineError> {
    let alpha = estimate_alpha(alpha_batch, table)?;
    let (cpt_estimate, unseen) = empirical_cpt(main_batch, table);
    let matrix = build_m(main_batch, &cpt_estimate, table);
    let (lambda, direction) =
        top_eigenpair(&matrix, config.eig_tol, config.eig_max_iter, config.seed)?;
    let unseen_configs = unseen.iter().filter(|&&u| u).count();

    let mut diagnostics = IterationDiagnostics {
        alpha,
        lambda_star: lambda,
        passed_spectral: false,
        delta: None,
        threshold: None,
        rejected_fraction: 0.0,
        candidates_scanned: 0,
        unseen_configs,
    };

    if spectral_test(lambda, alpha, config.eps, config.spectral_const)? {
        diagnostics.passed_spectral = true;
        return Ok(IterationOutcome {
            result: IterationResult::Estimate,
            cpt_estimate,
            unseen,
            diagnostics,
        });
    }

    let delta = compute_delta(lambda, alpha, config.eps)?;
    diagnostics.delta = Some(delta);
    match find_threshold(tail_batch, &direction, &cpt_estimate, delta, config.eps, table) {
        Ok((threshold, scanned)) => {
            diagnostics.threshold = Some(threshold);
            diagnostics.candidates_scanned = scanned;
            let filter = LinearFilter::new(direction, cpt_estimate.clone(), threshold, delta)?;
            Ok(IterationOutcome {
                result: IterationResult::NewFilter(filter),
                cpt_estimate,
                unseen,
                diagnostics,
            })
        }
        Err(EngineError::NoThresholdFound { candidates_scanned }) => {
            diagnostics.candidates_scanned = candidates_scanned;
            Ok(IterationOutcome {
                result: IterationResult::ThresholdSearchFailed,
                cpt_estimate,
                unseen,
                diagnostics,
            })
        }
        Err(e) => Err(e),
    }
}

/// Runs one filtering round against a source that already represents the
/// contaminated distribution conditioned on every previous filter
/// accepting. Draws one alpha batch and two main batches.
pub fn run_iteration(
    source: &mut dyn SampleSource,
    config: &EngineConfig,
    table: &ConfigTable,
) -> Result<IterationOutcome, EngineError> {
    config.validate()?;
    let d = table.dim();
    let m = table.len();
    let mut alpha_batch = Dataset::new(d);
    draw_exact(source, config.n_alpha(m), &mut alpha_batch)?;
    let mut main_batch = Dataset::new(d);
    draw_exact(source, config.n_main(m), &mut main_batch)?;
    let mut tail_batch = Dataset::new(d);
    draw_exact(source, config.n_main(m), &mut tail_batch)?;
    iteration_core(&alpha_batch, &main_batch, &tail_batch, config, table)
}

fn clamp_cpt(mut cpt: Vec<f64>) -> Vec<f64> {
    for v in &mut cpt {
        *v = v.clamp(CPT_CLAMP, 1.0 - CPT_CLAMP);
    }
    cpt
}

struct LoopState {
    stack: FilterStack,
    diagnostics: Vec<IterationDiagnostics>,
    warnings: Vec<LearnWarning>,
    last_cpt: Vec<f64>,
    converged: bool,
}

impl LoopState {
    fn new(m: usize) -> Self {
        Self {
            stack: FilterStack::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
            last_cpt: vec![0.5; m],
            converged: false,
        }
    }

    /// Integrates one round's outcome; returns true when the loop should
    /// stop.
    fn absorb(&mut self, outcome: IterationOutcome) -> bool {
        self.last_cpt = outcome.cpt_estimate;
        self.diagnostics.push(outcome.diagnostics);
        match outcome.result {
            IterationResult::Estimate => {
                self.converged = true;
                true
            }
            IterationResult::NewFilter(filter) => {
                self.stack.push(filter);
                false
            }
            IterationResult::ThresholdSearchFailed => {
                self.warnings.push(LearnWarning::ThresholdSearchFailed);
                true
            }
        }
    }

    /// Integrates a round-level error; returns true when it is terminal.
    fn absorb_error(&mut self, error: EngineError) -> Result<bool, EngineError> {
        match error {
            EngineError::SampleBudgetExhausted { .. } | EngineError::EmptyDataset => {
                self.warnings.push(LearnWarning::SampleBudgetExhausted);
                Ok(true)
            }
            EngineError::ZeroAlpha => {
                self.warnings.push(LearnWarning::ZeroAlpha);
                Ok(true)
            }
            other => Err(other),
        }
    }

    fn finish(
        mut self,
        dag: &Dag,
        max_iters: usize,
        stats: RejectionStats,
    ) -> Result<LearnReport, EngineError> {
        if !self.converged && self.warnings.is_empty() && self.diagnostics.len() == max_iters {
            self.warnings.push(LearnWarning::IterationLimitReached);
        }
        let final_net = BayesNet::new(dag.clone(), clamp_cpt(self.last_cpt))?;
        Ok(LearnReport {
            final_net,
            iterations: self.diagnostics,
            total_samples_drawn: stats.raw_drawn,
            converged: self.converged,
            warnings: self.warnings,
            filters: self.stack,
            rejection: stats,
        })
    }
}

/// Full learning loop against a raw contaminated source: each round draws
/// fresh samples rejection-filtered through the accumulated stack, stopping
/// at an accepted estimate, the iteration cap `max_iters` (default
/// `2d + 1`), or a terminal condition. The final table is clamped away from
/// 0 and 1.
pub fn learn(
    source: &mut dyn LabeledSource,
    config: &EngineConfig,
    dag: &Dag,
) -> Result<LearnReport, EngineError> {
    config.validate()?;
    let table = ConfigTable::new(dag)?;
    let max_iters = config.max_iters.unwrap_or(2 * dag.node_count() + 1);
    let mut stats = RejectionStats::default();
    let mut state = LoopState::new(table.len());

    for _ in 0..max_iters {
        let raw_before = stats.raw_drawn;
        let accepted_before = stats.accepted;
        let outcome = {
            let mut filtered = FilteredSource {
                inner: source,
                stack: &state.stack,
                table: &table,
                stats: &mut stats,
            };
            run_iteration(&mut filtered, config, &table)
        };
        let raw = stats.raw_drawn - raw_before;
        let rejected = raw - (stats.accepted - accepted_before);
        let rejected_fraction = if raw > 0 { rejected as f64 / raw as f64 } else { 0.0 };
        match outcome {
            Ok(mut o) => {
                o.diagnostics.rejected_fraction = rejected_fraction;
                if state.absorb(o) {
                    break;
                }
            }
            Err(e) => {
                if state.absorb_error(e)? {
                    break;
                }
            }
        }
    }
    state.finish(dag, max_iters, stats)
}

/// Budget-constrained variant that filters one fixed dataset instead of
/// drawing fresh batches: every round reuses all points surviving the stack
/// for the alpha, moment, and threshold steps alike.
pub fn learn_in_place(
    data: &Dataset,
    config: &EngineConfig,
    dag: &Dag,
) -> Result<LearnReport, EngineError> {
    config.validate()?;
    let table = ConfigTable::new(dag)?;
    let max_iters = config.max_iters.unwrap_or(2 * dag.node_count() + 1);
    let mut stats = RejectionStats::default();
    let mut state = LoopState::new(table.len());

    for _ in 0..max_iters {
        let mut survivors = Dataset::with_capacity(data.dim(), data.len());
        for row in data.rows() {
            if state.stack.accepts(row, &table) {
                survivors.push_row(row);
            }
        }
        stats.raw_drawn += data.len();
        stats.accepted += survivors.len();
        let rejected_fraction = if data.is_empty() {
            0.0
        } else {
            (data.len() - survivors.len()) as f64 / data.len() as f64
        };
        if survivors.is_empty() {
            state.warnings.push(LearnWarning::SampleBudgetExhausted);
            break;
        }
        match iteration_core(&survivors, &survivors, &survivors, config, &table) {
            Ok(mut o) => {
                o.diagnostics.rejected_fraction = rejected_fraction;
                if state.absorb(o) {
                    break;
                }
            }
            Err(e) => {
                if state.absorb_error(e)? {
                    break;
                }
            }
        }
    }
    state.finish(dag, max_iters, stats)
}
