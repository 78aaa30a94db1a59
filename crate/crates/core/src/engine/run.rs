//! The pseudo-labeling loop: pre-train, select, commit, fine-tune, repeat.

use serde::{Deserialize, Serialize};

use super::data::{Dataset, TaskData};
use super::diagnostics::{covariance_diagnostic, error_bound, loss_trajectory_check, ErrorBound, LossCheckReport};
use super::select::{select_random, select_top_k, StrategySelection};
use super::state::{IterationRecord, PlState};
use super::train::{evaluate, labeled_loss, optimizer, per_sample_ce, train_epochs, Metrics};
use crate::augment::{estimate_gpi_constant, estimate_inconsistency, multi_view_confidence, AugmentationPlan};
use crate::config::{ExperimentConfig, Strategy, TaskKind};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Edge};
use crate::seed::{self, stream};
use crate::tensor::{AdamState, Confidence, ConfidenceKind, GcnModel};

/// Mask trials used for the reported GPI constant.
pub const GPI_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Strategy `none`: the pre-trained model is the result.
    NoPseudoLabeling,
    /// The observed set started at or above the cap.
    ZeroBudget,
    CapReached,
    CandidatesExhausted,
    /// `k = 0`: one no-op iteration was run.
    EmptySelection,
}

/// One seed's complete outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub candidate_pool: String,
    pub pretrain_final_loss: Option<f64>,
    /// Pre-trained teacher on validation and test.
    pub baseline_val: Metrics,
    pub baseline_test: Metrics,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub final_val: Metrics,
    pub final_test: Metrics,
    pub q: Option<f64>,
    /// `𝒜` of the final student on the test set.
    pub inconsistency: f64,
    pub error_bound: Option<ErrorBound>,
    /// Test 0-1 error of the final student.
    pub experimental_error: f64,
    pub bound_holds: Option<bool>,
    /// Empirical lower bound on the perturbation-invariance constant.
    pub gpi_constant: f64,
    pub observed_final: usize,
    pub pseudo_labels: usize,
    /// Fraction of all committed pseudo labels contradicting ground truth.
    pub pseudo_label_error: Option<f64>,
    pub loss_check: LossCheckReport,
}

/// A finished run plus the artifacts needed for a checkpoint.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run: SeedRun,
    pub model: GcnModel,
    /// Link task: the final message-passing edge set.
    pub message_edges: Option<Vec<Edge>>,
}

/// Seeded random streams for one run.
struct Streams {
    negatives: seed::Rng,
    selection: seed::Rng,
    augment: u64,
}

impl Streams {
    fn new(run_seed: u64, plan: &AugmentationPlan) -> Self {
        Self {
            negatives: seed::rng(seed::derive(run_seed, stream::NEGATIVES)),
            selection: seed::rng(seed::derive(run_seed, stream::SELECTION)),
            augment: seed::derive(seed::derive(run_seed, stream::AUGMENT), plan.base_seed),
        }
    }

    /// Views used by the teacher at iteration `t`.
    fn teacher_plan(&self, plan: &AugmentationPlan, t: usize) -> AugmentationPlan {
        plan.reseeded(seed::derive(self.augment, (t as u64).wrapping_mul(2)))
    }

    /// Views used to measure `𝒜` after iteration `t` (`t = usize::MAX` for
    /// the pre-trained model), disjoint from the teacher's.
    fn consistency_plan(&self, plan: &AugmentationPlan, t: usize) -> AugmentationPlan {
        plan.reseeded(seed::derive(self.augment, (t as u64).wrapping_mul(2).wrapping_add(1)))
    }
}

fn output_dim(cfg: &ExperimentConfig, data: &TaskData) -> usize {
    match cfg.task {
        TaskKind::Node => data.class_count,
        TaskKind::Link => cfg.model.embedding_dim,
    }
}

fn fresh_model(cfg: &ExperimentConfig, data: &TaskData, init_seed: u64) -> Result<GcnModel> {
    GcnModel::new(
        data.head(),
        data.features.cols(),
        cfg.model.hidden,
        output_dim(cfg, data),
        init_seed,
    )
}

/// Trains the teacher on the initial observed set. Returns the model and
/// the per-epoch loss history.
pub fn pretrain_teacher(cfg: &ExperimentConfig, data: &TaskData, run_seed: u64) -> Result<(GcnModel, Vec<f64>)> {
    let mut rng = seed::rng(seed::derive(run_seed, stream::NEGATIVES));
    let (model, history, _) = pretrain(cfg, data, run_seed, &mut rng)?;
    Ok((model, history))
}

fn pretrain(
    cfg: &ExperimentConfig,
    data: &TaskData,
    run_seed: u64,
    rng: &mut seed::Rng,
) -> Result<(GcnModel, Vec<f64>, AdamState)> {
    let mut model = fresh_model(cfg, data, seed::derive(run_seed, stream::INIT))?;
    let message = data.message_graph(&data.observed)?;
    let mut opt = optimizer(&model, cfg.train.lr);
    let history = train_epochs(
        &mut model,
        data,
        &message,
        &data.observed,
        cfg.train.pretrain_epochs,
        &mut opt,
        rng,
    )?;
    Ok((model, history, opt))
}

/// Confidence of each pool sample in the label it would receive.
fn label_confidence(mean: &Confidence, task: TaskKind, strategy: Strategy) -> (Vec<f64>, Vec<usize>) {
    let n = mean.len();
    match mean.kind() {
        ConfidenceKind::ClassDistribution { .. } => (0..n)
            .map(|i| {
                let label = mean.decision(i);
                (mean.prob_of(i, label), label)
            })
            .unzip(),
        ConfidenceKind::EdgeScore => {
            debug_assert_eq!(task, TaskKind::Link);
            let labels = match strategy {
                // Cautious link pseudo labels are positive-only.
                Strategy::Cautious => vec![1; n],
                _ => (0..n).map(|i| mean.decision(i)).collect(),
            };
            (mean.values().to_vec(), labels)
        }
    }
}

struct Loop<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a TaskData,
    strategy: Strategy,
    streams: Streams,
    optimizer: AdamState,
}

impl Loop<'_> {
    /// One pass of selection, diagnostics, commit and fine-tuning.
    fn iteration(&mut self, state: &mut PlState, model: &mut GcnModel) -> Result<IterationRecord> {
        let (cfg, data) = (self.cfg, self.data);
        let t = state.t;
        let message = data.message_graph(&state.observed)?;
        let adj = normalize_adjacency(&message);
        let pool_query = data.query_of(&state.unobserved);

        let plan = self.streams.teacher_plan(&cfg.augmentation, t);
        let mv = multi_view_confidence(model, &message, &data.features, &plan, pool_query.as_query())?;
        let (confidence, labels) = label_confidence(&mv.mean, cfg.task, self.strategy);
        let selection: StrategySelection = match self.strategy {
            Strategy::Cautious => select_top_k(&confidence, state.k)?,
            Strategy::Random => select_random(&confidence, state.k, &mut self.streams.selection)?,
            Strategy::None => return Err(Error::Config("strategy `none` runs no iterations".into())),
        };
        state.record_confidence(selection.c_min);

        let observed_before = state.observed.len();
        let unobserved_before = state.unobserved.len();
        let k_eff = selection.selected.len();
        let new_labels: Vec<usize> = selection.selected.iter().map(|&p| labels[p]).collect();
        let mut enlarged = state.observed.clone();
        enlarged.extend(selection.selected.iter().zip(&new_labels).map(|(&p, &y)| (state.unobserved[p], y)));

        let loss_prev = labeled_loss(model, &adj, data, &state.observed)?;
        let loss_before = labeled_loss(model, &adj, data, &enlarged)?;

        let truth = if cfg.benchmark_diagnostics {
            data.truth_of(&state.unobserved)
        } else {
            None
        };
        let beta = unobserved_before as f64 / (observed_before + k_eff) as f64;
        let (covariance, bound_rhs, pool_mean_ce, indicator_mean, indicator_mean_exact, pl_error_rate) = match &truth {
            Some(truth) => {
                let pool_conf = model.confidence(&adj, &data.features, pool_query.as_query())?;
                let ce = per_sample_ce(&pool_conf, truth);
                let d = covariance_diagnostic(&ce, &selection.indicator, observed_before, k_eff, loss_prev)?;
                let wrong = selection
                    .selected
                    .iter()
                    .zip(&new_labels)
                    .filter(|&(&p, &y)| truth[p] != y)
                    .count();
                let err = (k_eff > 0).then(|| wrong as f64 / k_eff as f64);
                let mean_ce = ce.iter().sum::<f64>() / ce.len() as f64;
                (Some(d.covariance), Some(d.bound_rhs), Some(mean_ce), d.indicator_mean, d.indicator_mean_exact, err)
            }
            None => {
                let m = k_eff as f64 / unobserved_before as f64;
                let sum = selection.indicator.iter().filter(|&&b| b).count();
                (None, None, None, m, sum == k_eff, None)
            }
        };

        state.commit(&selection.selected, &new_labels, &confidence);

        let message = data.message_graph(&state.observed)?;
        if cfg.train.retrain_from_scratch {
            let init = seed::derive(seed::derive(self.streams.augment, stream::INIT), t as u64);
            *model = fresh_model(cfg, data, init)?;
        }
        if cfg.train.retrain_from_scratch || cfg.train.reset_optimizer {
            self.optimizer = optimizer(model, cfg.train.lr);
        }
        let epochs = if cfg.train.retrain_from_scratch {
            cfg.train.pretrain_epochs
        } else {
            cfg.train.finetune_epochs
        };
        train_epochs(
            model,
            data,
            &message,
            &state.observed,
            epochs,
            &mut self.optimizer,
            &mut self.streams.negatives,
        )?;
        let adj = normalize_adjacency(&message);
        let loss_after = labeled_loss(model, &adj, data, &state.observed)?;
        let val = evaluate(model, &adj, data, &data.val)?;
        let test = evaluate(model, &adj, data, &data.test)?;
        let inconsistency = estimate_inconsistency(
            model,
            &message,
            &data.features,
            &self.streams.consistency_plan(&cfg.augmentation, t),
            data.test.query(),
        )?;
        log::info!(
            "t={t} |Ŷo|={observed_before} |Ŷu|={unobserved_before} c_min={:?} loss {loss_prev:.4}->{loss_before:.4}->{loss_after:.4} test={:.4}",
            selection.c_min,
            test.primary()
        );

        Ok(IterationRecord {
            t,
            observed: observed_before,
            unobserved: unobserved_before,
            selected: k_eff,
            exhausted: selection.exhausted,
            c_min: selection.c_min,
            threshold_confidence: state.threshold_confidence,
            q: state.q(),
            loss_prev,
            loss_before,
            loss_after,
            beta,
            covariance,
            bound_rhs,
            pool_mean_ce,
            indicator_mean,
            indicator_mean_exact,
            pl_error_rate,
            val_metric: val.primary(),
            test_metric: test.primary(),
            test_error: test.error,
            inconsistency,
            view_epsilons: mv.epsilons,
        })
    }
}

/// Runs one seed end to end with the given strategy.
pub fn run_seed(cfg: &ExperimentConfig, dataset: &Dataset, run_seed: u64, strategy: Strategy) -> Result<RunOutput> {
    run_seed_observed(cfg, dataset, run_seed, strategy, &mut |_| {})
}

/// [`run_seed`], handing every iteration record to `observer` as soon as it
/// is produced so a later failure still leaves the earlier records behind.
pub fn run_seed_observed(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    run_seed: u64,
    strategy: Strategy,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<RunOutput> {
    let data = TaskData::build(cfg, dataset, run_seed)?;
    let mut streams = Streams::new(run_seed, &cfg.augmentation);
    let (mut model, history, opt) = pretrain(cfg, &data, run_seed, &mut streams.negatives)?;
    let message = data.message_graph(&data.observed)?;
    let adj = normalize_adjacency(&message);
    let baseline_val = evaluate(&model, &adj, &data, &data.val)?;
    let baseline_test = evaluate(&model, &adj, &data, &data.test)?;

    let mut state = PlState::new(data.observed.clone(), data.pool.clone(), cfg.k, cfg.cap)?;
    let mut lp = Loop {
        cfg,
        data: &data,
        strategy,
        streams,
        optimizer: opt,
    };
    let mut records = Vec::new();
    let stop_reason = if strategy == Strategy::None {
        StopReason::NoPseudoLabeling
    } else if !state.should_continue() {
        StopReason::ZeroBudget
    } else {
        loop {
            let record = lp.iteration(&mut state, &mut model)?;
            observer(&record);
            records.push(record);
            if cfg.k == 0 {
                break StopReason::EmptySelection;
            }
            if state.unobserved.is_empty() {
                break StopReason::CandidatesExhausted;
            }
            if !state.should_continue() {
                break StopReason::CapReached;
            }
        }
    };

    let message = data.message_graph(&state.observed)?;
    let adj = normalize_adjacency(&message);
    let final_val = evaluate(&model, &adj, &data, &data.val)?;
    let final_test = evaluate(&model, &adj, &data, &data.test)?;
    let inconsistency = match records.last() {
        Some(r) => r.inconsistency,
        None => estimate_inconsistency(
            &model,
            &message,
            &data.features,
            &lp.streams.consistency_plan(&cfg.augmentation, usize::MAX),
            data.test.query(),
        )?,
    };
    let gpi = estimate_gpi_constant(
        &model,
        &message,
        &data.features,
        &cfg.augmentation.reseeded(seed::derive(lp.streams.augment, u64::MAX)),
        GPI_TRIALS,
        data.test.query(),
    )?;
    let q = state.q();
    let error_bound = q.map(|q| error_bound(q, inconsistency)).transpose()?;
    let experimental_error = final_test.error;
    let pseudo_label_error = if state.pseudo.is_empty() {
        None
    } else {
        let wrong: Option<usize> = state
            .pseudo
            .iter()
            .map(|p| data.truth[p.sample].map(|y| usize::from(y != p.label)))
            .sum();
        wrong.map(|w| w as f64 / state.pseudo.len() as f64)
    };
    let message_edges = (cfg.task == TaskKind::Link).then(|| message.edges());
    let run = SeedRun {
        seed: run_seed,
        candidate_pool: data.pool_description.clone(),
        pretrain_final_loss: history.last().copied(),
        baseline_val,
        baseline_test,
        loss_check: loss_trajectory_check(&records),
        records,
        stop_reason,
        final_val,
        final_test,
        q,
        inconsistency,
        bound_holds: error_bound.map(|b| experimental_error <= b.value),
        error_bound,
        experimental_error,
        gpi_constant: gpi.estimate,
        observed_final: state.observed.len(),
        pseudo_labels: state.pseudo.len(),
        pseudo_label_error,
    };
    Ok(RunOutput {
        run,
        model,
        message_edges,
    })
}

/// Cautious pseudo labeling for one seed.
pub fn run_cpl(cfg: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<RunOutput> {
    run_seed(cfg, dataset, seed, Strategy::Cautious)
}

/// The same loop with uniformly random selection.
pub fn run_random_pl(cfg: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<RunOutput> {
    run_seed(cfg, dataset, seed, Strategy::Random)
}
