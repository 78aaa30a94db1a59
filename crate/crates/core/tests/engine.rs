mod common;

use common::{link_config, median, node_config};
use cpl_core::config::{ExperimentConfig, Strategy};
use cpl_core::engine::{load_dataset, pretrain_teacher, run_cpl, run_random_pl, run_seed, StopReason, TaskData};
use cpl_core::eval::RunReport;
use cpl_core::seed::{self, stream};
use cpl_core::tensor::{Checkpoint, GcnModel};

fn quick_node() -> ExperimentConfig {
    let mut cfg = node_config();
    cfg.seeds = vec![0];
    cfg
}

#[test]
fn zero_pretrain_epochs_keep_the_initial_weights() {
    let mut cfg = quick_node();
    cfg.train.pretrain_epochs = 0;
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let data = TaskData::build(&cfg, &dataset, 4).unwrap();
    let (model, history) = pretrain_teacher(&cfg, &data, 4).unwrap();
    assert!(history.is_empty());
    let init = GcnModel::new(
        data.head(),
        data.features.cols(),
        cfg.model.hidden,
        data.class_count,
        seed::derive(4, stream::INIT),
    )
    .unwrap();
    assert_eq!(model, init);
}

#[test]
fn pretraining_is_seeded_and_loss_falls() {
    let cfg = quick_node();
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let data = TaskData::build(&cfg, &dataset, 2).unwrap();
    let (a, history) = pretrain_teacher(&cfg, &data, 2).unwrap();
    let (b, _) = pretrain_teacher(&cfg, &data, 2).unwrap();
    assert_eq!(a, b);
    // five-epoch moving average is non-increasing after epoch 10
    let smooth: Vec<f64> = history.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    for (t, w) in smooth.windows(2).enumerate().skip(10) {
        assert!(w[1] <= w[0] + 1e-12, "epoch {t}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn cap_at_observed_size_is_the_raw_baseline() {
    let mut cfg = quick_node();
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let observed = TaskData::build(&cfg, &dataset, 0).unwrap().observed.len();
    cfg.cap = observed;
    let out = run_cpl(&cfg, &dataset, 0).unwrap().run;
    let none = run_seed(&cfg, &dataset, 0, Strategy::None).unwrap().run;
    assert_eq!(out.stop_reason, StopReason::ZeroBudget);
    assert!(out.records.is_empty());
    assert_eq!(out.final_test, out.baseline_test);
    assert_eq!(out.final_test, none.final_test);
    assert_eq!(out.q, None);
    assert_eq!(out.error_bound, None);
}

#[test]
fn zero_budget_strategies_coincide() {
    let mut cfg = quick_node();
    cfg.k = 0;
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let a = run_cpl(&cfg, &dataset, 1).unwrap();
    let b = run_random_pl(&cfg, &dataset, 1).unwrap();
    assert_eq!(a.run, b.run);
    assert_eq!(a.model, b.model);
    assert_eq!(a.run.records.len(), 1);
    assert_eq!(a.run.records[0].selected, 0);
    assert_eq!(a.run.observed_final, a.run.records[0].observed);
}

#[test]
fn cautious_node_runs_against_baseline_and_random() {
    let cfg = node_config();
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let mut gains = Vec::new();
    let mut cautious_cov = Vec::new();
    let mut below_random = 0;
    for &s in &cfg.seeds {
        let c = run_cpl(&cfg, &dataset, s).unwrap().run;
        let r = run_random_pl(&cfg, &dataset, s).unwrap().run;
        let (base, fin) = (c.baseline_test.accuracy.unwrap(), c.final_test.accuracy.unwrap());
        assert!(fin >= base - 0.005, "seed {s}: {fin} vs baseline {base}");
        gains.push(fin - base);

        let n = c.records.len().min(r.records.len());
        if (0..n).all(|t| c.records[t].loss_after <= r.records[t].loss_after) {
            below_random += 1;
        }
        let cov: Vec<f64> = c.records.iter().map(|x| x.covariance.unwrap()).collect();
        cautious_cov.push(cov.iter().sum::<f64>() / cov.len() as f64);

        let a = c.inconsistency;
        assert!(a > 0.0 && a < 0.25, "seed {s}: 𝒜 = {a}");
    }
    assert!(median(&gains) > 0.0, "paired gains {gains:?}");
    assert!(below_random >= 4, "loss curve below random in {below_random}/5 seeds");
    assert!(median(&cautious_cov) < 0.0, "{cautious_cov:?}");
}

#[test]
fn link_threshold_confidence_is_high_with_small_budget() {
    let mut cfg = link_config();
    cfg.seeds = vec![0];
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let run = run_cpl(&cfg, &dataset, 0).unwrap().run;
    let q = run.q.unwrap();
    assert!(1.0 - q >= 0.9, "1 − q = {}", 1.0 - q);
    assert!(run.candidate_pool.contains("all"), "{}", run.candidate_pool);
}

#[test]
fn report_and_checkpoint_round_trip() {
    let cfg = quick_node();
    let dataset = load_dataset(&cfg.dataset).unwrap();
    let out = run_cpl(&cfg, &dataset, 0).unwrap();
    let report = RunReport::new(cfg.clone(), Strategy::Cautious, vec![out.run.clone()]);
    let text = report.to_json().unwrap();
    let back = RunReport::from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json().unwrap(), text);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    Checkpoint::from_model(&out.model, 0, None).save(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.run_seed, 0);
    assert_eq!(ck.into_model().unwrap(), out.model);
}
