//! Command-line surface: `gen`, `train`, `cpl`, `eval`, `diagnose`.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::report::{diagnose, run_experiment, series_csv, RunReport};
use crate::config::{DatasetSpec, ExperimentConfig, Strategy};
use crate::engine::train::evaluate;
use crate::engine::{load_dataset, pretrain_teacher, Dataset, TaskData};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, write_edge_list, write_features, write_labels, SparseGraph};
use crate::tensor::Checkpoint;

#[derive(Debug, Parser)]
#[command(name = "cpl", version, about = "Cautious pseudo labeling for graph neural networks")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write an SBM dataset (edge list, features, labels).
    Gen(GenArgs),
    /// Pre-train the teacher only and save one checkpoint per seed.
    Train(ConfigArgs),
    /// Run the pseudo-labeling loop and write report, CSV series and checkpoints.
    Cpl(CplArgs),
    /// Recompute held-out metrics from a checkpoint.
    Eval(EvalArgs),
    /// Replay the bound and loss checks stored in a report.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Take the SBM spec from this experiment config instead of the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 200])]
    blocks: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    feature_signal: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CplArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// cautious, random or none; defaults to the config's strategy.
    #[arg(long)]
    strategy: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    report: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 configuration/usage, 2 data, 3 numerical.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Gen(a) => gen(a).map(|_| 0),
        Command::Train(a) => train(a).map(|_| 0),
        Command::Cpl(a) => cpl(a).map(|_| 0),
        Command::Eval(a) => eval(a).map(|_| 0),
        Command::Diagnose(a) => diagnose_cmd(a),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn gen(a: GenArgs) -> Result<()> {
    let (graph, labels, features) = match &a.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if !matches!(cfg.dataset, DatasetSpec::Sbm { .. }) {
                return Err(Error::Config("gen needs an sbm dataset in the config".into()));
            }
            let d = load_dataset(&cfg.dataset)?;
            (d.graph, d.labels.expect("sbm datasets are labeled"), d.features)
        }
        None => {
            let spec = DatasetSpec::Sbm {
                block_sizes: a.blocks.clone(),
                p_in: a.p_in,
                p_out: a.p_out,
                feature_dim: a.feature_dim,
                feature_signal: a.feature_signal,
                seed: a.seed,
            };
            let d = load_dataset(&spec)?;
            (d.graph, d.labels.expect("sbm datasets are labeled"), d.features)
        }
    };
    create_dir(&a.out)?;
    write_edge_list(a.out.join("edges.txt"), &graph)?;
    write_features(a.out.join("features.csv"), &features)?;
    write_labels(a.out.join("labels.csv"), &labels)?;
    println!(
        "wrote {} nodes, {} edges, {} classes to {}",
        graph.node_count(),
        graph.edge_count(),
        labels.class_count(),
        a.out.display()
    );
    Ok(())
}

fn load_config(a: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(dir) = &a.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainSummary {
    seed: u64,
    final_loss: Option<f64>,
    val: crate::engine::Metrics,
    test: crate::engine::Metrics,
    checkpoint: PathBuf,
}

fn train(a: ConfigArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    let dataset = load_dataset(&cfg.dataset)?;
    create_dir(&cfg.output_dir)?;
    for &s in &cfg.seeds {
        let data = TaskData::build(&cfg, &dataset, s)?;
        let (model, history) = pretrain_teacher(&cfg, &data, s)?;
        let adj = normalize_adjacency(&data.message_graph(&data.observed)?);
        let path = cfg.output_dir.join(format!("teacher_seed{s}.json"));
        Checkpoint::from_model(&model, s, None).save(&path)?;
        let summary = TrainSummary {
            seed: s,
            final_loss: history.last().copied(),
            val: evaluate(&model, &adj, &data, &data.val)?,
            test: evaluate(&model, &adj, &data, &data.test)?,
            checkpoint: path,
        };
        println!("{}", serde_json::to_string(&summary)?);
    }
    Ok(())
}

#[derive(Serialize)]
struct Timing {
    strategy: Strategy,
    seeds: Vec<u64>,
    wall_clock_seconds: f64,
}

fn cpl(a: CplArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let strategy = match &a.strategy {
        Some(s) => s.parse()?,
        None => cfg.strategy,
    };
    create_dir(&cfg.output_dir)?;
    let dir = cfg.output_dir.clone();
    let records_path = dir.join(format!("records_{strategy}.jsonl"));
    let mut records_file = fs::File::create(&records_path).map_err(|e| Error::io(&records_path, e))?;
    let mut flush_error = None;
    let started = Instant::now();
    let (report, outputs) = run_experiment(&cfg, strategy, &mut |s, r| {
        let line = serde_json::json!({ "seed": s, "record": r });
        if let Err(e) = writeln!(records_file, "{line}").and_then(|_| records_file.flush()) {
            flush_error.get_or_insert(Error::io(&records_path, e));
        }
    })?;
    if let Some(e) = flush_error {
        return Err(e);
    }
    let elapsed = started.elapsed().as_secs_f64();

    let report_path = dir.join(format!("report_{strategy}.json"));
    write(&report_path, &report.to_json()?)?;
    write(&dir.join(format!("series_{strategy}.csv")), &series_csv(&report))?;
    let timing = Timing {
        strategy,
        seeds: cfg.seeds.clone(),
        wall_clock_seconds: elapsed,
    };
    write(
        &dir.join(format!("timing_{strategy}.json")),
        &serde_json::to_string_pretty(&timing)?,
    )?;
    for o in &outputs {
        Checkpoint::from_model(&o.model, o.run.seed, o.message_edges.clone())
            .save(dir.join(format!("model_{strategy}_seed{}.json", o.run.seed)))?;
    }
    print_summary(&report);
    println!("report: {}", report_path.display());
    Ok(())
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn print_summary(report: &RunReport) {
    println!("strategy {} over seeds {:?}", report.strategy, report.summary.seeds);
    for m in &report.summary.metrics {
        match m.std {
            Some(sd) => println!("  {:<24} {} ± {}", m.name, pct(m.mean), pct(sd)),
            None => println!("  {:<24} {}", m.name, pct(m.mean)),
        }
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    let dataset: Dataset = load_dataset(&cfg.dataset)?;
    let data = TaskData::build(&cfg, &dataset, ck.run_seed)?;
    let message = match &ck.message_edges {
        Some(edges) => SparseGraph::from_edges(data.graph.node_count(), edges.iter().copied())
            .map_err(|e| Error::Data(format!("checkpoint message edges: {e}")))?,
        None => data.message_graph(&data.observed)?,
    };
    let run_seed = ck.run_seed;
    let model = ck.into_model()?;
    if model.head != data.head() {
        return Err(Error::Config("checkpoint head does not match the config task".into()));
    }
    if model.params.input_dim() != data.features.cols() {
        return Err(Error::Data(format!(
            "checkpoint expects {} input features, dataset has {}",
            model.params.input_dim(),
            data.features.cols()
        )));
    }
    let adj = normalize_adjacency(&message);
    let out = serde_json::json!({
        "seed": run_seed,
        "val": evaluate(&model, &adj, &data, &data.val)?,
        "test": evaluate(&model, &adj, &data, &data.test)?,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn diagnose_cmd(a: DiagnoseArgs) -> Result<i32> {
    let text = fs::read_to_string(&a.report).map_err(|e| Error::io(&a.report, e))?;
    let report = RunReport::from_json(&text).map_err(|e| Error::Data(format!("{}: {e}", a.report.display())))?;
    let rows = diagnose(&report)?;
    println!(
        "{:>6} {:>8} {:>8} {:>10} {:>10} {:>8} {:>6} {:>6} {:>6}",
        "seed", "q", "A", "2(q+A)", "stored", "Err", "holds", "viol", "asm"
    );
    let mut mismatches = 0;
    for r in &rows {
        let f = |v: Option<f64>| v.map(pct).unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>8} {:>8} {:>10} {:>10} {:>8} {:>6} {:>6} {:>6}",
            r.seed,
            f(r.q),
            pct(r.inconsistency),
            f(r.recomputed_bound),
            f(r.stored_bound),
            pct(r.experimental_error),
            r.bound_holds.map(|b| if b { "yes" } else { "NO" }).unwrap_or("-"),
            r.loss_violations,
            r.assumption_violations,
        );
        if !r.bound_matches() || !r.replay_matches {
            mismatches += 1;
        }
    }
    if mismatches > 0 {
        eprintln!("error: {mismatches} seed(s) disagree with the stored bound or loss check");
        return Ok(3);
    }
    println!("stored bounds and loss checks reproduce");
    Ok(0)
}

