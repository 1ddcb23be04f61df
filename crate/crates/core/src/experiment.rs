//! Seeded experiment grids, parameter sweeps, learning curves, runtime
//! measurement, and CSV/JSON output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    apply_ablation, final_train_eval, run_active_loop, Evaluation, PreparedGraph, Strategy,
    TrainingConfig,
};
use crate::error::{Error, Result};
use crate::graph_data::{
    generate_synthetic, load_bundle, make_splits, GraphBundle, SplitConfig, SyntheticSpec,
};
use crate::metrics::{aggregate, MeanStd};
use crate::numerics::derive_seed;
use crate::pool::PoolState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    Bundle(PathBuf),
    Synthetic { spec: SyntheticSpec, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<GraphBundle> {
        match self {
            DataSource::Bundle(dir) => load_bundle(dir),
            DataSource::Synthetic { spec, seed } => generate_synthetic(spec, *seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    None,
    Delta,
    Alpha,
}

impl SweepAxis {
    /// `0.3, 0.4, ..., 1.0` for delta; `0.0, 0.2, ..., 1.4` for alpha.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::None => vec![],
            SweepAxis::Delta => (3..=10).map(|i| i as f64 / 10.0).collect(),
            SweepAxis::Alpha => (0..=7).map(|i| (2 * i) as f64 / 10.0).collect(),
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SweepAxis::None),
            "delta" => Ok(SweepAxis::Delta),
            "alpha" => Ok(SweepAxis::Alpha),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sweep axis {s:?} (expected none, delta or alpha)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub source: DataSource,
    pub strategies: Vec<Strategy>,
    pub val_seeds: Vec<u64>,
    pub init_seeds: Vec<u64>,
    pub sweep: SweepAxis,
    /// Values for the sweep axis; ignored when `sweep` is `None`.
    pub sweep_values: Vec<f64>,
    /// Queries between learning-curve snapshots; `None` disables curves.
    pub curve_interval: Option<usize>,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub base: TrainingConfig,
    pub split: SplitConfig,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.strategies.is_empty() {
            return bad("at least one strategy is required");
        }
        if self.val_seeds.is_empty() || self.init_seeds.is_empty() {
            return bad("seed lists must be nonempty");
        }
        if self.curve_interval == Some(0) {
            return bad("curve interval must be positive");
        }
        if self.jobs == 0 {
            return bad("jobs must be positive");
        }
        match self.sweep {
            SweepAxis::None => {}
            SweepAxis::Delta => {
                if self.sweep_values.is_empty() || self.sweep_values.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
                    return bad("delta sweep values must be nonempty and lie in (0, 1]");
                }
            }
            SweepAxis::Alpha => {
                if self.sweep_values.is_empty() || self.sweep_values.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
                    return bad("alpha sweep values must be nonempty, finite and >= 0");
                }
            }
        }
        self.base.validate()
    }

    fn cells(&self) -> Vec<Cell> {
        let sweep: Vec<Option<f64>> = match self.sweep {
            SweepAxis::None => vec![None],
            _ => self.sweep_values.iter().map(|&v| Some(v)).collect(),
        };
        let mut cells = Vec::new();
        for &strategy in &self.strategies {
            for &value in &sweep {
                for &seed_val in &self.val_seeds {
                    for &seed_init in &self.init_seeds {
                        let mut config = TrainingConfig {
                            strategy,
                            ..self.base.clone()
                        };
                        match (self.sweep, value) {
                            (SweepAxis::Delta, Some(v)) => config.delta = v,
                            (SweepAxis::Alpha, Some(v)) => config.alpha = v,
                            _ => {}
                        }
                        cells.push(Cell {
                            config: apply_ablation(&config),
                            sweep_value: value,
                            seed_val,
                            seed_init,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// `count` seeds derived from a master seed.
pub fn default_seed_list(master: u64, label: &str, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| derive_seed(&[&master.to_le_bytes(), label.as_bytes(), &i.to_le_bytes()]) >> 1)
        .collect()
}

struct Cell {
    config: TrainingConfig,
    sweep_value: Option<f64>,
    seed_val: u64,
    seed_init: u64,
}

impl Cell {
    fn run_seed(&self) -> u64 {
        let sweep = self.sweep_value.map_or(u64::MAX, f64::to_bits);
        derive_seed(&[
            &self.seed_val.to_le_bytes(),
            &self.seed_init.to_le_bytes(),
            self.config.strategy.id().as_bytes(),
            &sweep.to_le_bytes(),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub strategy: String,
    pub dataset: String,
    pub delta: f64,
    pub alpha: f64,
    pub seed_val: u64,
    pub seed_init: u64,
    pub num_labels: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub dataset: String,
    pub delta: f64,
    pub alpha: f64,
    pub seed_val: u64,
    pub seed_init: u64,
    pub num_labels: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub strategy: String,
    pub delta: f64,
    pub alpha: f64,
    pub seed_val: u64,
    pub seed_init: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub strategy: String,
    pub dataset: String,
    pub delta: f64,
    pub alpha: f64,
    pub runs: usize,
    pub micro_f1: MeanStd,
    pub macro_f1: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub results: Vec<ResultsRow>,
    pub curves: Vec<CurveRow>,
    pub summary: Vec<SummaryEntry>,
    pub failures: Vec<CellFailure>,
}

impl PlanOutcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_cell(bundle: &GraphBundle, graph: &PreparedGraph, plan: &ExperimentPlan, cell: &Cell) -> Result<(ResultsRow, Vec<CurveRow>)> {
    let splits = make_splits(bundle, cell.seed_val, cell.seed_init, &plan.split)?;
    let config = &cell.config;
    let seed = cell.run_seed();
    let budget = config.resolved_budget(bundle.num_classes(), splits.init_labeled_ids.len())?;
    let started = Instant::now();

    let mut snapshots: Vec<(usize, Evaluation)> = Vec::new();
    let mut observer = |pools: &PoolState| -> Result<()> {
        let Some(interval) = plan.curve_interval else {
            return Ok(());
        };
        let queries = pools.query_log.len();
        if queries % interval == 0 || queries == budget {
            let labeled = pools.labeled_ids();
            let eval = final_train_eval(graph, &splits, &labeled, config, seed)?;
            snapshots.push((labeled.len(), eval));
        }
        Ok(())
    };
    let outcome = run_active_loop(graph, &splits, config, seed, &mut observer)?;
    let labeled = outcome.pools.labeled_ids();
    let eval = match snapshots.last() {
        Some((n, e)) if *n == labeled.len() => *e,
        _ => final_train_eval(graph, &splits, &labeled, config, seed)?,
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let row = ResultsRow {
        strategy: config.strategy.id().to_string(),
        dataset: bundle.name().to_string(),
        delta: config.delta,
        alpha: config.alpha,
        seed_val: cell.seed_val,
        seed_init: cell.seed_init,
        num_labels: labeled.len(),
        micro_f1: eval.micro_f1,
        macro_f1: eval.macro_f1,
        wall_seconds,
    };
    let curves = snapshots
        .into_iter()
        .map(|(num_labels, e)| CurveRow {
            strategy: row.strategy.clone(),
            dataset: row.dataset.clone(),
            delta: row.delta,
            alpha: row.alpha,
            seed_val: row.seed_val,
            seed_init: row.seed_init,
            num_labels,
            micro_f1: e.micro_f1,
            macro_f1: e.macro_f1,
        })
        .collect();
    Ok((row, curves))
}

/// Means and standard deviations grouped by `(strategy, delta, alpha)`, in
/// first-appearance order.
pub fn summarize(rows: &[ResultsRow]) -> Result<Vec<SummaryEntry>> {
    let mut keys: Vec<(String, String, f64, f64)> = Vec::new();
    for r in rows {
        let k = (r.strategy.clone(), r.dataset.clone(), r.delta, r.alpha);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(strategy, dataset, delta, alpha)| {
            let group: Vec<&ResultsRow> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.dataset == dataset && r.delta == delta && r.alpha == alpha)
                .collect();
            let micro: Vec<f64> = group.iter().map(|r| r.micro_f1).collect();
            let macro_: Vec<f64> = group.iter().map(|r| r.macro_f1).collect();
            Ok(SummaryEntry {
                runs: group.len(),
                micro_f1: aggregate(&micro)?,
                macro_f1: aggregate(&macro_)?,
                strategy,
                dataset,
                delta,
                alpha,
            })
        })
        .collect()
}

/// Runs every `(strategy, sweep value, seed_val, seed_init)` cell and writes
/// `results.csv`, `curves.csv` and `summary.json` to the output directory.
///
/// Failed cells are recorded in the outcome and in `summary.json`; the other
/// cells still run and are written.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    plan.validate()?;
    let bundle = plan.source.load()?;
    let graph = PreparedGraph::new(&bundle, plan.base.row_normalize);
    let cells = plan.cells();
    log::info!(
        "running {} cells on {} with {} job(s)",
        cells.len(),
        bundle.name(),
        plan.jobs
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<(ResultsRow, Vec<CurveRow>)>> =
        pool.install(|| cells.par_iter().map(|c| run_cell(&bundle, &graph, plan, c)).collect());

    let mut results = Vec::new();
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for (cell, out) in cells.iter().zip(outcomes) {
        match out {
            Ok((row, c)) => {
                results.push(row);
                curves.extend(c);
            }
            Err(e) => {
                log::error!(
                    "{} seed_val={} seed_init={} failed: {e}",
                    cell.config.strategy,
                    cell.seed_val,
                    cell.seed_init
                );
                failures.push(CellFailure {
                    strategy: cell.config.strategy.id().to_string(),
                    delta: cell.config.delta,
                    alpha: cell.config.alpha,
                    seed_val: cell.seed_val,
                    seed_init: cell.seed_init,
                    error: e.to_string(),
                });
            }
        }
    }
    let outcome = PlanOutcome {
        summary: summarize(&results)?,
        results,
        curves,
        failures,
    };
    write_outputs(&plan.out_dir, &outcome)?;
    Ok(outcome)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: Option<&str>) -> Result<()> {
    let mut buf = Vec::new();
    if let Some(h) = header {
        buf.extend_from_slice(h.as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_outputs(dir: &Path, outcome: &PlanOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("results.csv"), &outcome.results, None)?;
    write_csv(&dir.join("curves.csv"), &outcome.curves, None)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        groups: &'a [SummaryEntry],
        failures: &'a [CellFailure],
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&Summary {
        groups: &outcome.summary,
        failures: &outcome.failures,
    })
    .map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads rows written by [`run_plan`] back from a CSV file.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Malformed {
                file: path.to_path_buf(),
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub queries: usize,
    pub seconds: f64,
    /// Digest of the query sequence; equal across reruns.
    pub query_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingPlan {
    pub sizes: Vec<usize>,
    pub num_classes: usize,
    pub num_features: usize,
    /// Expected degree, held fixed so edges grow linearly with nodes.
    pub mean_degree: f64,
    /// Fraction of a node's expected edges that stay inside its class.
    pub homophily: f64,
    pub feature_signal: f64,
    pub queries: usize,
    pub seed: u64,
    pub config: TrainingConfig,
}

impl Default for TimingPlan {
    fn default() -> Self {
        TimingPlan {
            sizes: vec![1000, 3000, 5000],
            num_classes: 5,
            num_features: 200,
            mean_degree: 4.0,
            homophily: 0.8,
            feature_signal: 0.15,
            queries: 48,
            seed: 0,
            config: TrainingConfig {
                pretrain_epochs: 20,
                patience: 0,
                ..TrainingConfig::default()
            },
        }
    }
}

impl TimingPlan {
    pub fn synthetic_spec(&self, n: usize) -> SyntheticSpec {
        let k = self.num_classes as f64;
        let same = n as f64 / k - 1.0;
        let other = n as f64 - n as f64 / k;
        SyntheticSpec {
            num_nodes: n,
            num_classes: self.num_classes,
            num_features: self.num_features,
            edge_prob_in: (self.mean_degree * self.homophily / same).min(1.0),
            edge_prob_out: (self.mean_degree * (1.0 - self.homophily) / other).min(1.0),
            feature_signal: self.feature_signal,
        }
    }
}

pub const TIMING_HEADER: &str =
    "# synthetic block-model graphs with a fixed mean degree stand in for real subgraphs; seconds exclude graph generation\n";

/// Wall time of the selection phase for each graph size. Graph generation
/// and evaluation are excluded.
pub fn timing_sweep(plan: &TimingPlan) -> Result<Vec<TimingRow>> {
    if plan.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("timing sizes must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(plan.sizes.len());
    for &n in &plan.sizes {
        let bundle = generate_synthetic(&plan.synthetic_spec(n), plan.seed)?;
        let split = SplitConfig {
            test_size: n / 5,
            val_size: n / 10,
            per_class_init: 4,
            test_seed: plan.seed,
        };
        let splits = make_splits(&bundle, plan.seed, plan.seed, &split)?;
        let config = TrainingConfig {
            budget: Some(plan.queries),
            ..plan.config.clone()
        };
        let graph = PreparedGraph::new(&bundle, config.row_normalize);
        let started = Instant::now();
        let out = run_active_loop(&graph, &splits, &config, plan.seed, &mut |_| Ok(()))?;
        let seconds = started.elapsed().as_secs_f64();
        let nodes: Vec<u8> = out.query_log().iter().flat_map(|r| (r.node as u64).to_le_bytes()).collect();
        log::info!("timing: n={n} edges={} {seconds:.2}s", bundle.edges().len());
        rows.push(TimingRow {
            num_nodes: n,
            num_edges: bundle.edges().len(),
            queries: out.query_log().len(),
            seconds,
            query_digest: derive_seed(&[&nodes]),
        });
    }
    Ok(rows)
}

pub fn write_timing(path: &Path, rows: &[TimingRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_csv(path, rows, Some(TIMING_HEADER))
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values are all equal".into()));
    }
    if syy == 0.0 {
        return Ok(1.0);
    }
    Ok(sxy * sxy / (sxx * syy))
}
