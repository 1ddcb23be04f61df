use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use seal_core::diagnostics::{run_gradient_checks, GRADIENT_TOLERANCE};
use seal_core::engine::{Strategy, TrainingConfig};
use seal_core::experiment::{
    default_seed_list, linear_fit_r2, run_plan, timing_sweep, write_timing, DataSource,
    ExperimentPlan, SweepAxis, TimingPlan,
};
use seal_core::graph_data::{generate_synthetic, save_bundle, SplitConfig, SyntheticSpec};

#[derive(Parser)]
#[command(name = "seal", version, about = "Adversarial active learning for node classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of strategies, sweep values and seeds.
    Run(RunArgs),
    /// Write a synthetic block-model bundle to disk.
    GenSynthetic(GenArgs),
    /// Time the selection phase on synthetic graphs of growing size.
    Timing(TimingArgs),
    /// Compare every analytic gradient against finite differences.
    CheckGradients {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| anyhow::anyhow!("{p:?}: {e}")))
        .collect()
}

fn parse_synthetic(s: &str) -> Result<SyntheticSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        bail!("expected N,K,M,p_in,p_out,signal, got {s:?}");
    }
    Ok(SyntheticSpec {
        num_nodes: parts[0].parse()?,
        num_classes: parts[1].parse()?,
        num_features: parts[2].parse()?,
        edge_prob_in: parts[3].parse()?,
        edge_prob_out: parts[4].parse()?,
        feature_signal: parts[5].parse()?,
    })
}

#[derive(Args)]
struct RunArgs {
    /// Bundle directory (meta.json, edges.tsv, features.srm, labels.tsv).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    bundle: Option<PathBuf>,
    /// Synthetic graph as N,K,M,p_in,p_out,signal.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long, default_value_t = 0)]
    synthetic_seed: u64,
    /// Comma-separated strategy ids.
    #[arg(long, default_value = "seal")]
    strategy: String,
    #[arg(long, default_value_t = 0.6)]
    delta: f64,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Queries per run; defaults to 20*K minus the initial labels.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    val_seeds: Option<String>,
    #[arg(long)]
    init_seeds: Option<String>,
    /// Length of each derived seed list when explicit lists are omitted.
    #[arg(long, default_value_t = 10)]
    num_seeds: usize,
    /// Master seed for derived seed lists.
    #[arg(long, env = "SEAL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "none")]
    sweep: String,
    /// Comma-separated sweep values; defaults depend on the axis.
    #[arg(long)]
    sweep_values: Option<String>,
    /// Queries between learning-curve snapshots.
    #[arg(long)]
    curve_interval: Option<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "seal-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    #[arg(long, default_value_t = 500)]
    val_size: usize,
    #[arg(long, default_value_t = 4)]
    per_class_init: usize,
    #[arg(long, default_value_t = 0)]
    test_seed: u64,
    #[arg(long, default_value_t = 300)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 5)]
    g_epochs: usize,
    #[arg(long, default_value_t = 5)]
    d_epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long, default_value_t = 200)]
    final_train_epochs: usize,
    /// Use raw feature values instead of L1-normalized rows.
    #[arg(long)]
    raw_features: bool,
}

impl RunArgs {
    fn plan(&self) -> Result<ExperimentPlan> {
        let source = match (&self.bundle, &self.synthetic) {
            (Some(dir), _) => DataSource::Bundle(dir.clone()),
            (None, Some(s)) => DataSource::Synthetic {
                spec: parse_synthetic(s)?,
                seed: self.synthetic_seed,
            },
            (None, None) => bail!("one of --bundle or --synthetic is required"),
        };
        let strategies = parse_list::<Strategy>(&self.strategy)?;
        let seeds = |list: &Option<String>, label: &str| -> Result<Vec<u64>> {
            match list {
                Some(s) => parse_list(s),
                None => Ok(default_seed_list(self.seed, label, self.num_seeds)),
            }
        };
        let sweep: SweepAxis = self.sweep.parse()?;
        let sweep_values = match &self.sweep_values {
            Some(s) => parse_list(s)?,
            None => sweep.default_values(),
        };
        Ok(ExperimentPlan {
            source,
            strategies,
            val_seeds: seeds(&self.val_seeds, "val")?,
            init_seeds: seeds(&self.init_seeds, "init")?,
            sweep,
            sweep_values,
            curve_interval: self.curve_interval,
            jobs: self.jobs,
            out_dir: self.out.clone(),
            base: TrainingConfig {
                delta: self.delta,
                alpha: self.alpha,
                budget: self.budget,
                pretrain_epochs: self.pretrain_epochs,
                g_epochs: self.g_epochs,
                d_epochs: self.d_epochs,
                patience: self.patience,
                final_train_epochs: self.final_train_epochs,
                row_normalize: !self.raw_features,
                ..TrainingConfig::default()
            },
            split: SplitConfig {
                test_size: self.test_size,
                val_size: self.val_size,
                per_class_init: self.per_class_init,
                test_seed: self.test_seed,
            },
        })
    }
}

#[derive(Args)]
struct GenArgs {
    /// N,K,M,p_in,p_out,signal
    #[arg(long, default_value = "400,4,64,0.05,0.006,0.1")]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value = "1000,3000,5000")]
    sizes: String,
    #[arg(long, default_value_t = 48)]
    queries: usize,
    #[arg(long, default_value_t = 20)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 4.0)]
    mean_degree: f64,
    #[arg(long, env = "SEAL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "timing.csv")]
    out: PathBuf,
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run(args) => {
            let plan = args.plan()?;
            let outcome = run_plan(&plan)?;
            for s in &outcome.summary {
                println!(
                    "{:<9} delta={:<4} alpha={:<4} runs={:<3} micro_f1={:.4}±{:.4} macro_f1={:.4}±{:.4}",
                    s.strategy, s.delta, s.alpha, s.runs, s.micro_f1.mean, s.micro_f1.std, s.macro_f1.mean, s.macro_f1.std
                );
            }
            println!("wrote {}", plan.out_dir.display());
            if outcome.is_success() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} cell(s) failed; see summary.json", outcome.failures.len());
                Ok(ExitCode::from(2))
            }
        }
        Command::GenSynthetic(args) => {
            let bundle = generate_synthetic(&parse_synthetic(&args.spec)?, args.seed)?;
            save_bundle(&bundle, &args.out)
                .with_context(|| format!("writing {}", args.out.display()))?;
            println!(
                "{}: {} nodes, {} edges, {} features, {} classes -> {}",
                bundle.name(),
                bundle.num_nodes(),
                bundle.edges().len(),
                bundle.num_features(),
                bundle.num_classes(),
                args.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Timing(args) => {
            let mut plan = TimingPlan {
                sizes: parse_list(&args.sizes)?,
                queries: args.queries,
                mean_degree: args.mean_degree,
                seed: args.seed,
                ..TimingPlan::default()
            };
            plan.config.pretrain_epochs = args.pretrain_epochs;
            let rows = timing_sweep(&plan)?;
            write_timing(&args.out, &rows)?;
            for r in &rows {
                println!("n={:<6} edges={:<7} queries={} {:.3}s", r.num_nodes, r.num_edges, r.queries, r.seconds);
            }
            if rows.len() >= 2 {
                let x: Vec<f64> = rows.iter().map(|r| r.num_nodes as f64).collect();
                let y: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
                println!("linear fit R^2 = {:.4}", linear_fit_r2(&x, &y)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckGradients { seed } => {
            let started = std::time::Instant::now();
            let checks = run_gradient_checks(seed)?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed();
                println!(
                    "{:<36} max rel err {:.3e}  ({} coords, {} at kinks)  {}",
                    c.name,
                    c.max_relative_error,
                    c.checked,
                    c.skipped,
                    if c.passed() { "ok" } else { "FAIL" }
                );
            }
            println!(
                "tolerance {GRADIENT_TOLERANCE:e}, {:.2}s",
                started.elapsed().as_secs_f64()
            );
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
