use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use predtrace::harness::{
    emit_learning_curves, episode_stream, export_heatmap, export_oracle, mean_rmse_at, parse_config_text, parse_csv,
    run_experiment, sweep, to_csv, Algo, EnvSpec, ExperimentConfig, Metric, MetricRow, OracleQuantity, RunResult,
    SweepAxis,
};
use predtrace::{StateId, TdPr};

#[derive(Parser)]
#[command(name = "predtrace", version, about = "Run predecessor-trace TD experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one or more algorithms over a list of seeds and write metric rows as CSV.
    Run(RunArgs),
    /// Run the base config once per value of one hyperparameter.
    Sweep(SweepArgs),
    /// Write an exact oracle quantity as CSV.
    Oracle(OracleArgs),
    /// Draw learning curves from one or more metric CSV files.
    Plot(PlotArgs),
    /// Render a TD-PR credit vector or value estimate on the Plinko grid.
    Heatmap(HeatmapArgs),
}

/// Settings shared with config files. Flags override file values.
#[derive(Args, Default)]
struct Overrides {
    /// `plinko`, `chain:N` or `chain:N:P_RIGHT`.
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated list of td-lambda, td-pr, td-pf, et.
    #[arg(long)]
    algo: Option<String>,
    /// `one-hot` or `row-col` (linear learners only).
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    alpha_v: Option<String>,
    #[arg(long)]
    alpha_m: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    /// `N` for seeds 0..N, `a..b`, or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    eval_every: Option<String>,
    /// `gamma` or `gamma-lambda`.
    #[arg(long)]
    sr_discount_mode: Option<String>,
    /// `zero` or `identity`.
    #[arg(long)]
    m_init: Option<String>,
    /// `self-inclusive` or `predecessors-only`.
    #[arg(long)]
    credit: Option<String>,
    /// Harmonic decay of alpha_m, in steps; `none` for a constant rate.
    #[arg(long)]
    alpha_m_half_life: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields = [
            ("env", &self.env),
            ("algo", &self.algo),
            ("features", &self.features),
            ("alpha_v", &self.alpha_v),
            ("alpha_m", &self.alpha_m),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("eta", &self.eta),
            ("episodes", &self.episodes),
            ("seeds", &self.seeds),
            ("eval_every", &self.eval_every),
            ("sr_discount_mode", &self.sr_discount_mode),
            ("m_init", &self.m_init),
            ("credit", &self.credit),
            ("alpha_m_half_life", &self.alpha_m_half_life),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    set: Overrides,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// alpha_v, alpha_m, lambda, gamma or eta.
    #[arg(long)]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long)]
    values: String,
    #[command(flatten)]
    set: Overrides,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "plinko")]
    env: String,
    /// value, sr-inclusive, sr-strict, ztrace or visits.
    #[arg(long)]
    what: String,
    /// Discount: γ for values, κ for the SR and traces.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in", num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// rmse or return.
    #[arg(long, default_value = "rmse")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    set: Overrides,
    /// credit, sr-column or values.
    #[arg(long, default_value = "credit")]
    what: String,
    /// State whose credit vector or SR column is drawn.
    #[arg(long, default_value_t = 33)]
    state: usize,
    /// Seed of the episode stream (the first configured seed by default).
    #[arg(long)]
    seed: Option<u64>,
    /// Writes PREFIX.svg and PREFIX.csv.
    #[arg(long)]
    out: PathBuf,
}

struct Resolved {
    cfg: ExperimentConfig,
    algos: Vec<Algo>,
}

fn resolve(config: Option<&Path>, set: &Overrides) -> Result<Resolved> {
    let mut pairs = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    pairs.extend(set.pairs());

    let mut cfg = ExperimentConfig::default();
    let mut algos = vec![cfg.algo];
    for (k, v) in &pairs {
        if k == "algo" {
            algos = v.split(',').map(|a| a.trim().parse()).collect::<Result<Vec<Algo>, _>>()?;
            if algos.is_empty() {
                bail!("empty algorithm list");
            }
        } else {
            cfg.set(k, v)?;
        }
    }
    cfg.algo = algos[0];
    cfg.validate()?;
    Ok(Resolved { cfg, algos })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summarize(rows: &[MetricRow], episodes: usize) {
    let mut algos: Vec<&str> = rows.iter().map(|r| r.algo.as_str()).collect();
    algos.dedup();
    for a in algos {
        let mine: Vec<MetricRow> = rows.iter().filter(|r| r.algo == a).cloned().collect();
        if let Some(m) = mean_rmse_at(&mine, episodes) {
            eprintln!("{a}: mean RMSE {m:.4} at episode {episodes}");
        }
    }
}

/// Runs `algos` over `cfg` and reports whether every (algo, seed) diverged.
fn run_all(cfg: &ExperimentConfig, algos: &[Algo]) -> Result<(RunResult, bool)> {
    let mut all = RunResult::default();
    for &algo in algos {
        all.extend(run_experiment(&ExperimentConfig { algo, ..cfg.clone() })?);
    }
    let all_diverged = all.diverged.len() == algos.len() * cfg.seeds.len();
    Ok((all, all_diverged))
}

fn cmd_run(a: RunArgs) -> Result<u8> {
    let Resolved { cfg, algos } = resolve(a.config.as_deref(), &a.set)?;
    let (result, all_diverged) = run_all(&cfg, &algos)?;
    emit(a.out.as_deref(), &to_csv(&result.rows))?;
    summarize(&result.rows, cfg.episodes - cfg.episodes % cfg.eval_every);
    Ok(divergence_code(&result, all_diverged))
}

fn divergence_code(result: &RunResult, all_diverged: bool) -> u8 {
    if !result.diverged.is_empty() {
        eprintln!("diverged seeds: {:?}", result.diverged);
    }
    if all_diverged {
        2
    } else {
        0
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    let Resolved { cfg, algos } = resolve(Some(&a.config), &a.set)?;
    let axis: SweepAxis = a.axis.parse()?;
    let values = a
        .values
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad sweep value `{v}`")))
        .collect::<Result<Vec<_>>>()?;
    let mut all = RunResult::default();
    for &algo in &algos {
        for r in sweep(&ExperimentConfig { algo, ..cfg.clone() }, axis, &values)? {
            all.extend(r);
        }
    }
    emit(a.out.as_deref(), &to_csv(&all.rows))?;
    let all_diverged = all.diverged.len() == algos.len() * values.len() * cfg.seeds.len();
    Ok(divergence_code(&all, all_diverged))
}

fn cmd_oracle(a: OracleArgs) -> Result<u8> {
    let env: EnvSpec = a.env.parse()?;
    let what: OracleQuantity = a.what.parse()?;
    emit(a.out.as_deref(), &export_oracle(env, what, a.kappa)?)?;
    Ok(0)
}

fn cmd_plot(a: PlotArgs) -> Result<u8> {
    let metric: Metric = a.metric.parse()?;
    let mut rows = Vec::new();
    for p in &a.inputs {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        rows.extend(parse_csv(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    let svg = emit_learning_curves(&rows, metric)?;
    fs::write(&a.out, svg).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(0)
}

fn cmd_heatmap(a: HeatmapArgs) -> Result<u8> {
    let Resolved { cfg, .. } = resolve(a.config.as_deref(), &a.set)?;
    let mdp = cfg.env.build()?;
    if a.state >= mdp.n_states() {
        bail!("state {} out of range for {}", a.state, cfg.env);
    }
    let seed = a.seed.unwrap_or(cfg.seeds[0]);
    let mut pr = TdPr::new(mdp.n_states(), cfg.learner);
    for ep in episode_stream(&mdp, seed, cfg.episodes)? {
        pr.learn_episode(&ep);
    }
    let s = StateId(a.state);
    let v: Vec<f64> = match a.what.as_str() {
        "credit" => pr.credit_vector(s).iter().copied().collect(),
        "sr-column" => pr.sr_column(s).iter().copied().collect(),
        "values" => pr.values().as_slice().to_vec(),
        other => bail!("unknown heatmap quantity `{other}`"),
    };
    let h = export_heatmap(&v)?;
    let svg = a.out.with_extension("svg");
    let csv = a.out.with_extension("csv");
    fs::write(&svg, h.svg).with_context(|| format!("writing {}", svg.display()))?;
    fs::write(&csv, h.csv).with_context(|| format!("writing {}", csv.display()))?;
    Ok(0)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on a usage or config error, 2 when
/// every seed diverged.
fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{e}");
                return 1;
            }
            print!("{e}");
            return 0;
        }
    };
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Plot(a) => cmd_plot(a),
        Cmd::Heatmap(a) => cmd_heatmap(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run_cli(std::env::args_os()))
}
