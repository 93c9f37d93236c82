//! Experiment runner: seeded runs, parameter sweeps, and the files they
//! produce.

mod config;
mod csv;
mod export;
mod plot;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{chain_mdp, one_hot_features, plinko_mdp, row_col_features, FeatureMap, TabularMdp, PLINKO_SIDE};
use crate::episode::{generate_episodes_with_limit, tail_horizon, EPISODE_TAIL};
use crate::error::{Error, Result};
use crate::linear::ExpectedTraceLearner;
use crate::oracle::{true_values, ValueVector};
use crate::rng::make_rng;
use crate::tabular::{TdLambda, TdPr};
use crate::types::{Episode, LearnerConfig, StateId};

pub use self::config::{parse_config_text, parse_seeds};
pub use self::csv::{parse_csv, to_csv, CSV_HEADER};
pub use self::export::{export_heatmap, export_oracle, Heatmap, OracleQuantity};
pub use self::plot::{emit_learning_curves, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    TdLambda,
    TdPr,
    TdPf,
    Et,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::TdLambda => "td-lambda",
            Algo::TdPr => "td-pr",
            Algo::TdPf => "td-pf",
            Algo::Et => "et",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "td-lambda" => Ok(Algo::TdLambda),
            "td-pr" => Ok(Algo::TdPr),
            "td-pf" => Ok(Algo::TdPf),
            "et" => Ok(Algo::Et),
            _ => Err(Error::UnknownName { kind: "algorithm", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvSpec {
    Plinko,
    Chain { n: usize, p_right: f64 },
}

impl EnvSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match *self {
            EnvSpec::Plinko => Ok(plinko_mdp()),
            EnvSpec::Chain { n, p_right } => chain_mdp(n, p_right),
        }
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EnvSpec::Plinko => f.write_str("plinko"),
            EnvSpec::Chain { n, p_right: 0.5 } => write!(f, "chain:{n}"),
            EnvSpec::Chain { n, p_right } => write!(f, "chain:{n}:{p_right}"),
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    /// `plinko`, `chain:N`, or `chain:N:P_RIGHT`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownName { kind: "environment", name: s.to_string() };
        if s == "plinko" {
            return Ok(EnvSpec::Plinko);
        }
        let mut parts = s.split(':');
        if parts.next() != Some("chain") {
            return Err(unknown());
        }
        let n = parts.next().and_then(|x| x.parse().ok()).ok_or_else(unknown)?;
        let p_right = match parts.next() {
            Some(p) => p.parse().map_err(|_| unknown())?,
            None => 0.5,
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        Ok(EnvSpec::Chain { n, p_right })
    }
}

/// Feature map used by the linear learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureKind {
    #[default]
    OneHot,
    /// Plinko only: one-hot row ⊕ one-hot column.
    RowCol,
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-hot" => Ok(FeatureKind::OneHot),
            "row-col" => Ok(FeatureKind::RowCol),
            _ => Err(Error::UnknownName { kind: "feature map", name: s.to_string() }),
        }
    }
}

impl FeatureKind {
    fn build(self, mdp: &TabularMdp) -> Result<FeatureMap> {
        match self {
            FeatureKind::OneHot => Ok(one_hot_features(mdp.n_states())),
            FeatureKind::RowCol if mdp.n_states() == PLINKO_SIDE * PLINKO_SIDE => Ok(row_col_features()),
            FeatureKind::RowCol => Err(Error::InvalidConfig("row-col features need the Plinko board".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algo: Algo,
    pub features: FeatureKind,
    pub learner: LearnerConfig,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub eval_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvSpec::Plinko,
            algo: Algo::TdPr,
            features: FeatureKind::OneHot,
            learner: LearnerConfig::default(),
            episodes: 500,
            seeds: (0..30).collect(),
            eval_every: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        let mdp = self.env.build()?;
        if matches!(self.algo, Algo::TdPf | Algo::Et) {
            self.features.build(&mdp)?;
        }
        Ok(())
    }
}

/// One evaluation point. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub algo: String,
    pub env: String,
    pub seed: u64,
    /// Number of episodes consumed so far (1-based).
    pub episode: usize,
    /// NaN marks a run aborted by divergence.
    pub rmse: f64,
    #[serde(rename = "return")]
    pub ret: f64,
    pub alpha_v: f64,
    pub alpha_m: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub eta: f64,
}

impl MetricRow {
    pub fn is_diagnostic(&self) -> bool {
        self.rmse.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub rows: Vec<MetricRow>,
    /// Seeds whose run hit a non-finite value.
    pub diverged: Vec<u64>,
}

impl RunResult {
    pub fn extend(&mut self, other: RunResult) {
        self.rows.extend(other.rows);
        self.diverged.extend(other.diverged);
    }
}

/// RMSE over the states in `mask`.
pub fn rmse(v_est: &ValueVector, v_true: &ValueVector, mask: &[StateId]) -> Result<f64> {
    if v_est.len() != v_true.len() {
        return Err(Error::DimensionMismatch { expected: v_true.len(), actual: v_est.len() });
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut sum = 0.0;
    for &s in mask {
        if s.0 >= v_est.len() {
            return Err(Error::StateOutOfRange(s.0));
        }
        let d = v_est.get(s) - v_true.get(s);
        sum += d * d;
    }
    Ok((sum / mask.len() as f64).sqrt())
}

/// A learner of any supported kind.
#[derive(Debug, Clone)]
pub enum Learner {
    TdLambda(TdLambda),
    TdPr(TdPr),
    Linear(ExpectedTraceLearner),
}

impl Learner {
    pub fn build(algo: Algo, mdp: &TabularMdp, features: FeatureKind, config: LearnerConfig) -> Result<Self> {
        let n = mdp.n_states();
        let terminal = mdp.terminal_mask().to_vec();
        Ok(match algo {
            Algo::TdLambda => Learner::TdLambda(TdLambda::new(n, config)),
            Algo::TdPr => Learner::TdPr(TdPr::new(n, config)),
            Algo::TdPf => Learner::Linear(ExpectedTraceLearner::td_pf(features.build(mdp)?, terminal, config)),
            Algo::Et => Learner::Linear(ExpectedTraceLearner::et(features.build(mdp)?, terminal, config)),
        })
    }

    pub fn learn_episode(&mut self, ep: &Episode) {
        match self {
            Learner::TdLambda(l) => l.learn_episode(ep),
            Learner::TdPr(l) => l.learn_episode(ep),
            Learner::Linear(l) => l.learn_episode(ep),
        }
    }

    pub fn values(&self) -> ValueVector {
        match self {
            Learner::TdLambda(l) => l.values(),
            Learner::TdPr(l) => l.values(),
            Learner::Linear(l) => l.values(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Learner::TdLambda(l) => l.is_finite(),
            Learner::TdPr(l) => l.is_finite(),
            Learner::Linear(l) => l.is_finite(),
        }
    }
}

/// Episode stream for one seed. Every algorithm run under the same seed sees
/// exactly these episodes. The length guard is [`tail_horizon`] at
/// [`EPISODE_TAIL`].
pub fn episode_stream(mdp: &TabularMdp, seed: u64, episodes: usize) -> Result<Vec<Episode>> {
    generate_episodes_with_limit(mdp, &mut make_rng(seed), episodes, tail_horizon(mdp, EPISODE_TAIL))
}

/// Runs every seed of `cfg`, in parallel, returning rows in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let mdp = cfg.env.build()?;
    let truth = true_values(&mdp, cfg.learner.gamma)?;
    let mask = mdp.non_terminal_states();
    let env_name = cfg.env.to_string();

    let per_seed: Vec<Result<RunResult>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, &mdp, &truth, &mask, &env_name, seed))
        .collect();

    let mut out = RunResult::default();
    for r in per_seed {
        out.extend(r?);
    }
    Ok(out)
}

fn run_seed(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    truth: &ValueVector,
    mask: &[StateId],
    env_name: &str,
    seed: u64,
) -> Result<RunResult> {
    let episodes = episode_stream(mdp, seed, cfg.episodes)?;
    let mut learner = Learner::build(cfg.algo, mdp, cfg.features, cfg.learner)?;
    let c = &cfg.learner;
    let row = |episode: usize, rmse: f64, ret: f64| MetricRow {
        algo: cfg.algo.name().to_string(),
        env: env_name.to_string(),
        seed,
        episode,
        rmse,
        ret,
        alpha_v: c.alpha_v,
        alpha_m: c.alpha_m,
        gamma: c.gamma,
        lambda: c.lambda,
        eta: c.eta,
    };

    let mut result = RunResult::default();
    for (k, ep) in episodes.iter().enumerate() {
        let episode = k + 1;
        learner.learn_episode(ep);
        if !learner.is_finite() {
            result.rows.push(row(episode, f64::NAN, f64::NAN));
            result.diverged.push(seed);
            break;
        }
        if episode % cfg.eval_every == 0 {
            let err = rmse(&learner.values(), truth, mask)?;
            result.rows.push(row(episode, err, ep.discounted_return(c.gamma)));
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    AlphaV,
    AlphaM,
    Lambda,
    Gamma,
    Eta,
}

impl SweepAxis {
    pub fn apply(self, cfg: &mut LearnerConfig, value: f64) {
        match self {
            SweepAxis::AlphaV => cfg.alpha_v = value,
            SweepAxis::AlphaM => cfg.alpha_m = value,
            SweepAxis::Lambda => cfg.lambda = value,
            SweepAxis::Gamma => cfg.gamma = value,
            SweepAxis::Eta => cfg.eta = value,
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "alpha_v" => Ok(SweepAxis::AlphaV),
            "alpha_m" => Ok(SweepAxis::AlphaM),
            "lambda" => Ok(SweepAxis::Lambda),
            "gamma" => Ok(SweepAxis::Gamma),
            "eta" => Ok(SweepAxis::Eta),
            _ => Err(Error::UnknownName { kind: "sweep axis", name: s.to_string() }),
        }
    }
}

/// One [`run_experiment`] per value of `axis`, other parameters held at
/// `base`. The swept value is echoed in each row's hyperparameter columns.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<RunResult>> {
    values
        .iter()
        .map(|&x| {
            let mut cfg = base.clone();
            axis.apply(&mut cfg.learner, x);
            run_experiment(&cfg)
        })
        .collect()
}

/// Mean of the non-diagnostic `rmse` values recorded at `episode`.
pub fn mean_rmse_at(rows: &[MetricRow], episode: usize) -> Option<f64> {
    let mut xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.episode == episode && !r.is_diagnostic())
        .map(|r| r.rmse)
        .collect();
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}
