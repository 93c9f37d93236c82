//! Flat `key = value` experiment files.
//!
//! ```text
//! # Plinko defaults
//! env = plinko
//! algo = td-pr, td-lambda
//! episodes = 500
//! seeds = 30
//! ```
//!
//! Keys mirror [`ExperimentConfig`] fields plus `out`. Values are applied in
//! file order, so the CLI can append its own flags afterwards to override.

use crate::error::{Error, Result};
use crate::types::{CreditMode, MatrixInit, RateSchedule, SrDiscountMode};

use super::ExperimentConfig;

/// Splits config text into `(key, value)` pairs. `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", k + 1)))?;
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!("line {}: empty key", k + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// `N` means seeds `0..N`; `a..b` is a half-open range; otherwise a
/// comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("bad seed list `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    if !s.contains(',') {
        let n: u64 = s.parse().map_err(|_| bad())?;
        return if n > 0 { Ok((0..n).collect()) } else { Err(bad()) };
    }
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| bad()))
        .collect::<Result<Vec<u64>>>()
        .and_then(|v| if v.is_empty() { Err(bad()) } else { Ok(v) })
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    ///
    /// `algo` takes a single name here; callers that accept lists split
    /// them first. `out` is not part of the config and is rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let l = &mut self.learner;
        match key.as_str() {
            "env" => self.env = value.parse()?,
            "algo" => self.algo = value.parse()?,
            "features" => self.features = value.parse()?,
            "alpha_v" => l.alpha_v = num(&key, value)?,
            "alpha_m" => l.alpha_m = num(&key, value)?,
            "gamma" => l.gamma = num(&key, value)?,
            "lambda" => l.lambda = num(&key, value)?,
            "eta" => l.eta = num(&key, value)?,
            "episodes" => self.episodes = num(&key, value)?,
            "eval_every" => self.eval_every = num(&key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "sr_discount_mode" => {
                l.sr_discount_mode = match value {
                    "gamma" => SrDiscountMode::Gamma,
                    "gamma-lambda" | "gamma_lambda" => SrDiscountMode::GammaLambda,
                    _ => return Err(Error::UnknownName { kind: "sr discount mode", name: value.into() }),
                }
            }
            "m_init" => {
                l.m_init = match value {
                    "zero" => MatrixInit::Zero,
                    "identity" => MatrixInit::Identity,
                    _ => return Err(Error::UnknownName { kind: "matrix init", name: value.into() }),
                }
            }
            "credit" => {
                l.credit = match value {
                    "self-inclusive" => CreditMode::SelfInclusive,
                    "predecessors-only" => CreditMode::PredecessorsOnly,
                    _ => return Err(Error::UnknownName { kind: "credit mode", name: value.into() }),
                }
            }
            "alpha_m_half_life" => {
                l.alpha_m_schedule = match value {
                    "none" => RateSchedule::Constant,
                    v => RateSchedule::Harmonic { half_life: num(&key, v)? },
                }
            }
            _ => return Err(Error::UnknownName { kind: "config key", name: key }),
        }
        Ok(())
    }
}
