use std::fmt;

use crate::error::{Error, Result};

/// Index of a state in a [`TabularMdp`](crate::envs::TabularMdp).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub reward: f64,
    pub to_is_terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub initial: StateId,
    pub steps: Vec<Transition>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Visited states in order, starting with the initial state.
    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        std::iter::once(self.initial).chain(self.steps.iter().map(|t| t.to))
    }

    /// Discounted return from the initial state.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut g = 0.0;
        for t in self.steps.iter().rev() {
            g = t.reward + gamma * g;
        }
        g
    }
}

/// Discount used when bootstrapping the learned SR matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SrDiscountMode {
    /// `γ`, as in the tabular TD-PR matrix update.
    #[default]
    Gamma,
    /// `γλ`, the discount under which SR columns equal expected traces.
    GammaLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixInit {
    #[default]
    Zero,
    Identity,
}

/// Which vector TD-PR uses to distribute a state's TD error.
///
/// The learned matrix converges to the strict SR `P(I - κP)^-1`, whose
/// column `i` holds the predecessors of `i` but not `i` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CreditMode {
    /// `onehot(i) + κ_b · M[:, i]`, the inclusive SR column `(I - κP)^-1 e_i`.
    #[default]
    SelfInclusive,
    /// `M[:, i]` only. States never receive credit for their own TD error,
    /// so values of states whose successors are all terminal never move.
    PredecessorsOnly,
}

/// Per-step schedule for the matrix learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RateSchedule {
    #[default]
    Constant,
    /// `base / (1 + k / half_life)` at step `k` (0-based).
    Harmonic { half_life: f64 },
}

impl RateSchedule {
    pub fn rate(&self, base: f64, step: u64) -> f64 {
        match *self {
            RateSchedule::Constant => base,
            RateSchedule::Harmonic { half_life } => base / (1.0 + step as f64 / half_life),
        }
    }
}

/// Hyperparameters shared by every learner.
///
/// Defaults are the Plinko comparison settings: `alpha_v = 0.01`,
/// `alpha_m = 0.1`, `lambda = 0.9`, `gamma = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Value learning rate α.
    pub alpha_v: f64,
    /// Matrix (SR or Ψ) learning rate β.
    pub alpha_m: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Trace-target bootstrap mix; 0 is fully bootstrapped.
    pub eta: f64,
    pub sr_discount_mode: SrDiscountMode,
    pub m_init: MatrixInit,
    pub credit: CreditMode,
    pub alpha_m_schedule: RateSchedule,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            alpha_v: 0.01,
            alpha_m: 0.1,
            gamma: 1.0,
            lambda: 0.9,
            eta: 0.0,
            sr_discount_mode: SrDiscountMode::Gamma,
            m_init: MatrixInit::Zero,
            credit: CreditMode::SelfInclusive,
            alpha_m_schedule: RateSchedule::Constant,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        fn check(name: &str, x: f64, lo_open: bool, lo: f64, hi: f64) -> Result<()> {
            let lo_ok = if lo_open { x > lo } else { x >= lo };
            if !(x.is_finite() && lo_ok && x <= hi) {
                let lb = if lo_open { '(' } else { '[' };
                return Err(Error::InvalidConfig(format!(
                    "{name} = {x} outside {lb}{lo}, {hi}]"
                )));
            }
            Ok(())
        }
        check("alpha_v", self.alpha_v, true, 0.0, 1.0)?;
        check("alpha_m", self.alpha_m, true, 0.0, 1.0)?;
        check("gamma", self.gamma, false, 0.0, 1.0)?;
        check("lambda", self.lambda, false, 0.0, 1.0)?;
        check("eta", self.eta, false, 0.0, 1.0)?;
        if let RateSchedule::Harmonic { half_life } = self.alpha_m_schedule {
            if !(half_life.is_finite() && half_life > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "harmonic half-life must be positive, got {half_life}"
                )));
            }
        }
        Ok(())
    }

    /// Trace decay `γλ`.
    pub fn trace_decay(&self) -> f64 {
        self.gamma * self.lambda
    }

    /// `κ_b`, the discount applied to the bootstrapped SR row.
    pub fn bootstrap_discount(&self) -> f64 {
        match self.sr_discount_mode {
            SrDiscountMode::Gamma => self.gamma,
            SrDiscountMode::GammaLambda => self.gamma * self.lambda,
        }
    }

    pub fn matrix_rate(&self, step: u64) -> f64 {
        self.alpha_m_schedule.rate(self.alpha_m, step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = LearnerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.bootstrap_discount(), 1.0);
        assert!((c.trace_decay() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = [
            LearnerConfig { alpha_v: 0.0, ..Default::default() },
            LearnerConfig { alpha_m: 1.5, ..Default::default() },
            LearnerConfig { gamma: -0.1, ..Default::default() },
            LearnerConfig { lambda: f64::NAN, ..Default::default() },
            LearnerConfig { eta: 2.0, ..Default::default() },
            LearnerConfig {
                alpha_m_schedule: RateSchedule::Harmonic { half_life: 0.0 },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn harmonic_schedule() {
        let s = RateSchedule::Harmonic { half_life: 10.0 };
        assert_eq!(s.rate(1.0, 0), 1.0);
        assert_eq!(s.rate(1.0, 10), 0.5);
        assert_eq!(RateSchedule::Constant.rate(0.3, 99), 0.3);
    }

    #[test]
    fn discounted_return_sums_backwards() {
        let ep = Episode {
            initial: StateId(0),
            steps: vec![
                Transition { from: StateId(0), to: StateId(1), reward: 1.0, to_is_terminal: false },
                Transition { from: StateId(1), to: StateId(2), reward: 2.0, to_is_terminal: true },
            ],
        };
        assert_eq!(ep.discounted_return(0.5), 2.0);
        let states: Vec<_> = ep.states().map(StateId::index).collect();
        assert_eq!(states, vec![0, 1, 2]);
    }
}
