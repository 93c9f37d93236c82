//! Tabular MDP models and feature maps.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::types::StateId;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Side length of the Plinko board.
pub const PLINKO_SIDE: usize = 6;
/// Rewarded bottom-row cell: row 5, column 3.
pub const PLINKO_GOAL: StateId = StateId(5 * PLINKO_SIDE + 3);

/// A finite Markov reward process under a fixed policy.
///
/// Terminal rows of the transition matrix are all zero, so `(I - κP)` is
/// invertible for every `κ <= 1` on episodic chains. Rewards are attached to
/// transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    transitions: DMatrix<f64>,
    rewards: DMatrix<f64>,
    start: DVector<f64>,
    terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        transitions: DMatrix<f64>,
        rewards: DMatrix<f64>,
        start: DVector<f64>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let n = transitions.nrows();
        if n == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        if transitions.ncols() != n {
            return Err(Error::InvalidModel("transition matrix is not square".into()));
        }
        for (len, what) in [
            (rewards.nrows(), "reward rows"),
            (rewards.ncols(), "reward cols"),
            (start.len(), "start distribution"),
            (terminal.len(), "terminal mask"),
        ] {
            if len != n {
                return Err(Error::InvalidModel(format!("{what} has length {len}, expected {n}")));
            }
        }
        if transitions.iter().chain(rewards.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite entry".into()));
        }
        if transitions.iter().any(|&p| p < 0.0) || start.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidModel("negative probability".into()));
        }
        for (s, &is_terminal) in terminal.iter().enumerate() {
            let row_sum: f64 = transitions.row(s).sum();
            if is_terminal {
                if row_sum != 0.0 {
                    return Err(Error::InvalidModel(format!("terminal row {s} is not zero")));
                }
            } else if (row_sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("row {s} sums to {row_sum}")));
            }
        }
        if (start.sum() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("start distribution sums to {}", start.sum())));
        }
        Ok(TabularMdp { transitions, rewards, start, terminal })
    }

    pub fn n_states(&self) -> usize {
        self.transitions.nrows()
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn rewards(&self) -> &DMatrix<f64> {
        &self.rewards
    }

    pub fn start_dist(&self) -> &DVector<f64> {
        &self.start
    }

    pub fn prob(&self, from: StateId, to: StateId) -> f64 {
        self.transitions[(from.0, to.0)]
    }

    pub fn reward(&self, from: StateId, to: StateId) -> f64 {
        self.rewards[(from.0, to.0)]
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s.0]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    pub fn non_terminal_states(&self) -> Vec<StateId> {
        (0..self.n_states()).filter(|&s| !self.terminal[s]).map(StateId).collect()
    }

    /// Expected one-step reward `r̄(s) = Σ_s' P(s, s') r(s, s')`.
    pub fn expected_reward(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n_states(),
            (0..self.n_states()).map(|s| self.transitions.row(s).dot(&self.rewards.row(s))),
        )
    }

    /// Same dynamics with every reward multiplied by `c`.
    pub fn scale_rewards(&self, c: f64) -> TabularMdp {
        TabularMdp { rewards: &self.rewards * c, ..self.clone() }
    }

    pub fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 < self.n_states() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange(s.0))
        }
    }
}

pub fn plinko_state(row: usize, col: usize) -> StateId {
    debug_assert!(row < PLINKO_SIDE && col < PLINKO_SIDE);
    StateId(row * PLINKO_SIDE + col)
}

/// `(row, col)` of a Plinko state.
pub fn plinko_coords(s: StateId) -> (usize, usize) {
    (s.0 / PLINKO_SIDE, s.0 % PLINKO_SIDE)
}

/// The 6×6 Plinko board.
///
/// States are row-major with row 0 on top. A ball in an interior column
/// falls diagonally left or right with probability 1/2; a ball on an edge
/// moves one column inward. The bottom row is terminal and the only reward
/// is 1 for entering [`PLINKO_GOAL`].
pub fn plinko_mdp() -> TabularMdp {
    let side = PLINKO_SIDE;
    let n = side * side;
    let mut p = DMatrix::zeros(n, n);
    let mut r = DMatrix::zeros(n, n);
    for row in 0..side - 1 {
        for col in 0..side {
            let s = plinko_state(row, col).0;
            let below = |c: usize| plinko_state(row + 1, c).0;
            match col {
                0 => p[(s, below(1))] = 1.0,
                c if c == side - 1 => p[(s, below(side - 2))] = 1.0,
                c => {
                    p[(s, below(c - 1))] = 0.5;
                    p[(s, below(c + 1))] = 0.5;
                }
            }
        }
    }
    for from in 0..n {
        r[(from, PLINKO_GOAL.0)] = 1.0;
    }
    let mut start = DVector::zeros(n);
    start.rows_mut(0, side).fill(1.0 / side as f64);
    let terminal = (0..n).map(|s| s / side == side - 1).collect();
    TabularMdp::new(p, r, start, terminal).expect("plinko model is well formed")
}

/// Random walk on `0..n` with absorbing ends.
///
/// Interior state `i` steps right with probability `p_right`. Entering
/// `n - 1` pays 1. Episodes start at `ceil((n - 1) / 2)`.
pub fn chain_mdp(n: usize, p_right: f64) -> Result<TabularMdp> {
    if n < 3 {
        return Err(Error::InvalidModel(format!("chain needs at least 3 states, got {n}")));
    }
    if !(0.0..=1.0).contains(&p_right) {
        return Err(Error::InvalidModel(format!("p_right = {p_right} outside [0, 1]")));
    }
    let mut p = DMatrix::zeros(n, n);
    let mut r = DMatrix::zeros(n, n);
    for i in 1..n - 1 {
        p[(i, i + 1)] += p_right;
        p[(i, i - 1)] += 1.0 - p_right;
    }
    for from in 0..n {
        r[(from, n - 1)] = 1.0;
    }
    let mut start = DVector::zeros(n);
    start[(n - 1).div_ceil(2)] = 1.0;
    let terminal = (0..n).map(|s| s == 0 || s == n - 1).collect();
    TabularMdp::new(p, r, start, terminal)
}

/// Precomputed feature vectors `x(s)`, one column per state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    features: DMatrix<f64>,
}

impl FeatureMap {
    /// Builds a map from a `d × n_states` matrix whose column `s` is `x(s)`.
    pub fn from_columns(features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidModel("empty feature map".into()));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite feature".into()));
        }
        Ok(FeatureMap { features })
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.features.ncols()
    }

    pub fn x(&self, s: StateId) -> DVectorView<'_, f64> {
        self.features.column(s.0)
    }
}

pub fn one_hot_features(n: usize) -> FeatureMap {
    FeatureMap { features: DMatrix::identity(n, n) }
}

/// Plinko features: one-hot row concatenated with one-hot column (`d = 12`).
pub fn row_col_features() -> FeatureMap {
    let side = PLINKO_SIDE;
    let mut f = DMatrix::zeros(2 * side, side * side);
    for s in 0..side * side {
        let (row, col) = plinko_coords(StateId(s));
        f[(row, s)] = 1.0;
        f[(side + col, s)] = 1.0;
    }
    FeatureMap { features: f }
}
