//! Exact ground truth by dense linear solves and forward dynamic programming.
//!
//! Everything here is a pure function of the model. Matrices are at most a
//! few dozen states wide, so all solves are dense LU with partial pivoting.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::envs::TabularMdp;
use crate::episode::{generate_episode_with_limit, tail_horizon, EPISODE_TAIL};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::StateId;

/// State values with terminal entries fixed at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(DVector<f64>);

impl ValueVector {
    pub fn new(values: DVector<f64>) -> Self {
        ValueVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        ValueVector(DVector::zeros(n))
    }

    pub fn get(&self, s: StateId) -> f64 {
        self.0[s.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Where the SR starts counting occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrConvention {
    /// `(I - κP)^-1`: counts the current state at step 0.
    Inclusive,
    /// `P (I - κP)^-1`: counts only states strictly after the current one.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrMatrix {
    pub m: DMatrix<f64>,
    pub discount: f64,
    pub convention: SrConvention,
}

fn solve_resolvent(mdp: &TabularMdp, kappa: f64) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let n = mdp.n_states();
    let a = DMatrix::identity(n, n) - mdp.transitions() * kappa;
    let lu = a.lu();
    if !lu.is_invertible() {
        return Err(Error::Singular);
    }
    Ok(lu)
}

/// Solves the Bellman system `v = r̄ + γPv`.
///
/// Terminal rows of `P` are zero and `r̄` vanishes there, so terminal values
/// come out as exactly zero.
pub fn true_values(mdp: &TabularMdp, gamma: f64) -> Result<ValueVector> {
    let lu = solve_resolvent(mdp, gamma)?;
    let mut v = lu.solve(&mdp.expected_reward()).ok_or(Error::Singular)?;
    for (s, &t) in mdp.terminal_mask().iter().enumerate() {
        if t {
            v[s] = 0.0;
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(ValueVector(v))
}

pub fn successor_matrix(mdp: &TabularMdp, kappa: f64, convention: SrConvention) -> Result<SrMatrix> {
    let inclusive = solve_resolvent(mdp, kappa)?.try_inverse().ok_or(Error::Singular)?;
    let m = match convention {
        SrConvention::Inclusive => inclusive,
        SrConvention::Strict => mdp.transitions() * inclusive,
    };
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(SrMatrix { m, discount: kappa, convention })
}

/// Expected eligibility traces, one column per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedTraces {
    z: DMatrix<f64>,
    defined: Vec<bool>,
}

impl ExpectedTraces {
    /// `E[e_t | S_t = j]`, or `None` when `j` is never visited.
    pub fn column(&self, j: StateId) -> Option<DVectorView<'_, f64>> {
        self.defined[j.0].then(|| self.z.column(j.0))
    }

    pub fn is_defined(&self, j: StateId) -> bool {
        self.defined[j.0]
    }

    /// Full matrix; undefined columns are zero.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }
}

/// Forward pass over time-indexed state distributions `d_t` for
/// `t = 0..=horizon`, calling `visit(t, d_t)` on each.
fn propagate(mdp: &TabularMdp, horizon: usize, mut visit: impl FnMut(&DVector<f64>)) {
    let pt = mdp.transitions().transpose();
    let mut d = mdp.start_dist().clone();
    for t in 0..=horizon {
        visit(&d);
        if t < horizon {
            d = &pt * &d;
        }
    }
}

/// Expected visits per episode to each state within `horizon` transitions.
///
/// On layered chains such as Plinko each state is visited at most once, so
/// this is the probability that the state is visited at all.
pub fn visit_probabilities(mdp: &TabularMdp, horizon: usize) -> DVector<f64> {
    let mut visits = DVector::zeros(mdp.n_states());
    propagate(mdp, horizon, |d| visits += d);
    visits
}

/// Computes `z(j) = E[Σ_n κ^n onehot(S_{t-n}) | S_t = j]`, averaged over all
/// times `t <= horizon` weighted by the probability of being at `j`.
///
/// Uses the recursion `Z_t = κ Z_{t-1} P + diag(d_t)` where column `j` of
/// `Z_t` is `E[e_t 1{S_t = j}]`.
pub fn expected_trace(mdp: &TabularMdp, kappa: f64, horizon: usize) -> ExpectedTraces {
    let n = mdp.n_states();
    let p = mdp.transitions();
    let mut zt = DMatrix::<f64>::zeros(n, n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut visits = DVector::<f64>::zeros(n);
    propagate(mdp, horizon, |d| {
        zt = &zt * p * kappa;
        for s in 0..n {
            zt[(s, s)] += d[s];
        }
        acc += &zt;
        visits += d;
    });
    let defined: Vec<bool> = visits.iter().map(|&v| v > 0.0).collect();
    for j in 0..n {
        if defined[j] {
            let mut col = acc.column_mut(j);
            col /= visits[j];
        } else {
            acc.column_mut(j).fill(0.0);
        }
    }
    ExpectedTraces { z: acc, defined }
}

/// Monte Carlo check of the relation between strict SR entries and expected
/// traces:
///
/// `M_strict(i, j) = (P(j) / P(i)) · E[e(i) | arriving at j]`
///
/// where `e` is the κ-decayed trace as it stood just before entering `j` and
/// `P(·)` are per-episode visit frequencies, both estimated from
/// `n_samples` episodes. Returns `|lhs - rhs|` per entry; entries are NaN
/// where either state was never visited.
pub fn verify_sr_trace_identity(
    mdp: &TabularMdp,
    kappa: f64,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let n = mdp.n_states();
    let strict = successor_matrix(mdp, kappa, SrConvention::Strict)?.m;

    let mut trace_sums = DMatrix::<f64>::zeros(n, n);
    let mut arrivals = vec![0u64; n];
    let mut e = DVector::<f64>::zeros(n);
    let limit = tail_horizon(mdp, EPISODE_TAIL);
    for _ in 0..n_samples {
        let ep = generate_episode_with_limit(mdp, rng, limit)?;
        e.fill(0.0);
        arrivals[ep.initial.0] += 1;
        for t in &ep.steps {
            e *= kappa;
            e[t.from.0] += 1.0;
            let mut col = trace_sums.column_mut(t.to.0);
            col += &e;
            arrivals[t.to.0] += 1;
        }
    }

    let samples = n_samples as f64;
    let residual = DMatrix::from_fn(n, n, |i, j| {
        if arrivals[i] == 0 || arrivals[j] == 0 {
            return f64::NAN;
        }
        let p_i = arrivals[i] as f64 / samples;
        let p_j = arrivals[j] as f64 / samples;
        let cond_trace = trace_sums[(i, j)] / arrivals[j] as f64;
        (strict[(i, j)] - p_j / p_i * cond_trace).abs()
    });
    Ok(residual)
}

/// Largest defined (non-NaN) entry.
pub fn max_defined(m: &DMatrix<f64>) -> f64 {
    m.iter().copied().filter(|x| !x.is_nan()).fold(0.0, f64::max)
}
