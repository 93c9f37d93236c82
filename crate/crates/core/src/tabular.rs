//! Tabular TD(λ) and TD-PR.
//!
//! TD-PR replaces the sampled eligibility trace with a learned successor
//! matrix `M`. The matrix is learned by TD(λ) on its rows; its columns,
//! read backwards, say how much each state precedes the current one and
//! are used to distribute the current TD error.

use nalgebra::{DMatrix, DVector};

use crate::oracle::ValueVector;
use crate::types::{CreditMode, Episode, LearnerConfig, MatrixInit, StateId, Transition};

/// Per-state accumulating eligibility trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector(DVector<f64>);

impl TraceVector {
    pub fn zeros(n: usize) -> Self {
        TraceVector(DVector::zeros(n))
    }

    pub fn from_vector(e: DVector<f64>) -> Self {
        TraceVector(e)
    }

    pub fn reset(&mut self) {
        self.0.fill(0.0);
    }

    pub fn visit(&mut self, s: StateId) {
        self.0[s.0] += 1.0;
    }

    pub fn decay(&mut self, factor: f64) {
        self.0 *= factor;
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn get(&self, s: StateId) -> f64 {
        self.0[s.0]
    }
}

fn bootstrap(v: &DVector<f64>, t: &Transition) -> f64 {
    if t.to_is_terminal {
        0.0
    } else {
        v[t.to.0]
    }
}

/// Tabular TD(λ) with accumulating traces.
#[derive(Debug, Clone)]
pub struct TdLambda {
    v: DVector<f64>,
    e: TraceVector,
    config: LearnerConfig,
}

impl TdLambda {
    pub fn new(n_states: usize, config: LearnerConfig) -> Self {
        TdLambda { v: DVector::zeros(n_states), e: TraceVector::zeros(n_states), config }
    }

    /// One backward-view update. `t.from` must be non-terminal.
    pub fn step(&mut self, t: &Transition) {
        let c = &self.config;
        self.e.visit(t.from);
        let delta = t.reward + c.gamma * bootstrap(&self.v, t) - self.v[t.from.0];
        let step = c.alpha_v * delta;
        for (v, &e) in self.v.iter_mut().zip(self.e.0.iter()) {
            if e != 0.0 {
                *v += step * e;
            }
        }
        self.e.decay(c.trace_decay());
    }

    pub fn learn_episode(&mut self, ep: &Episode) {
        self.e.reset();
        for t in &ep.steps {
            self.step(t);
        }
    }

    pub fn values(&self) -> ValueVector {
        ValueVector::new(self.v.clone())
    }

    pub fn trace(&self) -> &TraceVector {
        &self.e
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|x| x.is_finite())
    }
}

/// One TD(λ) step on the rows of a successor matrix:
///
/// `M ← M + β e (onehot(j) + κ_b M[j, :] - M[i, :])`
///
/// `e` must already include the visit to `i`. A terminal `j` contributes no
/// bootstrap row.
pub fn sr_td_update(
    m: &mut DMatrix<f64>,
    e: &TraceVector,
    i: StateId,
    j: StateId,
    j_terminal: bool,
    beta: f64,
    bootstrap_discount: f64,
) {
    let n = m.nrows();
    let mut target = DVector::<f64>::zeros(n);
    target[j.0] = 1.0;
    if !j_terminal {
        target.axpy(bootstrap_discount, &m.row(j.0).transpose(), 1.0);
    }
    target -= m.row(i.0).transpose();
    for (k, &ek) in e.0.iter().enumerate() {
        if ek != 0.0 {
            let scale = beta * ek;
            let mut row = m.row_mut(k);
            for (dst, &d) in row.iter_mut().zip(target.iter()) {
                *dst += scale * d;
            }
        }
    }
}

/// Tabular TD-PR: learns values and the successor matrix jointly.
#[derive(Debug, Clone)]
pub struct TdPr {
    v: DVector<f64>,
    m: DMatrix<f64>,
    e: TraceVector,
    config: LearnerConfig,
    steps: u64,
}

impl TdPr {
    pub fn new(n_states: usize, config: LearnerConfig) -> Self {
        let m = match config.m_init {
            MatrixInit::Zero => DMatrix::zeros(n_states, n_states),
            MatrixInit::Identity => DMatrix::identity(n_states, n_states),
        };
        TdPr { v: DVector::zeros(n_states), m, e: TraceVector::zeros(n_states), config, steps: 0 }
    }

    pub fn step(&mut self, t: &Transition) {
        let c = self.config;
        let kappa_b = c.bootstrap_discount();
        self.e.visit(t.from);
        let beta = c.matrix_rate(self.steps);
        sr_td_update(&mut self.m, &self.e, t.from, t.to, t.to_is_terminal, beta, kappa_b);

        let delta = t.reward + c.gamma * bootstrap(&self.v, t) - self.v[t.from.0];
        let step = c.alpha_v * delta;
        let scale = step * kappa_scale(c.credit, kappa_b);
        for (v, &m) in self.v.iter_mut().zip(self.m.column(t.from.0).iter()) {
            *v += scale * m;
        }
        if c.credit == CreditMode::SelfInclusive {
            self.v[t.from.0] += step;
        }
        self.e.decay(c.trace_decay());
        self.steps += 1;
    }

    pub fn learn_episode(&mut self, ep: &Episode) {
        self.e.reset();
        for t in &ep.steps {
            self.step(t);
        }
    }

    pub fn values(&self) -> ValueVector {
        ValueVector::new(self.v.clone())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    /// Column `s` of the learned matrix.
    pub fn sr_column(&self, s: StateId) -> DVector<f64> {
        self.m.column(s.0).into_owned()
    }

    /// The vector a TD error at `s` is distributed along.
    pub fn credit_vector(&self, s: StateId) -> DVector<f64> {
        match self.config.credit {
            CreditMode::PredecessorsOnly => self.sr_column(s),
            CreditMode::SelfInclusive => {
                let mut c = self.sr_column(s) * self.config.bootstrap_discount();
                c[s.0] += 1.0;
                c
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().chain(self.m.iter()).all(|x| x.is_finite())
    }
}

fn kappa_scale(credit: CreditMode, kappa_b: f64) -> f64 {
    match credit {
        CreditMode::PredecessorsOnly => 1.0,
        CreditMode::SelfInclusive => kappa_b,
    }
}
