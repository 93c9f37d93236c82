//! Linear value prediction with learned expected traces.
//!
//! TD-PF keeps a linear model `z(s) = Ψ x(s)` of the expected eligibility
//! trace and uses it in place of the sampled trace when distributing TD
//! errors. `Ψ` is trained toward the bootstrapped target
//! `x(S_t) + λγ z(S_{t-1})`. The ET(λ, η) variant mixes that target with
//! the sampled trace: `η = 0` is TD-PF, `η = 1` regresses on the sampled
//! trace itself.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::envs::FeatureMap;
use crate::error::{Error, Result};
use crate::oracle::ValueVector;
use crate::types::{Episode, LearnerConfig, MatrixInit, StateId, Transition};

pub type WeightVector = DVector<f64>;

/// `w · x`.
pub fn linear_value(w: &WeightVector, x: DVectorView<'_, f64>) -> Result<f64> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), actual: x.len() });
    }
    Ok(w.dot(&x))
}

/// `δ = r + γ w·x(to) - w·x(from)`, with terminal successors valued at 0.
pub fn td_error(w: &WeightVector, t: &Transition, fmap: &FeatureMap, gamma: f64) -> f64 {
    let next = if t.to_is_terminal { 0.0 } else { w.dot(&fmap.x(t.to)) };
    t.reward + gamma * next - w.dot(&fmap.x(t.from))
}

/// History available when forming the trace target for a state.
#[derive(Debug, Clone, Copy)]
pub enum Predecessor<'a> {
    /// The state opens an episode.
    Initial,
    Step {
        /// Model prediction `z(S_{t-1})`.
        z_prev: &'a DVector<f64>,
        /// Sampled trace `e_{t-1}`; only read when `eta > 0`.
        e_prev: Option<&'a DVector<f64>>,
    },
}

/// Regression target for `z(S_t)`:
///
/// - initial state: `x(S_t)`
/// - otherwise: `x(S_t) + λγ ((1 - η) z(S_{t-1}) + η e_{t-1})`
pub fn pf_target(
    x_curr: DVectorView<'_, f64>,
    prev: Predecessor<'_>,
    gamma: f64,
    lambda: f64,
    eta: f64,
) -> Result<DVector<f64>> {
    let d = x_curr.len();
    let mut y = x_curr.into_owned();
    let Predecessor::Step { z_prev, e_prev } = prev else {
        return Ok(y);
    };
    if z_prev.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: z_prev.len() });
    }
    let decay = lambda * gamma;
    if eta == 0.0 {
        y.axpy(decay, z_prev, 1.0);
        return Ok(y);
    }
    let e_prev = e_prev.ok_or(Error::MissingSampledTrace)?;
    if e_prev.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: e_prev.len() });
    }
    let mixed = z_prev * (1.0 - eta) + e_prev * eta;
    y.axpy(decay, &mixed, 1.0);
    Ok(y)
}

/// Linear expected-trace model `z(s) = Ψ x(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredecessorModel {
    pub psi: DMatrix<f64>,
}

impl PredecessorModel {
    pub fn new(dim: usize, init: MatrixInit) -> Self {
        let psi = match init {
            MatrixInit::Zero => DMatrix::zeros(dim, dim),
            MatrixInit::Identity => DMatrix::identity(dim, dim),
        };
        PredecessorModel { psi }
    }

    pub fn predict(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        &self.psi * x
    }

    /// One gradient step on `½‖Ψx - y‖²`: `Ψ ← Ψ - β (Ψx - y) xᵀ`.
    pub fn update(&mut self, x: DVectorView<'_, f64>, y: &DVector<f64>, beta: f64) {
        let residual = &self.psi * x - y;
        self.psi.ger(-beta, &residual, &x, 1.0);
    }
}

/// Linear TD(λ) with accumulating feature traces.
#[derive(Debug, Clone)]
pub struct LinearTdLambda {
    w: WeightVector,
    e: DVector<f64>,
    fmap: FeatureMap,
    terminal: Vec<bool>,
    config: LearnerConfig,
}

impl LinearTdLambda {
    pub fn new(fmap: FeatureMap, terminal: Vec<bool>, config: LearnerConfig) -> Self {
        let d = fmap.dim();
        LinearTdLambda { w: DVector::zeros(d), e: DVector::zeros(d), fmap, terminal, config }
    }

    pub fn learn_episode(&mut self, ep: &Episode) {
        let c = self.config;
        self.e.fill(0.0);
        for t in &ep.steps {
            self.e *= c.trace_decay();
            self.e += self.fmap.x(t.from);
            let delta = td_error(&self.w, t, &self.fmap, c.gamma);
            self.w.axpy(c.alpha_v * delta, &self.e, 1.0);
        }
    }

    pub fn weights(&self) -> &WeightVector {
        &self.w
    }

    pub fn values(&self) -> ValueVector {
        state_values(&self.w, &self.fmap, &self.terminal)
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|x| x.is_finite())
    }
}

fn state_values(w: &WeightVector, fmap: &FeatureMap, terminal: &[bool]) -> ValueVector {
    let n = fmap.n_states();
    ValueVector::new(DVector::from_iterator(
        n,
        (0..n).map(|s| if terminal[s] { 0.0 } else { w.dot(&fmap.x(StateId(s))) }),
    ))
}

/// One TD-PF episode at constant `β = config.alpha_m`.
///
/// Before the loop, `Ψ` is pulled toward `x(S_0)` at the initial state.
/// Each transition then computes `δ`, reads `z(S_t)` with the current `Ψ`,
/// moves `z(S_{t+1})` toward `x(S_{t+1}) + λγ z(S_t)`, and applies
/// `w ← w + α δ z(S_t)`.
pub fn td_pf_episode(
    w: &mut WeightVector,
    model: &mut PredecessorModel,
    ep: &Episode,
    fmap: &FeatureMap,
    config: &LearnerConfig,
) {
    let mut steps = 0;
    td_pf_episode_scheduled(w, model, ep, fmap, config, &mut steps);
}

fn td_pf_episode_scheduled(
    w: &mut WeightVector,
    model: &mut PredecessorModel,
    ep: &Episode,
    fmap: &FeatureMap,
    c: &LearnerConfig,
    steps: &mut u64,
) {
    let x0 = fmap.x(ep.initial);
    let y = pf_target(x0, Predecessor::Initial, c.gamma, c.lambda, 0.0).expect("initial target");
    model.update(x0, &y, c.matrix_rate(*steps));
    for t in &ep.steps {
        let delta = td_error(w, t, fmap, c.gamma);
        let z = model.predict(fmap.x(t.from));
        let x_next = fmap.x(t.to);
        let y = pf_target(x_next, Predecessor::Step { z_prev: &z, e_prev: None }, c.gamma, c.lambda, 0.0)
            .expect("dimensions agree");
        model.update(x_next, &y, c.matrix_rate(*steps));
        w.axpy(c.alpha_v * delta, &z, 1.0);
        *steps += 1;
    }
}

/// One ET(λ, η) episode at constant `β = config.alpha_m`.
///
/// Identical to [`td_pf_episode`] except that the `Ψ` target mixes in the
/// sampled trace `e_t = λγ e_{t-1} + x(S_t)` with weight `config.eta`.
pub fn et_episode(
    w: &mut WeightVector,
    model: &mut PredecessorModel,
    ep: &Episode,
    fmap: &FeatureMap,
    config: &LearnerConfig,
) {
    let mut steps = 0;
    et_episode_scheduled(w, model, ep, fmap, config, &mut steps);
}

fn et_episode_scheduled(
    w: &mut WeightVector,
    model: &mut PredecessorModel,
    ep: &Episode,
    fmap: &FeatureMap,
    c: &LearnerConfig,
    steps: &mut u64,
) {
    let x0 = fmap.x(ep.initial);
    let mut trace = x0.into_owned();
    let y = pf_target(x0, Predecessor::Initial, c.gamma, c.lambda, c.eta).expect("initial target");
    model.update(x0, &y, c.matrix_rate(*steps));
    for t in &ep.steps {
        let delta = td_error(w, t, fmap, c.gamma);
        let z = model.predict(fmap.x(t.from));
        let x_next = fmap.x(t.to);
        let prev = Predecessor::Step { z_prev: &z, e_prev: Some(&trace) };
        let y = pf_target(x_next, prev, c.gamma, c.lambda, c.eta).expect("dimensions agree");
        model.update(x_next, &y, c.matrix_rate(*steps));
        w.axpy(c.alpha_v * delta, &z, 1.0);
        trace *= c.trace_decay();
        trace += x_next;
        *steps += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceTarget {
    /// TD-PF: fully bootstrapped.
    Bootstrapped,
    /// ET(λ, η) with `η = config.eta`.
    Mixed,
}

/// Linear learner driven by a learned expected trace.
#[derive(Debug, Clone)]
pub struct ExpectedTraceLearner {
    w: WeightVector,
    model: PredecessorModel,
    fmap: FeatureMap,
    terminal: Vec<bool>,
    config: LearnerConfig,
    target: TraceTarget,
    steps: u64,
}

impl ExpectedTraceLearner {
    pub fn new(fmap: FeatureMap, terminal: Vec<bool>, config: LearnerConfig, target: TraceTarget) -> Self {
        let d = fmap.dim();
        ExpectedTraceLearner {
            w: DVector::zeros(d),
            model: PredecessorModel::new(d, config.m_init),
            fmap,
            terminal,
            config,
            target,
            steps: 0,
        }
    }

    pub fn td_pf(fmap: FeatureMap, terminal: Vec<bool>, config: LearnerConfig) -> Self {
        Self::new(fmap, terminal, config, TraceTarget::Bootstrapped)
    }

    pub fn et(fmap: FeatureMap, terminal: Vec<bool>, config: LearnerConfig) -> Self {
        Self::new(fmap, terminal, config, TraceTarget::Mixed)
    }

    pub fn learn_episode(&mut self, ep: &Episode) {
        let (w, model, fmap, c) = (&mut self.w, &mut self.model, &self.fmap, &self.config);
        match self.target {
            TraceTarget::Bootstrapped => td_pf_episode_scheduled(w, model, ep, fmap, c, &mut self.steps),
            TraceTarget::Mixed => et_episode_scheduled(w, model, ep, fmap, c, &mut self.steps),
        }
    }

    pub fn weights(&self) -> &WeightVector {
        &self.w
    }

    pub fn model(&self) -> &PredecessorModel {
        &self.model
    }

    pub fn values(&self) -> ValueVector {
        state_values(&self.w, &self.fmap, &self.terminal)
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.model.psi.iter()).all(|x| x.is_finite())
    }
}
