//! Temporal-difference learners that assign credit through learned
//! predecessor models, plus exact oracles for the tabular environments they
//! run on.
//!
//! - [`tabular`]: TD(λ) and TD with a learned predecessor representation
//!   (TD-PR).
//! - [`linear`]: TD with learned predecessor features (TD-PF) and the
//!   expected-trace family ET(λ, η).
//! - [`oracle`]: true values, successor matrices, expected traces.
//! - [`harness`]: seeded experiments, sweeps, CSV and SVG output.

pub mod envs;
pub mod episode;
pub mod error;
pub mod harness;
pub mod linear;
pub mod oracle;
pub mod rng;
pub mod tabular;
pub mod types;

pub use envs::{chain_mdp, plinko_mdp, FeatureMap, TabularMdp};
pub use episode::generate_episode;
pub use error::{Error, Result};
pub use linear::{ExpectedTraceLearner, PredecessorModel};
pub use oracle::{expected_trace, successor_matrix, true_values, SrConvention, SrMatrix, ValueVector};
pub use rng::{make_rng, RngStream};
pub use tabular::{TdLambda, TdPr, TraceVector};
pub use types::{
    CreditMode, Episode, LearnerConfig, MatrixInit, RateSchedule, SrDiscountMode, StateId, Transition,
};
