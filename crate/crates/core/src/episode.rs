use crate::envs::TabularMdp;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{Episode, StateId, Transition};

/// Default guard on episode length, in multiples of the state count.
pub const MAX_LEN_FACTOR: usize = 10;

/// Samples one episode: a start state from the start distribution, then
/// transitions until a terminal state is entered.
///
/// Fails with [`Error::EpisodeTooLong`] after `10 · |S|` transitions.
pub fn generate_episode(mdp: &TabularMdp, rng: &mut RngStream) -> Result<Episode> {
    generate_episode_with_limit(mdp, rng, MAX_LEN_FACTOR * mdp.n_states())
}

pub fn generate_episode_with_limit(
    mdp: &TabularMdp,
    rng: &mut RngStream,
    max_len: usize,
) -> Result<Episode> {
    let initial = rng
        .categorical(mdp.start_dist().as_slice())
        .map(StateId)
        .ok_or_else(|| Error::InvalidModel("start distribution has no mass".into()))?;

    let p = mdp.transitions();
    let mut steps = Vec::new();
    let mut s = initial;
    // Row slices of a column-major matrix are strided; copy into a buffer.
    let mut row = vec![0.0; mdp.n_states()];
    while !mdp.is_terminal(s) {
        if steps.len() == max_len {
            return Err(Error::EpisodeTooLong { limit: max_len });
        }
        for (dst, src) in row.iter_mut().zip(p.row(s.0).iter()) {
            *dst = *src;
        }
        let next = StateId(rng.categorical(&row).expect("non-terminal rows are stochastic"));
        steps.push(Transition {
            from: s,
            to: next,
            reward: mdp.reward(s, next),
            to_is_terminal: mdp.is_terminal(next),
        });
        s = next;
    }
    Ok(Episode { initial, steps })
}

/// `count` consecutive episodes from one stream.
pub fn generate_episodes(mdp: &TabularMdp, rng: &mut RngStream, count: usize) -> Result<Vec<Episode>> {
    generate_episodes_with_limit(mdp, rng, count, MAX_LEN_FACTOR * mdp.n_states())
}

pub fn generate_episodes_with_limit(
    mdp: &TabularMdp,
    rng: &mut RngStream,
    count: usize,
    max_len: usize,
) -> Result<Vec<Episode>> {
    (0..count).map(|_| generate_episode_with_limit(mdp, rng, max_len)).collect()
}

/// Probability that a single episode trips the length guard used by the
/// experiment harness and the Monte Carlo oracles.
pub const EPISODE_TAIL: f64 = 1e-12;

/// Hard cap on [`tail_horizon`], in multiples of the state count.
pub const MAX_TAIL_FACTOR: usize = 10_000;

/// Smallest length guard, never below `10 · |S|`, such that an episode
/// outlives it with probability below `tail`.
///
/// Random walks routinely run past `10 · |S|`; this keeps the guard for
/// chains that never terminate while not tripping on legitimate long
/// episodes. Chains that do not terminate get the `10_000 · |S|` cap.
pub fn tail_horizon(mdp: &TabularMdp, tail: f64) -> usize {
    let n = mdp.n_states();
    let pt = mdp.transitions().transpose();
    let alive = |d: &nalgebra::DVector<f64>| {
        d.iter().zip(mdp.terminal_mask()).filter(|(_, &term)| !term).map(|(x, _)| x).sum::<f64>()
    };
    let mut d = mdp.start_dist().clone();
    let mut t = 0;
    while alive(&d) >= tail && t < MAX_TAIL_FACTOR * n {
        d = &pt * &d;
        t += 1;
    }
    t.max(MAX_LEN_FACTOR * n)
}
