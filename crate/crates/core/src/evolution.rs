//! Reproduction and mutation applied at every generation boundary.
//!
//! Draw order per offspring: the two tournament draws, a tie coin only when
//! the drawn rewards are equal, then the mutation draws of [`mutate`].

use crate::error::{Error, Result};
use crate::model::{AgentState, PayoffParams, Reward, Strategy, LAMBDA_MAX, LAMBDA_MIN};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationParams {
    mu: f64,
}

impl MutationParams {
    pub fn new(mu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&mu) {
            Ok(MutationParams { mu })
        } else {
            Err(Error::InvalidParams(format!(
                "mutation rate {mu} violates 0 <= mu <= 1"
            )))
        }
    }

    pub fn mu(self) -> f64 {
        self.mu
    }
}

/// Two distinct uniform picks from `0..len`.
pub(crate) fn draw_pair(len: usize, rng: &mut impl RandomSource) -> (usize, usize) {
    debug_assert!(len >= 2);
    let a = rng.below(len);
    let mut b = rng.below(len - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// The contestant with strictly greater reward wins; equal rewards flip a coin.
pub(crate) fn duel(
    a: (usize, Reward),
    b: (usize, Reward),
    cb: f64,
    rng: &mut impl RandomSource,
) -> usize {
    let (va, vb) = (a.1.value(cb), b.1.value(cb));
    if va > vb {
        a.0
    } else if vb > va {
        b.0
    } else if rng.below(2) == 0 {
        a.0
    } else {
        b.0
    }
}

/// Index of the winner of one tournament over the whole population.
pub fn binary_tournament_mixed(
    agents: &[AgentState],
    p: PayoffParams,
    rng: &mut impl RandomSource,
) -> usize {
    assert!(agents.len() >= 2, "tournament needs two agents");
    let (a, b) = draw_pair(agents.len(), rng);
    duel((a, agents[a].reward), (b, agents[b].reward), p.cb(), rng)
}

/// Copy of the parent's heritable state with the reward cleared.
pub(crate) fn offspring_of(parent: &AgentState) -> AgentState {
    AgentState::new(parent.strategy, parent.lambda)
}

/// `N` independent tournaments; each winner contributes one mutated offspring.
pub fn reproduce_mixed(
    agents: &[AgentState],
    p: PayoffParams,
    m: MutationParams,
    rng: &mut impl RandomSource,
) -> Vec<AgentState> {
    (0..agents.len())
        .map(|_| {
            let parent = binary_tournament_mixed(agents, p, rng);
            mutate(offspring_of(&agents[parent]), m, rng)
        })
        .collect()
}

/// Independent type reset and λ perturbation, each with probability `mu`.
///
/// Draws: `unit` for the type event (then a coin if it fires), `unit` for
/// the λ event (then a standard normal if it fires).
pub fn mutate(
    mut offspring: AgentState,
    m: MutationParams,
    rng: &mut impl RandomSource,
) -> AgentState {
    if rng.unit() < m.mu {
        offspring.strategy = if rng.below(2) == 0 {
            Strategy::Cooperator
        } else {
            Strategy::Defector
        };
    }
    if rng.unit() < m.mu {
        offspring.lambda = (offspring.lambda + rng.standard_normal()).clamp(LAMBDA_MIN, LAMBDA_MAX);
    }
    offspring
}
