//! Well-mixed population: any agent can be sampled as anyone's partner.
//!
//! One generation draws a uniform permutation (Fisher–Yates, `below(k + 1)`
//! for `k = N-1 .. 1`), then every agent in that order runs one cycle:
//!
//! 1. `ns` candidate draws ([`sample_candidates`]);
//! 2. a tie-break draw, only when several candidates are equally close;
//! 3. one `unit` draw deciding whether the game is played.
//!
//! Rewards update immediately, so later initiators see earlier games.

use crate::config::{SimConfig, Topology};
use crate::error::{Error, Result};
use crate::evolution::{reproduce_mixed, MutationParams};
use crate::metrics::{GenerationRecord, InteractionTally};
use crate::model::{interaction_probability, payoff, AgentState, PayoffParams, Reward, Strategy};
use crate::rng::{RandomSource, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    agents: Vec<AgentState>,
}

impl Population {
    pub fn new(agents: Vec<AgentState>) -> Result<Self> {
        if agents.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "population of {} agents; at least 2 are required",
                agents.len()
            )));
        }
        Ok(Population { agents })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn into_agents(self) -> Vec<AgentState> {
        self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn reset_rewards(&mut self) {
        self.agents.iter_mut().for_each(|a| a.reward = Reward::ZERO);
    }
}

/// `count` agents with exactly `round(frac·count)` cooperators at uniformly
/// chosen positions and λ uniform on `[lo, hi]`.
///
/// Draws: a partial Fisher–Yates over positions (`below(count - t)` for each
/// cooperator `t`), then one `unit` per agent in index order for λ.
pub(crate) fn init_agents(
    count: usize,
    frac: f64,
    lo: f64,
    hi: f64,
    rng: &mut impl RandomSource,
) -> Vec<AgentState> {
    let cooperators = (frac * count as f64).round() as usize;
    let mut positions: Vec<usize> = (0..count).collect();
    for t in 0..cooperators {
        let j = t + rng.below(count - t);
        positions.swap(t, j);
    }
    let mut strategies = vec![Strategy::Defector; count];
    for &pos in &positions[..cooperators] {
        strategies[pos] = Strategy::Cooperator;
    }
    strategies
        .into_iter()
        .map(|s| AgentState::new(s, (lo + rng.unit() * (hi - lo)).min(hi)))
        .collect()
}

pub fn init_population(cfg: &SimConfig, rng: &mut impl RandomSource) -> Result<Population> {
    cfg.validate()?;
    Population::new(init_agents(
        cfg.population(),
        cfg.init_coop_frac,
        cfg.lambda_init_lo,
        cfg.lambda_init_hi,
        rng,
    ))
}

/// `ns` distinct indices from `0..n` excluding `i`, in draw order.
///
/// Floyd's algorithm over the `n - 1` eligible slots: exactly `ns` draws,
/// `below(j + 1)` for `j = n-1-ns .. n-2`; slots at or above `i` shift up by one.
pub fn sample_candidates(i: usize, n: usize, ns: usize, rng: &mut impl RandomSource) -> Vec<usize> {
    assert!(
        ns >= 1 && ns < n,
        "need 1 <= ns <= n - 1 (ns = {ns}, n = {n})"
    );
    let eligible = n - 1;
    let mut chosen: Vec<usize> = Vec::with_capacity(ns);
    for j in eligible - ns..eligible {
        let t = rng.below(j + 1);
        chosen.push(if chosen.contains(&t) { j } else { t });
    }
    for slot in &mut chosen {
        if *slot >= i {
            *slot += 1;
        }
    }
    chosen
}

/// Candidate `i` most willing to accept: maximal `exp(-λ_i |r_i - r_j|)`.
///
/// For `λ_i > 0` this is the set of candidates at minimal reward distance;
/// for `λ_i = 0` every candidate qualifies. Ties are resolved with one
/// `below(ties)` draw.
pub fn select_partner(
    i: usize,
    candidates: &[usize],
    agents: &[AgentState],
    p: PayoffParams,
    rng: &mut impl RandomSource,
) -> usize {
    assert!(!candidates.is_empty(), "no candidates");
    let focal = &agents[i];
    if focal.lambda == 0.0 {
        return pick(candidates, rng);
    }
    let cb = p.cb();
    let mut best = f64::INFINITY;
    let mut ties: Vec<usize> = Vec::with_capacity(candidates.len());
    for &j in candidates {
        debug_assert_ne!(i, j);
        let d = focal.reward.distance(agents[j].reward, cb);
        if d < best {
            best = d;
            ties.clear();
            ties.push(j);
        } else if d == best {
            ties.push(j);
        }
    }
    pick(&ties, rng)
}

fn pick(options: &[usize], rng: &mut impl RandomSource) -> usize {
    if options.len() == 1 {
        options[0]
    } else {
        options[rng.below(options.len())]
    }
}

/// Plays `i` against `j` with the mutual-consent probability. A declined
/// game is not retried.
pub fn attempt_interaction(
    i: usize,
    j: usize,
    agents: &mut [AgentState],
    p: PayoffParams,
    rng: &mut impl RandomSource,
    tally: &mut InteractionTally,
) -> bool {
    assert_ne!(i, j, "an agent cannot play itself");
    let (a, b) = (&agents[i], &agents[j]);
    let prob = interaction_probability(a.lambda, b.lambda, a.reward, b.reward, p);
    if rng.unit() < prob {
        let (si, sj) = (a.strategy, b.strategy);
        let (di, dj) = payoff(si, sj);
        agents[i].reward += di;
        agents[j].reward += dj;
        tally.record_game(si, sj);
        true
    } else {
        tally.record_declined();
        false
    }
}

/// Uniform permutation of `0..n` by Fisher–Yates.
pub(crate) fn random_order(n: usize, rng: &mut impl RandomSource) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = rng.below(k + 1);
        order.swap(k, j);
    }
    order
}

/// The play phase of one generation. Rewards must be zero on entry and hold
/// the generation's payoffs on return.
pub fn run_generation_mixed(
    pop: &mut Population,
    ns: usize,
    p: PayoffParams,
    generation: usize,
    rng: &mut impl RandomSource,
) -> GenerationRecord {
    debug_assert!(pop.agents.iter().all(|a| a.reward.is_zero()));
    let n = pop.len();
    let mut tally = InteractionTally::default();
    for i in random_order(n, rng) {
        let candidates = sample_candidates(i, n, ns, rng);
        let j = select_partner(i, &candidates, &pop.agents, p, rng);
        attempt_interaction(i, j, &mut pop.agents, p, rng, &mut tally);
    }
    GenerationRecord::observe(generation, &pop.agents, tally)
}

/// Stepper for a well-mixed run.
#[derive(Clone, Debug)]
pub struct MixedSimulation<R = RngStream> {
    pop: Population,
    ns: usize,
    payoffs: PayoffParams,
    mutation: MutationParams,
    generation: usize,
    rng: R,
}

impl MixedSimulation<RngStream> {
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self> {
        Self::with_rng(cfg, RngStream::from_seed(seed))
    }
}

impl<R: RandomSource> MixedSimulation<R> {
    pub fn with_rng(cfg: &SimConfig, mut rng: R) -> Result<Self> {
        let Topology::Mixed { ns, .. } = cfg.topology else {
            return Err(Error::config("model", "expected model = \"mixed\""));
        };
        let pop = init_population(cfg, &mut rng)?;
        Ok(MixedSimulation {
            pop,
            ns,
            payoffs: PayoffParams::new(cfg.cb)?,
            mutation: MutationParams::new(cfg.mu)?,
            generation: 0,
            rng,
        })
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    /// Play one generation, record it, and replace the population with its offspring.
    pub fn step(&mut self) -> GenerationRecord {
        self.pop.reset_rewards();
        let record = run_generation_mixed(
            &mut self.pop,
            self.ns,
            self.payoffs,
            self.generation,
            &mut self.rng,
        );
        let next = reproduce_mixed(&self.pop.agents, self.payoffs, self.mutation, &mut self.rng);
        self.pop = Population { agents: next };
        self.generation += 1;
        record
    }
}

/// Full run of `cfg.gmax` generations from `seed`.
pub fn run_simulation_mixed(cfg: &SimConfig, seed: u64) -> Result<Vec<GenerationRecord>> {
    let mut sim = MixedSimulation::new(cfg, seed)?;
    Ok((0..cfg.gmax).map(|_| sim.step()).collect())
}
