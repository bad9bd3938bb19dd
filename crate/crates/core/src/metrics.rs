//! Per-generation observables.

use std::collections::{HashSet, VecDeque};

use crate::lattice::neighbor_indices;
use crate::model::{AgentState, Reward, Strategy};

/// Outcome counts of the interaction attempts in one generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InteractionTally {
    pub cc: u64,
    pub cd: u64,
    pub dd: u64,
    pub declined: u64,
}

impl InteractionTally {
    pub fn record_game(&mut self, a: Strategy, b: Strategy) {
        match (a, b) {
            (Strategy::Cooperator, Strategy::Cooperator) => self.cc += 1,
            (Strategy::Defector, Strategy::Defector) => self.dd += 1,
            _ => self.cd += 1,
        }
    }

    pub fn record_declined(&mut self) {
        self.declined += 1;
    }

    pub fn played(&self) -> u64 {
        self.cc + self.cd + self.dd
    }

    pub fn attempts(&self) -> u64 {
        self.played() + self.declined
    }

    /// Total reward value the played games put into the population.
    pub fn reward_created(&self, cb: f64) -> f64 {
        2.0 * self.cc as f64 + (1.0 + cb) * self.cd as f64 + 2.0 * cb * self.dd as f64
    }

    /// Same total as an exact `(units, cb_units)` pair.
    pub fn reward_created_exact(&self) -> Reward {
        Reward::new(2 * self.cc + self.cd, self.cd + 2 * self.dd)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub f_c: f64,
    pub mean_lambda_coop: Option<f64>,
    pub mean_lambda_all: f64,
    pub tally: InteractionTally,
    /// Lattice only.
    pub largest_coop_cluster: Option<usize>,
    /// Lattice only; absent when no game was played.
    pub frac_within_cluster: Option<f64>,
    pub payoff_classes: usize,
}

impl GenerationRecord {
    /// Population-level fields for `agents` after their play phase.
    pub fn observe(generation: usize, agents: &[AgentState], tally: InteractionTally) -> Self {
        GenerationRecord {
            generation,
            f_c: fraction_cooperators(agents),
            mean_lambda_coop: mean_lambda_cooperators(agents),
            mean_lambda_all: mean_lambda_all(agents),
            tally,
            largest_coop_cluster: None,
            frac_within_cluster: None,
            payoff_classes: payoff_classes(agents),
        }
    }
}

pub fn cooperator_count(agents: &[AgentState]) -> usize {
    agents.iter().filter(|a| a.strategy.is_cooperator()).count()
}

pub fn fraction_cooperators(agents: &[AgentState]) -> f64 {
    assert!(!agents.is_empty(), "empty population");
    cooperator_count(agents) as f64 / agents.len() as f64
}

pub fn mean_lambda_cooperators(agents: &[AgentState]) -> Option<f64> {
    let (sum, count) = agents
        .iter()
        .filter(|a| a.strategy.is_cooperator())
        .fold((0.0, 0usize), |(s, c), a| (s + a.lambda, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn mean_lambda_all(agents: &[AgentState]) -> f64 {
    agents.iter().map(|a| a.lambda).sum::<f64>() / agents.len() as f64
}

/// Number of distinct exact reward pairs.
pub fn payoff_classes(agents: &[AgentState]) -> usize {
    agents
        .iter()
        .map(|a| a.reward)
        .collect::<HashSet<_>>()
        .len()
}

/// Connected components of cooperator cells under von Neumann adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabels {
    /// Component id per cell, `None` for defectors.
    pub labels: Vec<Option<usize>>,
    /// Size of each component, indexed by id.
    pub sizes: Vec<usize>,
}

impl ClusterLabels {
    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        matches!((self.labels[a], self.labels[b]), (Some(x), Some(y)) if x == y)
    }
}

/// Flood-fill labeling of a row-major strategy grid. Component ids are
/// assigned in order of each component's first cell.
pub fn coop_components(
    rows: usize,
    cols: usize,
    strategies: &[Strategy],
    torus: bool,
) -> ClusterLabels {
    assert_eq!(strategies.len(), rows * cols);
    let mut labels = vec![None; strategies.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..strategies.len() {
        if labels[start].is_some() || !strategies[start].is_cooperator() {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        labels[start] = Some(id);
        queue.push_back(start);
        while let Some(cell) = queue.pop_front() {
            size += 1;
            for next in neighbor_indices(cell, rows, cols, torus) {
                if labels[next].is_none() && strategies[next].is_cooperator() {
                    labels[next] = Some(id);
                    queue.push_back(next);
                }
            }
        }
        sizes.push(size);
    }
    ClusterLabels { labels, sizes }
}

pub fn largest_coop_cluster(
    rows: usize,
    cols: usize,
    strategies: &[Strategy],
    torus: bool,
) -> usize {
    coop_components(rows, cols, strategies, torus).largest()
}

/// Share of played games whose endpoints are cooperators in the same cluster.
pub fn within_cluster_fraction(
    played: &[(usize, usize)],
    components: &ClusterLabels,
) -> Option<f64> {
    if played.is_empty() {
        return None;
    }
    let within = played
        .iter()
        .filter(|&&(a, b)| components.same_component(a, b))
        .count();
    Some(within as f64 / played.len() as f64)
}
