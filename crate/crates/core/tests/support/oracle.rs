//! Brute-force reference for one generation, written straight from the model
//! description and the draw protocol. Nothing here calls into the library
//! except the `RandomSource` trait and the conversions at the bottom.

use inequity_core::{AgentState, RandomSource, Reward, Strategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agent {
    pub coop: bool,
    pub lambda: f64,
    /// Reward is `units + cb_units * c/b`.
    pub units: u64,
    pub cb_units: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Games {
    pub cc: u64,
    pub cd: u64,
    pub dd: u64,
    pub declined: u64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// Population at the end of play, rewards included.
    pub played: Vec<Agent>,
    pub games: Games,
    /// Pairs that actually played, initiator first.
    pub pairs: Vec<(usize, usize)>,
    pub next: Vec<Agent>,
}

fn gap(a: &Agent, b: &Agent, cb: f64) -> f64 {
    let du = a.units as i64 - b.units as i64;
    let dc = a.cb_units as i64 - b.cb_units as i64;
    (du as f64 + dc as f64 * cb).abs()
}

fn fitness(a: &Agent, cb: f64) -> f64 {
    a.units as f64 + a.cb_units as f64 * cb
}

pub fn initial(
    count: usize,
    frac: f64,
    lo: f64,
    hi: f64,
    rng: &mut impl RandomSource,
) -> Vec<Agent> {
    let k = (frac * count as f64).round() as usize;
    let mut slots: Vec<usize> = (0..count).collect();
    for t in 0..k {
        let j = t + rng.below(count - t);
        slots.swap(t, j);
    }
    let mut out = Vec::new();
    for idx in 0..count {
        let coop = slots[..k].contains(&idx);
        let lambda = (lo + rng.unit() * (hi - lo)).min(hi);
        out.push(Agent {
            coop,
            lambda,
            units: 0,
            cb_units: 0,
        });
    }
    out
}

fn shuffled(n: usize, rng: &mut impl RandomSource) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    let mut k = n;
    while k > 1 {
        k -= 1;
        let j = rng.below(k + 1);
        v.swap(k, j);
    }
    v
}

// Floyd's sampler over the list of everyone except `i`.
fn candidates(i: usize, n: usize, ns: usize, rng: &mut impl RandomSource) -> Vec<usize> {
    let others: Vec<usize> = (0..n).filter(|&x| x != i).collect();
    let m = others.len();
    let mut picked: Vec<usize> = Vec::new();
    for j in m - ns..m {
        let t = rng.below(j + 1);
        if picked.contains(&t) {
            picked.push(j);
        } else {
            picked.push(t);
        }
    }
    picked.into_iter().map(|s| others[s]).collect()
}

fn choose(
    i: usize,
    cands: &[usize],
    agents: &[Agent],
    cb: f64,
    rng: &mut impl RandomSource,
) -> usize {
    let me = agents[i];
    let tied: Vec<usize> = if me.lambda == 0.0 {
        cands.to_vec()
    } else {
        let closest = cands
            .iter()
            .map(|&j| gap(&me, &agents[j], cb))
            .fold(f64::INFINITY, f64::min);
        cands
            .iter()
            .copied()
            .filter(|&j| gap(&me, &agents[j], cb) == closest)
            .collect()
    };
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.below(tied.len())]
    }
}

fn play(
    i: usize,
    j: usize,
    agents: &mut [Agent],
    cb: f64,
    rng: &mut impl RandomSource,
    games: &mut Games,
) -> bool {
    let p = (-(agents[i].lambda + agents[j].lambda) * gap(&agents[i], &agents[j], cb)).exp();
    if rng.unit() >= p {
        games.declined += 1;
        return false;
    }
    match (agents[i].coop, agents[j].coop) {
        (true, true) => {
            agents[i].units += 1;
            agents[j].units += 1;
            games.cc += 1;
        }
        (true, false) => {
            agents[j].units += 1;
            agents[j].cb_units += 1;
            games.cd += 1;
        }
        (false, true) => {
            agents[i].units += 1;
            agents[i].cb_units += 1;
            games.cd += 1;
        }
        (false, false) => {
            agents[i].cb_units += 1;
            agents[j].cb_units += 1;
            games.dd += 1;
        }
    }
    true
}

fn tournament(pool: &[usize], agents: &[Agent], cb: f64, rng: &mut impl RandomSource) -> usize {
    let a = rng.below(pool.len());
    let mut b = rng.below(pool.len() - 1);
    if b >= a {
        b += 1;
    }
    let (x, y) = (pool[a], pool[b]);
    let (fx, fy) = (fitness(&agents[x], cb), fitness(&agents[y], cb));
    if fx > fy {
        x
    } else if fy > fx {
        y
    } else if rng.below(2) == 0 {
        x
    } else {
        y
    }
}

fn child_of(parent: &Agent, mu: f64, rng: &mut impl RandomSource) -> Agent {
    let mut child = Agent {
        coop: parent.coop,
        lambda: parent.lambda,
        units: 0,
        cb_units: 0,
    };
    if rng.unit() < mu {
        child.coop = rng.below(2) == 0;
    }
    if rng.unit() < mu {
        child.lambda = (child.lambda + rng.standard_normal()).clamp(0.0, 5.0);
    }
    child
}

fn cleared(agents: &[Agent]) -> Vec<Agent> {
    agents
        .iter()
        .map(|a| Agent {
            units: 0,
            cb_units: 0,
            ..*a
        })
        .collect()
}

pub fn mixed_generation(
    agents: &[Agent],
    ns: usize,
    cb: f64,
    mu: f64,
    rng: &mut impl RandomSource,
) -> Outcome {
    let mut pop = cleared(agents);
    let n = pop.len();
    let mut games = Games::default();
    let mut pairs = Vec::new();
    for i in shuffled(n, rng) {
        let c = candidates(i, n, ns, rng);
        let j = choose(i, &c, &pop, cb, rng);
        if play(i, j, &mut pop, cb, rng, &mut games) {
            pairs.push((i, j));
        }
    }
    let everyone: Vec<usize> = (0..n).collect();
    let mut next = Vec::new();
    for _ in 0..n {
        let p = tournament(&everyone, &pop, cb, rng);
        next.push(child_of(&pop[p], mu, rng));
    }
    Outcome {
        played: pop,
        games,
        pairs,
        next,
    }
}

/// Up, down, left, right on a torus.
pub fn torus_neighbours(cell: usize, rows: usize, cols: usize) -> [usize; 4] {
    let (r, c) = (cell / cols, cell % cols);
    [
        ((r + rows - 1) % rows) * cols + c,
        ((r + 1) % rows) * cols + c,
        r * cols + (c + cols - 1) % cols,
        r * cols + (c + 1) % cols,
    ]
}

/// Torus lattice, reproduction pool includes the focal cell.
pub fn lattice_generation(
    agents: &[Agent],
    rows: usize,
    cols: usize,
    cb: f64,
    mu: f64,
    rng: &mut impl RandomSource,
) -> Outcome {
    let mut pop = cleared(agents);
    let n = rows * cols;
    let mut games = Games::default();
    let mut pairs = Vec::new();
    for i in shuffled(n, rng) {
        let j = choose(i, &torus_neighbours(i, rows, cols), &pop, cb, rng);
        if play(i, j, &mut pop, cb, rng, &mut games) {
            pairs.push((i, j));
        }
    }
    let mut next = Vec::new();
    for cell in 0..n {
        let mut pool = torus_neighbours(cell, rows, cols).to_vec();
        pool.push(cell);
        let p = tournament(&pool, &pop, cb, rng);
        next.push(child_of(&pop[p], mu, rng));
    }
    Outcome {
        played: pop,
        games,
        pairs,
        next,
    }
}

/// Cluster label per cell by repeated min-label relaxation; defectors get `None`.
pub fn cluster_labels(coop: &[bool], rows: usize, cols: usize) -> Vec<Option<usize>> {
    let mut label: Vec<Option<usize>> = (0..coop.len()).map(|i| coop[i].then_some(i)).collect();
    loop {
        let mut changed = false;
        for i in 0..coop.len() {
            let Some(mine) = label[i] else { continue };
            for j in torus_neighbours(i, rows, cols) {
                if let Some(theirs) = label[j] {
                    if theirs < mine {
                        label[i] = Some(theirs);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

pub fn to_agent(s: &AgentState) -> Agent {
    Agent {
        coop: s.strategy == Strategy::Cooperator,
        lambda: s.lambda,
        units: s.reward.units,
        cb_units: s.reward.cb_units,
    }
}

pub fn to_state(a: &Agent) -> AgentState {
    let strategy = if a.coop {
        Strategy::Cooperator
    } else {
        Strategy::Defector
    };
    AgentState::new(strategy, a.lambda).with_reward(Reward::new(a.units, a.cb_units))
}
