//! Square-lattice population.
//!
//! Each cell searches only its von Neumann neighbourhood for a partner.
//! Play follows the well-mixed cycle (random cell order, immediate reward
//! updates). Reproduction is synchronous: every offspring's parent is chosen
//! by a tournament among the old grid's cells around it, visiting cells in
//! row-major order.

use arrayvec::ArrayVec;

use crate::config::{SimConfig, Topology, MIN_LATTICE_SIDE};
use crate::error::{Error, Result};
use crate::evolution::{draw_pair, duel, mutate, offspring_of, MutationParams};
use crate::metrics::{
    coop_components, within_cluster_fraction, GenerationRecord, InteractionTally,
};
use crate::mixed::{attempt_interaction, init_agents, random_order, select_partner};
use crate::model::{AgentState, PayoffParams, Reward, Strategy};
use crate::rng::{RandomSource, RngStream};

pub type Position = (usize, usize);

/// Flat indices of the up, down, left and right neighbours of `cell`,
/// wrapped on a torus and clipped otherwise. Duplicates are dropped.
pub fn neighbor_indices(cell: usize, rows: usize, cols: usize, torus: bool) -> ArrayVec<usize, 4> {
    let (r, c) = (cell / cols, cell % cols);
    let mut out = ArrayVec::new();
    let mut push = |rr: Option<usize>, cc: Option<usize>| {
        if let (Some(rr), Some(cc)) = (rr, cc) {
            let idx = rr * cols + cc;
            if idx != cell && !out.contains(&idx) {
                out.push(idx);
            }
        }
    };
    let step = |v: usize, len: usize, forward: bool| -> Option<usize> {
        match (forward, torus) {
            (true, _) if v + 1 < len => Some(v + 1),
            (true, true) => Some(0),
            (false, _) if v > 0 => Some(v - 1),
            (false, true) => Some(len - 1),
            _ => None,
        }
    };
    push(step(r, rows, false), Some(c));
    push(step(r, rows, true), Some(c));
    push(Some(r), step(c, cols, false));
    push(Some(r), step(c, cols, true));
    out
}

/// Neighbourhood of `pos` as `(row, col)` pairs, in up/down/left/right order.
pub fn neighbors(pos: Position, rows: usize, cols: usize, torus: bool) -> Vec<Position> {
    assert!(
        pos.0 < rows && pos.1 < cols,
        "{pos:?} outside {rows}x{cols}"
    );
    neighbor_indices(pos.0 * cols + pos.1, rows, cols, torus)
        .into_iter()
        .map(|k| (k / cols, k % cols))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGrid {
    rows: usize,
    cols: usize,
    cells: Vec<AgentState>,
}

impl LatticeGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<AgentState>) -> Result<Self> {
        if rows < MIN_LATTICE_SIDE || cols < MIN_LATTICE_SIDE {
            return Err(Error::InvalidParams(format!(
                "{rows}x{cols} grid; both sides must be >= {MIN_LATTICE_SIDE}"
            )));
        }
        if cells.len() != rows * cols {
            return Err(Error::InvalidParams(format!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        Ok(LatticeGrid { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major cells.
    pub fn cells(&self) -> &[AgentState] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [AgentState] {
        &mut self.cells
    }

    pub fn get(&self, pos: Position) -> &AgentState {
        &self.cells[self.index(pos)]
    }

    pub fn index(&self, pos: Position) -> usize {
        assert!(pos.0 < self.rows && pos.1 < self.cols);
        pos.0 * self.cols + pos.1
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        self.cells.iter().map(|a| a.strategy).collect()
    }

    pub fn reset_rewards(&mut self) {
        self.cells.iter_mut().for_each(|a| a.reward = Reward::ZERO);
    }

    /// One line of `C`/`D` per row.
    pub fn snapshot(&self) -> String {
        render_snapshot(self.cols, self.cells.iter().map(|a| a.strategy))
    }

    fn neighbor_table(&self, torus: bool) -> Vec<ArrayVec<usize, 4>> {
        (0..self.cells.len())
            .map(|k| neighbor_indices(k, self.rows, self.cols, torus))
            .collect()
    }
}

/// Row-major strategies as `C`/`D` lines joined by `\n`, no trailing newline.
pub fn render_snapshot(cols: usize, strategies: impl IntoIterator<Item = Strategy>) -> String {
    let chars: Vec<char> = strategies.into_iter().map(Strategy::as_char).collect();
    chars
        .chunks(cols.max(1))
        .map(|row| row.iter().collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`render_snapshot`]: `(rows, cols, strategies)`.
pub fn parse_snapshot(text: &str) -> Result<(usize, usize, Vec<Strategy>)> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    let cols = lines.first().map(|l| l.chars().count()).unwrap_or(0);
    if cols == 0 {
        return Err(Error::Snapshot("empty snapshot".into()));
    }
    let mut out = Vec::with_capacity(lines.len() * cols);
    for (r, line) in lines.iter().enumerate() {
        if line.chars().count() != cols {
            return Err(Error::Snapshot(format!(
                "row {r} has length {} != {cols}",
                line.len()
            )));
        }
        for ch in line.chars() {
            out.push(
                Strategy::from_char(ch).ok_or_else(|| {
                    Error::Snapshot(format!("row {r}: unexpected character {ch:?}"))
                })?,
            );
        }
    }
    Ok((lines.len(), cols, out))
}

/// Parameters fixed for the whole lattice run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeRules {
    pub payoffs: PayoffParams,
    pub mutation: MutationParams,
    pub torus: bool,
    pub reproduction_includes_self: bool,
}

impl LatticeRules {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        Ok(LatticeRules {
            payoffs: PayoffParams::new(cfg.cb)?,
            mutation: MutationParams::new(cfg.mu)?,
            torus: cfg.torus,
            reproduction_includes_self: cfg.reproduction_includes_self,
        })
    }
}

pub fn init_grid(cfg: &SimConfig, rng: &mut impl RandomSource) -> Result<LatticeGrid> {
    cfg.validate()?;
    let Topology::Lattice { rows, cols } = cfg.topology else {
        return Err(Error::config("model", "expected model = \"lattice\""));
    };
    let cells = init_agents(
        rows * cols,
        cfg.init_coop_frac,
        cfg.lambda_init_lo,
        cfg.lambda_init_hi,
        rng,
    );
    LatticeGrid::new(rows, cols, cells)
}

/// Play phase on the lattice. Draw order: cell permutation, then per
/// initiator a tie-break draw when needed and the play draw.
pub fn run_generation_lattice(
    grid: &mut LatticeGrid,
    rules: &LatticeRules,
    generation: usize,
    rng: &mut impl RandomSource,
) -> GenerationRecord {
    debug_assert!(grid.cells.iter().all(|a| a.reward.is_zero()));
    let table = grid.neighbor_table(rules.torus);
    let mut tally = InteractionTally::default();
    let mut played = Vec::with_capacity(grid.cells.len());
    for i in random_order(grid.cells.len(), rng) {
        let j = select_partner(i, &table[i], &grid.cells, rules.payoffs, rng);
        if attempt_interaction(i, j, &mut grid.cells, rules.payoffs, rng, &mut tally) {
            played.push((i, j));
        }
    }
    let components = coop_components(grid.rows, grid.cols, &grid.strategies(), rules.torus);
    let mut record = GenerationRecord::observe(generation, &grid.cells, tally);
    record.largest_coop_cluster = Some(components.largest());
    record.frac_within_cluster = within_cluster_fraction(&played, &components);
    record
}

/// Parent of the offspring at `cell`: the better of two distinct cells drawn
/// from the neighbourhood (plus `cell` itself when configured).
pub fn local_binary_tournament(
    cell: usize,
    grid: &LatticeGrid,
    rules: &LatticeRules,
    rng: &mut impl RandomSource,
) -> usize {
    let mut pool: ArrayVec<usize, 5> = neighbor_indices(cell, grid.rows, grid.cols, rules.torus)
        .into_iter()
        .collect();
    if rules.reproduction_includes_self {
        pool.push(cell);
    }
    let (a, b) = draw_pair(pool.len(), rng);
    let (a, b) = (pool[a], pool[b]);
    duel(
        (a, grid.cells[a].reward),
        (b, grid.cells[b].reward),
        rules.payoffs.cb(),
        rng,
    )
}

/// Synchronous replacement: parents are read from `grid` only.
pub fn step_lattice_evolution(
    grid: &LatticeGrid,
    rules: &LatticeRules,
    rng: &mut impl RandomSource,
) -> LatticeGrid {
    let cells = (0..grid.cells.len())
        .map(|cell| {
            let parent = local_binary_tournament(cell, grid, rules, rng);
            mutate(offspring_of(&grid.cells[parent]), rules.mutation, rng)
        })
        .collect();
    LatticeGrid {
        rows: grid.rows,
        cols: grid.cols,
        cells,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub generation: usize,
    pub text: String,
    pub largest_coop_cluster: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeRun {
    pub records: Vec<GenerationRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Stepper for a lattice run.
#[derive(Clone, Debug)]
pub struct LatticeSimulation<R = RngStream> {
    grid: LatticeGrid,
    rules: LatticeRules,
    generation: usize,
    rng: R,
}

impl LatticeSimulation<RngStream> {
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self> {
        Self::with_rng(cfg, RngStream::from_seed(seed))
    }
}

impl<R: RandomSource> LatticeSimulation<R> {
    pub fn with_rng(cfg: &SimConfig, mut rng: R) -> Result<Self> {
        let grid = init_grid(cfg, &mut rng)?;
        Ok(LatticeSimulation {
            grid,
            rules: LatticeRules::from_config(cfg)?,
            generation: 0,
            rng,
        })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    /// Plays one generation and replaces the grid with its offspring. The
    /// returned grid is the one that played, rewards included.
    pub fn step(&mut self) -> (GenerationRecord, LatticeGrid) {
        self.grid.reset_rewards();
        let record =
            run_generation_lattice(&mut self.grid, &self.rules, self.generation, &mut self.rng);
        let next = step_lattice_evolution(&self.grid, &self.rules, &mut self.rng);
        self.generation += 1;
        (record, std::mem::replace(&mut self.grid, next))
    }
}

pub fn run_simulation_lattice(cfg: &SimConfig, seed: u64) -> Result<LatticeRun> {
    let mut sim = LatticeSimulation::new(cfg, seed)?;
    let mut records = Vec::with_capacity(cfg.gmax);
    let mut snapshots = Vec::new();
    for g in 0..cfg.gmax {
        let (record, played) = sim.step();
        if cfg.snapshot_every.is_some_and(|every| g % every == 0) {
            snapshots.push(Snapshot {
                generation: g,
                text: played.snapshot(),
                largest_coop_cluster: record.largest_coop_cluster.unwrap_or(0),
            });
        }
        records.push(record);
    }
    Ok(LatticeRun { records, snapshots })
}
