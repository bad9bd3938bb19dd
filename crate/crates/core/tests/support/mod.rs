#![allow(dead_code)]

pub mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};

use inequity_core::evolution::{reproduce_mixed, MutationParams};
use inequity_core::lattice::{
    init_grid, run_generation_lattice, step_lattice_evolution, LatticeRules,
};
use inequity_core::mixed::{init_population, run_generation_mixed, Population};
use inequity_core::rng::{Recorder, Replay};
use inequity_core::{AgentState, GenerationRecord, PayoffParams, RngStream, SimConfig, Topology};

use oracle::{Agent, Games, Outcome};

struct Step {
    played: Vec<AgentState>,
    record: GenerationRecord,
    next: Vec<AgentState>,
}

fn same(lib: &[AgentState], reference: &[Agent]) -> bool {
    lib.len() == reference.len()
        && lib
            .iter()
            .map(oracle::to_agent)
            .eq(reference.iter().copied())
}

fn check_common(gen: usize, lib: &Step, out: &Outcome) -> Result<(), String> {
    if !same(&lib.played, &out.played) {
        return Err(format!("generation {gen}: played states differ"));
    }
    let t = lib.record.tally;
    let games = Games {
        cc: t.cc,
        cd: t.cd,
        dd: t.dd,
        declined: t.declined,
    };
    if games != out.games {
        return Err(format!(
            "generation {gen}: tally {games:?} vs reference {:?}",
            out.games
        ));
    }
    let coop: Vec<&Agent> = out.played.iter().filter(|a| a.coop).collect();
    let f_c = coop.len() as f64 / out.played.len() as f64;
    if lib.record.f_c != f_c {
        return Err(format!("generation {gen}: f_c {} vs {f_c}", lib.record.f_c));
    }
    let lam =
        (!coop.is_empty()).then(|| coop.iter().map(|a| a.lambda).sum::<f64>() / coop.len() as f64);
    match (lib.record.mean_lambda_coop, lam) {
        (None, None) => {}
        (Some(a), Some(b)) if (a - b).abs() < 1e-12 => {}
        (a, b) => {
            return Err(format!(
                "generation {gen}: mean λ of cooperators {a:?} vs {b:?}"
            ))
        }
    }
    if !same(&lib.next, &out.next) {
        return Err(format!("generation {gen}: offspring differ"));
    }
    Ok(())
}

fn replay_guard<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("reference diverged from the transcript: {msg}"))
    })
}

/// Runs `gens` well-mixed generations from `seed` while recording every
/// draw, then replays the transcript through the reference and compares
/// states after play and after reproduction.
pub fn mixed_matches_oracle(cfg: &SimConfig, seed: u64, gens: usize) -> Result<(), String> {
    let Topology::Mixed { ns, .. } = cfg.topology else {
        panic!("mixed config expected");
    };
    let p = PayoffParams::new(cfg.cb).unwrap();
    let m = MutationParams::new(cfg.mu).unwrap();
    let mut rec = Recorder::new(RngStream::from_seed(seed));
    let mut pop = init_population(cfg, &mut rec).unwrap();
    let init = pop.agents().to_vec();
    let mut steps = Vec::new();
    for g in 0..gens {
        pop.reset_rewards();
        let record = run_generation_mixed(&mut pop, ns, p, g, &mut rec);
        let played = pop.agents().to_vec();
        let next = reproduce_mixed(&played, p, m, &mut rec);
        pop = Population::new(next.clone()).unwrap();
        steps.push(Step {
            played,
            record,
            next,
        });
    }

    replay_guard(|| {
        let mut replay = Replay::new(rec.into_transcript());
        let n = cfg.topology.population();
        let mut agents = oracle::initial(
            n,
            cfg.init_coop_frac,
            cfg.lambda_init_lo,
            cfg.lambda_init_hi,
            &mut replay,
        );
        if !same(&init, &agents) {
            return Err("initial populations differ".into());
        }
        for (g, lib) in steps.iter().enumerate() {
            let out = oracle::mixed_generation(&agents, ns, cfg.cb, cfg.mu, &mut replay);
            check_common(g, lib, &out)?;
            agents = out.next;
        }
        if replay.remaining() != 0 {
            return Err(format!(
                "{} draws left unused by the reference",
                replay.remaining()
            ));
        }
        Ok(())
    })
}

/// Lattice counterpart of [`mixed_matches_oracle`]; `cfg` must describe a
/// torus with self-inclusive reproduction.
pub fn lattice_matches_oracle(cfg: &SimConfig, seed: u64, gens: usize) -> Result<(), String> {
    let Topology::Lattice { rows, cols } = cfg.topology else {
        panic!("lattice config expected");
    };
    assert!(cfg.torus && cfg.reproduction_includes_self);
    let rules = LatticeRules::from_config(cfg).unwrap();
    let mut rec = Recorder::new(RngStream::from_seed(seed));
    let mut grid = init_grid(cfg, &mut rec).unwrap();
    let init = grid.cells().to_vec();
    let mut steps = Vec::new();
    for g in 0..gens {
        grid.reset_rewards();
        let record = run_generation_lattice(&mut grid, &rules, g, &mut rec);
        let next = step_lattice_evolution(&grid, &rules, &mut rec);
        steps.push(Step {
            played: grid.cells().to_vec(),
            record,
            next: next.cells().to_vec(),
        });
        grid = next;
    }

    replay_guard(|| {
        let mut replay = Replay::new(rec.into_transcript());
        let mut agents = oracle::initial(
            rows * cols,
            cfg.init_coop_frac,
            cfg.lambda_init_lo,
            cfg.lambda_init_hi,
            &mut replay,
        );
        if !same(&init, &agents) {
            return Err("initial grids differ".into());
        }
        for (g, lib) in steps.iter().enumerate() {
            let out = oracle::lattice_generation(&agents, rows, cols, cfg.cb, cfg.mu, &mut replay);
            check_common(g, lib, &out)?;

            let coop: Vec<bool> = out.played.iter().map(|a| a.coop).collect();
            let labels = oracle::cluster_labels(&coop, rows, cols);
            let largest = (0..labels.len())
                .map(|k| {
                    labels
                        .iter()
                        .filter(|&&l| l.is_some() && l == labels[k])
                        .count()
                })
                .max()
                .unwrap_or(0);
            if lib.record.largest_coop_cluster != Some(largest) {
                return Err(format!(
                    "generation {g}: largest cluster {:?} vs {largest}",
                    lib.record.largest_coop_cluster
                ));
            }
            let within = out
                .pairs
                .iter()
                .filter(|&&(a, b)| labels[a].is_some() && labels[a] == labels[b])
                .count();
            let f_g = (!out.pairs.is_empty()).then(|| within as f64 / out.pairs.len() as f64);
            if lib.record.frac_within_cluster != f_g {
                return Err(format!(
                    "generation {g}: within-cluster fraction {:?} vs {f_g:?}",
                    lib.record.frac_within_cluster
                ));
            }
            agents = out.next;
        }
        if replay.remaining() != 0 {
            return Err(format!(
                "{} draws left unused by the reference",
                replay.remaining()
            ));
        }
        Ok(())
    })
}

/// Every file under `root`, keyed by relative path.
pub fn tree(root: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(
        dir: &std::path::Path,
        root: &std::path::Path,
        out: &mut std::collections::BTreeMap<String, Vec<u8>>,
    ) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let key = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}
