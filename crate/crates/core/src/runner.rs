//! Sweep expansion, replicate execution and CSV artifacts.
//!
//! Output is a pure function of the [`SweepSpec`]: runs are seeded from
//! `(master_seed, cell, run)` and results are collected in canonical order,
//! so the thread count never changes a byte of output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Model, SimConfig, SweepSpec, Topology};
use crate::error::{Error, Result};
use crate::lattice::{run_simulation_lattice, Snapshot};
use crate::metrics::GenerationRecord;
use crate::mixed::run_simulation_mixed;
use crate::rng::derive_seed;

pub const TIMESERIES_HEADER: &str = "run,generation,f_c,mean_lambda_coop,mean_lambda_all,games_cc,games_cd,games_dd,games_declined,largest_coop_cluster,frac_within_cluster,payoff_classes";
pub const SWEEP_HEADER: &str =
    "model,n,rows,cols,ns,cb,mu,runs,gens,burn_in,mean_f_c,std_f_c,mean_lambda_coop";
pub const SNAPSHOT_INDEX_HEADER: &str = "generation,largest_coop_cluster";

/// Name of the aggregation statistic recorded in sweep metadata.
pub const AGGREGATION: &str = "time-mean";

/// One simulation of an expanded sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub cell: usize,
    pub run: usize,
    /// Carries the derived seed in `config.seed`.
    pub config: SimConfig,
}

/// Parameter cells in canonical order: sorted by `(n, ns, cb, mu)` for mixed
/// sweeps and `(rows, cols, cb, mu)` for lattice sweeps, duplicates removed.
pub fn sweep_cells(spec: &SweepSpec) -> Result<Vec<(Topology, f64, f64)>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for topology in spec.topologies() {
        for &cb in &spec.cb {
            for &mu in &spec.mu {
                cells.push((topology, cb, mu));
            }
        }
    }
    let key = |t: &Topology| match *t {
        Topology::Mixed { n, ns } => (n, ns),
        Topology::Lattice { rows, cols } => (rows, cols),
    };
    cells.sort_by(|a, b| {
        key(&a.0)
            .cmp(&key(&b.0))
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    cells.dedup_by(|a, b| {
        a.0 == b.0 && a.1.to_bits() == b.1.to_bits() && a.2.to_bits() == b.2.to_bits()
    });
    Ok(cells)
}

/// Every (cell, run) pair with its derived seed, cells outer and runs inner.
pub fn expand_sweep(spec: &SweepSpec) -> Result<Vec<RunPlan>> {
    let cells = sweep_cells(spec)?;
    let mut plans = Vec::with_capacity(cells.len() * spec.runs_per_cell);
    for (cell, &(topology, cb, mu)) in cells.iter().enumerate() {
        for run in 0..spec.runs_per_cell {
            let seed = derive_seed(spec.master_seed, cell as u64, run as u64);
            plans.push(RunPlan {
                cell,
                run,
                config: spec.cell_config(topology, cb, mu, seed),
            });
        }
    }
    Ok(plans)
}

/// Records and snapshots of a single run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<GenerationRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Runs `cfg` from `cfg.seed` with the engine its model selects.
pub fn simulate(cfg: &SimConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.model() {
        Model::Mixed => Ok(RunOutput {
            records: run_simulation_mixed(cfg, cfg.seed)?,
            snapshots: Vec::new(),
        }),
        Model::Lattice => {
            let run = run_simulation_lattice(cfg, cfg.seed)?;
            Ok(RunOutput {
                records: run.records,
                snapshots: run.snapshots,
            })
        }
    }
}

/// Time statistics of one run over generations `burn_in..`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub mean_f_c: f64,
    /// Population standard deviation over the window.
    pub std_f_c: f64,
    /// Mean over window generations that had cooperators.
    pub mean_lambda_coop: Option<f64>,
}

pub fn aggregate(records: &[GenerationRecord], burn_in: usize) -> Result<RunSummary> {
    if burn_in >= records.len() {
        return Err(Error::EmptyWindow {
            burn_in,
            len: records.len(),
        });
    }
    let window = &records[burn_in..];
    let f_c: Vec<f64> = window.iter().map(|r| r.f_c).collect();
    let (mean_f_c, std_f_c) = mean_and_std(&f_c);
    let lambdas: Vec<f64> = window.iter().filter_map(|r| r.mean_lambda_coop).collect();
    Ok(RunSummary {
        mean_f_c,
        std_f_c,
        mean_lambda_coop: (!lambdas.is_empty()).then(|| mean_and_std(&lambdas).0),
    })
}

/// Mean and population standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate of one parameter cell across its runs.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub topology: Topology,
    pub cb: f64,
    pub mu: f64,
    pub runs: usize,
    pub gens: usize,
    pub burn_in: usize,
    /// Mean across runs of each run's time-mean.
    pub mean_f_c: f64,
    /// Standard deviation across runs of the same time-means.
    pub std_f_c: f64,
    pub mean_lambda_coop: Option<f64>,
}

/// Runs every plan of the spec and aggregates per cell without writing files.
pub fn sweep_rows(spec: &SweepSpec, parallelism: usize) -> Result<Vec<SweepRow>> {
    execute(spec, parallelism, None)
}

/// Runs the sweep and writes `sweep.csv`, `sweep.toml` and one timeseries
/// per run under `runs/` inside `out`, which must exist.
pub fn run_experiment(spec: &SweepSpec, parallelism: usize, out: &Path) -> Result<Vec<SweepRow>> {
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let rows = execute(spec, parallelism, Some(&runs_dir))?;
    write_file(&out.join("sweep.csv"), &sweep_csv(spec.model, &rows))?;
    let meta = format!("{}\n# statistic per run over generations [burn_in, gmax)\naggregation = \"{AGGREGATION}\"\n", spec.to_toml());
    write_file(&out.join("sweep.toml"), &meta)?;
    Ok(rows)
}

fn execute(spec: &SweepSpec, parallelism: usize, runs_dir: Option<&Path>) -> Result<Vec<SweepRow>> {
    if parallelism < 1 {
        return Err(Error::config("parallelism", "parallelism must be >= 1"));
    }
    let plans = expand_sweep(spec)?;
    let burn_in = spec.burn_in();
    if burn_in >= spec.gmax {
        return Err(Error::EmptyWindow {
            burn_in,
            len: spec.gmax,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let summaries: Vec<RunSummary> = pool.install(|| {
        plans
            .par_iter()
            .map(|plan| {
                let output = simulate(&plan.config)?;
                if let Some(dir) = runs_dir {
                    let path = dir.join(timeseries_file_name(plan.cell, plan.run));
                    write_file(&path, &timeseries_csv(plan.run, &output.records))?;
                }
                aggregate(&output.records, burn_in)
            })
            .collect::<Result<_>>()
    })?;

    let runs = spec.runs_per_cell;
    Ok(plans
        .chunks(runs)
        .zip(summaries.chunks(runs))
        .map(|(cell_plans, cell_summaries)| {
            let cfg = &cell_plans[0].config;
            let means: Vec<f64> = cell_summaries.iter().map(|s| s.mean_f_c).collect();
            let (mean_f_c, std_f_c) = mean_and_std(&means);
            let lambdas: Vec<f64> = cell_summaries
                .iter()
                .filter_map(|s| s.mean_lambda_coop)
                .collect();
            SweepRow {
                topology: cfg.topology,
                cb: cfg.cb,
                mu: cfg.mu,
                runs,
                gens: spec.gmax,
                burn_in,
                mean_f_c,
                std_f_c,
                mean_lambda_coop: (!lambdas.is_empty()).then(|| mean_and_std(&lambdas).0),
            }
        })
        .collect())
}

pub fn timeseries_file_name(cell: usize, run: usize) -> String {
    format!("run_{cell}_{run}.csv")
}

pub fn snapshot_file_name(generation: usize) -> String {
    format!("gen_{generation:05}.txt")
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt_f(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn fmt_opt_u(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn timeseries_csv(run: usize, records: &[GenerationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{run},{},{},{},{},{},{},{},{},{},{},{}",
            r.generation,
            fmt_f(r.f_c),
            fmt_opt_f(r.mean_lambda_coop),
            fmt_f(r.mean_lambda_all),
            r.tally.cc,
            r.tally.cd,
            r.tally.dd,
            r.tally.declined,
            fmt_opt_u(r.largest_coop_cluster),
            fmt_opt_f(r.frac_within_cluster),
            r.payoff_classes,
        );
    }
    out
}

/// Lattice rows report `n = rows·cols` and leave `ns` empty; mixed rows
/// leave `rows` and `cols` empty.
pub fn sweep_csv(model: Model, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let (n, r, c, ns) = match row.topology {
            Topology::Mixed { n, ns } => {
                (n.to_string(), String::new(), String::new(), ns.to_string())
            }
            Topology::Lattice { rows, cols } => (
                (rows * cols).to_string(),
                rows.to_string(),
                cols.to_string(),
                String::new(),
            ),
        };
        let _ = writeln!(
            out,
            "{},{n},{r},{c},{ns},{},{},{},{},{},{},{},{}",
            model.as_str(),
            fmt_f(row.cb),
            fmt_f(row.mu),
            row.runs,
            row.gens,
            row.burn_in,
            fmt_f(row.mean_f_c),
            fmt_f(row.std_f_c),
            fmt_opt_f(row.mean_lambda_coop),
        );
    }
    out
}

pub fn snapshot_index_csv(snapshots: &[Snapshot]) -> String {
    let mut out = String::from(SNAPSHOT_INDEX_HEADER);
    out.push('\n');
    for s in snapshots {
        let _ = writeln!(out, "{},{}", s.generation, s.largest_coop_cluster);
    }
    out
}

/// Writes the artifacts of a single run into `out`, which must exist:
/// `config.toml` (resolved config), `run_0_0.csv`, and for lattice runs with
/// snapshots enabled `snapshots/gen_NNNNN.txt` plus `snapshots/clusters.csv`.
pub fn write_run(cfg: &SimConfig, out: &Path) -> Result<RunOutput> {
    let output = simulate(cfg)?;
    write_file(&out.join("config.toml"), &cfg.to_toml())?;
    write_file(
        &out.join(timeseries_file_name(0, 0)),
        &timeseries_csv(0, &output.records),
    )?;
    if cfg.snapshot_every.is_some() && cfg.model() == Model::Lattice {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for s in &output.snapshots {
            write_file(
                &dir.join(snapshot_file_name(s.generation)),
                &format!("{}\n", s.text),
            )?;
        }
        write_file(
            &dir.join("clusters.csv"),
            &snapshot_index_csv(&output.snapshots),
        )?;
    }
    Ok(output)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::InteractionTally;

    fn record(generation: usize, f_c: f64, lambda: Option<f64>) -> GenerationRecord {
        GenerationRecord {
            generation,
            f_c,
            mean_lambda_coop: lambda,
            mean_lambda_all: 1.0,
            tally: InteractionTally::default(),
            largest_coop_cluster: None,
            frac_within_cluster: None,
            payoff_classes: 1,
        }
    }

    #[test]
    fn aggregate_constant() {
        let recs: Vec<_> = (0..10).map(|g| record(g, 0.8, Some(2.0))).collect();
        let s = aggregate(&recs, 3).unwrap();
        assert!((s.mean_f_c - 0.8).abs() < 1e-12);
        assert!(s.std_f_c.abs() < 1e-12);
        assert_eq!(s.mean_lambda_coop, Some(2.0));
    }

    #[test]
    fn aggregate_alternating() {
        let recs: Vec<_> = (0..10).map(|g| record(g, (g % 2) as f64, None)).collect();
        let s = aggregate(&recs, 2).unwrap();
        assert_eq!(s.mean_f_c, 0.5);
        assert_eq!(s.mean_lambda_coop, None);
    }

    #[test]
    fn aggregate_population_std() {
        let recs = vec![
            record(0, 0.0, None),
            record(1, 0.2, Some(1.0)),
            record(2, 0.4, None),
            record(3, 0.9, Some(3.0)),
        ];
        let s = aggregate(&recs, 1).unwrap();
        assert!((s.mean_f_c - 0.5).abs() < 1e-12);
        assert!((s.std_f_c - (0.26f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.std_f_c - 0.2944).abs() < 1e-4);
        assert_eq!(s.mean_lambda_coop, Some(2.0));
    }

    #[test]
    fn aggregate_empty_window() {
        let recs: Vec<_> = (0..3).map(|g| record(g, 0.1, None)).collect();
        assert!(matches!(
            aggregate(&recs, 3),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn expansion_counts_and_order() {
        let spec = SweepSpec::mixed(vec![150], vec![12, 6, 10, 8], vec![0.45, 0.3], 20, 10);
        let plans = expand_sweep(&spec).unwrap();
        assert_eq!(plans.len(), 160);
        assert_eq!(plans, expand_sweep(&spec).unwrap());
        let first = &plans[0].config;
        assert_eq!(
            (first.topology, first.cb),
            (Topology::Mixed { n: 150, ns: 6 }, 0.3)
        );
        assert!(plans
            .windows(2)
            .all(|w| (w[0].cell, w[0].run) < (w[1].cell, w[1].run)));
        let seeds: std::collections::HashSet<_> = plans.iter().map(|p| p.config.seed).collect();
        assert_eq!(seeds.len(), 160);

        let single = SweepSpec::mixed(vec![10], vec![3], vec![0.3], 1, 10);
        assert_eq!(expand_sweep(&single).unwrap().len(), 1);
    }

    #[test]
    fn expansion_rejects_invalid_cells() {
        let spec = SweepSpec::mixed(vec![8], vec![8], vec![0.3], 1, 10);
        assert!(expand_sweep(&spec).is_err());
        let spec = SweepSpec::mixed(vec![8], vec![3], vec![1.3], 1, 10);
        assert!(expand_sweep(&spec).is_err());
    }

    #[test]
    fn all_cooperators_without_mutation() {
        let mut spec = SweepSpec::mixed(vec![10, 20], vec![3], vec![0.3, 0.6], 3, 1);
        spec.mu = vec![0.0];
        spec.init_coop_frac = 1.0;
        spec.burn_in_frac = 0.0;
        let rows = sweep_rows(&spec, 2).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows
            .iter()
            .all(|r| r.mean_f_c == 1.0 && r.std_f_c == 0.0 && r.runs == 3));
    }

    #[test]
    fn heatmap_grid_has_one_row_per_pair() {
        let spec = SweepSpec::mixed(vec![20, 30], vec![2, 4, 6], vec![0.4], 1, 3);
        let rows = sweep_rows(&spec, 1).unwrap();
        let pairs: Vec<_> = rows.iter().map(|r| r.topology).collect();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs[0], Topology::Mixed { n: 20, ns: 2 });
        assert_eq!(pairs[5], Topology::Mixed { n: 30, ns: 6 });
    }

    #[test]
    fn csv_layout() {
        let mut r = record(4, 0.25, None);
        r.tally.cc = 3;
        r.largest_coop_cluster = Some(7);
        r.frac_within_cluster = Some(0.5);
        let text = timeseries_csv(2, &[r]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
        assert_eq!(
            lines.next(),
            Some("2,4,0.250000,,1.000000,3,0,0,0,7,0.500000,1")
        );

        let row = SweepRow {
            topology: Topology::Lattice { rows: 12, cols: 12 },
            cb: 0.45,
            mu: 0.1,
            runs: 10,
            gens: 2000,
            burn_in: 1000,
            mean_f_c: 0.75,
            std_f_c: 0.01,
            mean_lambda_coop: Some(3.5),
        };
        let text = sweep_csv(Model::Lattice, &[row]);
        assert_eq!(
            text.lines().nth(1),
            Some("lattice,144,12,12,,0.450000,0.100000,10,2000,1000,0.750000,0.010000,3.500000")
        );
    }

    #[test]
    fn zero_parallelism_is_rejected() {
        let spec = SweepSpec::mixed(vec![10], vec![3], vec![0.3], 1, 3);
        assert!(sweep_rows(&spec, 0).is_err());
    }
}
