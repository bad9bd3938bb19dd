//! Run and sweep configuration.
//!
//! Both are read from TOML documents whose keys mirror the struct fields.
//! Unknown keys are rejected so a misspelled parameter cannot silently fall
//! back to its default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LAMBDA_MAX, LAMBDA_MIN};

pub const DEFAULT_MU: f64 = 0.1;
pub const DEFAULT_INIT_COOP_FRAC: f64 = 0.1;
pub const DEFAULT_BURN_IN_FRAC: f64 = 1.0 / 3.0;
pub const MIN_LATTICE_SIDE: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Mixed,
    Lattice,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Mixed => "mixed",
            Model::Lattice => "lattice",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Every agent may be sampled as a candidate partner of every other.
    Mixed { n: usize, ns: usize },
    /// Square lattice with a von Neumann search neighbourhood.
    Lattice { rows: usize, cols: usize },
}

impl Topology {
    pub fn model(self) -> Model {
        match self {
            Topology::Mixed { .. } => Model::Mixed,
            Topology::Lattice { .. } => Model::Lattice,
        }
    }

    pub fn population(self) -> usize {
        match self {
            Topology::Mixed { n, .. } => n,
            Topology::Lattice { rows, cols } => rows * cols,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub cb: f64,
    pub mu: f64,
    pub gmax: usize,
    pub init_coop_frac: f64,
    pub lambda_init_lo: f64,
    pub lambda_init_hi: f64,
    /// Lattice only: wrap the grid edges.
    pub torus: bool,
    /// Lattice only: the focal cell competes in its own reproduction tournament.
    pub reproduction_includes_self: bool,
    pub burn_in_frac: f64,
    pub snapshot_every: Option<usize>,
    pub seed: u64,
}

impl SimConfig {
    /// Well-mixed configuration with default evolutionary parameters.
    pub fn mixed(n: usize, ns: usize, cb: f64, gmax: usize) -> Self {
        Self::with_topology(Topology::Mixed { n, ns }, cb, gmax)
    }

    /// Lattice configuration with default evolutionary parameters.
    pub fn lattice(rows: usize, cols: usize, cb: f64, gmax: usize) -> Self {
        Self::with_topology(Topology::Lattice { rows, cols }, cb, gmax)
    }

    fn with_topology(topology: Topology, cb: f64, gmax: usize) -> Self {
        SimConfig {
            topology,
            cb,
            mu: DEFAULT_MU,
            gmax,
            init_coop_frac: DEFAULT_INIT_COOP_FRAC,
            lambda_init_lo: LAMBDA_MIN,
            lambda_init_hi: LAMBDA_MAX,
            torus: true,
            reproduction_includes_self: true,
            burn_in_frac: DEFAULT_BURN_IN_FRAC,
            snapshot_every: None,
            seed: 0,
        }
    }

    pub fn model(&self) -> Model {
        self.topology.model()
    }

    pub fn population(&self) -> usize {
        self.topology.population()
    }

    /// First generation inside the aggregation window.
    pub fn burn_in(&self) -> usize {
        burn_in_generations(self.burn_in_frac, self.gmax)
    }

    pub fn validate(&self) -> Result<()> {
        match self.topology {
            Topology::Mixed { n, ns } => {
                if n < 2 {
                    return Err(Error::config("n", format!("n = {n} violates n >= 2")));
                }
                if ns < 1 || ns > n - 1 {
                    return Err(Error::config(
                        "ns",
                        format!("ns = {ns} violates 1 <= ns <= n - 1 = {}", n - 1),
                    ));
                }
            }
            Topology::Lattice { rows, cols } => {
                for (field, v) in [("rows", rows), ("cols", cols)] {
                    if v < MIN_LATTICE_SIDE {
                        return Err(Error::config(
                            field,
                            format!("{field} = {v} violates {field} >= {MIN_LATTICE_SIDE}"),
                        ));
                    }
                }
            }
        }
        validate_shared(
            self.cb,
            self.mu,
            self.gmax,
            self.init_coop_frac,
            self.lambda_init_lo,
            self.lambda_init_hi,
            self.burn_in_frac,
        )?;
        if self.snapshot_every == Some(0) {
            return Err(Error::config(
                "snapshot_every",
                "snapshot_every must be >= 1",
            ));
        }
        Ok(())
    }

    /// Parses and validates a run document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: RunDocument = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.resolve()
    }

    /// Serializes every field, defaults included, in the input format.
    pub fn to_toml(&self) -> String {
        let (n, ns, rows, cols) = match self.topology {
            Topology::Mixed { n, ns } => (Some(n), Some(ns), None, None),
            Topology::Lattice { rows, cols } => (None, None, Some(rows), Some(cols)),
        };
        let doc = RunDocument {
            model: self.model(),
            n,
            ns,
            rows,
            cols,
            cb: self.cb,
            mu: Some(self.mu),
            gmax: self.gmax,
            init_coop_frac: Some(self.init_coop_frac),
            lambda_init_lo: Some(self.lambda_init_lo),
            lambda_init_hi: Some(self.lambda_init_hi),
            torus: Some(self.torus),
            reproduction_includes_self: Some(self.reproduction_includes_self),
            burn_in_frac: Some(self.burn_in_frac),
            snapshot_every: self.snapshot_every,
            seed: Some(self.seed),
        };
        toml::to_string(&doc).expect("run document always serializes")
    }
}

pub(crate) fn burn_in_generations(burn_in_frac: f64, gmax: usize) -> usize {
    // Absorb rounding in products such as (1/3)·15000.
    (burn_in_frac * gmax as f64 - 1e-9).ceil().max(0.0) as usize
}

fn validate_shared(
    cb: f64,
    mu: f64,
    gmax: usize,
    init_coop_frac: f64,
    lo: f64,
    hi: f64,
    burn_in_frac: f64,
) -> Result<()> {
    if !(cb > 0.0 && cb < 1.0) {
        return Err(Error::config(
            "cb",
            format!("cb = {cb} violates 0 < c/b < 1"),
        ));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::config(
            "mu",
            format!("mu = {mu} violates 0 <= mu <= 1"),
        ));
    }
    if gmax < 1 {
        return Err(Error::config("gmax", "gmax must be >= 1"));
    }
    if !(0.0..=1.0).contains(&init_coop_frac) {
        return Err(Error::config(
            "init_coop_frac",
            format!("init_coop_frac = {init_coop_frac} violates 0 <= init_coop_frac <= 1"),
        ));
    }
    if !(LAMBDA_MIN <= lo && lo <= hi && hi <= LAMBDA_MAX) {
        let field = if (LAMBDA_MIN..=LAMBDA_MAX).contains(&lo) {
            "lambda_init_hi"
        } else {
            "lambda_init_lo"
        };
        return Err(Error::config(
            field,
            format!("[{lo}, {hi}] violates 0 <= lambda_init_lo <= lambda_init_hi <= 5"),
        ));
    }
    if !(0.0..1.0).contains(&burn_in_frac) {
        return Err(Error::config(
            "burn_in_frac",
            format!("burn_in_frac = {burn_in_frac} violates 0 <= burn_in_frac < 1"),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDocument {
    model: Model,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ns: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    cb: f64,
    mu: Option<f64>,
    gmax: usize,
    init_coop_frac: Option<f64>,
    lambda_init_lo: Option<f64>,
    lambda_init_hi: Option<f64>,
    torus: Option<bool>,
    reproduction_includes_self: Option<bool>,
    burn_in_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_every: Option<usize>,
    seed: Option<u64>,
}

fn require<T>(value: Option<T>, field: &str, model: Model) -> Result<T> {
    value.ok_or_else(|| {
        Error::config(
            field,
            format!("required for model = \"{}\"", model.as_str()),
        )
    })
}

fn forbid<T>(value: &Option<T>, field: &str, model: Model) -> Result<()> {
    match value {
        Some(_) => Err(Error::config(
            field,
            format!("not used by model = \"{}\"", model.as_str()),
        )),
        None => Ok(()),
    }
}

fn topology_of(
    model: Model,
    n: Option<usize>,
    ns: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
) -> Result<Topology> {
    Ok(match model {
        Model::Mixed => {
            forbid(&rows, "rows", model)?;
            forbid(&cols, "cols", model)?;
            Topology::Mixed {
                n: require(n, "n", model)?,
                ns: require(ns, "ns", model)?,
            }
        }
        Model::Lattice => {
            forbid(&n, "n", model)?;
            forbid(&ns, "ns", model)?;
            Topology::Lattice {
                rows: require(rows, "rows", model)?,
                cols: require(cols, "cols", model)?,
            }
        }
    })
}

impl RunDocument {
    fn resolve(self) -> Result<SimConfig> {
        let topology = topology_of(self.model, self.n, self.ns, self.rows, self.cols)?;
        let cfg = SimConfig {
            topology,
            cb: self.cb,
            mu: self.mu.unwrap_or(DEFAULT_MU),
            gmax: self.gmax,
            init_coop_frac: self.init_coop_frac.unwrap_or(DEFAULT_INIT_COOP_FRAC),
            lambda_init_lo: self.lambda_init_lo.unwrap_or(LAMBDA_MIN),
            lambda_init_hi: self.lambda_init_hi.unwrap_or(LAMBDA_MAX),
            torus: self.torus.unwrap_or(true),
            reproduction_includes_self: self.reproduction_includes_self.unwrap_or(true),
            burn_in_frac: self.burn_in_frac.unwrap_or(DEFAULT_BURN_IN_FRAC),
            snapshot_every: self.snapshot_every,
            seed: self.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Cross product of parameter lists, each cell run `runs_per_cell` times.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub model: Model,
    /// Mixed only.
    pub n: Vec<usize>,
    /// Mixed only.
    pub ns: Vec<usize>,
    /// Lattice only.
    pub rows: Vec<usize>,
    /// Lattice only.
    pub cols: Vec<usize>,
    pub cb: Vec<f64>,
    pub mu: Vec<f64>,
    pub runs_per_cell: usize,
    pub gmax: usize,
    pub burn_in_frac: f64,
    pub master_seed: u64,
    pub init_coop_frac: f64,
    pub lambda_init_lo: f64,
    pub lambda_init_hi: f64,
    pub torus: bool,
    pub reproduction_includes_self: bool,
}

impl SweepSpec {
    pub fn mixed(
        n: Vec<usize>,
        ns: Vec<usize>,
        cb: Vec<f64>,
        runs_per_cell: usize,
        gmax: usize,
    ) -> Self {
        SweepSpec {
            model: Model::Mixed,
            n,
            ns,
            rows: Vec::new(),
            cols: Vec::new(),
            ..Self::base(cb, runs_per_cell, gmax)
        }
    }

    pub fn lattice(
        rows: Vec<usize>,
        cols: Vec<usize>,
        cb: Vec<f64>,
        runs_per_cell: usize,
        gmax: usize,
    ) -> Self {
        SweepSpec {
            model: Model::Lattice,
            rows,
            cols,
            ..Self::base(cb, runs_per_cell, gmax)
        }
    }

    fn base(cb: Vec<f64>, runs_per_cell: usize, gmax: usize) -> Self {
        SweepSpec {
            model: Model::Mixed,
            n: Vec::new(),
            ns: Vec::new(),
            rows: Vec::new(),
            cols: Vec::new(),
            cb,
            mu: vec![DEFAULT_MU],
            runs_per_cell,
            gmax,
            burn_in_frac: DEFAULT_BURN_IN_FRAC,
            master_seed: 0,
            init_coop_frac: DEFAULT_INIT_COOP_FRAC,
            lambda_init_lo: LAMBDA_MIN,
            lambda_init_hi: LAMBDA_MAX,
            torus: true,
            reproduction_includes_self: true,
        }
    }

    pub fn burn_in(&self) -> usize {
        burn_in_generations(self.burn_in_frac, self.gmax)
    }

    /// Every distinct topology named by the spec, unsorted.
    pub(crate) fn topologies(&self) -> Vec<Topology> {
        let mut out = Vec::new();
        match self.model {
            Model::Mixed => {
                for &n in &self.n {
                    for &ns in &self.ns {
                        out.push(Topology::Mixed { n, ns });
                    }
                }
            }
            Model::Lattice => {
                for &rows in &self.rows {
                    for &cols in &self.cols {
                        out.push(Topology::Lattice { rows, cols });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_cell < 1 {
            return Err(Error::config("runs_per_cell", "runs_per_cell must be >= 1"));
        }
        let lists: &[(&str, bool)] = match self.model {
            Model::Mixed => &[
                ("n", self.n.is_empty()),
                ("ns", self.ns.is_empty()),
                ("cb", self.cb.is_empty()),
                ("mu", self.mu.is_empty()),
            ],
            Model::Lattice => &[
                ("rows", self.rows.is_empty()),
                ("cols", self.cols.is_empty()),
                ("cb", self.cb.is_empty()),
                ("mu", self.mu.is_empty()),
            ],
        };
        for &(field, empty) in lists {
            if empty {
                return Err(Error::config(field, "list must not be empty"));
            }
        }
        let (unused, field): (bool, &str) = match self.model {
            Model::Mixed => (!self.rows.is_empty() || !self.cols.is_empty(), "rows/cols"),
            Model::Lattice => (!self.n.is_empty() || !self.ns.is_empty(), "n/ns"),
        };
        if unused {
            return Err(Error::config(
                field,
                format!("not used by model = \"{}\"", self.model.as_str()),
            ));
        }
        // Every combination must itself be a valid run.
        for topology in self.topologies() {
            for &cb in &self.cb {
                for &mu in &self.mu {
                    self.cell_config(topology, cb, mu, 0).validate()?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn cell_config(&self, topology: Topology, cb: f64, mu: f64, seed: u64) -> SimConfig {
        SimConfig {
            topology,
            cb,
            mu,
            gmax: self.gmax,
            init_coop_frac: self.init_coop_frac,
            lambda_init_lo: self.lambda_init_lo,
            lambda_init_hi: self.lambda_init_hi,
            torus: self.torus,
            reproduction_includes_self: self.reproduction_includes_self,
            burn_in_frac: self.burn_in_frac,
            snapshot_every: None,
            seed,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: SweepDocument = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.resolve()
    }

    pub fn to_toml(&self) -> String {
        let opt = |v: &Vec<usize>| (!v.is_empty()).then(|| v.clone());
        let doc = SweepDocument {
            model: self.model,
            n: opt(&self.n),
            ns: opt(&self.ns),
            rows: opt(&self.rows),
            cols: opt(&self.cols),
            cb: self.cb.clone(),
            mu: Some(self.mu.clone()),
            runs_per_cell: self.runs_per_cell,
            gmax: self.gmax,
            burn_in_frac: Some(self.burn_in_frac),
            master_seed: Some(self.master_seed),
            init_coop_frac: Some(self.init_coop_frac),
            lambda_init_lo: Some(self.lambda_init_lo),
            lambda_init_hi: Some(self.lambda_init_hi),
            torus: Some(self.torus),
            reproduction_includes_self: Some(self.reproduction_includes_self),
            aggregation: None,
        };
        toml::to_string(&doc).expect("sweep document always serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDocument {
    model: Model,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ns: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<Vec<usize>>,
    cb: Vec<f64>,
    mu: Option<Vec<f64>>,
    runs_per_cell: usize,
    gmax: usize,
    burn_in_frac: Option<f64>,
    master_seed: Option<u64>,
    init_coop_frac: Option<f64>,
    lambda_init_lo: Option<f64>,
    lambda_init_hi: Option<f64>,
    torus: Option<bool>,
    reproduction_includes_self: Option<bool>,
    /// Written into sweep metadata; only the one supported statistic is accepted back.
    #[serde(default, skip_serializing)]
    aggregation: Option<String>,
}

impl SweepDocument {
    fn resolve(self) -> Result<SweepSpec> {
        if let Some(a) = self
            .aggregation
            .as_deref()
            .filter(|&a| a != crate::runner::AGGREGATION)
        {
            return Err(Error::config(
                "aggregation",
                format!(
                    "unsupported aggregation \"{a}\", expected \"{}\"",
                    crate::runner::AGGREGATION
                ),
            ));
        }
        let model = self.model;
        let (n, ns, rows, cols) = match model {
            Model::Mixed => {
                forbid(&self.rows, "rows", model)?;
                forbid(&self.cols, "cols", model)?;
                (
                    require(self.n, "n", model)?,
                    require(self.ns, "ns", model)?,
                    Vec::new(),
                    Vec::new(),
                )
            }
            Model::Lattice => {
                forbid(&self.n, "n", model)?;
                forbid(&self.ns, "ns", model)?;
                (
                    Vec::new(),
                    Vec::new(),
                    require(self.rows, "rows", model)?,
                    require(self.cols, "cols", model)?,
                )
            }
        };
        let spec = SweepSpec {
            model,
            n,
            ns,
            rows,
            cols,
            cb: self.cb,
            mu: self.mu.unwrap_or_else(|| vec![DEFAULT_MU]),
            runs_per_cell: self.runs_per_cell,
            gmax: self.gmax,
            burn_in_frac: self.burn_in_frac.unwrap_or(DEFAULT_BURN_IN_FRAC),
            master_seed: self.master_seed.unwrap_or(0),
            init_coop_frac: self.init_coop_frac.unwrap_or(DEFAULT_INIT_COOP_FRAC),
            lambda_init_lo: self.lambda_init_lo.unwrap_or(LAMBDA_MIN),
            lambda_init_hi: self.lambda_init_hi.unwrap_or(LAMBDA_MAX),
            torus: self.torus.unwrap_or(true),
            reproduction_includes_self: self.reproduction_includes_self.unwrap_or(true),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A parsed document of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigDocument {
    Run(SimConfig),
    Sweep(SweepSpec),
}

/// Parses a run or sweep document; sweeps are recognised by `runs_per_cell`.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    if table.contains_key("runs_per_cell") {
        SweepSpec::from_toml(text).map(ConfigDocument::Sweep)
    } else {
        SimConfig::from_toml(text).map(ConfigDocument::Run)
    }
}
