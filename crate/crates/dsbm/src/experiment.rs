//! Experiment recipes: parameter grids, replicated runs, aggregation and
//! output files.
//!
//! Every run is captured as a [`RunRecord`] holding all of its inputs, so it
//! can be replayed bit-exactly. A recipe writes `<recipe>.csv` (aggregated
//! means and standard errors per grid cell, columns fixed by
//! [`Recipe::columns`]), `<recipe>.svg`, `runs.jsonl` and `spec.json` to the
//! output directory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dsbm_core::lsd::{fit_snapshot, lsd_run, LsdConfig};
use dsbm_core::sbm::EmConfig;
use dsbm_core::theory::{
    detectability_threshold, effective_assortativity, lagged_assortativity, optimal_lag, DetectabilityMode,
    Horizon,
};
use dsbm_core::{generate, overlap, ModelParams};

use crate::parallel::with_workers;
use crate::svg::{Figure, PALETTE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Detectability lines over the (xi, eta) plane; no simulation.
    PhaseDiagram,
    /// Single-snapshot inferred assortativity at time t against theory.
    AhatVsXi,
    /// Overlap of the snapshot-t inference with the planted labels at t - tau.
    OverlapVsLag,
    /// Persistences learned by LSD over the (xi, eta) plane at a = 1.
    LearnGrid,
    /// LSD overlaps, lag and corrected assortativity at a = 0.9.
    PerformanceGrid,
    /// LSD on a user-supplied grid.
    Custom,
}

pub const PHASE_COLUMNS: &[&str] = &[
    "xi",
    "eta",
    "mean_degree",
    "static",
    "single_snapshot",
    "lag_corrected",
    "tau_star",
    "delta",
];

pub const AHAT_COLUMNS: &[&str] = &[
    "xi",
    "eta",
    "a",
    "t",
    "runs",
    "failed",
    "ahat_mean",
    "ahat_se",
    "overlap_mean",
    "overlap_se",
    "theory_single",
    "theory_optimal",
    "theory_tau_star",
];

pub const LAG_COLUMNS: &[&str] = &[
    "xi",
    "eta",
    "a",
    "t",
    "tau",
    "runs",
    "failed",
    "overlap_mean",
    "overlap_se",
    "theory_lagged",
    "theory_tau_star",
];

pub const LSD_COLUMNS: &[&str] = &[
    "xi",
    "eta",
    "a",
    "runs",
    "failed",
    "eta_hat_mean",
    "eta_hat_se",
    "xi_hat_mean",
    "xi_hat_se",
    "a_hat_mean",
    "a_hat_se",
    "a_star_hat_mean",
    "a_star_hat_se",
    "tau_hat_mean",
    "tau_hat_se",
    "overlap_raw_mean",
    "overlap_raw_se",
    "overlap_corrected_mean",
    "overlap_corrected_se",
    "gain_mean",
    "gain_se",
    "delta",
    "theory_tau_star",
    "detectable",
];

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::PhaseDiagram => "phase-diagram",
            Recipe::AhatVsXi => "ahat-vs-xi",
            Recipe::OverlapVsLag => "overlap-vs-lag",
            Recipe::LearnGrid => "learn-grid",
            Recipe::PerformanceGrid => "performance-grid",
            Recipe::Custom => "custom",
        }
    }

    /// CSV header of the aggregated output.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Recipe::PhaseDiagram => PHASE_COLUMNS,
            Recipe::AhatVsXi => AHAT_COLUMNS,
            Recipe::OverlapVsLag => LAG_COLUMNS,
            Recipe::LearnGrid | Recipe::PerformanceGrid | Recipe::Custom => LSD_COLUMNS,
        }
    }

    fn uses_time(self) -> bool {
        matches!(self, Recipe::AhatVsXi | Recipe::OverlapVsLag)
    }
}

/// `n` evenly spaced values `0, 1/n, …, (n − 1)/n`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub a: Vec<f64>,
    /// Observation times; used by the single-snapshot recipes only.
    pub t: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub recipe: Recipe,
    pub grid: Grid,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub k: usize,
    pub mean_degree: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub em: EmConfig,
}

pub const DEFAULT_GRID_SIZE: usize = 20;
pub const DEFAULT_REPLICATIONS: usize = 10;

impl ExperimentSpec {
    /// Defaults follow the figure setups: `N = 300`, `c̄ = 10`, `k = 2`;
    /// `T = 40` for the single-snapshot recipes and `T = 50` for LSD.
    pub fn for_recipe(recipe: Recipe, out_dir: impl Into<PathBuf>) -> Self {
        let tenths: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let (grid, n_steps) = match recipe {
            Recipe::PhaseDiagram => (
                Grid {
                    xi: unit_grid(DEFAULT_GRID_SIZE),
                    eta: unit_grid(DEFAULT_GRID_SIZE),
                    a: vec![1.0],
                    t: vec![],
                },
                0,
            ),
            Recipe::AhatVsXi => (
                Grid {
                    xi: tenths,
                    eta: vec![0.75],
                    a: vec![1.0],
                    t: vec![20],
                },
                40,
            ),
            Recipe::OverlapVsLag => (
                Grid {
                    xi: tenths,
                    eta: vec![0.75],
                    a: vec![1.0],
                    t: vec![10],
                },
                40,
            ),
            Recipe::LearnGrid | Recipe::PerformanceGrid => (
                Grid {
                    xi: unit_grid(DEFAULT_GRID_SIZE),
                    eta: unit_grid(DEFAULT_GRID_SIZE),
                    a: vec![if recipe == Recipe::LearnGrid { 1.0 } else { 0.9 }],
                    t: vec![],
                },
                50,
            ),
            Recipe::Custom => (
                Grid {
                    xi: vec![0.5],
                    eta: vec![0.75],
                    a: vec![0.9],
                    t: vec![],
                },
                50,
            ),
        };
        Self {
            recipe,
            grid,
            n_nodes: 300,
            n_steps,
            k: 2,
            mean_degree: 10.0,
            replications: if recipe == Recipe::PhaseDiagram { 1 } else { DEFAULT_REPLICATIONS },
            base_seed: 0,
            out_dir: out_dir.into(),
            em: EmConfig::default(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let g = &self.grid;
        if g.xi.is_empty() || g.eta.is_empty() || (self.recipe != Recipe::PhaseDiagram && g.a.is_empty()) {
            bail!("the parameter grid must not be empty");
        }
        if self.recipe.uses_time() {
            if g.t.is_empty() {
                bail!("recipe {} needs at least one observation time", self.recipe.name());
            }
            if let Some(&t) = g.t.iter().find(|&&t| t > self.n_steps) {
                bail!("observation time {t} exceeds the number of steps {}", self.n_steps);
            }
        }
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        for &v in g.xi.iter().chain(&g.eta).chain(&g.a) {
            if !(0.0..=1.0).contains(&v) {
                bail!("grid value {v} lies outside [0, 1]");
            }
        }
        if self.recipe == Recipe::PhaseDiagram {
            if !(self.mean_degree > 0.0) {
                bail!("mean degree must be positive");
            }
            if g.xi.iter().any(|&x| x >= 1.0) {
                bail!("the asymptotic phase diagram needs xi < 1");
            }
        } else {
            ModelParams::new(self.n_nodes, self.n_steps, self.k, g.a[0], self.mean_degree, g.xi[0], g.eta[0])?;
        }
        Ok(())
    }

    /// Grid cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let times: Vec<Option<usize>> = if self.recipe.uses_time() {
            g.t.iter().map(|&t| Some(t)).collect()
        } else {
            vec![None]
        };
        let assorts: Vec<f64> = if self.recipe == Recipe::PhaseDiagram { vec![1.0] } else { g.a.clone() };
        let mut cells = Vec::new();
        for &a in &assorts {
            for &t in &times {
                for &eta in &g.eta {
                    for &xi in &g.xi {
                        cells.push(Cell { xi, eta, a, t });
                    }
                }
            }
        }
        cells
    }

    pub fn sizes(&self) -> Sizes {
        Sizes {
            n_nodes: self.n_nodes,
            n_steps: self.n_steps,
            k: self.k,
            mean_degree: self.mean_degree,
        }
    }
}

/// Network sizes shared by every cell of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sizes {
    pub n_nodes: usize,
    pub n_steps: usize,
    pub k: usize,
    pub mean_degree: f64,
}

/// Model parameters of one cell. The phase diagram needs only the mean degree
/// and the persistences.
pub fn cell_params(recipe: Recipe, cell: &Cell, sizes: &Sizes) -> dsbm_core::Result<ModelParams> {
    if recipe == Recipe::PhaseDiagram {
        return ModelParams::new(sizes.n_nodes.max(1000), 0, sizes.k, cell.a, sizes.mean_degree, cell.xi, cell.eta);
    }
    ModelParams::new(sizes.n_nodes, sizes.n_steps, sizes.k, cell.a, sizes.mean_degree, cell.xi, cell.eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub xi: f64,
    pub eta: f64,
    pub a: f64,
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutputs {
    Thresholds {
        static_line: f64,
        single_snapshot: f64,
        lag_corrected: f64,
        tau_star: usize,
        delta: f64,
    },
    Snapshot {
        a_star: Option<f64>,
        converged: bool,
        overlap: f64,
    },
    LagOverlaps {
        /// `overlaps[τ] = q(y^t, g^{t−τ})`.
        overlaps: Vec<f64>,
    },
    Lsd {
        eta_hat: f64,
        xi_hat: f64,
        tau_star_hat: usize,
        a_star_hat: f64,
        a_hat: f64,
        /// Mean `q(y^t, g^t)` over the validity window.
        overlap_raw: f64,
        /// Mean `q(ĝ^t, g^t)` over the validity window.
        overlap_corrected: f64,
        failed_snapshots: usize,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub recipe: Recipe,
    pub cell: Cell,
    pub sizes: Sizes,
    pub seed: u64,
    pub em: EmConfig,
    pub outputs: RunOutputs,
    pub wall_clock_secs: f64,
}

/// Runs one replication. Deterministic in its arguments.
pub fn execute(recipe: Recipe, cell: &Cell, sizes: &Sizes, seed: u64, em: &EmConfig) -> RunOutputs {
    let result = cell_params(recipe, cell, sizes).and_then(|params| try_execute(recipe, cell, &params, seed, em));
    match result {
        Ok(out) => out,
        Err(e) => RunOutputs::Failed { error: e.to_string() },
    }
}

fn try_execute(
    recipe: Recipe,
    cell: &Cell,
    params: &ModelParams,
    seed: u64,
    em: &EmConfig,
) -> dsbm_core::Result<RunOutputs> {
    let (xi, eta) = (params.link_persistence, params.community_persistence);
    let config = LsdConfig {
        em: EmConfig {
            bp: dsbm_core::sbm::BpConfig { seed, ..em.bp.clone() },
            ..em.clone()
        },
    };
    match recipe {
        Recipe::PhaseDiagram => {
            let cbar = params.mean_degree;
            let profile = optimal_lag(xi, eta, Horizon::Asymptotic)?;
            Ok(RunOutputs::Thresholds {
                static_line: detectability_threshold(cbar, xi, eta, DetectabilityMode::Static)?,
                single_snapshot: detectability_threshold(cbar, xi, eta, DetectabilityMode::SingleSnapshot)?,
                lag_corrected: detectability_threshold(cbar, xi, eta, DetectabilityMode::LagCorrected)?,
                tau_star: profile.tau_star,
                delta: profile.delta,
            })
        }
        Recipe::AhatVsXi => {
            let t = cell.t.unwrap_or(params.n_steps);
            let out = generate(params, seed)?;
            let fit = fit_snapshot(&out.network, t, &params.prior, &config);
            let q = overlap(out.planted.row(t), &fit.assignments, &params.prior, true)?;
            Ok(RunOutputs::Snapshot {
                a_star: fit.a_star,
                converged: fit.converged,
                overlap: q,
            })
        }
        Recipe::OverlapVsLag => {
            let t = cell.t.unwrap_or(params.n_steps);
            let out = generate(params, seed)?;
            let fit = fit_snapshot(&out.network, t, &params.prior, &config);
            let overlaps = (0..=t)
                .map(|tau| overlap(out.planted.row(t - tau), &fit.assignments, &params.prior, true))
                .collect::<dsbm_core::Result<_>>()?;
            Ok(RunOutputs::LagOverlaps { overlaps })
        }
        Recipe::LearnGrid | Recipe::PerformanceGrid | Recipe::Custom => {
            let out = generate(params, seed)?;
            let res = lsd_run(&out.network, &params.prior, &config)?;
            let tau = res.tau_star_hat;
            let window = res.validity_end();
            let (mut raw, mut corrected) = (0.0, 0.0);
            for t in 0..=window {
                let planted = out.planted.row(t);
                raw += overlap(planted, &res.sweep.aligned[t], &params.prior, true)?;
                let shifted = res.corrected[t].as_ref().expect("inside the validity window");
                corrected += overlap(planted, shifted, &params.prior, true)?;
            }
            let n = (window + 1) as f64;
            Ok(RunOutputs::Lsd {
                eta_hat: res.eta_hat,
                xi_hat: res.xi_hat,
                tau_star_hat: tau,
                a_star_hat: res.a_star_hat,
                a_hat: res.a_hat,
                overlap_raw: raw / n,
                overlap_corrected: corrected / n,
                failed_snapshots: res.flags.failed_snapshots,
            })
        }
    }
}

/// Recomputes the outputs of a recorded run from its inputs.
pub fn replay(record: &RunRecord) -> RunOutputs {
    execute(record.recipe, &record.cell, &record.sizes, record.seed, &record.em)
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub records: Vec<RunRecord>,
    pub table: Table,
    pub failed_runs: usize,
}

/// Mean and standard error; `NaN` for an empty sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Executes every cell and replication on `workers` threads and writes the
/// output files.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> anyhow::Result<ExperimentReport> {
    spec.validate()?;
    let cells = spec.cells();
    let sizes = spec.sizes();
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.replications as u64).map(move |r| (c, r)))
        .collect();
    let records: Vec<RunRecord> = with_workers(workers, || {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let cell = cells[c];
                let seed = spec.base_seed + r;
                let start = Instant::now();
                let outputs = execute(spec.recipe, &cell, &sizes, seed, &spec.em);
                RunRecord {
                    version: env!("CARGO_PKG_VERSION").to_string(),
                    recipe: spec.recipe,
                    cell,
                    sizes,
                    seed,
                    em: spec.em.clone(),
                    outputs,
                    wall_clock_secs: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    });
    let failed_runs = records
        .iter()
        .filter(|r| matches!(r.outputs, RunOutputs::Failed { .. }))
        .count();
    let table = aggregate(spec, &cells, &records)?;
    let report = ExperimentReport {
        spec: spec.clone(),
        records,
        table,
        failed_runs,
    };
    write_outputs(&report)?;
    Ok(report)
}

fn aggregate(spec: &ExperimentSpec, cells: &[Cell], records: &[RunRecord]) -> anyhow::Result<Table> {
    let recipe = spec.recipe;
    let mut rows = Vec::new();
    for cell in cells {
        let runs: Vec<&RunRecord> = records.iter().filter(|r| r.cell == *cell).collect();
        let failed = runs
            .iter()
            .filter(|r| matches!(r.outputs, RunOutputs::Failed { .. }))
            .count() as f64;
        let n_runs = runs.len() as f64;
        match recipe {
            Recipe::PhaseDiagram => {
                let Some(RunOutputs::Thresholds {
                    static_line,
                    single_snapshot,
                    lag_corrected,
                    tau_star,
                    delta,
                }) = runs.first().map(|r| &r.outputs)
                else {
                    continue;
                };
                rows.push(vec![
                    cell.xi,
                    cell.eta,
                    spec.mean_degree,
                    *static_line,
                    *single_snapshot,
                    *lag_corrected,
                    *tau_star as f64,
                    *delta,
                ]);
            }
            Recipe::AhatVsXi => {
                let t = cell.t.unwrap_or(spec.n_steps);
                let (mut ahat, mut q) = (Vec::new(), Vec::new());
                for r in &runs {
                    if let RunOutputs::Snapshot { a_star, overlap, .. } = &r.outputs {
                        ahat.extend(a_star);
                        q.push(*overlap);
                    }
                }
                let (am, ase) = mean_se(&ahat);
                let (qm, qse) = mean_se(&q);
                let single = effective_assortativity(cell.a, cell.xi, cell.eta, Horizon::Finite(t))?;
                let profile = optimal_lag(cell.xi, cell.eta, Horizon::Finite(t))?;
                rows.push(vec![
                    cell.xi,
                    cell.eta,
                    cell.a,
                    t as f64,
                    n_runs,
                    failed,
                    am,
                    ase,
                    qm,
                    qse,
                    single,
                    cell.a * profile.a_star,
                    profile.tau_star as f64,
                ]);
            }
            Recipe::OverlapVsLag => {
                let t = cell.t.unwrap_or(spec.n_steps);
                let profile = optimal_lag(cell.xi, cell.eta, Horizon::Finite(t))?;
                for tau in 0..=t {
                    let q: Vec<f64> = runs
                        .iter()
                        .filter_map(|r| match &r.outputs {
                            RunOutputs::LagOverlaps { overlaps } => overlaps.get(tau).copied(),
                            _ => None,
                        })
                        .collect();
                    let (qm, qse) = mean_se(&q);
                    rows.push(vec![
                        cell.xi,
                        cell.eta,
                        cell.a,
                        t as f64,
                        tau as f64,
                        n_runs,
                        failed,
                        qm,
                        qse,
                        lagged_assortativity(cell.a, cell.xi, cell.eta, t, tau)?,
                        profile.tau_star as f64,
                    ]);
                }
            }
            Recipe::LearnGrid | Recipe::PerformanceGrid | Recipe::Custom => {
                let mut cols: [Vec<f64>; 8] = Default::default();
                for r in &runs {
                    if let RunOutputs::Lsd {
                        eta_hat,
                        xi_hat,
                        tau_star_hat,
                        a_star_hat,
                        a_hat,
                        overlap_raw,
                        overlap_corrected,
                        ..
                    } = &r.outputs
                    {
                        let values = [
                            *eta_hat,
                            *xi_hat,
                            *a_hat,
                            *a_star_hat,
                            *tau_star_hat as f64,
                            *overlap_raw,
                            *overlap_corrected,
                            overlap_corrected - overlap_raw,
                        ];
                        for (c, v) in cols.iter_mut().zip(values) {
                            c.push(v);
                        }
                    }
                }
                let mut row = vec![cell.xi, cell.eta, cell.a, n_runs, failed];
                for c in &cols {
                    let (m, se) = mean_se(c);
                    row.push(m);
                    row.push(se);
                }
                let asymptotic = cell.xi * cell.eta * cell.eta < 1.0 && cell.xi < 1.0;
                let (delta, tau_star, detectable) = if asymptotic {
                    let profile = optimal_lag(cell.xi, cell.eta, Horizon::Asymptotic)?;
                    let line =
                        detectability_threshold(spec.mean_degree, cell.xi, cell.eta, DetectabilityMode::LagCorrected)?;
                    (profile.delta, profile.tau_star as f64, (cell.a > line) as u8 as f64)
                } else {
                    (f64::INFINITY, f64::NAN, f64::NAN)
                };
                row.extend([delta, tau_star, detectable]);
                rows.push(row);
            }
        }
    }
    Ok(Table {
        columns: recipe.columns(),
        rows,
    })
}

fn write_outputs(report: &ExperimentReport) -> anyhow::Result<()> {
    let spec = &report.spec;
    let dir = &spec.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = spec.recipe.name();
    report
        .table
        .write_csv(BufWriter::new(File::create(dir.join(format!("{name}.csv")))?))?;
    std::fs::write(dir.join(format!("{name}.svg")), render(spec, &report.table).render())?;
    let mut runs = BufWriter::new(File::create(dir.join("runs.jsonl"))?);
    for record in &report.records {
        serde_json::to_writer(&mut runs, record)?;
        runs.write_all(b"\n")?;
    }
    runs.flush()?;
    std::fs::write(dir.join("spec.json"), serde_json::to_string_pretty(spec)?)?;
    Ok(())
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<RunRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| {
            serde_json::from_str(&line?).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

/// Replays every record in `runs.jsonl` and returns the indices of records
/// whose outputs differ.
pub fn verify_replay(path: &Path, workers: usize) -> anyhow::Result<(usize, Vec<usize>)> {
    let records = read_records(path)?;
    let mismatches = with_workers(workers, || {
        records
            .par_iter()
            .enumerate()
            .filter(|(_, r)| replay(r) != r.outputs)
            .map(|(i, _)| i)
            .collect()
    });
    Ok((records.len(), mismatches))
}

fn series_by<F: Fn(&[f64]) -> f64>(table: &Table, key: F) -> Vec<(f64, Vec<&Vec<f64>>)> {
    let mut groups: Vec<(f64, Vec<&Vec<f64>>)> = Vec::new();
    for row in &table.rows {
        let k = key(row);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((k, vec![row])),
        }
    }
    groups
}

fn heatmap_of(table: &Table, value: &str) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let (ix, ie, iv) = (
        table.column("xi").expect("xi column"),
        table.column("eta").expect("eta column"),
        table.column(value).expect("value column"),
    );
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for row in &table.rows {
        if !xs.contains(&row[ix]) {
            xs.push(row[ix]);
        }
        if !ys.contains(&row[ie]) {
            ys.push(row[ie]);
        }
    }
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut values = vec![vec![f64::NAN; xs.len()]; ys.len()];
    for row in &table.rows {
        let x = xs.iter().position(|&v| v == row[ix]).expect("present");
        let y = ys.iter().position(|&v| v == row[ie]).expect("present");
        values[y][x] = row[iv];
    }
    (xs, ys, values)
}

fn render(spec: &ExperimentSpec, table: &Table) -> Figure {
    let col = |name: &str| table.column(name).expect("known column");
    match spec.recipe {
        Recipe::PhaseDiagram => {
            let (xs, ys, v) = heatmap_of(table, "lag_corrected");
            Figure::new(
                format!("lag-corrected detectability line, mean degree {}", spec.mean_degree),
                "xi",
                "eta",
            )
            .heatmap(xs, ys, v)
        }
        Recipe::AhatVsXi => {
            let mut fig = Figure::new("single-snapshot inferred assortativity", "xi", "a_hat");
            let (xi, m) = (col("xi"), col("ahat_mean"));
            let groups = series_by(table, |r| r[col("eta")] * 1e6 + r[col("t")]);
            for (i, (_, rows)) in groups.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let label = format!("eta {} t {}", rows[0][col("eta")], rows[0][col("t")]);
                fig = fig
                    .scatter(rows.iter().map(|r| (r[xi], r[m])).collect(), color, Some(&label))
                    .line(rows.iter().map(|r| (r[xi], r[col("theory_single")])).collect(), "black", true, None)
                    .line(rows.iter().map(|r| (r[xi], r[col("theory_optimal")])).collect(), color, true, None);
            }
            fig
        }
        Recipe::OverlapVsLag => {
            let mut fig = Figure::new("overlap with lagged planted labels", "tau", "overlap");
            let groups = series_by(table, |r| r[col("xi")] * 1e6 + r[col("eta")]);
            for (i, (_, rows)) in groups.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let label = format!("xi {}", rows[0][col("xi")]);
                fig = fig.line(
                    rows.iter().map(|r| (r[col("tau")], r[col("overlap_mean")])).collect(),
                    color,
                    false,
                    Some(&label),
                );
            }
            fig
        }
        Recipe::LearnGrid => {
            let planted_eta = table.rows.iter().map(|r| (r[col("eta")], r[col("eta_hat_mean")])).collect();
            let planted_xi = table.rows.iter().map(|r| (r[col("xi")], r[col("xi_hat_mean")])).collect();
            Figure::new("learned persistences", "planted", "learned")
                .line(vec![(0.0, 0.0), (1.0, 1.0)], "black", true, None)
                .scatter(planted_eta, PALETTE[0], Some("eta"))
                .scatter(planted_xi, PALETTE[1], Some("xi"))
        }
        Recipe::PerformanceGrid | Recipe::Custom => {
            let (xs, ys, v) = heatmap_of(table, "overlap_corrected_mean");
            Figure::new("lag-corrected overlap", "xi", "eta").heatmap(xs, ys, v)
        }
    }
}
