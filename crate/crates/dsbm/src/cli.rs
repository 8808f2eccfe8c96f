//! Command line interface. Exit codes: 0 success, 1 validation error,
//! 2 runtime failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dsbm_core::lsd::{lsd_from_sweep, LsdConfig, LsdFlags};
use dsbm_core::sbm::{BpConfig, EmConfig};
use dsbm_core::theory::{
    detectability_threshold, effective_assortativity, lagged_assortativity, optimal_lag, DetectabilityMode,
    Horizon,
};
use dsbm_core::{generate, overlap, AssignmentSequence, ModelParams, Prior};

use crate::experiment::{run_experiment, unit_grid, verify_replay, ExperimentSpec, Recipe};
use crate::io::{self, parse_list, FormatError};
use crate::parallel::{default_workers, snapshot_sweep_par, with_workers, WORKERS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dsbm", version, about = "Persistent dynamic stochastic block model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a temporal network with planted labels.
    Generate(GenerateArgs),
    /// Run static or lagged snapshot inference on a network file.
    Infer(InferArgs),
    /// Evaluate lag profiles and detectability lines.
    Theory(TheoryArgs),
    /// Run a replicated experiment recipe or replay a previous one.
    Experiment(ExperimentArgs),
    /// Overlap between planted and inferred assignment files.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long, default_value_t = 1.0)]
    assort: f64,
    #[arg(long, default_value_t = 10.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated group prior; uniform if omitted.
    #[arg(long)]
    prior: Option<String>,
    /// Output directory for network.txt, planted.csv and params.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Static,
    Lsd,
}

#[derive(Debug, Args)]
struct BpArgs {
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 0.1)]
    init_amplitude: f64,
    #[arg(long, default_value_t = 50)]
    em_rounds: usize,
    #[arg(long, default_value_t = 1e-6)]
    em_tol: f64,
    /// Independent EM starts per snapshot.
    #[arg(long, default_value_t = 1)]
    starts: usize,
}

impl BpArgs {
    fn em_config(&self, seed: u64) -> EmConfig {
        EmConfig {
            bp: BpConfig {
                max_iterations: self.max_iterations,
                convergence_tol: self.tol,
                damping: self.damping,
                random_init_amplitude: self.init_amplitude,
                seed,
            },
            max_rounds: self.em_rounds,
            tol: self.em_tol,
            n_starts: self.starts,
            ..EmConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long, value_enum, default_value_t = Mode::Lsd)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planted assignments; adds overlap columns.
    #[arg(long)]
    planted: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(flatten)]
    bp: BpArgs,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 10.0)]
    cbar: f64,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, default_value_t = 0.75)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    assort: f64,
    /// Observation time, or "inf" for the asymptotic profile.
    #[arg(long, default_value = "inf")]
    t: String,
    /// Largest lag written to the profile.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Emit the three detectability lines over an (xi, eta) grid instead.
    #[arg(long)]
    phase_diagram: bool,
    /// Points per axis of the phase-diagram grid.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, required_unless_present = "replay")]
    recipe: Option<Recipe>,
    #[arg(long, required_unless_present = "replay")]
    out: Option<PathBuf>,
    /// Re-run every record of a runs.jsonl file and compare outputs.
    #[arg(long, conflicts_with = "recipe")]
    replay: Option<PathBuf>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Points per axis for the default (xi, eta) grids.
    #[arg(long)]
    grid_size: Option<usize>,
    /// Comma-separated xi values.
    #[arg(long)]
    xi: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    assort: Option<String>,
    /// Comma-separated observation times.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    mean_degree: Option<f64>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    planted: PathBuf,
    #[arg(long)]
    inferred: PathBuf,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    /// Compare labels as given instead of maximizing over relabelings.
    #[arg(long)]
    no_permute: bool,
}

/// A failure classified by exit code.
#[derive(Debug)]
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let validation = match (e.downcast_ref::<dsbm_core::Error>(), e.downcast_ref::<FormatError>()) {
            (Some(core), _) => is_validation(core),
            (None, Some(FormatError::Io(_))) => false,
            (None, Some(FormatError::Model(core))) => is_validation(core),
            (None, Some(_)) => true,
            (None, None) => false,
        };
        if validation {
            Failure::Validation(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<dsbm_core::Error> for Failure {
    fn from(e: dsbm_core::Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        anyhow::Error::new(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn is_validation(core: &dsbm_core::Error) -> bool {
    use dsbm_core::Error as E;
    matches!(
        core,
        E::InvalidParameter(_)
            | E::DenseRegime { .. }
            | E::InvalidGraph(_)
            | E::InvalidAssignment(_)
            | E::TooManyGroups { .. }
            | E::ZeroAffinity
    )
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<std::io::Error>()
        .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn invalid(message: impl std::fmt::Display) -> Failure {
    Failure::Validation(anyhow!("{message}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Score(a) => cmd_score(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Runtime(e)) if is_broken_pipe(&e) => EXIT_OK,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            EXIT_VALIDATION
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::Runtime)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let mut params = ModelParams::new(a.nodes, a.steps, a.groups, a.assort, a.mean_degree, a.xi, a.eta)?;
    if let Some(prior) = &a.prior {
        params = params.with_prior(Prior::new(parse_list(prior).map_err(invalid)?)?)?;
    }
    let out = generate(&params, a.seed)?;
    create_dir(&a.out)?;
    io::save_network(&a.out.join("network.txt"), &out.network)?;
    io::save_assignments(&a.out.join("planted.csv"), &out.planted)?;
    io::write_params(BufWriter::new(File::create(a.out.join("params.txt"))?), &params, Some(a.seed))?;

    let net = &out.network;
    writeln!(std::io::stdout(), "snapshots {} nodes {} mean_degree {:.4}", net.n_snapshots(), net.n_nodes(), net.mean_degree())?;
    writeln!(std::io::stdout(), "t,edges,labels_kept,links_kept")?;
    for t in 0..net.n_snapshots() {
        let edges = net.snapshot(t).n_edges();
        if t == 0 {
            writeln!(std::io::stdout(), "0,{edges},,")?;
            continue;
        }
        let kept = out
            .planted
            .row(t)
            .iter()
            .zip(out.planted.row(t - 1))
            .filter(|(x, y)| x == y)
            .count() as f64
            / net.n_nodes() as f64;
        let prev = net.snapshot(t - 1);
        let survived = prev
            .edges()
            .iter()
            .filter(|&&(i, j)| net.snapshot(t).contains(i as usize, j as usize))
            .count();
        let links = if prev.is_empty() { f64::NAN } else { survived as f64 / prev.n_edges() as f64 };
        writeln!(std::io::stdout(), "{t},{edges},{kept:.4},{links:.4}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct LsdSummary {
    mode: &'static str,
    nodes: usize,
    snapshots: usize,
    groups: usize,
    seed: u64,
    eta_hat: f64,
    xi_hat: f64,
    xi_first_pass: f64,
    tau_star_hat: usize,
    a_star_hat: f64,
    a_hat: f64,
    burn_in: usize,
    mean_degree: f64,
    validity_window: [usize; 2],
    flags: LsdFlags,
    mean_overlap_raw: Option<f64>,
    mean_overlap_corrected: Option<f64>,
}

fn cmd_infer(a: InferArgs) -> Result<(), Failure> {
    let network = io::load_network(&a.input)?;
    if a.groups < 2 {
        return Err(invalid("--groups must be at least 2"));
    }
    let prior = Prior::uniform(a.groups);
    let planted = match &a.planted {
        Some(path) => {
            let seq = io::load_assignments(path, Some(a.groups))?;
            if seq.n_nodes() != network.n_nodes() || seq.rows().len() != network.n_snapshots() {
                return Err(invalid("planted assignments do not match the network size"));
            }
            Some(seq)
        }
        None => None,
    };
    let config = LsdConfig {
        em: a.bp.em_config(a.seed),
    };
    config.em.bp.validate()?;
    let workers = a.workers.unwrap_or_else(default_workers);
    let sweep = with_workers(workers, || snapshot_sweep_par(&network, &prior, &config))?;
    create_dir(&a.out)?;
    let aligned = AssignmentSequence::new(a.groups, sweep.aligned.clone())?;
    io::save_assignments(&a.out.join("assignments.csv"), &aligned)?;

    let q = |planted: &AssignmentSequence, t: usize, row: &[usize]| overlap(planted.row(t), row, &prior, true);
    match a.mode {
        Mode::Static => {
            let mut w = csv::Writer::from_path(a.out.join("snapshots.csv")).map_err(|e| Failure::Runtime(e.into()))?;
            let mut header = vec!["t", "a_star", "converged"];
            if planted.is_some() {
                header.push("overlap");
            }
            w.write_record(&header).map_err(|e| Failure::Runtime(e.into()))?;
            for t in 0..sweep.n_snapshots() {
                let mut rec = vec![t.to_string(), opt(sweep.a_star[t]), sweep.converged[t].to_string()];
                if let Some(p) = &planted {
                    rec.push(q(p, t, &sweep.aligned[t])?.to_string());
                }
                w.write_record(&rec).map_err(|e| Failure::Runtime(e.into()))?;
            }
            w.flush()?;
            writeln!(std::io::stdout(), "static inference on {} snapshots written to {}", sweep.n_snapshots(), a.out.display())?;
        }
        Mode::Lsd => {
            let res = lsd_from_sweep(&network, sweep, &prior)?;
            let window = res.validity_end();
            io::write_assignment_rows(
                BufWriter::new(File::create(a.out.join("corrected.csv"))?),
                res.corrected.iter().enumerate().filter_map(|(t, r)| r.as_ref().map(|r| (t, r))),
            )?;
            let mut w = csv::Writer::from_path(a.out.join("snapshots.csv")).map_err(|e| Failure::Runtime(e.into()))?;
            let mut header = vec!["t", "a_star", "converged"];
            if planted.is_some() {
                header.extend(["overlap_raw", "overlap_corrected"]);
            }
            w.write_record(&header).map_err(|e| Failure::Runtime(e.into()))?;
            let (mut sum_raw, mut sum_corrected) = (0.0, 0.0);
            for t in 0..res.sweep.n_snapshots() {
                let mut rec = vec![t.to_string(), opt(res.sweep.a_star[t]), res.sweep.converged[t].to_string()];
                if let Some(p) = &planted {
                    let raw = q(p, t, &res.sweep.aligned[t])?;
                    let corrected = match &res.corrected[t] {
                        Some(row) => {
                            let v = q(p, t, row)?;
                            sum_raw += raw;
                            sum_corrected += v;
                            v.to_string()
                        }
                        None => String::new(),
                    };
                    rec.extend([raw.to_string(), corrected]);
                }
                w.write_record(&rec).map_err(|e| Failure::Runtime(e.into()))?;
            }
            w.flush()?;
            let n = (window + 1) as f64;
            let summary = LsdSummary {
                mode: "lsd",
                nodes: network.n_nodes(),
                snapshots: network.n_snapshots(),
                groups: a.groups,
                seed: a.seed,
                eta_hat: res.eta_hat,
                xi_hat: res.xi_hat,
                xi_first_pass: res.xi_first_pass,
                tau_star_hat: res.tau_star_hat,
                a_star_hat: res.a_star_hat,
                a_hat: res.a_hat,
                burn_in: res.burn_in,
                mean_degree: res.mean_degree,
                validity_window: [0, window],
                flags: res.flags,
                mean_overlap_raw: planted.as_ref().map(|_| sum_raw / n),
                mean_overlap_corrected: planted.as_ref().map(|_| sum_corrected / n),
            };
            let json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Runtime(e.into()))?;
            std::fs::write(a.out.join("summary.json"), &json)?;
            writeln!(std::io::stdout(), "{json}")?;
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_theory(a: TheoryArgs) -> Result<(), Failure> {
    if !(a.cbar > 0.0) {
        return Err(invalid("--cbar must be positive"));
    }
    let mut w = output(&a.out)?;
    if a.phase_diagram {
        if a.grid == 0 {
            return Err(invalid("--grid must be at least 1"));
        }
        writeln!(w, "xi,eta,static,single_snapshot,lag_corrected,tau_star")?;
        for &eta in &unit_grid(a.grid) {
            for &xi in &unit_grid(a.grid) {
                let line = |mode| detectability_threshold(a.cbar, xi, eta, mode);
                let tau = optimal_lag(xi, eta, Horizon::Asymptotic)?.tau_star;
                writeln!(
                    w,
                    "{xi},{eta},{},{},{},{tau}",
                    line(DetectabilityMode::Static)?,
                    line(DetectabilityMode::SingleSnapshot)?,
                    line(DetectabilityMode::LagCorrected)?
                )?;
            }
        }
        w.flush()?;
        return Ok(());
    }
    let horizon = match a.t.as_str() {
        "inf" | "infinity" => Horizon::Asymptotic,
        s => Horizon::Finite(s.parse().map_err(|_| invalid(format!("--t must be an integer or 'inf', got {s:?}")))?),
    };
    if !(0.0..=1.0).contains(&a.assort) {
        return Err(invalid("--assort must lie in [0, 1]"));
    }
    let profile = optimal_lag(a.xi, a.eta, horizon)?;
    let single = match horizon {
        Horizon::Finite(t) => effective_assortativity(a.assort, a.xi, a.eta, Horizon::Finite(t))?,
        Horizon::Asymptotic => effective_assortativity(a.assort, a.xi, a.eta, Horizon::Asymptotic)?,
    };
    writeln!(w, "# horizon={}", a.t)?;
    writeln!(w, "# tau_star={}", profile.tau_star)?;
    writeln!(w, "# a_star={}", a.assort * profile.a_star)?;
    writeln!(w, "# a_single={single}")?;
    writeln!(w, "# delta={}", profile.delta)?;
    for (name, mode) in [
        ("static", DetectabilityMode::Static),
        ("single_snapshot", DetectabilityMode::SingleSnapshot),
        ("lag_corrected", DetectabilityMode::LagCorrected),
    ] {
        if let Ok(v) = detectability_threshold(a.cbar, a.xi, a.eta, mode) {
            writeln!(w, "# threshold_{name}={v}")?;
        }
    }
    writeln!(w, "tau,value")?;
    let last = a.max_lag.map_or(profile.values.len() - 1, |m| m.min(profile.values.len() - 1));
    for tau in 0..=last {
        let v = match horizon {
            Horizon::Finite(t) => lagged_assortativity(a.assort, a.xi, a.eta, t, tau)?,
            Horizon::Asymptotic => a.assort * profile.values[tau],
        };
        writeln!(w, "{tau},{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let workers = a.workers.unwrap_or_else(default_workers);
    if let Some(path) = &a.replay {
        let (total, mismatches) = verify_replay(path, workers).map_err(Failure::Runtime)?;
        writeln!(std::io::stdout(), "replayed {total} runs, {} mismatches", mismatches.len())?;
        for i in &mismatches {
            writeln!(std::io::stdout(), "mismatch at record {i}")?;
        }
        return if mismatches.is_empty() {
            Ok(())
        } else {
            Err(Failure::Runtime(anyhow!("{} replayed runs differ", mismatches.len())))
        };
    }
    let recipe = a.recipe.expect("required by clap");
    let out = a.out.clone().expect("required by clap");
    let mut spec = ExperimentSpec::for_recipe(recipe, out);
    if let Some(n) = a.grid_size {
        if spec.grid.xi.len() > 1 && matches!(recipe, Recipe::PhaseDiagram | Recipe::LearnGrid | Recipe::PerformanceGrid) {
            spec.grid.xi = unit_grid(n);
            spec.grid.eta = unit_grid(n);
        }
    }
    let list = |s: &Option<String>| -> Result<Option<Vec<f64>>, Failure> {
        s.as_deref().map(|s| parse_list(s).map_err(invalid)).transpose()
    };
    if let Some(v) = list(&a.xi)? {
        spec.grid.xi = v;
    }
    if let Some(v) = list(&a.eta)? {
        spec.grid.eta = v;
    }
    if let Some(v) = list(&a.assort)? {
        spec.grid.a = v;
    }
    if let Some(t) = &a.t {
        spec.grid.t = parse_list(t).map_err(invalid)?;
    }
    spec.n_nodes = a.nodes.unwrap_or(spec.n_nodes);
    spec.n_steps = a.steps.unwrap_or(spec.n_steps);
    spec.k = a.groups.unwrap_or(spec.k);
    spec.mean_degree = a.mean_degree.unwrap_or(spec.mean_degree);
    spec.replications = a.replications.unwrap_or(spec.replications);
    spec.base_seed = a.seed;
    spec.validate().map_err(Failure::Validation)?;
    let report = run_experiment(&spec, workers).map_err(Failure::Runtime)?;
    writeln!(
        std::io::stdout(),
        "{}: {} cells, {} runs ({} failed) written to {}",
        recipe.name(),
        spec.cells().len(),
        report.records.len(),
        report.failed_runs,
        spec.out_dir.display()
    )?;
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<(), Failure> {
    let planted = io::load_assignments(&a.planted, Some(a.groups))?;
    let inferred = io::load_assignments(&a.inferred, Some(a.groups))?;
    if planted.n_nodes() != inferred.n_nodes() {
        return Err(invalid("assignment files have different node counts"));
    }
    let prior = Prior::uniform(a.groups);
    let steps = planted.rows().len().min(inferred.rows().len());
    writeln!(std::io::stdout(), "t,overlap")?;
    let mut sum = 0.0;
    for t in 0..steps {
        let q = overlap(planted.row(t), inferred.row(t), &prior, !a.no_permute)?;
        sum += q;
        writeln!(std::io::stdout(), "{t},{q}")?;
    }
    writeln!(std::io::stdout(), "# mean_overlap={}", sum / steps as f64)?;
    Ok(())
}
