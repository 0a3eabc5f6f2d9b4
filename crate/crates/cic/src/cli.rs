//! Argument definitions and subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use cic_core::baselines::{cross_map, granger, library_grid};
use cic_core::benchmarks::{random_adjacency, simulate3, simulate_network, Simulation, System3};
use cic_core::cic::{fit_direction, infer_pair, CicConfig, CicModel, BatchNoise, Verdict};
use cic_core::evaluation::{canonical_corr, confounder_score, roc_auc, ScoredNetwork, Threshold};
use cic_core::neural::grad_check;
use cic_core::{Matrix, TimeSeries};

use crate::config::{ConfigError, Method, RunConfig};
use crate::io::{export_csv, fmt_f64, load_csv, load_dream4, DataError};
use crate::report::{loss_csv, shared_series_csv, PairJson};
use crate::seed::pair_seed;
use crate::tables::{load_matrix, save_matrix, LabeledMatrix};

#[derive(Debug, Parser)]
#[command(name = "cic", version, about = "Causal inference between time series under hidden confounders")]
pub struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for scan and sweep.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark dataset with ground truth.
    Simulate(SimulateArgs),
    /// Fit both directions for one pair of columns.
    Infer(InferArgs),
    /// Score every ordered pair of columns.
    Scan(ScanArgs),
    /// Repeat simulate + infer over a parameter grid.
    Sweep(SweepArgs),
    /// Compare a score matrix with a truth matrix.
    Evaluate(EvaluateArgs),
    /// Check the model gradient against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["system", "adjacency", "random_nodes"])))]
pub struct SimulateArgs {
    /// Three-variable regime: 1 x→y, 2 y→x, 3 z→x and z→y, 4 independent.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub system: Option<u8>,
    /// 0/1 adjacency matrix CSV (row drives column).
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Random network with this many nodes.
    #[arg(long)]
    pub random_nodes: Option<usize>,
    #[arg(long, default_value_t = 12)]
    pub edges: usize,
    #[arg(long, default_value_t = 2)]
    pub max_in_degree: usize,
    #[arg(long, default_value_t = 0.35)]
    pub strength: f64,
    #[arg(long, default_value_t = 0.001)]
    pub noise: f64,
    #[arg(long, default_value_t = 5000)]
    pub length: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Read the data as a DREAM4 table (leading Time column, replicate blocks).
    #[arg(long)]
    pub dream4: bool,
    /// The CSV has no header row; columns are named v1..vn.
    #[arg(long)]
    pub no_header: bool,
    /// Delay-embedding order p (window width p + 1).
    #[arg(long)]
    pub embed_order: Option<usize>,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Also write both trained models.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Noise,
    Strength,
    Length,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub system: u8,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Explicit grid, comma separated; replaces --from/--to/--steps.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.35)]
    pub strength: f64,
    #[arg(long, default_value_t = 0.001)]
    pub noise: f64,
    #[arg(long, default_value_t = 5000)]
    pub length: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Direct-cause truth matrix.
    #[arg(long)]
    pub truth: PathBuf,
    /// Confounded-pair truth matrix; enables the confounder evaluation.
    #[arg(long)]
    pub confounders: Option<PathBuf>,
    /// `fixed:<t>` or `quantile:<q>`.
    #[arg(long, default_value = "quantile:0.65")]
    pub threshold: String,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Core(#[from] cic_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("gradient check failed: max relative error {0:e}")]
    GradCheck(f64),
}

impl CliError {
    /// 2 usage/config/data, 3 simulation instability, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Core(e) => Some(e),
            CliError::Data(DataError::Core(e)) => Some(e),
            CliError::Config(ConfigError::Invalid(e)) => Some(e),
            _ => None,
        };
        match core {
            Some(cic_core::Error::Unstable { .. }) => 3,
            Some(cic_core::Error::Divergence { .. }) => 4,
            _ if matches!(self, CliError::GradCheck(_)) => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Merges the config file and global flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn apply_data_args(cfg: &mut RunConfig, d: &DataArgs) {
    if let Some(p) = d.embed_order {
        cfg.embedding.order = p;
    }
    if let Some(l) = d.lag {
        cfg.embedding.lag = l;
    }
    if let Some(e) = d.epochs {
        cfg.cic.epochs = e;
    }
}

/// Files written by one command, echoed into `provenance.json`.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_owned(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_owned());
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
    }

    fn finish<T: Serialize>(mut self, command: &str, cfg: &RunConfig, args: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Provenance<'a, T> {
            tool: &'static str,
            version: &'static str,
            command: &'a str,
            arguments: &'a T,
            config: &'a RunConfig,
            outputs: &'a [String],
        }
        let files = std::mem::take(&mut self.files);
        let doc = Provenance {
            tool: "cic",
            version: env!("CARGO_PKG_VERSION"),
            command,
            arguments: args,
            config: cfg,
            outputs: &files,
        };
        let text = serde_json::to_string_pretty(&doc).expect("provenance serializes") + "\n";
        self.write("provenance.json", &text)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn load_data(d: &DataArgs) -> CliResult<TimeSeries> {
    Ok(if d.dream4 {
        load_dream4(&d.data)?
    } else {
        load_csv(&d.data, !d.no_header)?
    })
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cfg.resolve()?, a),
        Command::Infer(a) => {
            let mut cfg = cfg;
            apply_data_args(&mut cfg, &a.data);
            cmd_infer(cfg.resolve()?, a)
        }
        Command::Scan(a) => {
            let mut cfg = cfg;
            apply_data_args(&mut cfg, &a.data);
            if let Some(m) = a.method {
                cfg.method = m;
            }
            cmd_scan(cfg.resolve()?, a)
        }
        Command::Sweep(a) => {
            let mut cfg = cfg;
            if let Some(e) = a.epochs {
                cfg.cic.epochs = e;
            }
            cmd_sweep(cfg.resolve()?, a)
        }
        Command::Evaluate(a) => cmd_evaluate(cfg.resolve()?, a),
        Command::Gradcheck(a) => cmd_gradcheck(cfg.resolve()?, a),
    }
}

#[derive(Serialize)]
struct SimulationEcho<'a> {
    source: String,
    strength: f64,
    noise: f64,
    length: usize,
    burn_in: usize,
    seed: u64,
    gamma: &'a [f64],
    restarts: usize,
    warnings: &'a [String],
}

pub fn cmd_simulate(cfg: RunConfig, a: &SimulateArgs) -> CliResult<()> {
    let (sim, source): (Simulation, String) = if let Some(id) = a.system {
        let system = System3::from_id(id)?;
        (simulate3(system, a.strength, a.noise, a.length, cfg.seed)?, format!("system{id}"))
    } else if let Some(path) = &a.adjacency {
        let adj = load_matrix(path)?.to_bool();
        (
            simulate_network(&adj, a.strength, a.noise, a.length, cfg.seed)?,
            format!("adjacency:{}", path.display()),
        )
    } else {
        let n = a.random_nodes.expect("clap enforces one source");
        let adj = random_adjacency(n, a.edges, a.max_in_degree, cfg.seed)?;
        (
            simulate_network(&adj, a.strength, a.noise, a.length, cfg.seed)?,
            format!("random:{n}:{}", a.edges),
        )
    };
    let mut out = Outputs::new(&cfg.out)?;
    export_csv(&sim.series, &out.path("data.csv"))?;
    let names = sim.truth.names.clone();
    save_matrix(&LabeledMatrix::from_bool(names.clone(), &sim.truth.causal), &out.path("truth_causal.csv"), true)?;
    save_matrix(&LabeledMatrix::from_bool(names, &sim.truth.confounded), &out.path("truth_confounder.csv"), true)?;
    let echo = SimulationEcho {
        source,
        strength: a.strength,
        noise: a.noise,
        length: a.length,
        burn_in: cic_core::benchmarks::DEFAULT_BURN_IN,
        seed: cfg.seed,
        gamma: &sim.gamma,
        restarts: sim.restarts,
        warnings: &sim.warnings,
    };
    out.write("spec.json", &to_json(&echo))?;
    for w in &sim.warnings {
        eprintln!("warning: {w}");
    }
    out.finish("simulate", &cfg, &echo)
}

pub fn cmd_infer(cfg: RunConfig, a: &InferArgs) -> CliResult<()> {
    if a.x == a.y {
        return Err(CliError::Usage("--x and --y must name different columns".into()));
    }
    let series = load_data(&a.data)?;
    let pair = infer_pair(&series, &a.x, &a.y, &cfg.embedding, &cfg.cic)?;
    let mut out = Outputs::new(&cfg.out)?;
    out.write("report.json", &to_json(&PairJson::new(&a.x, &a.y, &pair)))?;
    out.write("shared_series.csv", &shared_series_csv(&pair.report_xy))?;
    out.write("loss.csv", &loss_csv(&pair.report_xy.loss_history, &pair.report_yx.loss_history))?;
    if a.save_models {
        out.write("model_xy.txt", &pair.model_xy.model.to_blob())?;
        out.write("model_yx.txt", &pair.model_yx.model.to_blob())?;
    }
    println!(
        "{} -> {}: {:.4} ({}); {} -> {}: {:.4} ({}); confounder: {}",
        a.x,
        a.y,
        pair.report_xy.score,
        pair.report_xy.verdict.as_str(),
        a.y,
        a.x,
        pair.report_yx.score,
        pair.report_yx.verdict.as_str(),
        pair.confounded()
    );
    #[derive(Serialize)]
    struct Echo<'a> {
        data: &'a Path,
        dream4: bool,
        x: &'a str,
        y: &'a str,
    }
    out.finish(
        "infer",
        &cfg,
        &Echo {
            data: &a.data.data,
            dream4: a.data.dream4,
            x: &a.x,
            y: &a.y,
        },
    )
}

/// One directed detector run on the normalized series.
fn score_pair(cfg: &RunConfig, series: &TimeSeries, i: usize, j: usize) -> CliResult<(f64, Option<Verdict>)> {
    let names = series.names();
    match cfg.method {
        Method::Cic => {
            let c = CicConfig {
                seed: pair_seed(cfg.seed, i, j),
                ..cfg.cic.clone()
            };
            let (report, _) = fit_direction(series, &names[i], &names[j], &cfg.embedding, c)?;
            Ok((report.score, Some(report.verdict)))
        }
        Method::Gc => {
            let g = granger(&series.values().column(i), &series.values().column(j), cfg.granger_order)?;
            Ok((g.normalized(), None))
        }
        Method::Ccm => {
            let e = cfg.ccm.e.unwrap_or(cfg.embedding.dim());
            let x = series.values().column(i);
            let points = x.len().saturating_sub((e - 1) * cfg.ccm.tau);
            let libs = library_grid(cfg.ccm.library_min.min(points), points, cfg.ccm.library_steps);
            let r = cross_map(&x, &series.values().column(j), e, cfg.ccm.tau, &libs)?;
            Ok((r.normalized(), None))
        }
    }
}

/// Scores all ordered pairs; results are independent of the worker count.
pub fn scan_network(cfg: &RunConfig, series: &TimeSeries) -> CliResult<ScoredNetwork> {
    let series = series.zscore()?;
    let n = series.width();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let results: Vec<CliResult<(f64, Option<Verdict>)>> =
        pool(cfg.jobs)?.install(|| pairs.par_iter().map(|&(i, j)| score_pair(cfg, &series, i, j)).collect());
    let mut scores = Matrix::zeros(n, n);
    let mut verdicts = vec![vec![None; n]; n];
    for (&(i, j), r) in pairs.iter().zip(results) {
        let (s, v) = r?;
        scores[(i, j)] = s;
        verdicts[i][j] = v;
    }
    Ok(ScoredNetwork::new(series.names().to_vec(), scores, verdicts)?)
}

pub fn cmd_scan(cfg: RunConfig, a: &ScanArgs) -> CliResult<()> {
    let series = load_data(&a.data)?;
    if series.width() < 2 {
        return Err(CliError::Usage("scan needs at least two columns".into()));
    }
    let net = scan_network(&cfg, &series)?;
    let n = net.len();
    let mut out = Outputs::new(&cfg.out)?;
    let mut shown = net.scores.clone();
    for i in 0..n {
        shown[(i, i)] = f64::NAN;
    }
    save_matrix(&LabeledMatrix::new(net.names.clone(), shown), &out.path("scores.csv"), false)?;

    let verdict_str = |i: usize, j: usize| -> &'static str {
        if i == j {
            "self"
        } else {
            net.verdicts[i][j].map(Verdict::as_str).unwrap_or("")
        }
    };
    let mut vtext = String::new();
    for name in &net.names {
        vtext.push(',');
        vtext.push_str(name);
    }
    vtext.push('\n');
    for i in 0..n {
        vtext.push_str(&net.names[i]);
        for j in 0..n {
            vtext.push(',');
            vtext.push_str(verdict_str(i, j));
        }
        vtext.push('\n');
    }
    out.write("verdicts.csv", &vtext)?;

    let mut flat = String::from("cause,effect,score,verdict\n");
    for (i, j) in net.pairs() {
        flat.push_str(&format!(
            "{},{},{},{}\n",
            net.names[i],
            net.names[j],
            fmt_f64(net.scores[(i, j)]),
            verdict_str(i, j)
        ));
    }
    out.write("pairs.csv", &flat)?;

    if cfg.method == Method::Cic {
        let mut conf = String::from("a,b,score_ab,score_ba,band_score,confounder\n");
        for i in 0..n {
            for j in i + 1..n {
                let (sab, sba) = (net.scores[(i, j)], net.scores[(j, i)]);
                let both = net.verdicts[i][j] == Some(Verdict::Confounded) && net.verdicts[j][i] == Some(Verdict::Confounded);
                conf.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    net.names[i],
                    net.names[j],
                    fmt_f64(sab),
                    fmt_f64(sba),
                    fmt_f64(confounder_score(sab, sba, cfg.cic.m, cfg.cic.upper_m)),
                    both as u8
                ));
            }
        }
        out.write("confounders.csv", &conf)?;
    }
    #[derive(Serialize)]
    struct Echo<'a> {
        data: &'a Path,
        dream4: bool,
        pair_seed: &'static str,
    }
    out.finish(
        "scan",
        &cfg,
        &Echo {
            data: &a.data.data,
            dream4: a.data.dream4,
            pair_seed: crate::seed::PAIR_SEED_FORMULA,
        },
    )
}

fn sweep_grid(a: &SweepArgs) -> CliResult<Vec<f64>> {
    let grid = match (&a.values, a.from, a.to, a.steps) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(from), Some(to), Some(steps)) if steps >= 1 => {
            if steps == 1 {
                vec![from]
            } else {
                (0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect()
            }
        }
        _ => {
            return Err(CliError::Usage(
                "give either --values or all of --from, --to and --steps (steps >= 1)".into(),
            ))
        }
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("the sweep grid is empty".into()));
    }
    if a.param == SweepParam::Length && grid.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
        return Err(CliError::Usage("length values must be positive integers".into()));
    }
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    Ok(grid)
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub repeat: usize,
    pub seed: u64,
    pub cic_xy: f64,
    pub cic_yx: f64,
    pub verdict_xy: Verdict,
    pub verdict_yx: Verdict,
    pub confounder: bool,
    /// Canonical correlation of the x→y shared series with `z_{t-1}`.
    pub cc_z: f64,
}

/// `z` at the cause time `t - 1` of each sample.
pub fn confounder_target(z: &[f64], sample_times: &[usize]) -> Matrix {
    Matrix::from_vec(sample_times.len(), 1, sample_times.iter().map(|&t| z[t - 1]).collect())
        .expect("one column")
}

pub fn sweep_run(cfg: &RunConfig, system: System3, strength: f64, noise: f64, length: usize, seed: u64) -> CliResult<SweepRow> {
    let sim = simulate3(system, strength, noise, length, seed)?;
    let c = CicConfig { seed, ..cfg.cic.clone() };
    let pair = infer_pair(&sim.series, "x", "y", &cfg.embedding, &c)?;
    let z = sim.series.column("z")?;
    let cc_z = canonical_corr(&pair.report_xy.shared_series, &confounder_target(&z, &pair.report_xy.sample_times))
        .unwrap_or(f64::NAN);
    Ok(SweepRow {
        value: 0.0,
        repeat: 0,
        seed,
        cic_xy: pair.report_xy.score,
        cic_yx: pair.report_yx.score,
        verdict_xy: pair.report_xy.verdict,
        verdict_yx: pair.report_yx.verdict,
        confounder: pair.confounded(),
        cc_z,
    })
}

pub fn cmd_sweep(cfg: RunConfig, a: &SweepArgs) -> CliResult<()> {
    let grid = sweep_grid(a)?;
    let system = System3::from_id(a.system)?;
    let tasks: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..a.repeats).map(move |r| (g, r))).collect();
    let rows: Vec<CliResult<SweepRow>> = pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(g, r)| {
                let v = grid[g];
                let (mut strength, mut noise, mut length) = (a.strength, a.noise, a.length);
                match a.param {
                    SweepParam::Noise => noise = v,
                    SweepParam::Strength => strength = v,
                    SweepParam::Length => length = v as usize,
                }
                let seed = pair_seed(cfg.seed, g, r);
                let mut row = sweep_run(&cfg, system, strength, noise, length, seed)?;
                row.value = v;
                row.repeat = r;
                Ok(row)
            })
            .collect()
    });
    let mut text = String::from("param,value,repeat,seed,cic_xy,cic_yx,verdict_xy,verdict_yx,confounder,cc_z\n");
    let pname = match a.param {
        SweepParam::Noise => "noise",
        SweepParam::Strength => "strength",
        SweepParam::Length => "length",
    };
    for row in rows {
        let r = row?;
        text.push_str(&format!(
            "{pname},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.value),
            r.repeat,
            r.seed,
            fmt_f64(r.cic_xy),
            fmt_f64(r.cic_yx),
            r.verdict_xy.as_str(),
            r.verdict_yx.as_str(),
            r.confounder as u8,
            fmt_f64(r.cc_z)
        ));
    }
    let mut out = Outputs::new(&cfg.out)?;
    out.write("sweep.csv", &text)?;
    #[derive(Serialize)]
    struct Echo {
        system: u8,
        param: SweepParam,
        grid: Vec<f64>,
        repeats: usize,
        strength: f64,
        noise: f64,
        length: usize,
    }
    out.finish(
        "sweep",
        &cfg,
        &Echo {
            system: a.system,
            param: a.param,
            grid,
            repeats: a.repeats,
            strength: a.strength,
            noise: a.noise,
            length: a.length,
        },
    )
}

pub fn parse_threshold(s: &str) -> CliResult<Threshold> {
    let bad = || CliError::Usage(format!("threshold `{s}` is not `fixed:<t>` or `quantile:<q>`"));
    let (kind, v) = s.split_once(':').ok_or_else(bad)?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    if !(0.0..=1.0).contains(&v) {
        return Err(bad());
    }
    match kind {
        "fixed" => Ok(Threshold::Fixed(v)),
        "quantile" => Ok(Threshold::Quantile(v)),
        _ => Err(bad()),
    }
}

fn threshold_str(t: Threshold) -> String {
    match t {
        Threshold::Fixed(v) => format!("fixed:{v}"),
        Threshold::Quantile(q) => format!("quantile:{q}"),
    }
}

/// Reorders `m` to the label order of `names`, or names the mismatch.
fn align(m: LabeledMatrix, names: &[String], what: &str) -> CliResult<LabeledMatrix> {
    let missing: Vec<&str> = names.iter().filter(|n| !m.names.contains(n)).map(String::as_str).collect();
    let extra: Vec<&str> = m.names.iter().filter(|n| !names.contains(n)).map(String::as_str).collect();
    if !missing.is_empty() || !extra.is_empty() || m.names.len() != names.len() {
        return Err(CliError::Usage(format!(
            "{what} labels differ from the scores: missing [{}], unexpected [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let idx: Vec<usize> = names.iter().map(|n| m.names.iter().position(|x| x == n).expect("checked")).collect();
    let n = names.len();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            values[(i, j)] = m.values[(idx[i], idx[j])];
        }
    }
    Ok(LabeledMatrix::new(names.to_vec(), values))
}

#[derive(Debug, Serialize)]
pub struct MetricsJson {
    pub pairs: usize,
    pub positives: usize,
    pub auroc: Option<f64>,
    pub accuracy: f64,
    pub precision: f64,
    pub threshold: f64,
    pub threshold_rule: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub no_positive_predictions: bool,
}

fn metrics_json(s: &cic_core::evaluation::EvalSummary, labels: &[bool]) -> MetricsJson {
    MetricsJson {
        pairs: labels.len(),
        positives: labels.iter().filter(|l| **l).count(),
        auroc: s.auroc,
        accuracy: s.accuracy,
        precision: s.precision,
        threshold: s.threshold,
        threshold_rule: threshold_str(s.threshold_rule),
        tp: s.confusion.tp,
        fp: s.confusion.fp,
        tn: s.confusion.tn,
        fn_: s.confusion.fn_,
        no_positive_predictions: s.no_positive_predictions,
    }
}

pub fn cmd_evaluate(cfg: RunConfig, a: &EvaluateArgs) -> CliResult<()> {
    let rule = parse_threshold(&a.threshold)?;
    let scores = load_matrix(&a.scores)?;
    let truth = align(load_matrix(&a.truth)?, &scores.names, "truth")?;
    let n = scores.names.len();
    let mut values = scores.values.clone();
    for i in 0..n {
        values[(i, i)] = 0.0;
    }
    if let Some((i, j)) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && !values[(i, j)].is_finite())
    {
        return Err(CliError::Usage(format!(
            "score for {} -> {} is missing",
            scores.names[i], scores.names[j]
        )));
    }
    let net = ScoredNetwork::new(scores.names.clone(), values, vec![vec![None; n]; n])?;
    let truth_b = truth.to_bool();
    let labels = net.off_diagonal_labels(&truth_b)?;
    let summary = net.evaluate(&truth_b, rule)?;

    #[derive(Serialize)]
    struct Doc {
        causal: MetricsJson,
        #[serde(skip_serializing_if = "Option::is_none")]
        confounder: Option<MetricsJson>,
    }
    let confounder = match &a.confounders {
        Some(p) => {
            let conf = align(load_matrix(p)?, &scores.names, "confounder truth")?.to_bool();
            let s = net.evaluate_confounders(&conf, cfg.cic.m, cfg.cic.upper_m, rule)?;
            let mut lab = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    lab.push(conf[i][j] || conf[j][i]);
                }
            }
            Some(metrics_json(&s, &lab))
        }
        None => None,
    };
    let doc = Doc {
        causal: metrics_json(&summary, &labels),
        confounder,
    };
    let mut out = Outputs::new(&cfg.out)?;
    out.write("metrics.json", &to_json(&doc))?;
    let mut roc = String::from("fpr,tpr,threshold\n");
    if let Ok(curve) = roc_auc(&net.off_diagonal_scores(), &labels) {
        for p in &curve.points {
            roc.push_str(&format!("{},{},{}\n", fmt_f64(p.fpr), fmt_f64(p.tpr), fmt_f64(p.threshold)));
        }
    }
    out.write("roc.csv", &roc)?;
    match summary.auroc {
        Some(auc) => println!("AUROC {auc:.4}, accuracy {:.4}, precision {:.4}", summary.accuracy, summary.precision),
        None => println!("single-class truth; accuracy {:.4}", summary.accuracy),
    }
    #[derive(Serialize)]
    struct Echo<'a> {
        scores: &'a Path,
        truth: &'a Path,
        confounders: Option<&'a Path>,
        threshold: String,
    }
    out.finish(
        "evaluate",
        &cfg,
        &Echo {
            scores: &a.scores,
            truth: &a.truth,
            confounders: a.confounders.as_deref(),
            threshold: threshold_str(rule),
        },
    )
}

/// Finite-difference check on a model with one hidden layer of 8 units,
/// two private and two shared dimensions, and a 4-sample batch.
pub fn tiny_grad_check(seed: u64) -> cic_core::Result<f64> {
    use rand::SeedableRng;
    let cfg = CicConfig {
        d_private: 2,
        d_shared: 2,
        hidden: vec![8],
        seed,
        ..CicConfig::default()
    };
    let sim = simulate3(System3::Causal, 0.35, 0.001, 40, seed)?;
    let series = sim.series.zscore()?;
    let emb = cic_core::embedding::EmbeddingConfig::new(2, 1)?;
    let data = cic_core::embedding::embed_pair(&series, "x", "y", &emb)?.select(&[0, 7, 14, 21]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let model = CicModel::new(data.dim(), &cfg, &mut rng)?;
    let noise = BatchNoise::draw(4, 2, 2, &mut rng);
    let mut probe = model.clone();
    let (x, y) = (&data.cause_rows, &data.effect_rows);
    let check = grad_check(
        |p| {
            probe.set_params(p).expect("same layout");
            let (parts, g) = probe.loss_and_grad(x, y, &noise, &cfg, true).expect("shapes fixed");
            (parts.total, g.expect("requested"))
        },
        &model.params(),
        1e-6,
    );
    Ok(check.max_rel_error)
}

pub fn cmd_gradcheck(cfg: RunConfig, a: &GradcheckArgs) -> CliResult<()> {
    let err = tiny_grad_check(cfg.seed)?;
    println!("max relative error {err:e} (tolerance {:e})", a.tolerance);
    if err < a.tolerance {
        Ok(())
    } else {
        Err(CliError::GradCheck(err))
    }
}
