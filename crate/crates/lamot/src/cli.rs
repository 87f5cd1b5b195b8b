//! The `lamot` command line.
//!
//! Every setting can come from a flag or from a `key = value` file given
//! with `--config` (or named by `LAMOT_CONFIG`). Flags win. All values are
//! parsed and checked before a subcommand touches any file.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Arg, ArgMatches, Command};
use lamot_core::assoc::{solve_bruteforce, solve_exact, AssociationProblem};
use lamot_core::geometry::{crop_points, rasterize_bev, BevImage, DEFAULT_BEV_RESOLUTION};
use lamot_core::latency::LatencyModel;
use lamot_core::metrics::{clear_mot, MotReport, DEFAULT_IOU_THRESHOLD};
use lamot_core::nas::{
    init_search_space, pareto_front, CapacitySurrogate, CellKind, CellSpec, ParetoPoint,
    SearchBudget, SearchSpace, SpaceConfig, SweepBudget, TrainBudget,
};
use lamot_core::scoring::BaselineScorer;
use lamot_core::{run_sequence, Box3D, PointCloud, ScorerConfig, TrackerConfig};

use crate::config::{ConfigError, RunConfig, CONFIG_ENV};
use crate::fsutil::write_atomic;
use crate::kitti::{parse_sequence, write_tracking_results, LabeledSequence};
use crate::latency_file::{read_table, table_to_string};
use crate::profiling::{profile_table, MonotonicClock, DEFAULT_REPS, DEFAULT_WARMUP};
use crate::records::{emit_plot_data, format_point};
use crate::scores_file::{format_solution, parse_scores, random_scores};
use crate::sweep::{parallel_sweep, sweep_tasks};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_LAMBDAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Key {
    name: &'static str,
    help: &'static str,
}

const fn key(name: &'static str, help: &'static str) -> Key {
    Key { name, help }
}

const SPACE_KEYS: &[Key] = &[
    key("cells", "cell layout as kind:nodes items [default: normal:4,reduction:4]"),
    key("branches", "parallel branches sharing the encoding [default: 2]"),
    key("channels", "stem channel count [default: 8]"),
    key("resolution", "input resolution [default: 32]"),
];

const TRACK_KEYS: &[Key] = &[
    key("dets", "KITTI detection file"),
    key("out", "tracking result file"),
    key("sequence", "sequence id [default: file stem]"),
    key("t-birth", "consecutive hits before confirmation [default: 3]"),
    key("t-death", "consecutive misses before removal [default: 5]"),
    key("w-iou", "IoU weight of link scores [default: 1]"),
    key("w-app", "appearance weight of link scores [default: 1]"),
    key("w-det", "detection confidence weight [default: 1]"),
    key("terminal-score", "entry and exit score [default: -0.2]"),
    key("feature-dim", "appearance feature length [default: 32]"),
];

const EVALUATE_KEYS: &[Key] = &[
    key("gt", "KITTI ground-truth label file"),
    key("hyp", "KITTI tracking result file"),
    key("iou", "match threshold [default: 0.5]"),
    key("out", "also write the report here"),
];

const PROFILE_KEYS: &[Key] = &[
    key("out", "latency table file"),
    key("warmup", "untimed runs per op [default: 10]"),
    key("reps", "timed runs per op [default: 100]"),
    key("seed", "input data seed [default: 0]"),
];

const SEARCH_KEYS: &[Key] = &[
    key("table", "latency table file"),
    key("out", "Pareto front file"),
    key("log", "run log to append every evaluated point to"),
    key("plot-out", "two-column plot data file"),
    key("lambdas", "comma-separated latency weights [default: 0.01,0.1,1,10]"),
    key("seed", "search seed when `seeds` is not set [default: 0]"),
    key("seeds", "comma-separated search seeds"),
    key("jobs", "worker threads [default: 1]"),
    key("epochs", "stage-one epochs [default: 50]"),
    key("inner-iters", "parameter steps per epoch [default: 10]"),
    key("alpha-lr", "architecture step size [default: 0.05]"),
    key("theta-lr", "stage-one parameter step size [default: 0.01]"),
    key("tolerance", "stage-one early-stop threshold [default: 0]"),
    key("train-iters", "stage-two steps [default: 200]"),
    key("train-lr", "stage-two step size [default: 0.01]"),
    key("eval-interval", "stage-two validation interval [default: 10]"),
    key("params", "surrogate parameter count [default: 16]"),
    key("surrogate-seed", "surrogate seed [default: 0]"),
];

const ASSOC_KEYS: &[Key] = &[
    key("scores", "score set file; random scores when absent"),
    key("n-prev", "random instance rows [default: 3]"),
    key("n-curr", "random instance columns [default: 3]"),
    key("seed", "random instance seed [default: 0]"),
    key("solver", "exact or bruteforce [default: exact]"),
    key("out", "write the dump here instead of stdout"),
];

const BEV_KEYS: &[Key] = &[
    key("points", "point file, one `x y z` per line"),
    key("box", "x,y,z,height,width,length,yaw"),
    key("rows", "image rows [default: 256]"),
    key("cols", "image columns [default: 256]"),
    key("out", "PGM output file"),
];

struct Sub {
    name: &'static str,
    about: &'static str,
    groups: &'static [&'static [Key]],
}

const SUBCOMMANDS: &[Sub] = &[
    Sub {
        name: "track",
        about: "Track a detection sequence and write KITTI results",
        groups: &[TRACK_KEYS],
    },
    Sub {
        name: "evaluate",
        about: "CLEAR-MOT evaluation of results against ground truth",
        groups: &[EVALUATE_KEYS],
    },
    Sub {
        name: "profile-latency",
        about: "Measure the latency table of a search space",
        groups: &[PROFILE_KEYS, SPACE_KEYS],
    },
    Sub {
        name: "search",
        about: "Latency-aware architecture search over a lambda sweep",
        groups: &[SEARCH_KEYS, SPACE_KEYS],
    },
    Sub {
        name: "assoc-debug",
        about: "Solve one association problem and dump it",
        groups: &[ASSOC_KEYS],
    },
    Sub {
        name: "bev",
        about: "Rasterize the points inside a box as a PGM image",
        groups: &[BEV_KEYS],
    },
];

impl Sub {
    fn keys(&self) -> impl Iterator<Item = &Key> {
        self.groups.iter().flat_map(|g| g.iter())
    }

    fn key_names(&self) -> Vec<&'static str> {
        self.keys().map(|k| k.name).collect()
    }
}

pub fn build_cli() -> Command {
    let mut cmd = Command::new("lamot")
        .about("Latency-aware multi-object tracking toolkit")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in SUBCOMMANDS {
        let mut c = Command::new(sub.name).about(sub.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help(format!("key = value settings file [env: {CONFIG_ENV}]")),
        );
        for k in sub.keys() {
            c = c.arg(
                Arg::new(k.name)
                    .long(k.name)
                    .value_name("VALUE")
                    .num_args(1)
                    .help(k.help),
            );
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

/// Runs the command line with the process's standard streams.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn execute_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .expect("registered subcommand");
    match run(sub, sub_matches, out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let mut cmd = build_cli();
            let usage = cmd
                .find_subcommand_mut(name)
                .map(|c| c.render_usage().to_string())
                .unwrap_or_default();
            let _ = writeln!(err, "error: {msg}\n\n{usage}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

/// File settings overlaid with flags.
fn settings(sub: &Sub, m: &ArgMatches) -> CliResult<RunConfig> {
    let allowed = sub.key_names();
    let path = RunConfig::default_path(m.get_one::<String>("config").map(String::as_str));
    let mut cfg = match path {
        Some(p) => RunConfig::load(&p, &allowed)?,
        None => RunConfig::new(),
    };
    for k in &allowed {
        if let Some(v) = m.get_one::<String>(k) {
            cfg.set_flag(k, v.clone());
        }
    }
    Ok(cfg)
}

fn run(sub: &Sub, m: &ArgMatches, out: &mut dyn Write) -> CliResult<()> {
    let cfg = settings(sub, m)?;
    match sub.name {
        "track" => run_track(&TrackOpts::from_config(&cfg)?, out),
        "evaluate" => run_evaluate(&EvaluateOpts::from_config(&cfg)?, out),
        "profile-latency" => run_profile(&ProfileOpts::from_config(&cfg)?, out),
        "search" => run_search(&SearchOpts::from_config(&cfg)?, out),
        "assoc-debug" => run_assoc(&AssocOpts::from_config(&cfg)?, out),
        "bev" => run_bev(&BevOpts::from_config(&cfg)?, out),
        other => unreachable!("unhandled subcommand {other}"),
    }
}

fn path(cfg: &RunConfig, key: &str) -> Result<PathBuf, ConfigError> {
    cfg.require(key).map(PathBuf::from)
}

fn finite(cfg: &RunConfig, key: &str, default: f64) -> Result<f64, ConfigError> {
    let v = cfg.get_or(key, default)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(cfg.invalid(key, "must be finite"))
    }
}

fn positive<T>(cfg: &RunConfig, key: &str, default: T) -> Result<T, ConfigError>
where
    T: std::str::FromStr + PartialOrd + Default,
    T::Err: std::fmt::Display,
{
    let v = cfg.get_or(key, default)?;
    if v > T::default() {
        Ok(v)
    } else {
        Err(cfg.invalid(key, "must be positive"))
    }
}

fn read_labels(path: &Path) -> anyhow::Result<LabeledSequence> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_sequence(BufReader::new(file), id).with_context(|| format!("reading {}", path.display()))
}

fn save(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

// ---- track ----

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOpts {
    pub dets: PathBuf,
    pub out: PathBuf,
    pub sequence: Option<String>,
    pub tracker: TrackerConfig,
    pub scorer: ScorerConfig,
}

impl TrackOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let d = ScorerConfig::default();
        let t = TrackerConfig::default();
        let t_birth = positive(cfg, "t-birth", t.t_birth)?;
        let t_death = positive(cfg, "t-death", t.t_death)?;
        Ok(Self {
            dets: path(cfg, "dets")?,
            out: path(cfg, "out")?,
            sequence: cfg.get("sequence")?,
            tracker: TrackerConfig::new(t_birth, t_death)
                .map_err(|e| cfg.invalid("t-birth", e.to_string()))?,
            scorer: ScorerConfig {
                w_iou: finite(cfg, "w-iou", d.w_iou)?,
                w_app: finite(cfg, "w-app", d.w_app)?,
                w_det: finite(cfg, "w-det", d.w_det)?,
                terminal_score: finite(cfg, "terminal-score", d.terminal_score)?,
                feature_dim: positive(cfg, "feature-dim", d.feature_dim)?,
            },
        })
    }
}

fn run_track(o: &TrackOpts, out: &mut dyn Write) -> CliResult<()> {
    let mut labels = read_labels(&o.dets)?;
    if let Some(id) = &o.sequence {
        labels.sequence_id = id.clone();
    }
    let seq = labels.detections();
    let mut scorer = BaselineScorer::new(o.scorer);
    let tracks = run_sequence(&seq, &mut scorer, o.tracker)
        .with_context(|| format!("tracking {}", o.dets.display()))?;
    let mut buf = Vec::new();
    write_tracking_results(&tracks, &mut buf).context("formatting results")?;
    save(&o.out, &buf)?;
    let lines: usize = tracks.iter().map(|t| t.detections.len()).sum();
    writeln!(out, "sequence={} tracks={} lines={lines}", seq.sequence_id, tracks.len())
        .context("writing summary")?;
    Ok(())
}

// ---- evaluate ----

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOpts {
    pub gt: PathBuf,
    pub hyp: PathBuf,
    pub iou: f64,
    pub out: Option<PathBuf>,
}

impl EvaluateOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let iou = finite(cfg, "iou", DEFAULT_IOU_THRESHOLD)?;
        if !(iou > 0.0 && iou <= 1.0) {
            return Err(cfg.invalid("iou", "must lie in (0, 1]"));
        }
        Ok(Self {
            gt: path(cfg, "gt")?,
            hyp: path(cfg, "hyp")?,
            iou,
            out: cfg.get("out")?,
        })
    }
}

/// Aligned summary table followed by `KEY=value` lines.
pub fn format_report(r: &MotReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "MOTA", "GT", "FP", "FN", "IDSW", "MATCHES");
    let mota = r.mota.map_or_else(|| "n/a".to_string(), |m| format!("{m:.4}"));
    let _ = writeln!(
        s,
        "{mota:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        r.gt_count, r.fp, r.fn_, r.idsw, r.matches
    );
    let _ = writeln!(s, "MOTA={}", r.mota.map_or_else(|| "undefined".to_string(), |m| format!("{m:.4}")));
    let _ = writeln!(s, "GT={}", r.gt_count);
    let _ = writeln!(s, "FP={}", r.fp);
    let _ = writeln!(s, "FN={}", r.fn_);
    let _ = writeln!(s, "IDSW={}", r.idsw);
    let _ = writeln!(s, "MATCHES={}", r.matches);
    s
}

fn run_evaluate(o: &EvaluateOpts, out: &mut dyn Write) -> CliResult<()> {
    let gt = read_labels(&o.gt)?.boxes_by_frame();
    let hyp = read_labels(&o.hyp)?.boxes_by_frame();
    let report = clear_mot(&gt, &hyp, o.iou).map_err(|e| anyhow!("evaluation failed: {e}"))?;
    let text = format_report(&report);
    if let Some(p) = &o.out {
        save(p, text.as_bytes())?;
    }
    out.write_all(text.as_bytes()).context("writing report")?;
    Ok(())
}

// ---- shared search space ----

fn parse_cells(text: &str) -> Result<Vec<CellSpec>, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (kind, nodes) = item
                .split_once(':')
                .ok_or_else(|| format!("`{item}` is not kind:nodes"))?;
            let kind = match kind {
                "normal" | "n" => CellKind::Normal,
                "reduction" | "r" => CellKind::Reduction,
                _ => return Err(format!("unknown cell kind `{kind}`")),
            };
            let nodes = nodes
                .parse()
                .map_err(|_| format!("bad node count in `{item}`"))?;
            Ok(CellSpec { kind, nodes })
        })
        .collect()
}

fn space_from_config(cfg: &RunConfig) -> Result<SearchSpace, ConfigError> {
    let d = SpaceConfig::default();
    let cells = match cfg.raw("cells") {
        Some(text) => parse_cells(text).map_err(|e| cfg.invalid("cells", e))?,
        None => d.cells,
    };
    let space = SpaceConfig {
        cells,
        branches: positive(cfg, "branches", d.branches)?,
        stem_channels: positive(cfg, "channels", d.stem_channels)?,
        resolution: positive(cfg, "resolution", d.resolution)?,
    };
    init_search_space(space).map_err(|e| cfg.invalid("cells", e.to_string()))
}

// ---- profile-latency ----

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOpts {
    pub out: PathBuf,
    pub space: SearchSpace,
    pub warmup: u32,
    pub reps: u32,
    pub seed: u64,
}

impl ProfileOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            out: path(cfg, "out")?,
            space: space_from_config(cfg)?,
            warmup: cfg.get_or("warmup", DEFAULT_WARMUP)?,
            reps: positive(cfg, "reps", DEFAULT_REPS)?,
            seed: cfg.get_or("seed", 0)?,
        })
    }
}

fn run_profile(o: &ProfileOpts, out: &mut dyn Write) -> CliResult<()> {
    let configs = o.space.required_configs();
    let mut clock = MonotonicClock::new();
    let table = profile_table(&configs, &mut clock, o.warmup, o.reps, o.seed)
        .map_err(|e| anyhow!("profiling failed: {e}"))?;
    save(&o.out, table_to_string(&table).as_bytes())?;
    writeln!(out, "entries={}", table.len()).context("writing summary")?;
    Ok(())
}

// ---- search ----

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOpts {
    pub table: PathBuf,
    pub out: PathBuf,
    pub log: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub space: SearchSpace,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub budget: SweepBudget,
    pub params: usize,
    pub surrogate_seed: u64,
}

impl SearchOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let lambdas = cfg.list::<f64>("lambdas")?.unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(cfg.invalid("lambdas", "values must be finite and non-negative"));
        }
        let seeds = match cfg.list::<u64>("seeds")? {
            Some(s) => s,
            None => vec![cfg.get_or("seed", 0)?],
        };
        let s = SearchBudget::default();
        let t = TrainBudget::default();
        let search = SearchBudget {
            epochs: cfg.get_or("epochs", s.epochs)?,
            inner_iters: cfg.get_or("inner-iters", s.inner_iters)?,
            alpha_lr: finite(cfg, "alpha-lr", s.alpha_lr)?,
            theta_lr: finite(cfg, "theta-lr", s.theta_lr)?,
            tolerance: finite(cfg, "tolerance", s.tolerance)?,
        };
        let train = TrainBudget {
            iters: cfg.get_or("train-iters", t.iters)?,
            lr: finite(cfg, "train-lr", t.lr)?,
            eval_interval: positive(cfg, "eval-interval", t.eval_interval)?,
        };
        for (k, v) in [("alpha-lr", search.alpha_lr), ("theta-lr", search.theta_lr), ("train-lr", train.lr)] {
            if v <= 0.0 {
                return Err(cfg.invalid(k, "must be positive"));
            }
        }
        if search.tolerance < 0.0 {
            return Err(cfg.invalid("tolerance", "must be non-negative"));
        }
        Ok(Self {
            table: path(cfg, "table")?,
            out: path(cfg, "out")?,
            log: cfg.get("log")?,
            plot_out: cfg.get("plot-out")?,
            space: space_from_config(cfg)?,
            lambdas,
            seeds,
            jobs: positive(cfg, "jobs", 1)?,
            budget: SweepBudget { search, train },
            params: positive(cfg, "params", 16)?,
            surrogate_seed: cfg.get_or("surrogate-seed", 0)?,
        })
    }
}

fn points_text(points: &[ParetoPoint], space: &SearchSpace) -> String {
    points.iter().map(|p| format_point(p, space)).collect()
}

fn run_search(o: &SearchOpts, out: &mut dyn Write) -> CliResult<()> {
    let file = File::open(&o.table).with_context(|| format!("opening {}", o.table.display()))?;
    let table = read_table(BufReader::new(file)).with_context(|| format!("reading {}", o.table.display()))?;
    let space = &o.space;
    let model = LatencyModel::new(&table, space.candidate_ops(), &space.slots(), space.logit_count())
        .map_err(|e| anyhow!("latency table {} does not cover the space: {e}", o.table.display()))?;
    let evaluator = CapacitySurrogate::new(space.logit_count(), o.params, o.surrogate_seed);
    let tasks = sweep_tasks(&o.seeds, &o.lambdas);
    let points = parallel_sweep(space, &evaluator, &model, &tasks, &o.budget, o.jobs)
        .map_err(|e| anyhow!("search failed: {e}"))?;
    if points.is_empty() {
        return Err(anyhow!("every lambda failed; nothing to report").into());
    }
    let front = pareto_front(&points);

    let plot = match &o.plot_out {
        Some(_) => {
            let (kept, zero): (Vec<ParetoPoint>, Vec<ParetoPoint>) =
                front.iter().cloned().partition(|p| p.latency_ms > 0.0);
            if !zero.is_empty() {
                log::warn!("{} zero-latency front point(s) left out of the plot data", zero.len());
            }
            let mut buf = Vec::new();
            emit_plot_data(&kept, &mut buf).context("formatting plot data")?;
            Some(buf)
        }
        None => None,
    };
    let log_text = match &o.log {
        Some(p) => {
            let mut text = match fs::read_to_string(p) {
                Ok(t) => t,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
                Err(e) => return Err(anyhow!("reading {}: {e}", p.display()).into()),
            };
            if !text.is_empty() && !text.ends_with('\n') {
                text.push('\n');
            }
            text.push_str(&points_text(&points, space));
            Some(text)
        }
        None => None,
    };

    save(&o.out, points_text(&front, space).as_bytes())?;
    if let (Some(p), Some(bytes)) = (&o.plot_out, plot) {
        save(p, &bytes)?;
    }
    if let (Some(p), Some(text)) = (&o.log, log_text) {
        save(p, text.as_bytes())?;
    }
    writeln!(out, "evaluated={} front={}", points.len(), front.len()).context("writing summary")?;
    Ok(())
}

// ---- assoc-debug ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Bruteforce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssocOpts {
    pub scores: Option<PathBuf>,
    pub n_prev: usize,
    pub n_curr: usize,
    pub seed: u64,
    pub solver: Solver,
    pub out: Option<PathBuf>,
}

impl AssocOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let solver = match cfg.raw("solver").unwrap_or("exact") {
            "exact" => Solver::Exact,
            "bruteforce" => Solver::Bruteforce,
            _ => return Err(cfg.invalid("solver", "expected `exact` or `bruteforce`")),
        };
        Ok(Self {
            scores: cfg.get("scores")?,
            n_prev: cfg.get_or("n-prev", 3)?,
            n_curr: cfg.get_or("n-curr", 3)?,
            seed: cfg.get_or("seed", 0)?,
            solver,
            out: cfg.get("out")?,
        })
    }
}

fn run_assoc(o: &AssocOpts, out: &mut dyn Write) -> CliResult<()> {
    let scores = match &o.scores {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_scores(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
        None => random_scores(o.n_prev, o.n_curr, o.seed),
    };
    let problem = AssociationProblem::new(scores);
    let sol = match o.solver {
        Solver::Exact => solve_exact(&problem),
        Solver::Bruteforce => solve_bruteforce(&problem).map_err(|e| anyhow!("{e}"))?,
    };
    let text = format_solution(&problem, &sol);
    match &o.out {
        Some(p) => save(p, text.as_bytes())?,
        None => out.write_all(text.as_bytes()).context("writing dump")?,
    }
    Ok(())
}

// ---- bev ----

#[derive(Debug, Clone, PartialEq)]
pub struct BevOpts {
    pub points: PathBuf,
    pub bbox: Box3D,
    pub rows: usize,
    pub cols: usize,
    pub out: PathBuf,
}

impl BevOpts {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let v = cfg
            .list::<f64>("box")?
            .ok_or_else(|| ConfigError::Missing("box".into()))?;
        let [x, y, z, h, w, l, yaw] = v[..] else {
            return Err(cfg.invalid("box", "expected 7 comma-separated numbers"));
        };
        let bbox = Box3D::new([x, y, z], [h, w, l], yaw).map_err(|e| cfg.invalid("box", e.to_string()))?;
        Ok(Self {
            points: path(cfg, "points")?,
            bbox,
            rows: positive(cfg, "rows", DEFAULT_BEV_RESOLUTION.0)?,
            cols: positive(cfg, "cols", DEFAULT_BEV_RESOLUTION.1)?,
            out: path(cfg, "out")?,
        })
    }
}

pub fn parse_points(text: &str) -> Result<PointCloud, String> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| format!("line {}: not a number", i + 1))?;
        match v[..] {
            [x, y, z] if v.iter().all(|c| c.is_finite()) => points.push([x, y, z]),
            _ => return Err(format!("line {}: expected `x y z`", i + 1)),
        }
    }
    Ok(PointCloud::new(points))
}

/// Plain PGM (P2), heights mapped linearly onto 0..=255.
pub fn format_pgm(img: &BevImage) -> String {
    let lo = img.cells().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = img.cells().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut s = format!("P2\n{} {}\n255\n", img.cols(), img.rows());
    for r in 0..img.rows() {
        let row: Vec<String> = (0..img.cols())
            .map(|c| {
                let g = if span > 0.0 { (img.get(r, c) - lo) / span * 255.0 } else { 0.0 };
                format!("{}", g.round() as u8)
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn run_bev(o: &BevOpts, out: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(&o.points).with_context(|| format!("reading {}", o.points.display()))?;
    let cloud = parse_points(&text).map_err(|e| anyhow!("{}: {e}", o.points.display()))?;
    let inside = crop_points(&cloud, &o.bbox);
    let img = rasterize_bev(&inside, &o.bbox, (o.rows, o.cols)).map_err(|e| anyhow!("{e}"))?;
    save(&o.out, format_pgm(&img).as_bytes())?;
    writeln!(out, "points={} inside={}", cloud.len(), inside.len()).context("writing summary")?;
    Ok(())
}
