//! Monte-Carlo experiments: JSON configs, seeded trials, CSV and JSON output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{characteristic_time, problem_value, simplex_grid, DEFAULT_XF_TOL};
use crate::engine::{run_trial, specialize, RoundRecord, TrialConfig, TrialResult};
use crate::error::{Error, Result};
use crate::expfam::FamilySpec;
use crate::oracles::{covering_bound, verify_assumption_conv, ConvGrids, ConvReport, CoverBoundReport};
use crate::problems::{answer_grid, compose, AnswerPoint, ModelBox, Problem};
use crate::selection::{RuleKind, XfTable};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "STICKY_SEQ_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    IdentityRegression {
        #[serde(default = "one")]
        arms: usize,
        eps: f64,
    },
    MaxRegression {
        arms: usize,
        eps: f64,
    },
    Bai {
        arms: usize,
    },
    EpsilonBai {
        arms: usize,
        eps: f64,
    },
    ProductOfTwo {
        first: Box<ProblemSpec>,
        second: Box<ProblemSpec>,
    },
}

fn one() -> usize {
    1
}

impl ProblemSpec {
    pub fn build(&self, family: FamilySpec) -> Result<Problem> {
        let boxed = |k: usize| ModelBox::uniform(&family, k);
        match self {
            Self::IdentityRegression { arms, eps } => {
                Problem::identity_regression(family, boxed(*arms), *eps)
            }
            Self::MaxRegression { arms, eps } => Problem::max_regression(family, boxed(*arms), *eps),
            Self::Bai { arms } => Problem::best_arm(family, boxed(*arms)),
            Self::EpsilonBai { arms, eps } => Problem::eps_good(family, boxed(*arms), *eps),
            Self::ProductOfTwo { first, second } => {
                compose(&first.build(family)?, &second.build(family)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub answer_resolution: f64,
    pub model_resolution: f64,
    #[serde(default)]
    pub rho_min: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            answer_resolution: 0.01,
            model_resolution: 0.05,
            rho_min: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityConfig {
    /// Run the check before the experiment and abort on failure.
    pub enabled: bool,
    pub rho: f64,
    pub eps_target: f64,
    pub models_per_axis: usize,
    pub simplex_divisions: usize,
    pub answer_resolution: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            rho: 0.01,
            eps_target: 0.01,
            models_per_axis: 5,
            simplex_divisions: 4,
            answer_resolution: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub family: FamilySpec,
    pub mu: Vec<f64>,
    pub deltas: Vec<f64>,
    pub rules: Vec<RuleKind>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub regularity: RegularityConfig,
    #[serde(default)]
    pub max_rounds: Option<u64>,
    #[serde(default = "default_xf_tol")]
    pub xf_tol: f64,
    #[serde(default)]
    pub c_tilde: f64,
    #[serde(default = "default_g")]
    pub g_const: f64,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_xf_tol() -> f64 {
    DEFAULT_XF_TOL
}

fn default_g() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending field and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("field `{path}`: {inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("`trials` must be at least 1".into());
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("`deltas` must be a nonempty list of values in (0, 1)".into());
        }
        if self.rules.is_empty() {
            return bad("`rules` must not be empty".into());
        }
        let g = self.grid;
        if !(g.answer_resolution > 0.0 && g.model_resolution > 0.0)
            || g.rho_min.is_some_and(|r| !(r > 0.0))
        {
            return bad("`grid` resolutions must be positive".into());
        }
        if !(self.xf_tol >= 0.0) || !(self.g_const > 0.0) || !(self.c_tilde >= 0.0) {
            return bad("`xf_tol`, `c_tilde` must be >= 0 and `g_const` > 0".into());
        }
        let problem = self.problem.build(self.family).map_err(|e| Error::Config(format!("`problem`: {e}")))?;
        if self.mu.len() != problem.arms() || !problem.model_box.contains(&self.mu) {
            return bad(format!(
                "`mu` must have {} entries inside the mean interval",
                problem.arms()
            ));
        }
        if let Some(m) = self.max_rounds {
            if m < problem.arms() as u64 {
                return bad("`max_rounds` must be at least the number of arms".into());
            }
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        self.problem.build(self.family)
    }
}

/// Seed of one trial, a function of `(base_seed, rule, δ index, trial)` only.
pub fn trial_seed(base_seed: u64, rule: RuleKind, delta_index: usize, trial: usize) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&base_seed.to_le_bytes());
    feed(rule.name().as_bytes());
    feed(&(delta_index as u64).to_le_bytes());
    feed(&(trial as u64).to_le_bytes());
    // splitmix64 finalizer
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub rule: RuleKind,
    pub delta: f64,
    pub trial: usize,
    pub seed: u64,
    pub tau: u64,
    pub capped: bool,
    pub correct: bool,
    pub recommendation: AnswerPoint,
    pub tracking_violations: u64,
    pub solver_failures: u64,
    #[serde(skip)]
    pub trace: Option<Vec<RoundRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub rule: RuleKind,
    pub label: String,
    pub delta: f64,
    pub trials: usize,
    pub mean_tau: f64,
    pub std_tau: f64,
    pub ratio: f64,
    pub t_star: f64,
    pub ratio_over_tstar: f64,
    pub error_rate: f64,
    pub capped: usize,
    pub tracking_violations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub cells: Vec<CellSummary>,
    pub rows: Vec<TrialRow>,
    pub t_star: Option<f64>,
}

impl ExperimentOutput {
    pub fn tracking_violations(&self) -> u64 {
        self.rows.iter().map(|r| r.tracking_violations).sum()
    }
}

/// Mean and sample standard deviation of `τ` over uncapped trials, and their
/// error rate.
fn summarize(rows: &[TrialRow]) -> (f64, f64, f64) {
    let kept: Vec<&TrialRow> = rows.iter().filter(|r| !r.capped).collect();
    let n = kept.len() as f64;
    if kept.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = kept.iter().map(|r| r.tau as f64).sum::<f64>() / n;
    let var = if kept.len() > 1 {
        kept.iter().map(|r| (r.tau as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let errors = kept.iter().filter(|r| !r.correct).count() as f64;
    (mean, var.sqrt(), errors / n)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let problem = Arc::new(config.build_problem()?);
    if config.regularity.enabled {
        let report = regularity_check(config)?;
        if !report.pass {
            return Err(Error::Invariant(format!(
                "regularity pre-flight failed (max gap {:.3e}, identifiable: {})",
                report.conv.max_gap, report.identifiable
            )));
        }
    }
    let t_star = characteristic_time(&problem, &config.mu, config.grid.answer_resolution).ok();
    let table = if config.rules.iter().any(|r| r.needs_candidates()) {
        Some(Arc::new(XfTable::build(
            &problem,
            config.grid.model_resolution,
            config.grid.answer_resolution,
            config.xf_tol,
        )?))
    } else {
        None
    };

    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &rule in &config.rules {
        for (di, &delta) in config.deltas.iter().enumerate() {
            let mut base = TrialConfig::new(problem.clone(), config.mu.clone(), delta, rule);
            base.xf_tol = config.xf_tol;
            base.answer_resolution = config.grid.answer_resolution;
            base.model_resolution = config.grid.model_resolution;
            base.rho_min = config.grid.rho_min;
            base.c_tilde = config.c_tilde;
            base.g_const = config.g_const;
            base.trace = config.trace;
            base.candidates = table.clone();
            base.max_rounds = Some(config.max_rounds.unwrap_or_else(|| base.default_max_rounds()));
            let cell_rows = (0..config.trials)
                .into_par_iter()
                .map(|i| {
                    let seed = trial_seed(config.base_seed, rule, di, i);
                    let cfg = TrialConfig { seed, ..base.clone() };
                    run_trial(&cfg).map(|r| to_row(rule, delta, i, seed, r))
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, std, err) = summarize(&cell_rows);
            let ratio = mean / (1.0 / delta).ln();
            let ts = t_star.unwrap_or(f64::NAN);
            cells.push(CellSummary {
                rule,
                label: specialize(rule),
                delta,
                trials: config.trials,
                mean_tau: mean,
                std_tau: std,
                ratio,
                t_star: ts,
                ratio_over_tstar: ratio / ts,
                error_rate: err,
                capped: cell_rows.iter().filter(|r| r.capped).count(),
                tracking_violations: cell_rows.iter().map(|r| r.tracking_violations).sum(),
            });
            rows.extend(cell_rows);
        }
    }
    Ok(ExperimentOutput { cells, rows, t_star })
}

fn to_row(rule: RuleKind, delta: f64, trial: usize, seed: u64, r: TrialResult) -> TrialRow {
    TrialRow {
        rule,
        delta,
        trial,
        seed,
        tau: r.tau,
        capped: r.capped,
        correct: r.correct,
        recommendation: r.recommendation,
        tracking_violations: r.tracking_violations,
        solver_failures: r.solver_failures,
        trace: r.trace,
    }
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "rule",
    "delta",
    "trials",
    "mean_tau",
    "std_tau",
    "ratio",
    "t_star",
    "ratio_over_tstar",
    "error_rate",
    "capped",
];

pub fn summary_csv(cells: &[CellSummary]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for c in cells {
        w.write_record([
            c.rule.name().to_string(),
            c.delta.to_string(),
            c.trials.to_string(),
            c.mean_tau.to_string(),
            c.std_tau.to_string(),
            c.ratio.to_string(),
            c.t_star.to_string(),
            c.ratio_over_tstar.to_string(),
            c.error_rate.to_string(),
            c.capped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn trials_csv(rows: &[TrialRow]) -> Result<Vec<u8>> {
    let dim = rows.first().map_or(0, |r| r.recommendation.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["rule", "delta", "trial", "seed", "tau", "capped", "correct"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=dim).map(|i| format!("recommendation_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.rule.name().to_string(),
            r.delta.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.tau.to_string(),
            r.capped.to_string(),
            r.correct.to_string(),
        ];
        rec.extend(r.recommendation.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    created_unix: u64,
    version: &'static str,
    workers: usize,
    labels: Vec<(RuleKind, String)>,
    t_star: Option<f64>,
    tracking_violations: u64,
    solver_failures: u64,
    cells: &'a [CellSummary],
    config: &'a ExperimentConfig,
}

/// Writes `summary.csv`, `trials.csv`, `metadata.json` and, when traces were
/// recorded, `traces.jsonl` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("summary.csv"), &summary_csv(&out.cells)?)?;
    write_atomic(&dir.join("trials.csv"), &trials_csv(&out.rows)?)?;
    let meta = Metadata {
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        version: env!("CARGO_PKG_VERSION"),
        workers: worker_count(),
        labels: config.rules.iter().map(|&r| (r, specialize(r))).collect(),
        t_star: out.t_star,
        tracking_violations: out.tracking_violations(),
        solver_failures: out.rows.iter().map(|r| r.solver_failures).sum(),
        cells: &out.cells,
        config,
    };
    write_atomic(&dir.join("metadata.json"), &serde_json::to_vec_pretty(&meta)?)?;
    if out.rows.iter().any(|r| r.trace.is_some()) {
        let mut buf = Vec::new();
        for r in &out.rows {
            #[derive(Serialize)]
            struct Line<'a> {
                rule: RuleKind,
                delta: f64,
                trial: usize,
                rounds: &'a [RoundRecord],
            }
            let line = Line {
                rule: r.rule,
                delta: r.delta,
                trial: r.trial,
                rounds: r.trace.as_deref().unwrap_or(&[]),
            };
            serde_json::to_writer(&mut buf, &line)?;
            buf.push(b'\n');
        }
        write_atomic(&dir.join("traces.jsonl"), &buf)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub conv: ConvReport,
    /// `D(μ)` at the configured ground truth.
    pub value: f64,
    pub identifiable: bool,
    pub pass: bool,
}

/// Ball-regularity check on coarse grids plus identifiability at `μ`.
pub fn regularity_check(config: &ExperimentConfig) -> Result<RegularityReport> {
    let problem = config.build_problem()?;
    let rc = config.regularity;
    let mb = &problem.model_box;
    let n = rc.models_per_axis.max(2);
    let axes: Vec<Vec<f64>> = (0..problem.arms())
        .map(|k| {
            let (lo, hi) = (mb.lo()[k], mb.hi()[k]);
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        })
        .collect();
    let mut models: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        models = models
            .into_iter()
            .flat_map(|m| {
                axis.iter().map(move |&v| {
                    let mut m = m.clone();
                    m.push(v);
                    m
                })
            })
            .collect();
    }
    let grids = ConvGrids {
        models,
        weights: simplex_grid(problem.arms(), rc.simplex_divisions.max(1)),
        answers: answer_grid(problem.answer_space(), rc.answer_resolution)?,
        ball_resolution: rc.answer_resolution.min(rc.rho.max(1e-9) / 2.0),
    };
    let conv = verify_assumption_conv(&problem, rc.rho, rc.eps_target, &grids)?;
    let value = match problem_value(&problem, &config.mu, config.grid.answer_resolution, config.xf_tol) {
        Ok(s) => s.value,
        Err(Error::Infeasible(_)) | Err(Error::NonIdentifiable(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let identifiable = value > crate::divergence::IDENTIFIABILITY_TOL;
    Ok(RegularityReport {
        pass: conv.pass && identifiable,
        conv,
        value,
        identifiable,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TStarReport {
    pub t_star: f64,
    pub value: f64,
    pub weights: Vec<f64>,
    pub argmax: AnswerPoint,
    pub xf: Vec<AnswerPoint>,
}

pub fn tstar_report(config: &ExperimentConfig) -> Result<TStarReport> {
    let problem = config.build_problem()?;
    let s = problem_value(&problem, &config.mu, config.grid.answer_resolution, config.xf_tol)?;
    if s.value <= crate::divergence::IDENTIFIABILITY_TOL {
        return Err(Error::NonIdentifiable(s.value));
    }
    Ok(TStarReport {
        t_star: 1.0 / s.value,
        value: s.value,
        weights: s.weights,
        argmax: s.argmax,
        xf: s.xf,
    })
}

/// Covering bound at `rho`, with pieces resolved at a quarter of the radius
/// or the configured answer resolution, whichever is finer.
pub fn cover_bound_report(config: &ExperimentConfig, rho: f64) -> Result<CoverBoundReport> {
    let problem = config.build_problem()?;
    let res = config.grid.answer_resolution.min(rho / 4.0);
    covering_bound(&problem, &config.mu, rho, res)
}
