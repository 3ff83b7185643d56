//! One trial of Sticky-Sequence Track-and-Stop.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::divergence::{
    characteristic_time, easiest_from_grid, oracle_weights_grid, oracle_weights_with,
    SolverOptions, DEFAULT_XF_TOL,
};
use crate::error::{domain, Result};
use crate::problems::{answer_grid, AnswerPoint, Problem};
use crate::selection::{select, ConfidenceQuery, RuleKind, SelectionState, XfTable};
use crate::stopping::{decide, glr_stat, threshold, Decision, ThresholdParams};
use crate::tracking::{clip_project, epsilon_schedule, TrackerState};

/// Cap used when `T*(μ)` cannot be computed.
pub const HARD_ROUND_CAP: u64 = 1_000_000;

/// Simplex divisions of the dense-grid fallback solver.
const FALLBACK_DIVISIONS: usize = 100;

#[derive(Clone, Debug)]
pub struct TrialConfig {
    pub problem: Arc<Problem>,
    pub mu: Vec<f64>,
    pub delta: f64,
    pub rule: RuleKind,
    pub solver: SolverOptions,
    pub xf_tol: f64,
    pub answer_resolution: f64,
    pub model_resolution: f64,
    /// Radius floor of the adaptive rule; `None` is half the answer pitch.
    pub rho_min: Option<f64>,
    pub c_tilde: f64,
    pub g_const: f64,
    /// `None` derives the default cap from `T*(μ)`.
    pub max_rounds: Option<u64>,
    pub seed: u64,
    pub trace: bool,
    /// With stopping disabled the trial runs exactly `max_rounds` rounds.
    pub stopping: bool,
    /// Shared candidate table; built on demand when a rule needs one.
    pub candidates: Option<Arc<XfTable>>,
}

impl TrialConfig {
    pub fn new(problem: Arc<Problem>, mu: Vec<f64>, delta: f64, rule: RuleKind) -> Self {
        Self {
            problem,
            mu,
            delta,
            rule,
            solver: SolverOptions::default(),
            xf_tol: DEFAULT_XF_TOL,
            answer_resolution: 0.01,
            model_resolution: 0.05,
            rho_min: None,
            c_tilde: 0.0,
            g_const: 1.0,
            max_rounds: None,
            seed: 0,
            trace: false,
            stopping: true,
            candidates: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.problem.arms();
        if self.mu.len() != k || !self.problem.model_box.contains(&self.mu) {
            return domain("ground-truth model must have K arms inside the model box");
        }
        ThresholdParams::new(self.delta, k, self.c_tilde)?;
        if !(self.g_const > 0.0) {
            return domain("g_const must be positive");
        }
        if self.rho_min.is_some_and(|r| !(r > 0.0)) {
            return domain("rho_min must be positive");
        }
        if let Some(m) = self.max_rounds {
            if m < k as u64 {
                return domain("max_rounds must be at least K");
            }
        }
        Ok(())
    }

    /// Half the answer pitch by default: the deepest cover then has the
    /// answer-grid pitch, so its balls are single grid cells.
    pub fn rho_min(&self) -> f64 {
        self.rho_min.unwrap_or(self.answer_resolution / 2.0)
    }

    /// `10 ⌈T*(μ) (ln(1/δ) + 10K)⌉`, or [`HARD_ROUND_CAP`].
    pub fn default_max_rounds(&self) -> u64 {
        let k = self.problem.arms() as f64;
        match characteristic_time(&self.problem, &self.mu, self.answer_resolution) {
            Ok(ts) => {
                let r = 10.0 * (ts * ((1.0 / self.delta).ln() + 10.0 * k)).ceil();
                (r as u64).clamp(self.problem.arms() as u64, HARD_ROUND_CAP)
            }
            Err(_) => HARD_ROUND_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: u64,
    pub x: AnswerPoint,
    pub candidates: usize,
    pub sbar: usize,
    pub stage: usize,
    pub arm: usize,
    pub stat: f64,
    pub beta: f64,
    pub tail_start: u64,
    pub fallback: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub tau: u64,
    pub recommendation: AnswerPoint,
    pub correct: bool,
    pub capped: bool,
    pub trace: Option<Vec<RoundRecord>>,
    pub tracking_violations: u64,
    pub solver_failures: u64,
    pub counts: Vec<u64>,
}

pub fn specialize(rule: RuleKind) -> String {
    match rule {
        RuleKind::Tas => "Track-and-Stop".to_string(),
        RuleKind::StickyOrder => "Sticky Track-and-Stop".to_string(),
        other => format!("Sticky-Sequence TaS ({other})"),
    }
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    let problem = &*config.problem;
    let fam = &problem.family;
    let k = problem.arms();
    let max_rounds = config.max_rounds.unwrap_or_else(|| config.default_max_rounds());
    let params = ThresholdParams::new(config.delta, k, config.c_tilde)?;
    let grid = answer_grid(problem.answer_space(), config.answer_resolution)?;
    let table = match (&config.candidates, config.rule.needs_candidates()) {
        (Some(t), _) => Some(t.clone()),
        (None, true) => Some(Arc::new(XfTable::build(
            problem,
            config.model_resolution,
            config.answer_resolution,
            config.xf_tol,
        )?)),
        (None, false) => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tracker = TrackerState::new(k);
    let mut sums = vec![0.0; k];
    let mut selection = SelectionState::new(config.rule, config.rho_min());
    let mut trace = config.trace.then(Vec::new);
    let mut failures = 0u64;

    let mu_hat = |sums: &[f64], counts: &[u64]| -> Vec<f64> {
        let raw: Vec<f64> = sums.iter().zip(counts).map(|(s, &n)| s / n as f64).collect();
        problem.model_box.clamp(&raw)
    };
    let pull = |arm: usize, rng: &mut ChaCha8Rng, sums: &mut [f64]| {
        sums[arm] += fam.sample_raw(config.mu[arm], rng);
    };

    for _ in 0..k {
        let arm = tracker.warm_up_step();
        pull(arm, &mut rng, &mut sums);
    }

    let finish = |tau: u64, rec: AnswerPoint, capped: bool, tracker: &TrackerState, trace, failures| {
        Ok(TrialResult {
            tau,
            correct: problem.kind.is_correct(&config.mu, &rec),
            recommendation: rec,
            capped,
            trace,
            tracking_violations: tracker.violations,
            solver_failures: failures,
            counts: tracker.counts.clone(),
        })
    };

    loop {
        let t = tracker.t;
        let m = mu_hat(&sums, &tracker.counts);
        let counts: Vec<f64> = tracker.counts.iter().map(|&n| n as f64).collect();
        let (stat, argmax) = glr_stat(problem, &m, &counts, &grid)?;
        let beta = threshold(&params, t);
        if config.stopping {
            if let Decision::Stop(rec) = decide(stat, &argmax, beta) {
                return finish(t, rec, false, &tracker, trace, failures);
            }
        }
        if t >= max_rounds {
            return finish(t, argmax, config.stopping, &tracker, trace, failures);
        }

        // Round t + 1: select, solve, project, track, pull.
        let (_, xf_hat, xf_sols) = easiest_from_grid(problem, &m, &grid, config.xf_tol, &config.solver)?;
        let candidates = match &table {
            Some(tab) if config.rule.needs_candidates() => {
                let q = ConfidenceQuery {
                    mu_hat: &m,
                    counts: &counts,
                    t,
                    g_const: config.g_const,
                };
                tab.candidates(fam, &q, &xf_hat)
            }
            _ => Vec::new(),
        };
        let x = select(&mut selection, &candidates, &xf_hat, problem.answer_space())?;
        let subset = std::slice::from_ref(&x);
        let mut fallback = false;
        let solved = match xf_hat.iter().position(|y| *y == x) {
            Some(i) => Ok(xf_sols[i].clone()),
            None => oracle_weights_with(problem, &m, subset, &config.solver),
        };
        let w = match solved {
            Ok((_, w)) => w,
            Err(_) => {
                failures += 1;
                fallback = true;
                match oracle_weights_grid(problem, &m, subset, FALLBACK_DIVISIONS) {
                    Ok((_, w)) => w,
                    Err(_) => vec![1.0 / k as f64; k],
                }
            }
        };
        let w = clip_project(&w, epsilon_schedule(t + 1, k))?;
        let arm = tracker.step(&w);
        pull(arm, &mut rng, &mut sums);

        if let Some(tr) = trace.as_mut() {
            tr.push(RoundRecord {
                t: t + 1,
                x,
                candidates: candidates.len(),
                sbar: selection.last_sbar,
                stage: selection.history.len(),
                arm,
                stat,
                beta,
                tail_start: crate::selection::tail_start(t + 1),
                fallback,
                truncated: selection.last_truncated,
            });
        }
    }
}
