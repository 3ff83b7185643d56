//! Confidence regions, candidate answer sets and answer-selection rules.
//!
//! The candidate set `X_t = ∪_{μ' ∈ C_t} X_F(μ')` is approximated on a model
//! grid. `X_F` of every grid model is computed once into an [`XfTable`] and
//! shared read-only between trials.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{easiest_from_grid, SolverOptions};
use crate::error::{domain, Error, Result};
use crate::expfam::FamilySpec;
use crate::problems::{
    answer_grid, cover_centers_containing, lex_cmp, linf, AnswerPoint, AnswerSpace, Problem,
    GEOM_SLACK,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Tas,
    StickyOrder,
    MinReal,
    NearestPrev,
    Adaptive,
}

impl RuleKind {
    pub const ALL: [RuleKind; 5] = [
        RuleKind::Tas,
        RuleKind::StickyOrder,
        RuleKind::MinReal,
        RuleKind::NearestPrev,
        RuleKind::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Tas => "tas",
            RuleKind::StickyOrder => "sticky-order",
            RuleKind::MinReal => "min-real",
            RuleKind::NearestPrev => "nearest-prev",
            RuleKind::Adaptive => "adaptive",
        }
    }

    /// Whether the rule consumes the candidate set `X_t`.
    pub fn needs_candidates(self) -> bool {
        self != RuleKind::Tas
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown selection rule `{s}`")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConfidenceQuery<'a> {
    pub mu_hat: &'a [f64],
    pub counts: &'a [f64],
    pub t: u64,
    pub g_const: f64,
}

impl ConfidenceQuery<'_> {
    /// `ln g(t) = ln C + 10 ln t`.
    pub fn radius(&self) -> f64 {
        self.g_const.ln() + 10.0 * (self.t.max(1) as f64).ln()
    }
}

/// `Σ_k N_k d(μ̂_k, μ'_k) ≤ ln g(t)`.
pub fn in_confidence(family: &FamilySpec, query: &ConfidenceQuery<'_>, mu: &[f64]) -> bool {
    let lhs: f64 = query
        .mu_hat
        .iter()
        .zip(mu)
        .zip(query.counts)
        .map(|((a, b), n)| n * family.kl_raw(*a, *b))
        .sum();
    lhs <= query.radius()
}

/// `h(t) = ⌈√t⌉`.
pub fn tail_start(t: u64) -> u64 {
    (t as f64).sqrt().ceil() as u64
}

/// `X_F(μ')` for every point `μ'` of a model grid, as indices into the
/// answer grid.
#[derive(Debug)]
pub struct XfTable {
    pub model_resolution: f64,
    pub answer_resolution: f64,
    pub xf_tol: f64,
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    answers: Vec<AnswerPoint>,
    entries: Vec<Vec<u32>>,
}

impl XfTable {
    pub fn build(
        problem: &Problem,
        model_resolution: f64,
        answer_resolution: f64,
        xf_tol: f64,
    ) -> Result<Self> {
        let mb = &problem.model_box;
        let axes: Vec<Vec<f64>> = (0..problem.arms())
            .map(|k| mb.axis(k, model_resolution))
            .collect();
        let models = mb.grid(model_resolution)?;
        let answers = answer_grid(problem.answer_space(), answer_resolution)?;
        if answers.len() > u32::MAX as usize {
            return Err(Error::ResourceCap("answer grid too large to index".into()));
        }
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        let opts = SolverOptions::default();
        let entries = models
            .par_iter()
            .map(|m| {
                let (_, xf, _) = easiest_from_grid(problem, m, &answers, xf_tol, &opts)?;
                Ok(xf
                    .iter()
                    .filter_map(|x| index_of(&answers, x).map(|i| i as u32))
                    .collect())
            })
            .collect::<Result<Vec<Vec<u32>>>>()?;
        Ok(Self {
            model_resolution,
            answer_resolution,
            xf_tol,
            axes,
            strides,
            answers,
            entries,
        })
    }

    pub fn answers(&self) -> &[AnswerPoint] {
        &self.answers
    }

    pub fn model_points(&self) -> usize {
        self.entries.len()
    }

    /// Deduplicated, lexicographically ordered approximation of `X_t`, always
    /// containing `xf_hat = X_F(μ̂)`.
    pub fn candidates(
        &self,
        family: &FamilySpec,
        query: &ConfidenceQuery<'_>,
        xf_hat: &[AnswerPoint],
    ) -> Vec<AnswerPoint> {
        let r = query.radius();
        let k = self.axes.len();
        // Per-arm feasible index ranges: each term of the sum alone must fit.
        let mut ranges = Vec::with_capacity(k);
        let mut costs: Vec<Vec<f64>> = Vec::with_capacity(k);
        for a in 0..k {
            let c: Vec<f64> = self.axes[a]
                .iter()
                .map(|v| query.counts[a] * family.kl_raw(query.mu_hat[a], *v))
                .collect();
            let first = c.iter().position(|&x| x <= r);
            let last = c.iter().rposition(|&x| x <= r);
            match (first, last) {
                (Some(f), Some(l)) => ranges.push((f, l)),
                _ => {
                    ranges.clear();
                    break;
                }
            }
            costs.push(c);
        }
        let mut bits = vec![0u64; self.answers.len().div_ceil(64)];
        if ranges.len() == k {
            let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                let total: f64 = (0..k).map(|a| costs[a][idx[a]]).sum();
                if total <= r {
                    let flat: usize = idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
                    for &j in &self.entries[flat] {
                        bits[j as usize / 64] |= 1 << (j % 64);
                    }
                }
                for a in (0..k).rev() {
                    idx[a] += 1;
                    if idx[a] <= ranges[a].1 {
                        continue 'outer;
                    }
                    idx[a] = ranges[a].0;
                }
                break;
            }
        }
        let mut extra = Vec::new();
        for x in xf_hat {
            match index_of(&self.answers, x) {
                Some(j) => bits[j / 64] |= 1 << (j % 64),
                None => extra.push(x.clone()),
            }
        }
        let mut out: Vec<AnswerPoint> = (0..self.answers.len())
            .filter(|j| bits[j / 64] >> (j % 64) & 1 == 1)
            .map(|j| self.answers[j].clone())
            .collect();
        if !extra.is_empty() {
            out.extend(extra);
            out.sort_by(|a, b| lex_cmp(a, b));
            out.dedup();
        }
        out
    }
}

fn index_of(sorted: &[AnswerPoint], x: &[f64]) -> Option<usize> {
    sorted.binary_search_by(|p| lex_cmp(p, x)).ok()
}

/// Builds the candidate set directly, without a precomputed table.
pub fn candidate_answers(
    problem: &Problem,
    query: &ConfidenceQuery<'_>,
    model_grid_resolution: f64,
    answer_grid_resolution: f64,
    xf_tol: f64,
) -> Result<Vec<AnswerPoint>> {
    let answers = answer_grid(problem.answer_space(), answer_grid_resolution)?;
    let opts = SolverOptions::default();
    let mut out: Vec<AnswerPoint> = Vec::new();
    let mut models = problem.model_box.grid(model_grid_resolution)?;
    models.retain(|m| in_confidence(&problem.family, query, m));
    models.push(query.mu_hat.to_vec());
    for m in models {
        out.extend(easiest_from_grid(problem, &m, &answers, xf_tol, &opts)?.1);
    }
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub center: AnswerPoint,
    pub radius: f64,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionState {
    pub rule: RuleKind,
    pub last_x: Option<AnswerPoint>,
    pub history: Vec<HistoryEntry>,
    /// Radius floor `ρ_min`.
    pub rho_min: f64,
    /// `s̄` of the latest adaptive round.
    pub last_sbar: usize,
    /// Whether the latest adaptive round had to truncate its chain.
    pub last_truncated: bool,
    pub truncations: u64,
    rounds: u64,
}

impl SelectionState {
    pub fn new(rule: RuleKind, rho_min: f64) -> Self {
        Self {
            rule,
            last_x: None,
            history: Vec::new(),
            rho_min,
            last_sbar: 0,
            last_truncated: false,
            truncations: 0,
            rounds: 0,
        }
    }

    /// `ρ_s = max(2^{-s}, ρ_min)`.
    pub fn radius(&self, stage: usize) -> f64 {
        0.5f64.powi(stage as i32).max(self.rho_min)
    }

    /// Deepest stage kept: the first one whose dyadic radius reaches the
    /// floor, so that radii strictly decrease along the chain.
    pub fn max_stage(&self) -> usize {
        let mut s = 1;
        while 0.5f64.powi(s as i32) > self.rho_min && s < 60 {
            s += 1;
        }
        s
    }

    pub fn deepest_radius(&self) -> Option<f64> {
        self.history.last().map(|e| e.radius)
    }
}

/// Picks `x_t` with the configured rule and records it as `last_x`.
pub fn select(
    state: &mut SelectionState,
    candidates: &[AnswerPoint],
    xf_hat: &[AnswerPoint],
    space: &AnswerSpace,
) -> Result<AnswerPoint> {
    let x = match state.rule {
        RuleKind::Tas => xf_hat
            .first()
            .cloned()
            .ok_or_else(|| Error::Domain("empty easiest-answer set".into()))?,
        _ if candidates.is_empty() => return domain("candidate set is empty"),
        RuleKind::StickyOrder => lex_min(candidates).clone(),
        RuleKind::MinReal => {
            if space.dim() != 1 {
                return domain("the min-real rule needs a one-dimensional answer space");
            }
            lex_min(candidates).clone()
        }
        RuleKind::NearestPrev => match &state.last_x {
            None => lex_min(candidates).clone(),
            Some(prev) => candidates
                .iter()
                .min_by(|a, b| linf(a, prev).total_cmp(&linf(b, prev)).then_with(|| lex_cmp(a, b)))
                .unwrap()
                .clone(),
        },
        RuleKind::Adaptive => return select_adaptive(state, candidates, space),
    };
    state.last_x = Some(x.clone());
    state.rounds += 1;
    Ok(x)
}

fn lex_min(c: &[AnswerPoint]) -> &AnswerPoint {
    c.iter().min_by(|a, b| lex_cmp(a, b)).unwrap()
}

fn in_ball(center: &[f64], radius: f64, y: &[f64]) -> bool {
    linf(center, y) <= radius + GEOM_SLACK
}

/// Adaptive discretization with history and backtracking.
///
/// Every "pick any" is resolved to the lexicographically smallest feasible
/// center or answer. The chain grows by one stage per round until the
/// radius floor is reached.
pub fn select_adaptive(
    state: &mut SelectionState,
    candidates: &[AnswerPoint],
    space: &AnswerSpace,
) -> Result<AnswerPoint> {
    if candidates.is_empty() {
        return domain("candidate set is empty");
    }
    state.rounds += 1;
    let depth = (state.rounds as usize).min(state.max_stage());

    // Longest prefix of the history whose balls all meet X_t.
    let sbar = state
        .history
        .iter()
        .take_while(|e| candidates.iter().any(|y| in_ball(&e.center, e.radius, y)))
        .count()
        .min(depth);
    state.history.truncate(sbar);
    state.last_sbar = sbar;
    state.last_truncated = false;

    for s in sbar + 1..=depth {
        let rho = state.radius(s);
        let anchors: Vec<&AnswerPoint> = match state.history.last() {
            Some(prev) => candidates
                .iter()
                .filter(|y| in_ball(&prev.center, prev.radius, y))
                .collect(),
            None => candidates.iter().collect(),
        };
        let mut best: Option<AnswerPoint> = None;
        for y in anchors {
            for c in cover_centers_containing(space, rho, y)? {
                if best.as_ref().is_none_or(|b| lex_cmp(&c, b).is_lt()) {
                    best = Some(c);
                }
            }
        }
        match best {
            Some(center) => state.history.push(HistoryEntry {
                center,
                radius: rho,
                stage: s,
            }),
            None => {
                state.last_truncated = true;
                state.truncations += 1;
                break;
            }
        }
    }

    let x = match state.history.last() {
        Some(e) => candidates
            .iter()
            .filter(|y| in_ball(&e.center, e.radius, y))
            .min_by(|a, b| lex_cmp(a, b))
            .cloned(),
        None => None,
    }
    .unwrap_or_else(|| lex_min(candidates).clone());
    state.last_x = Some(x.clone());
    Ok(x)
}

/// ℓ∞ diameter of the last `window` picks.
pub fn convergence_diagnostic(trace: &[AnswerPoint], window: usize) -> Result<f64> {
    if window == 0 || trace.len() < window {
        return domain(format!(
            "trace of length {} is shorter than the window {window}",
            trace.len()
        ));
    }
    let tail = &trace[trace.len() - window..];
    let d = tail[0].len();
    Ok((0..d)
        .map(|k| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x[k]), hi.max(x[k]))
            });
            hi - lo
        })
        .fold(0.0, f64::max))
}
