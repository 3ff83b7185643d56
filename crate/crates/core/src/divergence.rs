//! The max-min divergence game.
//!
//! `best_response` solves the inner infimum `inf_{λ ∈ ¬S} Σ ω_k d(μ_k, λ_k)`,
//! `oracle_weights` the outer maximization over the simplex, and
//! `problem_value` the maximization over correct answers.
//!
//! Weights passed to `best_response` may be unnormalized (the stopping rule
//! feeds raw pull counts); everything else works on the simplex.

use crate::error::{domain, Error, Result};
use crate::expfam::FamilySpec;
use crate::problems::{
    answer_grid, lex_cmp, linf, max_of, AnswerPoint, AnswerSpace, ModelBox, Problem, ProblemKind,
    RegressionFn, GEOM_SLACK,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Duality-gap target of the Frank-Wolfe outer solver.
    pub value_tol: f64,
    /// Bracket width at which the golden-section outer solver stops.
    pub golden_tol: f64,
    pub fw_max_iters: usize,
    /// Number of seeds kept by the generic inner solver.
    pub generic_seeds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            value_tol: 1e-4,
            golden_tol: 1e-7,
            fw_max_iters: 20_000,
            generic_seeds: 6,
        }
    }
}

/// Relative tolerance used to extract the easiest answers.
pub const DEFAULT_XF_TOL: f64 = 1e-3;

/// Rounding allowance when testing the closure of an alternative set.
const CLOSURE_SLACK: f64 = 1e-12;

/// Values at or below this are treated as zero when inverting `D(μ)`.
pub const IDENTIFIABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    /// Near-minimizing alternative for `argmax` under `weights`.
    pub best_alt: Vec<f64>,
    pub weights: Vec<f64>,
    /// Answer attaining `value` after local refinement.
    pub argmax: AnswerPoint,
    /// Grid answers within `tol` (relative) of the grid maximum.
    pub xf: Vec<AnswerPoint>,
    pub tol: f64,
}

#[inline]
pub(crate) fn weighted_kl(fam: &FamilySpec, mu: &[f64], w: &[f64], lam: &[f64]) -> f64 {
    mu.iter()
        .zip(w)
        .zip(lam)
        .map(|((m, wk), l)| if *wk == 0.0 { 0.0 } else { wk * fam.kl_raw(*m, *l) })
        .sum()
}

fn check_inputs(problem: &Problem, mu: &[f64], w: &[f64], subset: &[AnswerPoint]) -> Result<()> {
    let k = problem.arms();
    if mu.len() != k || w.len() != k {
        return domain(format!("expected {k} arms for the model and the weights"));
    }
    if !problem.model_box.contains(mu) {
        return domain("model lies outside the model box");
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return domain("weights must be finite and nonnegative");
    }
    if subset.is_empty() {
        return domain("answer subset must be nonempty");
    }
    if subset.iter().any(|x| x.len() != problem.dim()) {
        return domain("answer dimension mismatch");
    }
    Ok(())
}

/// `D(μ, ω, ¬subset)` and a witness `λ ∈ ¬subset` attaining it.
pub fn best_response(
    problem: &Problem,
    mu: &[f64],
    w: &[f64],
    subset: &[AnswerPoint],
) -> Result<(f64, Vec<f64>)> {
    check_inputs(problem, mu, w, subset)?;
    best_response_unchecked(problem, mu, w, subset)
}

pub(crate) fn best_response_unchecked(
    problem: &Problem,
    mu: &[f64],
    w: &[f64],
    subset: &[AnswerPoint],
) -> Result<(f64, Vec<f64>)> {
    if problem.in_alt_set(mu, subset) {
        return Ok((0.0, mu.to_vec()));
    }
    match inner(problem, &problem.kind, mu, w, subset)? {
        Some(r) => Ok(r),
        None => Err(Error::Infeasible(format!(
            "no admissible model makes all {} answer(s) incorrect",
            subset.len()
        ))),
    }
}

/// Dispatch to an exact fast path when one exists for this kind and subset.
/// `None` means the alternative set is empty.
fn inner(
    problem: &Problem,
    kind: &ProblemKind,
    mu: &[f64],
    w: &[f64],
    subset: &[AnswerPoint],
) -> Result<Option<(f64, Vec<f64>)>> {
    let fam = &problem.family;
    let mb = &problem.model_box;
    match kind {
        ProblemKind::Regression {
            f: RegressionFn::Identity,
            eps,
            ..
        } => Ok(inf_identity(fam, mb, mu, w, *eps, subset)),
        ProblemKind::Regression {
            f: RegressionFn::Max,
            eps,
            ..
        } => Ok(inf_max(fam, mb, mu, w, *eps, subset)),
        ProblemKind::EpsGood { eps, arms } => {
            let mut in_s = vec![false; *arms];
            for x in subset {
                match crate::problems::arm_of(x, *arms) {
                    Some(k) => in_s[k] = true,
                    None => return domain(format!("{x:?} is not an arm answer")),
                }
            }
            Ok(inf_eps_good(fam, mb, mu, w, *eps, &in_s))
        }
        ProblemKind::Product(a, b) => {
            let da = a.dim();
            if let Some((sa, sb)) = split_product(subset, da) {
                let ra = inner(problem, a, mu, w, &sa)?;
                let rb = inner(problem, b, mu, w, &sb)?;
                Ok(match (ra, rb) {
                    (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
                    (x, y) => x.or(y),
                })
            } else {
                generic_inner(problem, mu, w, subset, &SolverOptions::default())
            }
        }
        ProblemKind::Regression {
            f: RegressionFn::Custom(_),
            ..
        } => generic_inner(problem, mu, w, subset, &SolverOptions::default()),
    }
}

/// Splits a product-space subset into its factors when it is a full
/// Cartesian product `S1 × S2`.
fn split_product(
    subset: &[AnswerPoint],
    da: usize,
) -> Option<(Vec<AnswerPoint>, Vec<AnswerPoint>)> {
    let mut all: Vec<&AnswerPoint> = subset.iter().collect();
    all.sort_by(|a, b| lex_cmp(a, b));
    all.dedup();
    let mut sa: Vec<AnswerPoint> = all.iter().map(|x| x[..da].to_vec()).collect();
    let mut sb: Vec<AnswerPoint> = all.iter().map(|x| x[da..].to_vec()).collect();
    sa.sort_by(|a, b| lex_cmp(a, b));
    sa.dedup();
    sb.sort_by(|a, b| lex_cmp(a, b));
    sb.dedup();
    (sa.len() * sb.len() == all.len()).then_some((sa, sb))
}

/// Tries small outward pushes of a closure witness until it lies strictly
/// inside the alternative set. A singleton whose closure witness cannot be
/// pushed inside has an empty alternative set (`None`); larger subsets keep
/// the closure point.
fn strict_witness(
    in_alt: impl Fn(&[f64]) -> bool,
    mb: &ModelBox,
    lam: Vec<f64>,
    push: impl Fn(f64) -> Vec<f64>,
    singleton: bool,
) -> Option<Vec<f64>> {
    if in_alt(&lam) {
        return Some(lam);
    }
    for t in [1e-12, 1e-10, 1e-8, 1e-6] {
        let cand = mb.clamp(&push(t));
        if in_alt(&cand) {
            return Some(cand);
        }
    }
    (!singleton).then_some(lam)
}

fn identity_alt(lam: &[f64], eps: f64, subset: &[AnswerPoint]) -> bool {
    subset.iter().all(|x| linf(lam, x) > eps)
}

/// Identity regression: the objective is separable, so each coordinate of a
/// minimizer is either `μ_k` or a face `x_k ± ε` of some excluded cube.
fn inf_identity(
    fam: &FamilySpec,
    mb: &ModelBox,
    mu: &[f64],
    w: &[f64],
    eps: f64,
    subset: &[AnswerPoint],
) -> Option<(f64, Vec<f64>)> {
    let k = mu.len();
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(k);
    for a in 0..k {
        let (lo, hi) = (mb.lo()[a], mb.hi()[a]);
        let mut vals = vec![mu[a], lo, hi];
        for x in subset {
            for v in [x[a] - eps, x[a] + eps] {
                if v >= lo && v <= hi {
                    vals.push(v);
                }
            }
        }
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let mut costed: Vec<(f64, f64)> = vals
            .into_iter()
            .map(|v| (w[a] * fam.kl_raw(mu[a], v), v))
            .collect();
        costed.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        axes.push(costed);
    }

    let witness = |lam: &[f64]| {
        let push = |t: f64| -> Vec<f64> {
            (0..lam.len())
                .map(|a| {
                    let l = lam[a];
                    if l != mu[a] {
                        return l + t * (l - mu[a]).signum();
                    }
                    // μ itself sits on a face: step away from that cube.
                    let face = subset
                        .iter()
                        .find(|x| ((l - x[a]).abs() - eps).abs() <= 1e-9)
                        .map_or(0.0, |x| (l - x[a]).signum());
                    l + t * face
                })
                .collect()
        };
        strict_witness(
            |l| identity_alt(l, eps, subset),
            mb,
            lam.to_vec(),
            push,
            subset.len() == 1,
        )
    };

    // Depth-first enumeration with the running cost as a bound. A closure
    // point that cannot be pushed into the open alternative set (a box face)
    // is skipped.
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut cur = vec![0.0; k];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        a: usize,
        acc: f64,
        axes: &[Vec<(f64, f64)>],
        cur: &mut Vec<f64>,
        eps: f64,
        subset: &[AnswerPoint],
        witness: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        if let Some((b, _)) = best {
            if acc >= *b {
                return;
            }
        }
        if a == axes.len() {
            if subset.iter().all(|x| linf(cur, x) >= eps - CLOSURE_SLACK) {
                if let Some(w) = witness(cur) {
                    *best = Some((acc, w));
                }
            }
            return;
        }
        for &(c, v) in &axes[a] {
            cur[a] = v;
            rec(a + 1, acc + c, axes, cur, eps, subset, witness, best);
        }
    }
    rec(0, 0.0, &axes, &mut cur, eps, subset, &witness, &mut best);
    best
}

/// Max regression (`d = 1`): the cost of forcing `max λ = m` is monotone on
/// each side of `max μ`, so only the endpoints of the excluded component
/// around `max μ` matter.
fn inf_max(
    fam: &FamilySpec,
    mb: &ModelBox,
    mu: &[f64],
    w: &[f64],
    eps: f64,
    subset: &[AnswerPoint],
) -> Option<(f64, Vec<f64>)> {
    let top = max_of(mu);
    let mut iv: Vec<(f64, f64)> = subset.iter().map(|x| (x[0] - eps, x[0] + eps)).collect();
    iv.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let in_alt = |lam: &[f64]| {
        let m = max_of(lam);
        subset.iter().all(|x| (m - x[0]).abs() > eps)
    };
    let Some(&(a, b)) = merged.iter().find(|(a, b)| *a <= top && top <= *b) else {
        return Some((0.0, mu.to_vec()));
    };

    let lower = |m: f64| -> Option<(f64, Vec<f64>)> {
        let mut cost = 0.0;
        let mut lam = mu.to_vec();
        for k in 0..mu.len() {
            if mu[k] > m {
                if m < mb.lo()[k] {
                    return None;
                }
                lam[k] = m;
                cost += w[k] * fam.kl_raw(mu[k], m);
            }
        }
        Some((cost, lam))
    };
    let upper = |m: f64| -> Option<(f64, usize)> {
        (0..mu.len())
            .filter(|&k| m <= mb.hi()[k])
            .map(|k| (w[k] * fam.kl_raw(mu[k], m.max(mu[k])), k))
            .min_by(|p, q| p.0.total_cmp(&q.0))
    };

    let singleton = subset.len() == 1;
    let lo_cand = lower(a).and_then(|(c, lam)| {
        let push = |t: f64| lam.iter().map(|l| if *l >= a { l - t } else { *l }).collect();
        strict_witness(in_alt, mb, lam.clone(), push, singleton).map(|w| (c, w))
    });
    let hi_cand = upper(b).and_then(|(c, j)| {
        let mut lam = mu.to_vec();
        lam[j] = b.max(mu[j]);
        let base = lam.clone();
        let push = |t: f64| {
            let mut v = base.clone();
            v[j] += t;
            v
        };
        strict_witness(in_alt, mb, lam, push, singleton).map(|w| (c, w))
    });
    match (lo_cand, hi_cand) {
        (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
        (x, y) => x.or(y),
    }
}

/// Finite ε-good answers: for a challenger `j ∉ S` and level `m` of the best
/// arm of `S`, the cheapest alternative lowers `S` to `m` and raises `j` to
/// `m + ε`; the cost is convex in `m`.
fn inf_eps_good(
    fam: &FamilySpec,
    mb: &ModelBox,
    mu: &[f64],
    w: &[f64],
    eps: f64,
    in_s: &[bool],
) -> Option<(f64, Vec<f64>)> {
    let k = mu.len();
    let s_lo = (0..k)
        .filter(|&i| in_s[i])
        .map(|i| mb.lo()[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for j in (0..k).filter(|&j| !in_s[j]) {
        let (lo, hi) = (s_lo, mb.hi()[j] - eps);
        if lo > hi {
            continue;
        }
        let deriv = |m: f64| {
            let mut g = 0.0;
            if m + eps > mu[j] {
                g += w[j] * fam.kl_dq(mu[j], m + eps);
            }
            for i in (0..k).filter(|&i| in_s[i]) {
                if m < mu[i] {
                    g += w[i] * fam.kl_dq(mu[i], m);
                }
            }
            g
        };
        let m = if deriv(lo) >= 0.0 {
            lo
        } else if deriv(hi) <= 0.0 {
            hi
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if deriv(c) < 0.0 {
                    a = c;
                } else {
                    b = c;
                }
            }
            0.5 * (a + b)
        };
        let build = |m: f64, t: f64| {
            let mut lam = mu.to_vec();
            lam[j] = mu[j].max(m + eps + t).min(mb.hi()[j]);
            for i in (0..k).filter(|&i| in_s[i]) {
                lam[i] = mu[i].min(m).max(mb.lo()[i]);
            }
            lam
        };
        let lam = build(m, 0.0);
        let cost = weighted_kl(fam, mu, w, &lam);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            let in_alt = |l: &[f64]| {
                let top = (0..k).filter(|&i| in_s[i]).map(|i| l[i]).fold(f64::NEG_INFINITY, f64::max);
                max_of(l) > top + eps && (0..k).any(|jj| !in_s[jj] && l[jj] > top + eps)
            };
            let push = |t: f64| {
                let mut v = build(m, t);
                for i in (0..k).filter(|&i| in_s[i]) {
                    v[i] = mu[i].min(m - t).max(mb.lo()[i]);
                }
                v
            };
            if let Some(witness) = strict_witness(in_alt, mb, lam, push, true) {
                best = Some((cost, witness));
            }
        }
    }
    best
}

/// Derivative-free inner solver for arbitrary correspondences: multi-start
/// from a coarse model grid restricted to the alternative set, then a
/// coordinate pattern search in which every trial point is pulled radially
/// back toward `μ` onto the boundary of the alternative set.
pub fn generic_best_response(
    problem: &Problem,
    mu: &[f64],
    w: &[f64],
    subset: &[AnswerPoint],
    opts: &SolverOptions,
) -> Result<(f64, Vec<f64>)> {
    check_inputs(problem, mu, w, subset)?;
    generic_inner(problem, mu, w, subset, opts)?.ok_or_else(|| {
        Error::Infeasible("no sampled admissible model lies in the alternative set".into())
    })
}

fn generic_inner(
    problem: &Problem,
    mu: &[f64],
    w: &[f64],
    subset: &[AnswerPoint],
    opts: &SolverOptions,
) -> Result<Option<(f64, Vec<f64>)>> {
    let fam = &problem.family;
    let mb = &problem.model_box;
    let alt = |l: &[f64]| problem.in_alt_set(l, subset);
    if alt(mu) {
        return Ok(Some((0.0, mu.to_vec())));
    }
    let k = mu.len();
    let per_axis: usize = match k {
        1 => 201,
        2 => 41,
        3 => 13,
        4 => 7,
        _ => 4,
    };
    let axes: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            let (lo, hi) = (mb.lo()[a], mb.hi()[a]);
            (0..per_axis)
                .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                .collect()
        })
        .collect();
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idx = vec![0usize; k];
    let total = per_axis.pow(k as u32);
    for _ in 0..total {
        let lam: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
        if alt(&lam) {
            seeds.push((weighted_kl(fam, mu, w, &lam), lam));
        }
        for a in (0..k).rev() {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    if seeds.is_empty() {
        return Ok(None);
    }
    seeds.sort_by(|p, q| p.0.total_cmp(&q.0).then_with(|| lex_cmp(&p.1, &q.1)));
    seeds.truncate(opts.generic_seeds.max(1));

    let radial = |p: &[f64]| -> Vec<f64> {
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let at = |s: f64| -> Vec<f64> { mu.iter().zip(p).map(|(m, x)| m + s * (x - m)).collect() };
        for _ in 0..60 {
            let c = 0.5 * (a + b);
            if alt(&at(c)) {
                b = c;
            } else {
                a = c;
            }
        }
        at(b)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, seed) in seeds {
        let mut lam = radial(&seed);
        let mut val = weighted_kl(fam, mu, w, &lam);
        let mut h = axes
            .iter()
            .map(|a| a[1] - a[0])
            .fold(f64::INFINITY, f64::min);
        let mut iters = 0;
        while h > 1e-10 && iters < 20_000 {
            iters += 1;
            let mut improved = false;
            for a in 0..k {
                for sgn in [-1.0, 1.0] {
                    let mut cand = lam.clone();
                    cand[a] = (cand[a] + sgn * h).clamp(mb.lo()[a], mb.hi()[a]);
                    if !alt(&cand) {
                        continue;
                    }
                    let cand = radial(&cand);
                    let v = weighted_kl(fam, mu, w, &cand);
                    if v < val - 1e-16 {
                        lam = cand;
                        val = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, lam));
        }
    }
    Ok(best)
}

fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for e in [lo, hi] {
        let fe = f(e)?;
        if fe > best.1 {
            best = (e, fe);
        }
    }
    Ok(best)
}

/// Nested golden section over stick-breaking coordinates. Partial
/// maximization of a concave function stays concave, so every level is a
/// unimodal 1-D problem.
fn nested_golden(
    problem: &Problem,
    mu: &[f64],
    subset: &[AnswerPoint],
    prefix: &mut Vec<f64>,
    mass: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let k = mu.len();
    if prefix.len() == k - 1 {
        let mut w = prefix.clone();
        w.push(mass);
        let v = best_response_unchecked(problem, mu, &w, subset)?.0;
        return Ok((v, w));
    }
    let mut best_w = Vec::new();
    let mut best_v = f64::NEG_INFINITY;
    let (s, v) = golden_max(
        |s| {
            prefix.push(mass * s);
            let r = nested_golden(problem, mu, subset, prefix, mass * (1.0 - s), tol);
            prefix.pop();
            let (v, w) = r?;
            if v > best_v {
                best_v = v;
                best_w = w;
            }
            Ok(v)
        },
        0.0,
        1.0,
        tol,
    )?;
    let _ = s;
    Ok((v.max(best_v), best_w))
}

/// Fictitious play on the simplex with the averaged best-response cost
/// vector as a duality certificate.
fn frank_wolfe(
    problem: &Problem,
    mu: &[f64],
    subset: &[AnswerPoint],
    opts: &SolverOptions,
) -> Result<(f64, Vec<f64>)> {
    let fam = &problem.family;
    let k = mu.len();
    let mut w = vec![1.0 / k as f64; k];
    let mut avg_cost = vec![0.0; k];
    let mut best = (f64::NEG_INFINITY, w.clone());
    let mut upper = f64::INFINITY;
    for it in 0..opts.fw_max_iters {
        let (v, lam) = best_response_unchecked(problem, mu, &w, subset)?;
        if v > best.0 {
            best = (v, w.clone());
        }
        let cost: Vec<f64> = (0..k).map(|a| fam.kl_raw(mu[a], lam[a])).collect();
        let n = (it + 1) as f64;
        for a in 0..k {
            avg_cost[a] += (cost[a] - avg_cost[a]) / n;
        }
        upper = upper.min(max_of(&avg_cost));
        if upper - best.0 <= opts.value_tol {
            return Ok(best);
        }
        let vertex = (0..k)
            .max_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(b.cmp(&a)))
            .unwrap();
        let gamma = 2.0 / (n + 2.0);
        for a in 0..k {
            w[a] *= 1.0 - gamma;
        }
        w[vertex] += gamma;
    }
    Err(Error::ToleranceNotMet {
        best: best.0,
        gap: upper - best.0,
    })
}

/// `D(μ, ¬x)` and the maximizing weights `ω*(μ, ¬x)`.
pub fn oracle_weights(problem: &Problem, mu: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    oracle_weights_with(problem, mu, &[x.to_vec()], &SolverOptions::default())
}

/// Outer maximization over the simplex for an arbitrary subset.
pub fn oracle_weights_with(
    problem: &Problem,
    mu: &[f64],
    subset: &[AnswerPoint],
    opts: &SolverOptions,
) -> Result<(f64, Vec<f64>)> {
    let k = problem.arms();
    check_inputs(problem, mu, &vec![0.0; k], subset)?;
    if problem.in_alt_set(mu, subset) {
        // D(μ, ω, ¬S) = 0 for every ω; still report infeasibility faithfully.
        return Ok((0.0, vec![1.0 / k as f64; k]));
    }
    match k {
        1 => {
            let v = best_response_unchecked(problem, mu, &[1.0], subset)?.0;
            Ok((v, vec![1.0]))
        }
        2..=3 => nested_golden(problem, mu, subset, &mut Vec::new(), 1.0, opts.golden_tol),
        _ => frank_wolfe(problem, mu, subset, opts),
    }
}

/// Compositions of `n` into `k` parts, scaled to the simplex.
pub fn simplex_grid(k: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(k, left - i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, n, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|c| c.into_iter().map(|i| i as f64 / n as f64).collect())
        .collect()
}

/// Dense simplex-grid maximization, the fallback when an iterative outer
/// solver does not certify its tolerance.
pub fn oracle_weights_grid(
    problem: &Problem,
    mu: &[f64],
    subset: &[AnswerPoint],
    divisions: usize,
) -> Result<(f64, Vec<f64>)> {
    let k = problem.arms();
    check_inputs(problem, mu, &vec![0.0; k], subset)?;
    let mut best = (f64::NEG_INFINITY, vec![]);
    for w in simplex_grid(k, divisions.max(1)) {
        let v = best_response_unchecked(problem, mu, &w, subset)?.0;
        if v > best.0 {
            best = (v, w);
        }
    }
    Ok(best)
}

/// Per-coordinate flag: does the coordinate vary continuously?
fn continuous_mask(space: &AnswerSpace) -> Vec<bool> {
    match space {
        AnswerSpace::Box { lo, .. } => vec![true; lo.len()],
        AnswerSpace::Finite { points } => vec![false; points[0].len()],
        AnswerSpace::Product(a, b) => {
            let mut m = continuous_mask(a);
            m.extend(continuous_mask(b));
            m
        }
    }
}

/// Correct grid answers for `μ`, or the grid point nearest the reference
/// answer when the grid misses `X*(μ)` numerically.
pub(crate) fn correct_grid(problem: &Problem, mu: &[f64], grid: &[AnswerPoint]) -> Vec<AnswerPoint> {
    let mut out: Vec<AnswerPoint> = grid
        .iter()
        .filter(|x| problem.kind.is_correct(mu, x))
        .cloned()
        .collect();
    if out.is_empty() {
        let r = problem.reference_answer(mu);
        if let Some(x) = grid
            .iter()
            .min_by(|a, b| linf(a, &r).total_cmp(&linf(b, &r)).then_with(|| lex_cmp(a, b)))
        {
            out.push(x.clone());
        }
    }
    out
}

/// Value and weights of one oracle solve.
type Solved = (f64, Vec<f64>);

/// Grid maximum of `D(μ, ¬x)` over correct answers, the answers within the
/// relative tolerance of it, and the oracle solution of each of those.
pub(crate) fn easiest_from_grid(
    problem: &Problem,
    mu: &[f64],
    grid: &[AnswerPoint],
    tol: f64,
    opts: &SolverOptions,
) -> Result<(f64, Vec<AnswerPoint>, Vec<Solved>)> {
    let correct = correct_grid(problem, mu, grid);
    let mut sols = Vec::with_capacity(correct.len());
    for x in &correct {
        sols.push(oracle_weights_with(problem, mu, std::slice::from_ref(x), opts)?);
    }
    let gmax = sols.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let cut = gmax - tol * gmax.abs();
    let (xf, xf_sols) = correct
        .into_iter()
        .zip(sols)
        .filter(|(_, s)| s.0 >= cut)
        .unzip();
    Ok((gmax, xf, xf_sols))
}

/// Easiest answers `X_F(μ)` on the answer grid, without refinement.
pub fn easiest_answers(
    problem: &Problem,
    mu: &[f64],
    grid: &[AnswerPoint],
    tol: f64,
) -> Result<Vec<AnswerPoint>> {
    Ok(easiest_from_grid(problem, mu, grid, tol, &SolverOptions::default())?.1)
}

/// `D(μ)`, `ω*(μ)` and `X_F(μ)`: grid maximum over correct answers followed by
/// a local pattern search on the continuous answer coordinates.
pub fn problem_value(
    problem: &Problem,
    mu: &[f64],
    grid_resolution: f64,
    tol: f64,
) -> Result<GameSolution> {
    problem_value_with(problem, mu, grid_resolution, tol, &SolverOptions::default())
}

pub fn problem_value_with(
    problem: &Problem,
    mu: &[f64],
    grid_resolution: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<GameSolution> {
    if !problem.model_box.contains(mu) {
        return domain("model lies outside the model box");
    }
    let grid = answer_grid(problem.answer_space(), grid_resolution)?;
    let correct = correct_grid(problem, mu, &grid);
    let (gmax, xf, _) = easiest_from_grid(problem, mu, &grid, tol, opts)?;

    let mut x = xf[0].clone();
    let (mut val, mut w) = oracle_weights_with(problem, mu, std::slice::from_ref(&x), opts)?;
    let mask = continuous_mask(problem.answer_space());
    if mask.iter().any(|&m| m) && !correct.is_empty() {
        let space = problem.answer_space();
        let mut h = grid_resolution / 2.0;
        while h > grid_resolution * 1e-4 {
            let mut improved = false;
            for a in (0..x.len()).filter(|&a| mask[a]) {
                for sgn in [-1.0, 1.0] {
                    let mut cand = x.clone();
                    cand[a] += sgn * h;
                    if !space.contains(&cand) || !problem.kind.is_correct(mu, &cand) {
                        continue;
                    }
                    let (v, cw) =
                        oracle_weights_with(problem, mu, std::slice::from_ref(&cand), opts)?;
                    if v > val + 1e-15 {
                        x = cand;
                        val = v;
                        w = cw;
                        improved = true;
                    }
                }
            }
            if !improved {
                h /= 2.0;
            }
        }
    }
    let value = val.max(gmax);
    let best_alt = best_response_unchecked(problem, mu, &w, std::slice::from_ref(&x))?.1;
    Ok(GameSolution {
        value,
        best_alt,
        weights: w,
        argmax: x,
        xf,
        tol,
    })
}

/// `T*(μ) = 1 / D(μ)`.
pub fn characteristic_time(problem: &Problem, mu: &[f64], grid_resolution: f64) -> Result<f64> {
    let v = problem_value(problem, mu, grid_resolution, DEFAULT_XF_TOL)?.value;
    if v <= IDENTIFIABILITY_TOL {
        return Err(Error::NonIdentifiable(v));
    }
    Ok(1.0 / v)
}

/// `{x} ∪ (grid ∩ B_ρ(x))`, the finite surrogate of an ℓ∞ ball of answers.
pub fn ball_subset(grid: &[AnswerPoint], x: &[f64], rho: f64) -> Vec<AnswerPoint> {
    let mut out = vec![x.to_vec()];
    out.extend(
        grid.iter()
            .filter(|g| linf(g, x) <= rho + GEOM_SLACK && g.as_slice() != x)
            .cloned(),
    );
    out
}

/// `D(μ, ω, ¬B_ρ(x))` with the ball replaced by its grid surrogate.
pub fn ball_divergence(
    problem: &Problem,
    mu: &[f64],
    w: &[f64],
    x: &[f64],
    rho: f64,
    grid_resolution: f64,
) -> Result<f64> {
    if !(rho.is_finite() && rho >= 0.0) {
        return domain(format!("ball radius must be nonnegative, got {rho}"));
    }
    let grid = answer_grid(problem.answer_space(), grid_resolution)?;
    let subset = ball_subset(&grid, x, rho);
    best_response(problem, mu, w, &subset)
        .map(|r| r.0)
        .map_err(|e| match e {
            Error::Infeasible(m) => Error::Infeasible(format!(
                "the alternative to the radius-{rho} ball is empty, so the regularity assumption fails: {m}"
            )),
            other => other,
        })
}
