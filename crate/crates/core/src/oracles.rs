//! Reference computations: closed forms, exhaustive grid games, the
//! covering lower bound and a sampled check of the ball-regularity condition.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{best_response, ball_subset, oracle_weights_with, SolverOptions};
use crate::error::{domain, Error, Result};
use crate::problems::{answer_grid, cover_centers, linf, AnswerPoint, Problem, GEOM_SLACK};

/// Largest number of models the exhaustive game may enumerate.
pub const BRUTE_FORCE_CAP: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedForm {
    pub t_star: f64,
    pub weights: Vec<f64>,
    pub value: f64,
}

/// Two Gaussian arms: `D = Δ²/(8σ²)` at `ω* = (½, ½)`.
pub fn closed_form_bai2(sigma: f64, mu1: f64, mu2: f64) -> Result<ClosedForm> {
    if !(sigma > 0.0) {
        return domain("sigma must be positive");
    }
    let gap = mu1 - mu2;
    if gap == 0.0 {
        return Err(Error::NonIdentifiable(0.0));
    }
    let value = gap * gap / (8.0 * sigma * sigma);
    Ok(ClosedForm {
        t_star: 1.0 / value,
        weights: vec![0.5, 0.5],
        value,
    })
}

/// Single Gaussian arm, `ε`-regression: `T* = 2σ²/ε²`.
pub fn closed_form_reg1(sigma: f64, eps: f64) -> Result<f64> {
    if !(sigma > 0.0) || !(eps > 0.0) {
        return domain("sigma and eps must be positive");
    }
    Ok(2.0 * sigma * sigma / (eps * eps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverBoundReport {
    pub rho: f64,
    pub pieces: usize,
    pub centers: Vec<AnswerPoint>,
    /// `D(μ, ¬X̃_j)` per piece; infinite when the piece has no alternative.
    pub divergences: Vec<f64>,
    pub bound: f64,
}

/// `min_j 1/D(μ, ¬X̃_j)` over the pieces `X̃_j = B_ρ(c_j) ∩ X*(μ)` of a
/// `ρ`-cover, each piece represented by its correct grid points.
pub fn covering_bound(
    problem: &Problem,
    mu: &[f64],
    rho: f64,
    grid_resolution: f64,
) -> Result<CoverBoundReport> {
    if !(rho.is_finite() && rho > 0.0) {
        return domain(format!("cover radius must be positive, got {rho}"));
    }
    if !problem.model_box.contains(mu) {
        return domain("model lies outside the model box");
    }
    let grid = answer_grid(problem.answer_space(), grid_resolution)?;
    let correct: Vec<AnswerPoint> =
        grid.into_iter().filter(|x| problem.kind.is_correct(mu, x)).collect();
    let opts = SolverOptions::default();
    let pieces: Vec<(AnswerPoint, Vec<AnswerPoint>)> = cover_centers(problem.answer_space(), rho)?
        .into_iter()
        .filter_map(|c| {
            let piece: Vec<AnswerPoint> = correct
                .iter()
                .filter(|x| linf(x, &c) <= rho + GEOM_SLACK)
                .cloned()
                .collect();
            (!piece.is_empty()).then_some((c, piece))
        })
        .collect();
    let divergences = pieces
        .par_iter()
        .map(|(_, piece)| match oracle_weights_with(problem, mu, piece, &opts) {
            Ok((v, _)) => Ok(v),
            Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    let bound = divergences
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|d| 1.0 / d)
        .fold(f64::INFINITY, f64::min);
    if !bound.is_finite() && divergences.iter().all(|&d| d <= 0.0) {
        return Err(Error::NonIdentifiable(0.0));
    }
    Ok(CoverBoundReport {
        rho,
        pieces: pieces.len(),
        centers: pieces.into_iter().map(|(c, _)| c).collect(),
        divergences,
        bound,
    })
}

/// Sample points for [`verify_assumption_conv`].
#[derive(Clone, Debug)]
pub struct ConvGrids {
    pub models: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub answers: Vec<AnswerPoint>,
    /// Resolution of the answer grid that represents each ball.
    pub ball_resolution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvWitness {
    pub model: Vec<f64>,
    pub weights: Vec<f64>,
    pub answer: AnswerPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvReport {
    pub rho: f64,
    pub eps_target: f64,
    pub max_gap: f64,
    pub worst: Option<ConvWitness>,
    /// Answers whose ball has an empty alternative.
    pub empty_balls: usize,
    pub triples: usize,
    pub pass: bool,
}

/// Largest `D(μ, ω, ¬B_ρ(x)) − D(μ, ω, ¬x)` over the sampled triples, plus a
/// nonemptiness check of every `¬B_ρ(x)`.
pub fn verify_assumption_conv(
    problem: &Problem,
    rho: f64,
    eps_target: f64,
    grids: &ConvGrids,
) -> Result<ConvReport> {
    if !(rho.is_finite() && rho >= 0.0) {
        return domain(format!("ball radius must be nonnegative, got {rho}"));
    }
    let ball_grid = answer_grid(problem.answer_space(), grids.ball_resolution)?;
    let balls: Vec<Vec<AnswerPoint>> =
        grids.answers.iter().map(|x| ball_subset(&ball_grid, x, rho)).collect();
    let empty_balls = grids
        .answers
        .iter()
        .zip(&balls)
        .filter(|(_, ball)| !has_alternative(problem, ball))
        .count();

    let per_model = grids
        .models
        .par_iter()
        .map(|m| {
            let mut best: (f64, Option<ConvWitness>) = (0.0, None);
            for w in &grids.weights {
                for (x, ball) in grids.answers.iter().zip(&balls) {
                    let single = match best_response(problem, m, w, std::slice::from_ref(x)) {
                        Ok(r) => r.0,
                        Err(Error::Infeasible(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    let widened = match best_response(problem, m, w, ball) {
                        Ok(r) => r.0,
                        Err(Error::Infeasible(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    let gap = widened - single;
                    if best.1.is_none() || gap > best.0 {
                        best = (
                            gap,
                            Some(ConvWitness {
                                model: m.clone(),
                                weights: w.clone(),
                                answer: x.clone(),
                            }),
                        );
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_gap, worst) = per_model
        .into_iter()
        .filter(|b| b.1.is_some())
        .fold((0.0, None), |acc, b| if acc.1.is_none() || b.0 > acc.0 { b } else { acc });
    Ok(ConvReport {
        rho,
        eps_target,
        max_gap,
        worst,
        empty_balls,
        triples: grids.models.len() * grids.weights.len() * grids.answers.len(),
        pass: empty_balls == 0 && max_gap <= eps_target,
    })
}

/// Does some model of the box make every answer of `ball` incorrect? Decided
/// on a model lattice plus the box corners.
fn has_alternative(problem: &Problem, ball: &[AnswerPoint]) -> bool {
    let mb = &problem.model_box;
    let k = mb.arms();
    let res = mb
        .lo()
        .iter()
        .zip(mb.hi())
        .map(|(l, h)| (h - l) / 50.0)
        .fold(f64::INFINITY, f64::min)
        .max(1e-6);
    let mut idx = vec![0usize; k];
    let axes: Vec<Vec<f64>> = (0..k).map(|a| mb.axis(a, res)).collect();
    if axes.iter().map(|a| a.len() as f64).product::<f64>() > BRUTE_FORCE_CAP as f64 {
        return true;
    }
    loop {
        let m: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
        if problem.in_alt_set(&m, ball) {
            return true;
        }
        let mut a = k;
        loop {
            if a == 0 {
                return false;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForce {
    pub value: f64,
    pub weights: Vec<f64>,
    /// Alternative models found on the lattice.
    pub alternatives: usize,
    /// Bound on the lattice error of the inner minimum.
    pub model_error: f64,
    /// Pitch of the finest simplex lattice searched.
    pub simplex_pitch: f64,
}

/// Exhaustive `max_ω min_λ Σ_k ω_k d(μ_k, λ_k)` with `λ` ranging over the
/// model lattice of pitch `model_resolution` restricted to `¬x`, and `ω` over
/// a simplex lattice with `simplex_divisions` parts refined three times
/// around the incumbent.
pub fn brute_force_game(
    problem: &Problem,
    mu: &[f64],
    x: &[f64],
    simplex_divisions: usize,
    model_resolution: f64,
) -> Result<BruteForce> {
    let k = problem.arms();
    if k > 3 {
        return domain("the exhaustive game supports at most three arms");
    }
    if mu.len() != k || !problem.model_box.contains(mu) || x.len() != problem.dim() {
        return domain("model or answer has the wrong shape");
    }
    if !(model_resolution > 0.0) || simplex_divisions == 0 {
        return domain("grid sizes must be positive");
    }
    let fam = &problem.family;
    let mb = &problem.model_box;
    let axes: Vec<Vec<f64>> = (0..k).map(|a| mb.axis(a, model_resolution)).collect();
    let total: f64 = axes.iter().map(|a| a.len() as f64).product();
    if total > BRUTE_FORCE_CAP as f64 {
        return Err(Error::ResourceCap(format!(
            "model lattice of {total} points at pitch {model_resolution}"
        )));
    }
    let kl: Vec<Vec<f64>> = (0..k)
        .map(|a| axes[a].iter().map(|&l| fam.kl_raw(mu[a], l)).collect())
        .collect();

    // Among lattice points sharing the first K-1 coordinates only the one
    // with the smallest last divergence can be a minimizer.
    let last = k - 1;
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut alternatives = 0usize;
    let mut idx = vec![0usize; last];
    let subset = [x.to_vec()];
    'outer: loop {
        let mut best: Option<f64> = None;
        let mut lam: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
        lam.push(0.0);
        for (j, &l) in axes[last].iter().enumerate() {
            lam[last] = l;
            if problem.in_alt_set(&lam, &subset) {
                alternatives += 1;
                let v = kl[last][j];
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
        if let Some(b) = best {
            let mut row: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| kl[a][i]).collect();
            row.push(b);
            reduced.push(row);
        }
        let mut a = last;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    if reduced.is_empty() {
        return Err(Error::Infeasible(
            "no lattice model lies in the alternative set".into(),
        ));
    }
    let inner = |w: &[f64]| -> f64 {
        reduced
            .iter()
            .map(|r| r.iter().zip(w).map(|(v, wk)| v * wk).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };

    let slope = (0..k)
        .map(|a| {
            fam.kl_dq(mu[a], mb.lo()[a])
                .abs()
                .max(fam.kl_dq(mu[a], mb.hi()[a]).abs())
        })
        .fold(0.0f64, f64::max);
    let model_error = slope * model_resolution;

    let mut best = (f64::NEG_INFINITY, vec![1.0 / k as f64; k]);
    let mut center: Option<Vec<f64>> = None;
    let mut pitch = 1.0 / simplex_divisions as f64;
    let mut finest = pitch;
    for _ in 0..4 {
        finest = pitch;
        for w in local_simplex(k, center.as_deref(), pitch, simplex_divisions) {
            let v = inner(&w);
            if v > best.0 {
                best = (v, w);
            }
        }
        center = Some(best.1.clone());
        pitch /= 8.0;
    }
    Ok(BruteForce {
        value: best.0,
        weights: best.1,
        alternatives,
        model_error,
        simplex_pitch: finest,
    })
}

/// Simplex lattice of the given pitch: the whole simplex when `center` is
/// `None`, else the points within `n/8` steps of it per coordinate.
fn local_simplex(k: usize, center: Option<&[f64]>, pitch: f64, n: usize) -> Vec<Vec<f64>> {
    if k == 1 {
        return vec![vec![1.0]];
    }
    let span = match center {
        None => (0..k - 1).map(|_| (0.0, n as f64)).collect::<Vec<_>>(),
        Some(c) => c[..k - 1]
            .iter()
            .map(|&ci| {
                let steps = (n as f64 / 8.0).ceil().max(2.0);
                ((ci / pitch - steps).max(0.0).floor(), (ci / pitch + steps).floor())
            })
            .collect(),
    };
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(
        span: &[(f64, f64)],
        pitch: f64,
        cur: &mut Vec<f64>,
        out: &mut Vec<Vec<f64>>,
    ) {
        let used: f64 = cur.iter().sum();
        if cur.len() == span.len() {
            let rest = 1.0 - used;
            if rest >= -1e-12 {
                let mut w = cur.clone();
                w.push(rest.max(0.0));
                out.push(w);
            }
            return;
        }
        let (lo, hi) = span[cur.len()];
        let mut i = lo;
        while i <= hi {
            let v = i * pitch;
            if used + v > 1.0 + 1e-12 {
                break;
            }
            cur.push(v);
            rec(span, pitch, cur, out);
            cur.pop();
            i += 1.0;
        }
    }
    rec(&span, pitch, &mut cur, &mut out);
    out
}
