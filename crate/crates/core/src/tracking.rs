//! C-Tracking on clipped oracle weights.

use crate::error::{domain, Result};

/// Projects `w` onto `{v ∈ Δ_K : v_k ≥ eps}`: coordinates below `eps` are
/// raised to it and the surplus is taken uniformly from the others,
/// repeating while that pushes further coordinates under `eps`.
pub fn clip_project(w: &[f64], eps: f64) -> Result<Vec<f64>> {
    let k = w.len();
    if k == 0 {
        return domain("cannot project an empty weight vector");
    }
    if !(eps >= 0.0 && eps <= 1.0 / k as f64 + 1e-15) {
        return domain(format!("clip level {eps} must lie in [0, 1/K] with K = {k}"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return domain("weights must be a probability vector");
    }
    if w.iter().all(|&v| v >= eps) {
        return Ok(w.to_vec());
    }
    let mut out = w.to_vec();
    let mut fixed = vec![false; k];
    loop {
        for (v, f) in out.iter_mut().zip(fixed.iter_mut()) {
            if *v <= eps {
                *v = eps;
                *f = true;
            }
        }
        let free: Vec<usize> = (0..k).filter(|&i| !fixed[i]).collect();
        let surplus = out.iter().sum::<f64>() - 1.0;
        if free.is_empty() || surplus <= 0.0 {
            break;
        }
        let share = surplus / free.len() as f64;
        for &i in &free {
            out[i] -= share;
        }
        if free.iter().all(|&i| out[i] >= eps) {
            break;
        }
    }
    Ok(out)
}

/// Clip level `ε_t = (4 (t + K²))^{-1/2}`.
pub fn epsilon_schedule(t: u64, k: usize) -> f64 {
    let kk = (k * k) as f64;
    1.0 / (4.0 * (t as f64 + kk)).sqrt()
}

/// `argmax_k (cum_k − N_k)`, lowest index on ties.
pub fn next_arm(cum_weights: &[f64], counts: &[u64]) -> usize {
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for (k, (c, n)) in cum_weights.iter().zip(counts).enumerate() {
        let gap = c - *n as f64;
        if gap > best_gap {
            best_gap = gap;
            best = k;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerState {
    pub cum_weights: Vec<f64>,
    pub counts: Vec<u64>,
    /// Rounds completed.
    pub t: u64,
    pub violations: u64,
}

impl TrackerState {
    pub fn new(k: usize) -> Self {
        Self {
            cum_weights: vec![0.0; k],
            counts: vec![0; k],
            t: 0,
            violations: 0,
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    /// Plays round `t + 1` with projected weights `w`: accrues them, picks
    /// the lagging arm, counts the pull and checks both tracking bounds.
    pub fn step(&mut self, w: &[f64]) -> usize {
        for (c, v) in self.cum_weights.iter_mut().zip(w) {
            *c += v;
        }
        let arm = next_arm(&self.cum_weights, &self.counts);
        self.record_pull(arm);
        arm
    }

    /// Warm-up round: weights accrue uniformly while arm `t` is pulled.
    pub fn warm_up_step(&mut self) -> usize {
        let k = self.arms();
        for c in &mut self.cum_weights {
            *c += 1.0 / k as f64;
        }
        let arm = self.t as usize % k;
        self.record_pull(arm);
        arm
    }

    fn record_pull(&mut self, arm: usize) {
        self.counts[arm] += 1;
        self.t += 1;
        if !self.invariants_hold() {
            self.violations += 1;
        }
    }

    /// `N_k(t) ≥ √(t + K²) − 2K` and `max_k |N_k(t) − Σ_s ω̃_k(s)| ≤ K(1 + √t)`.
    pub fn invariants_hold(&self) -> bool {
        let k = self.arms() as f64;
        let t = self.t as f64;
        let floor = (t + k * k).sqrt() - 2.0 * k;
        let forced = self.counts.iter().all(|&n| n as f64 >= floor);
        let err = self
            .counts
            .iter()
            .zip(&self.cum_weights)
            .fold(0.0f64, |m, (&n, c)| m.max((n as f64 - c).abs()));
        forced && err <= k * (1.0 + t.sqrt()) + 1e-9
    }
}
