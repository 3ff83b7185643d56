//! Answer spaces, correctness correspondences and the shipped problem kinds.
//!
//! Sets are never represented symbolically. A correct set `X*(μ)` or an
//! alternative set `¬x` is a predicate; every set-valued computation walks a
//! deterministic lattice produced by [`answer_grid`] or [`ModelBox::grid`].

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::expfam::FamilySpec;

pub type AnswerPoint = Vec<f64>;

/// Default cap on the number of points any lattice may hold.
pub const DEFAULT_GRID_CAP: usize = 2_000_000;

/// Slack used when testing lattice and ball membership, so that points
/// produced by `lo + i·h` are not lost to rounding.
pub(crate) const GEOM_SLACK: f64 = 1e-9;

pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnswerSpace {
    /// Axis-aligned closed box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Explicit list of points (finite answer problems).
    Finite { points: Vec<AnswerPoint> },
    /// Cartesian product; the coordinates of the first factor come first.
    Product(Box<AnswerSpace>, Box<AnswerSpace>),
}

impl AnswerSpace {
    pub fn interval(lo: f64, hi: f64) -> Self {
        AnswerSpace::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnswerSpace::Box { lo, .. } => lo.len(),
            AnswerSpace::Finite { points } => points.first().map_or(0, Vec::len),
            AnswerSpace::Product(a, b) => a.dim() + b.dim(),
        }
    }

    /// Smallest box containing the space.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            AnswerSpace::Box { lo, hi } => (lo.clone(), hi.clone()),
            AnswerSpace::Finite { points } => {
                let d = self.dim();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in points {
                    for k in 0..d {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
            AnswerSpace::Product(a, b) => {
                let (mut lo, mut hi) = a.bounding_box();
                let (lo2, hi2) = b.bounding_box();
                lo.extend(lo2);
                hi.extend(hi2);
                (lo, hi)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            AnswerSpace::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - GEOM_SLACK && *v <= h + GEOM_SLACK),
            AnswerSpace::Finite { points } => points.iter().any(|p| p.as_slice() == x),
            AnswerSpace::Product(a, b) => {
                let (xa, xb) = x.split_at(a.dim());
                a.contains(xa) && b.contains(xb)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AnswerSpace::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return domain("answer box needs matching, nonempty bounds");
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
                    return domain("answer box bounds must be finite with lo <= hi");
                }
                Ok(())
            }
            AnswerSpace::Finite { points } => {
                let d = self.dim();
                if points.is_empty() || d == 0 || points.iter().any(|p| p.len() != d) {
                    return domain("finite answer space needs nonempty points of one dimension");
                }
                Ok(())
            }
            AnswerSpace::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }
}

/// Grid over a box: per axis `lo + i·h` for `i = 0, 1, ...` up to `hi`,
/// with `hi` appended when the pitch does not divide the side.
fn axis_lattice(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h + GEOM_SLACK).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let last = *v.last().unwrap();
    if hi - last > GEOM_SLACK * h.max(1.0) {
        v.push(hi);
    } else {
        *v.last_mut().unwrap() = last.min(hi);
    }
    v
}

fn cartesian(axes: &[Vec<f64>], cap: usize, what: &str) -> Result<Vec<AnswerPoint>> {
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .filter(|&n| n <= cap)
        .ok_or_else(|| Error::ResourceCap(format!("{what} would exceed {cap} points")))?;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(axes).map(|(&i, a)| a[i]).collect());
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

fn product_points(a: Vec<AnswerPoint>, b: Vec<AnswerPoint>, cap: usize) -> Result<Vec<AnswerPoint>> {
    if a.len().saturating_mul(b.len()) > cap {
        return Err(Error::ResourceCap(format!(
            "product grid would exceed {cap} points"
        )));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for p in &a {
        for q in &b {
            let mut v = p.clone();
            v.extend_from_slice(q);
            out.push(v);
        }
    }
    Ok(out)
}

/// Deterministic answer lattice of pitch `resolution`, in lexicographic order.
pub fn answer_grid(space: &AnswerSpace, resolution: f64) -> Result<Vec<AnswerPoint>> {
    answer_grid_capped(space, resolution, DEFAULT_GRID_CAP)
}

pub fn answer_grid_capped(
    space: &AnswerSpace,
    resolution: f64,
    cap: usize,
) -> Result<Vec<AnswerPoint>> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return domain(format!("grid resolution must be positive, got {resolution}"));
    }
    match space {
        AnswerSpace::Box { lo, hi } => {
            let axes: Vec<_> = lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| axis_lattice(l, h, resolution))
                .collect();
            cartesian(&axes, cap, "answer grid")
        }
        AnswerSpace::Finite { points } => {
            let mut pts = points.clone();
            pts.sort_by(|a, b| lex_cmp(a, b));
            pts.dedup();
            Ok(pts)
        }
        AnswerSpace::Product(a, b) => product_points(
            answer_grid_capped(a, resolution, cap)?,
            answer_grid_capped(b, resolution, cap)?,
            cap,
        ),
    }
}

/// Index range `[first, last]` of lattice centers `lo + 2ρ i` whose ball
/// of radius `ρ` contains `y`, clipped to `[0, imax]`.
fn covering_indices(lo: f64, hi: f64, rho: f64, y: f64) -> Option<(usize, usize)> {
    let pitch = 2.0 * rho;
    let imax = ((hi - lo + rho) / pitch + GEOM_SLACK).floor().max(0.0);
    let first = ((y - lo - rho) / pitch - GEOM_SLACK).ceil().max(0.0);
    let last = ((y - lo + rho) / pitch + GEOM_SLACK).floor().min(imax);
    (first <= last).then_some((first as usize, last as usize))
}

/// Centers of the unique ℓ∞ cover of `space` by balls of radius `rho`:
/// the lattice of pitch `2ρ` anchored at the box minimum, restricted to
/// centers whose ball meets the space.
pub fn cover_centers(space: &AnswerSpace, rho: f64) -> Result<Vec<AnswerPoint>> {
    cover_centers_capped(space, rho, DEFAULT_GRID_CAP)
}

pub fn cover_centers_capped(
    space: &AnswerSpace,
    rho: f64,
    cap: usize,
) -> Result<Vec<AnswerPoint>> {
    if !(rho.is_finite() && rho > 0.0) {
        return domain(format!("cover radius must be positive, got {rho}"));
    }
    match space {
        AnswerSpace::Box { lo, hi } => {
            let axes: Vec<Vec<f64>> = lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    let (_, last) = covering_indices(l, h, rho, h).unwrap_or((0, 0));
                    (0..=last).map(|i| l + 2.0 * rho * i as f64).collect()
                })
                .collect();
            cartesian(&axes, cap, "cover")
        }
        AnswerSpace::Finite { points } => {
            let mut out = Vec::new();
            for p in points {
                out.extend(cover_centers_containing(space, rho, p)?);
            }
            out.sort_by(|a, b| lex_cmp(a, b));
            out.dedup();
            Ok(out)
        }
        AnswerSpace::Product(a, b) => product_points(
            cover_centers_capped(a, rho, cap)?,
            cover_centers_capped(b, rho, cap)?,
            cap,
        ),
    }
}

/// The centers of [`cover_centers`] whose ball contains the point `y` of the
/// space, in lexicographic order. Never enumerates the full cover.
pub fn cover_centers_containing(
    space: &AnswerSpace,
    rho: f64,
    y: &[f64],
) -> Result<Vec<AnswerPoint>> {
    if y.len() != space.dim() {
        return domain("point dimension does not match the answer space");
    }
    match space {
        AnswerSpace::Product(a, b) => {
            let (ya, yb) = y.split_at(a.dim());
            product_points(
                cover_centers_containing(a, rho, ya)?,
                cover_centers_containing(b, rho, yb)?,
                DEFAULT_GRID_CAP,
            )
        }
        _ => {
            let (lo, hi) = space.bounding_box();
            let mut axes = Vec::with_capacity(y.len());
            for k in 0..y.len() {
                match covering_indices(lo[k], hi[k], rho, y[k]) {
                    Some((a, b)) => {
                        axes.push((a..=b).map(|i| lo[k] + 2.0 * rho * i as f64).collect())
                    }
                    None => return Ok(Vec::new()),
                }
            }
            cartesian(&axes, DEFAULT_GRID_CAP, "cover")
        }
    }
}

/// Admissible models `M`: one closed mean interval per arm.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ModelBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return domain("model box needs one interval per arm");
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
            return domain("model box intervals must be bounded and nonempty");
        }
        Ok(Self { lo, hi })
    }

    /// `K` copies of the family's mean interval.
    pub fn uniform(family: &FamilySpec, k: usize) -> Self {
        let (lo, hi) = family.interval();
        Self {
            lo: vec![lo; k],
            hi: vec![hi; k],
        }
    }

    pub fn arms(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, model: &[f64]) -> bool {
        model.len() == self.arms()
            && model
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(m, (l, h))| *m >= *l && *m <= *h)
    }

    pub fn clamp(&self, model: &[f64]) -> Vec<f64> {
        model
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(m, (l, h))| m.clamp(*l, *h))
            .collect()
    }

    pub fn axis(&self, k: usize, resolution: f64) -> Vec<f64> {
        axis_lattice(self.lo[k], self.hi[k], resolution)
    }

    /// Lexicographically ordered lattice over the box.
    pub fn grid(&self, resolution: f64) -> Result<Vec<Vec<f64>>> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return domain(format!("grid resolution must be positive, got {resolution}"));
        }
        let axes: Vec<_> = (0..self.arms()).map(|k| self.axis(k, resolution)).collect();
        cartesian(&axes, DEFAULT_GRID_CAP, "model grid")
    }
}

/// A user-supplied continuous map `Θ^K → R^d`.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub out_dim: usize,
    pub f: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFn({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum RegressionFn {
    Identity,
    Max,
    Custom(CustomFn),
}

impl RegressionFn {
    pub fn out_dim(&self, k: usize) -> usize {
        match self {
            RegressionFn::Identity => k,
            RegressionFn::Max => 1,
            RegressionFn::Custom(c) => c.out_dim,
        }
    }

    pub fn eval(&self, model: &[f64]) -> Vec<f64> {
        match self {
            RegressionFn::Identity => model.to_vec(),
            RegressionFn::Max => vec![model.iter().copied().fold(f64::NEG_INFINITY, f64::max)],
            RegressionFn::Custom(c) => (c.f)(model),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    /// `X*(μ) = {x : ‖f(μ) − x‖∞ ≤ ε}` inside `space`.
    Regression {
        f: RegressionFn,
        eps: f64,
        space: AnswerSpace,
    },
    /// Arm `k` (1-based) is the answer `[k]`; it is correct iff
    /// `μ_k ≥ max μ − eps`. Best-arm identification is `eps = 0`.
    EpsGood { eps: f64, arms: usize },
    Product(Box<ProblemKind>, Box<ProblemKind>),
}

impl ProblemKind {
    pub fn space(&self) -> AnswerSpace {
        match self {
            ProblemKind::Regression { space, .. } => space.clone(),
            ProblemKind::EpsGood { arms, .. } => AnswerSpace::Finite {
                points: (1..=*arms).map(|k| vec![k as f64]).collect(),
            },
            ProblemKind::Product(a, b) => {
                AnswerSpace::Product(Box::new(a.space()), Box::new(b.space()))
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemKind::Regression { space, .. } => space.dim(),
            ProblemKind::EpsGood { .. } => 1,
            ProblemKind::Product(a, b) => a.dim() + b.dim(),
        }
    }

    pub fn is_correct(&self, model: &[f64], x: &[f64]) -> bool {
        match self {
            ProblemKind::Regression { f, eps, .. } => linf(&f.eval(model), x) <= *eps,
            ProblemKind::EpsGood { eps, .. } => match arm_of(x, model.len()) {
                Some(k) => model[k] >= max_of(model) - eps,
                None => false,
            },
            ProblemKind::Product(a, b) => {
                let (xa, xb) = x.split_at(a.dim());
                a.is_correct(model, xa) && b.is_correct(model, xb)
            }
        }
    }

    /// A point of `X*(μ)` (or the closest admissible one): `f(μ)` clamped
    /// to the answer box, or the lowest-index best arm.
    pub fn reference_answer(&self, model: &[f64]) -> AnswerPoint {
        match self {
            ProblemKind::Regression { f, space, .. } => {
                let (lo, hi) = space.bounding_box();
                f.eval(model)
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v.clamp(lo[k], hi[k]))
                    .collect()
            }
            ProblemKind::EpsGood { .. } => {
                let m = max_of(model);
                let k = model.iter().position(|&v| v == m).unwrap_or(0);
                vec![(k + 1) as f64]
            }
            ProblemKind::Product(a, b) => {
                let mut v = a.reference_answer(model);
                v.extend(b.reference_answer(model));
                v
            }
        }
    }

    /// Smallest ℓ∞ distance between two distinct answers, when finite.
    pub fn min_answer_separation(&self) -> Option<f64> {
        match self {
            ProblemKind::Regression { .. } => None,
            ProblemKind::EpsGood { arms, .. } => (*arms > 1).then_some(1.0),
            ProblemKind::Product(a, b) => match (a.min_answer_separation(), b.min_answer_separation()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            },
        }
    }
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// 0-based arm index encoded by a finite answer, if valid.
pub(crate) fn arm_of(x: &[f64], arms: usize) -> Option<usize> {
    let v = *x.first()?;
    let k = v.round();
    (x.len() == 1 && (v - k).abs() < 1e-9 && k >= 1.0 && k <= arms as f64).then(|| k as usize - 1)
}

/// A pure-exploration problem over an exponential-family bandit.
#[derive(Clone, Debug)]
pub struct Problem {
    pub family: FamilySpec,
    pub model_box: ModelBox,
    pub kind: ProblemKind,
    space: AnswerSpace,
}

impl Problem {
    pub fn new(family: FamilySpec, model_box: ModelBox, kind: ProblemKind) -> Result<Self> {
        let (flo, fhi) = family.interval();
        if model_box.lo.iter().any(|&l| l < flo) || model_box.hi.iter().any(|&h| h > fhi) {
            return domain("model box must lie inside the family mean interval");
        }
        check_kind(&kind, model_box.arms())?;
        let space = kind.space();
        space.validate()?;
        Ok(Self {
            family,
            model_box,
            kind,
            space,
        })
    }

    /// Regression of `f` with the default answer box, the range of `f`
    /// over the model box when it is known in closed form.
    pub fn regression(
        family: FamilySpec,
        model_box: ModelBox,
        f: RegressionFn,
        eps: f64,
    ) -> Result<Self> {
        let space = match &f {
            RegressionFn::Identity => AnswerSpace::Box {
                lo: model_box.lo.clone(),
                hi: model_box.hi.clone(),
            },
            RegressionFn::Max => {
                AnswerSpace::interval(max_of(&model_box.lo), max_of(&model_box.hi))
            }
            RegressionFn::Custom(_) => {
                return domain("a custom regression needs an explicit answer box")
            }
        };
        Self::new(family, model_box, ProblemKind::Regression { f, eps, space })
    }

    pub fn identity_regression(family: FamilySpec, model_box: ModelBox, eps: f64) -> Result<Self> {
        Self::regression(family, model_box, RegressionFn::Identity, eps)
    }

    pub fn max_regression(family: FamilySpec, model_box: ModelBox, eps: f64) -> Result<Self> {
        Self::regression(family, model_box, RegressionFn::Max, eps)
    }

    pub fn eps_good(family: FamilySpec, model_box: ModelBox, eps: f64) -> Result<Self> {
        let arms = model_box.arms();
        Self::new(family, model_box, ProblemKind::EpsGood { eps, arms })
    }

    pub fn best_arm(family: FamilySpec, model_box: ModelBox) -> Result<Self> {
        Self::eps_good(family, model_box, 0.0)
    }

    pub fn arms(&self) -> usize {
        self.model_box.arms()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn answer_space(&self) -> &AnswerSpace {
        &self.space
    }

    fn check_model(&self, model: &[f64]) -> Result<()> {
        if model.len() != self.arms() {
            return domain(format!(
                "model has {} arms, problem has {}",
                model.len(),
                self.arms()
            ));
        }
        Ok(())
    }

    fn check_answer(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!(
                "answer has dimension {}, problem has {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// `x ∈ X*(model)`; correct sets are closed.
    pub fn is_correct(&self, model: &[f64], x: &[f64]) -> Result<bool> {
        self.check_model(model)?;
        self.check_answer(x)?;
        Ok(self.kind.is_correct(model, x))
    }

    /// `model ∈ ¬subset`: no answer of the subset is correct for `model`.
    pub fn in_alt_set(&self, model: &[f64], subset: &[AnswerPoint]) -> bool {
        subset.iter().all(|x| !self.kind.is_correct(model, x))
    }

    pub fn reference_answer(&self, model: &[f64]) -> AnswerPoint {
        self.kind.reference_answer(model)
    }
}

fn check_kind(kind: &ProblemKind, arms: usize) -> Result<()> {
    match kind {
        ProblemKind::Regression { f, eps, space } => {
            if !(eps.is_finite() && *eps >= 0.0) {
                return domain(format!("regression accuracy must be >= 0, got {eps}"));
            }
            if f.out_dim(arms) != space.dim() {
                return domain("regression output dimension does not match the answer box");
            }
            if matches!(f, RegressionFn::Identity) || matches!(f, RegressionFn::Max) {
                if !matches!(space, AnswerSpace::Box { .. }) {
                    return domain("regression answers must form a box");
                }
            }
            Ok(())
        }
        ProblemKind::EpsGood { eps, arms: a } => {
            if *a != arms || arms < 2 {
                return domain("finite arm-identification needs K >= 2 arms matching the box");
            }
            if !(eps.is_finite() && *eps >= 0.0) {
                return domain(format!("epsilon must be >= 0, got {eps}"));
            }
            Ok(())
        }
        ProblemKind::Product(a, b) => {
            check_kind(a, arms)?;
            check_kind(b, arms)
        }
    }
}

/// Product correspondence: answers are pairs, correctness is the conjunction.
pub fn compose(p1: &Problem, p2: &Problem) -> Result<Problem> {
    if p1.family != p2.family {
        return domain("composed problems must share the exponential family");
    }
    if p1.model_box != p2.model_box {
        return domain("composed problems must share the model box");
    }
    Problem::new(
        p1.family,
        p1.model_box.clone(),
        ProblemKind::Product(Box::new(p1.kind.clone()), Box::new(p2.kind.clone())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> FamilySpec {
        FamilySpec::gaussian(1.0, -1.0, 2.0).unwrap()
    }

    fn reg1(eps: f64) -> Problem {
        Problem::identity_regression(gauss(), ModelBox::new(vec![0.0], vec![1.0]).unwrap(), eps)
            .unwrap()
    }

    fn bai2() -> Problem {
        Problem::best_arm(gauss(), ModelBox::new(vec![-1.0; 2], vec![2.0; 2]).unwrap()).unwrap()
    }

    #[test]
    fn regression_correctness_is_closed() {
        let p = reg1(0.1);
        assert!(p.is_correct(&[0.5], &[0.5]).unwrap());
        assert!(!p.is_correct(&[0.5], &[0.61]).unwrap());
        assert!(p.is_correct(&[0.5], &[0.625]).is_ok());
        let q = reg1(0.125);
        assert!(q.is_correct(&[0.5], &[0.625]).unwrap());
        assert!(matches!(p.is_correct(&[0.5, 0.1], &[0.5]), Err(Error::Domain(_))));
        assert!(matches!(p.is_correct(&[0.5], &[0.5, 0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn best_arm_correctness() {
        let p = bai2();
        assert!(p.is_correct(&[1.0, 0.0], &[1.0]).unwrap());
        assert!(!p.is_correct(&[1.0, 0.0], &[2.0]).unwrap());
        assert!(p.is_correct(&[0.5, 0.5], &[2.0]).unwrap());
    }

    #[test]
    fn alternative_membership() {
        let p = reg1(0.1);
        assert!(!p.in_alt_set(&[0.5], &[vec![0.5]]));
        assert!(p.in_alt_set(&[0.7], &[vec![0.5]]));
        assert!(!p.in_alt_set(&[0.7], &[vec![0.5], vec![0.65]]));
    }

    #[test]
    fn grid_examples() {
        let unit = AnswerSpace::interval(0.0, 1.0);
        assert_eq!(answer_grid(&unit, 0.5).unwrap(), vec![vec![0.0], vec![0.5], vec![1.0]]);
        let g = answer_grid(&unit, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!(g.windows(2).all(|w| w[0][0] < w[1][0]));
        assert!((g[10][0] - 1.0).abs() < 1e-15);
        let sq = AnswerSpace::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert_eq!(
            answer_grid(&sq, 1.0).unwrap(),
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
        let odd = answer_grid(&AnswerSpace::interval(0.0, 1.0), 0.3).unwrap();
        assert_eq!(odd.last().unwrap()[0], 1.0);
        assert_eq!(odd.len(), 5);
    }

    #[test]
    fn grid_cap_is_a_resource_error() {
        let sq = AnswerSpace::Box {
            lo: vec![0.0; 3],
            hi: vec![1.0; 3],
        };
        assert!(matches!(
            answer_grid_capped(&sq, 0.01, 1000),
            Err(Error::ResourceCap(_))
        ));
        assert!(answer_grid(&sq, 0.0).is_err());
    }

    #[test]
    fn cover_examples() {
        let unit = AnswerSpace::interval(0.0, 1.0);
        assert_eq!(cover_centers(&unit, 0.5).unwrap(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(
            cover_centers(&unit, 0.25).unwrap(),
            vec![vec![0.0], vec![0.5], vec![1.0]]
        );
        assert_eq!(
            cover_centers_containing(&unit, 0.25, &[0.25]).unwrap(),
            vec![vec![0.0], vec![0.5]]
        );
        assert_eq!(cover_centers_containing(&unit, 0.5, &[0.8]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn finite_cover_only_keeps_useful_centers() {
        let space = AnswerSpace::Finite {
            points: vec![vec![1.0], vec![4.0]],
        };
        let c = cover_centers(&space, 0.5).unwrap();
        assert_eq!(c, vec![vec![1.0], vec![4.0]]);
        let c = cover_centers(&space, 1.0).unwrap();
        assert_eq!(c, vec![vec![1.0], vec![3.0], vec![5.0]]);
    }

    #[test]
    fn compose_builds_products() {
        let reg = Problem::max_regression(
            gauss(),
            ModelBox::new(vec![-1.0; 2], vec![2.0; 2]).unwrap(),
            0.1,
        )
        .unwrap();
        let prod = compose(&reg, &bai2()).unwrap();
        assert_eq!(prod.dim(), 2);
        let mu = [1.0, 0.0];
        assert!(prod.is_correct(&mu, &[1.05, 1.0]).unwrap());
        assert!(!prod.is_correct(&mu, &[1.05, 2.0]).unwrap());
        assert!(!prod.is_correct(&mu, &[1.5, 1.0]).unwrap());
        // wrong for the regression part, right for the arm: still alternative
        assert!(prod.in_alt_set(&[0.2, 0.0], &[vec![1.0, 1.0]]));
        let other = Problem::best_arm(gauss(), ModelBox::new(vec![0.0; 2], vec![1.0; 2]).unwrap())
            .unwrap();
        assert!(matches!(compose(&reg, &other), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let mb = ModelBox::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert!(Problem::identity_regression(gauss(), mb.clone(), -0.1).is_err());
        assert!(Problem::best_arm(gauss(), ModelBox::new(vec![0.0], vec![1.0]).unwrap()).is_err());
        let bern = FamilySpec::bernoulli_default();
        assert!(Problem::best_arm(bern, mb).is_err());
        assert!(ModelBox::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn model_grid_is_lexicographic() {
        let mb = ModelBox::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let g = mb.grid(0.25).unwrap();
        assert_eq!(g.len(), 5 * 3);
        assert!(g.windows(2).all(|w| lex_cmp(&w[0], &w[1]) == Ordering::Less));
    }
}
