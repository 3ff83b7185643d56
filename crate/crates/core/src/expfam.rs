//! One-parameter canonical exponential families indexed by their mean.
//!
//! Two families ship: Gaussian with known variance and Bernoulli. Every
//! quantity is expressed in mean parameters; divergences are in nats.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default Bernoulli mean interval, kept away from 0 and 1 so that the KL
/// divergence and the Lipschitz constants stay bounded.
pub const BERNOULLI_DEFAULT_INTERVAL: (f64, f64) = (0.01, 0.99);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Gaussian { sigma: f64 },
    Bernoulli,
}

/// A family together with the closed mean interval `Θ` the arms live in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamilySpec", into = "RawFamilySpec")]
pub struct FamilySpec {
    family: Family,
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawFamilySpec {
    #[serde(flatten)]
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean_interval: Option<[f64; 2]>,
}

impl TryFrom<RawFamilySpec> for FamilySpec {
    type Error = Error;

    fn try_from(raw: RawFamilySpec) -> Result<Self> {
        match (raw.family, raw.mean_interval) {
            (Family::Gaussian { sigma }, Some([lo, hi])) => FamilySpec::gaussian(sigma, lo, hi),
            (Family::Gaussian { .. }, None) => {
                domain("a gaussian family needs an explicit mean_interval")
            }
            (Family::Bernoulli, Some([lo, hi])) => FamilySpec::bernoulli(lo, hi),
            (Family::Bernoulli, None) => Ok(FamilySpec::bernoulli_default()),
        }
    }
}

impl From<FamilySpec> for RawFamilySpec {
    fn from(spec: FamilySpec) -> Self {
        RawFamilySpec {
            family: spec.family,
            mean_interval: Some([spec.lo, spec.hi]),
        }
    }
}

impl FamilySpec {
    pub fn gaussian(sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return domain(format!("gaussian sigma must be positive, got {sigma}"));
        }
        check_interval(lo, hi)?;
        Ok(Self {
            family: Family::Gaussian { sigma },
            lo,
            hi,
        })
    }

    pub fn bernoulli(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if lo <= 0.0 || hi >= 1.0 {
            return domain(format!(
                "bernoulli mean interval [{lo}, {hi}] must lie strictly inside (0, 1)"
            ));
        }
        Ok(Self {
            family: Family::Bernoulli,
            lo,
            hi,
        })
    }

    pub fn bernoulli_default() -> Self {
        let (lo, hi) = BERNOULLI_DEFAULT_INTERVAL;
        Self {
            family: Family::Bernoulli,
            lo,
            hi,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The mean interval `Θ = [lo, hi]`.
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p <= self.hi
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.lo, self.hi)
    }

    fn check(&self, p: f64) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            domain(format!(
                "mean {p} outside the family interval [{}, {}]",
                self.lo, self.hi
            ))
        }
    }

    /// KL divergence `d(p, q)` between the members with means `p` and `q`.
    pub fn kl(&self, p: f64, q: f64) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.kl_raw(p, q))
    }

    /// Unchecked [`FamilySpec::kl`], used on the solver hot paths where the
    /// arguments are already clamped into the model box.
    #[inline]
    pub fn kl_raw(&self, p: f64, q: f64) -> f64 {
        match self.family {
            Family::Gaussian { sigma } => {
                let diff = p - q;
                diff * diff / (2.0 * sigma * sigma)
            }
            Family::Bernoulli => {
                let d = xlogx_ratio(p, q) + xlogx_ratio(1.0 - p, 1.0 - q);
                d.max(0.0)
            }
        }
    }

    /// Derivative of `q ↦ d(p, q)`, equal to `(q − p) / Var(q)`.
    #[inline]
    pub fn kl_dq(&self, p: f64, q: f64) -> f64 {
        (q - p) / self.variance(q)
    }

    /// Natural parameter `η` with `μ = ḃ(η)`.
    pub fn natural_param(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        Ok(self.natural_param_raw(p))
    }

    #[inline]
    pub fn natural_param_raw(&self, p: f64) -> f64 {
        match self.family {
            Family::Gaussian { sigma } => p / (sigma * sigma),
            Family::Bernoulli => (p / (1.0 - p)).ln(),
        }
    }

    /// Variance of the member with mean `p`, i.e. `b̈(η(p))`.
    #[inline]
    pub fn variance(&self, p: f64) -> f64 {
        match self.family {
            Family::Gaussian { sigma } => sigma * sigma,
            Family::Bernoulli => p * (1.0 - p),
        }
    }

    /// Constants `(C1, C2)` such that on the mean interval
    /// `|η(p) − η(q)| ≤ C1 |p − q|` and `d(p, q) ≤ C2 (p − q)²`.
    pub fn lipschitz_constants(&self) -> (f64, f64) {
        let min_var = self.variance(self.lo).min(self.variance(self.hi));
        let max_var = match self.family {
            Family::Gaussian { sigma } => sigma * sigma,
            Family::Bernoulli => self.variance(0.5f64.clamp(self.lo, self.hi)),
        };
        let c1 = 1.0 / min_var;
        (c1, c1 * c1 * max_var / 2.0)
    }

    /// One reward drawn from the member with mean `p`.
    pub fn sample<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<f64> {
        self.check(p)?;
        Ok(self.sample_raw(p, rng))
    }

    #[inline]
    pub fn sample_raw<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> f64 {
        match self.family {
            Family::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                p + sigma * z
            }
            Family::Bernoulli => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        domain(format!("mean interval [{lo}, {hi}] must be bounded and nonempty"))
    }
}

#[inline]
fn xlogx_ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}
