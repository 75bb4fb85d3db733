//! One-parameter exponential-family reward models in mean parameterization.
//!
//! Every public function takes and returns means. Natural parameters only
//! appear through [`RewardFamily::eta_derivative`].

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Reward distribution family shared by all arms of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardFamily {
    /// Normal rewards with known standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Rewards in {0, 1}.
    Bernoulli,
    /// Count rewards.
    Poisson,
}

impl RewardFamily {
    /// Gaussian family with known standard deviation.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let family = RewardFamily::Gaussian { sigma };
        family.validate()?;
        Ok(family)
    }

    /// Checks the family parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardFamily::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidParameter(format!("gaussian sigma must be positive, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    /// Short lowercase name, used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            RewardFamily::Gaussian { .. } => "gaussian",
            RewardFamily::Bernoulli => "bernoulli",
            RewardFamily::Poisson => "poisson",
        }
    }

    /// Returns `true` if `theta` is a valid mean (open domain).
    pub fn in_domain(&self, theta: f64) -> bool {
        match self {
            RewardFamily::Gaussian { .. } => theta.is_finite(),
            RewardFamily::Bernoulli => theta > 0.0 && theta < 1.0,
            RewardFamily::Poisson => theta > 0.0 && theta.is_finite(),
        }
    }

    pub(crate) fn check_mean(&self, theta: f64) -> Result<()> {
        self.validate()?;
        if self.in_domain(theta) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "mean {theta} outside the {} domain",
                self.name()
            )))
        }
    }

    /// KL divergence between the distributions with means `a` and `b`.
    pub fn kl(&self, a: f64, b: f64) -> Result<f64> {
        self.check_mean(a)?;
        self.check_mean(b)?;
        Ok(self.kl_ext(a, b))
    }

    /// KL divergence extended to the closure of the mean domain, without
    /// validation. Uses `0 ln 0 = 0`; returns `+inf` when `b` sits on the
    /// boundary and `a != b`. Empirical means can reach the boundary, so the
    /// statistics built on sample data go through this version.
    pub(crate) fn kl_ext(&self, a: f64, b: f64) -> f64 {
        match *self {
            RewardFamily::Gaussian { sigma } => {
                let d = a - b;
                d * d / (2.0 * sigma * sigma)
            }
            RewardFamily::Bernoulli => {
                if a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0 {
                    let d = a - b;
                    -a * log1pmx(-d / a) - (1.0 - a) * log1pmx(d / (1.0 - a))
                } else {
                    xlogx_ratio(a, b) + xlogx_ratio(1.0 - a, 1.0 - b)
                }
            }
            RewardFamily::Poisson => {
                if a > 0.0 && b > 0.0 {
                    -a * log1pmx((b - a) / a)
                } else {
                    xlogx_ratio(a, b) - a + b
                }
            }
        }
    }

    /// Derivative of the natural parameter with respect to the mean, which is
    /// the reciprocal of the variance at that mean.
    pub fn eta_derivative(&self, theta: f64) -> Result<f64> {
        self.check_mean(theta)?;
        Ok(1.0 / self.variance(theta))
    }

    /// Variance of a single reward with mean `theta`.
    pub fn variance(&self, theta: f64) -> f64 {
        match *self {
            RewardFamily::Gaussian { sigma } => sigma * sigma,
            RewardFamily::Bernoulli => theta * (1.0 - theta),
            RewardFamily::Poisson => theta,
        }
    }

    /// Draws one reward with mean `theta`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<f64> {
        self.check_mean(theta)?;
        Ok(self.sample_unchecked(theta, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        match *self {
            RewardFamily::Gaussian { sigma } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                theta + sigma * z
            }
            RewardFamily::Bernoulli => {
                if rng.random::<f64>() < theta {
                    1.0
                } else {
                    0.0
                }
            }
            RewardFamily::Poisson => Poisson::new(theta)
                .map(|d| d.sample(rng))
                .unwrap_or(0.0),
        }
    }
}

/// `ln(1 + u) - u` without cancellation for small `u`.
fn log1pmx(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        // -u^2/2 + u^3/3 - u^4/4 + ...; ten terms reach full precision here.
        let mut term = -u;
        let mut sum = 0.0;
        for n in 2..=12 {
            term *= -u;
            sum += term / n as f64;
        }
        -sum
    } else {
        u.ln_1p() - u
    }
}

/// `x ln(x / y)` with `0 ln(0 / y) = 0` and `x ln(x / 0) = +inf` for `x > 0`.
fn xlogx_ratio(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if y <= 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// A problem instance: the reward family and the vector of arm means.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    family: RewardFamily,
    means: Vec<f64>,
}

impl Instance {
    /// Builds an instance, checking `k >= 2` and that every mean is in the
    /// family's open domain.
    pub fn new(family: RewardFamily, means: Vec<f64>) -> Result<Self> {
        family.validate()?;
        if means.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "an instance needs at least 2 arms, got {}",
                means.len()
            )));
        }
        for &m in &means {
            family.check_mean(m)?;
        }
        Ok(Instance { family, means })
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Largest mean.
    pub fn best_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index arm attaining the largest mean.
    pub fn best_arm(&self) -> usize {
        argmax_lowest(&self.means)
    }

    /// Returns `true` if exactly one arm attains the largest mean.
    pub fn has_unique_best(&self) -> bool {
        let best = self.best_mean();
        self.means.iter().filter(|&&m| m == best).count() == 1
    }

    /// The best arm, or a precondition error if it is not unique.
    pub fn unique_best(&self) -> Result<usize> {
        if self.has_unique_best() {
            Ok(self.best_arm())
        } else {
            Err(Error::Precondition(format!(
                "best arm is not unique for means {:?}",
                self.means
            )))
        }
    }

    /// Optimality gaps `max_j theta_j - theta_i`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.means.iter().map(|m| best - m).collect()
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
