//! Stopping thresholds and stopping rules.
//!
//! [`gamma`] is the explicit threshold used by the exact rule. [`c_exp`] and
//! [`kaufmann_threshold`] give the tighter but implicit mixture-martingale
//! threshold that `gamma` upper bounds. The heuristic rule compares the
//! smallest Z-statistic with a normal quantile.

use crate::error::{Error, Result};
use crate::exp_family::RewardFamily;
use crate::normal;
use crate::roots::{bisect_increasing, Tolerance};
use crate::state::ExperimentState;

/// When to stop experimenting and deploy the empirical best arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// Stop once `t * min_j D` reaches [`gamma`]`(t, n, k)`.
    ExactThreshold { n: u64 },
    /// Stop once every Z-statistic against the leader reaches the
    /// `1 - 1/(n(k-1))` normal quantile. Gaussian rewards only.
    HeuristicQuantile { n: u64 },
    /// Never stop early.
    Never,
}

impl StoppingRule {
    /// Checks `n >= 2`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            StoppingRule::ExactThreshold { n } | StoppingRule::HeuristicQuantile { n } if n < 2 => {
                Err(Error::InvalidParameter(format!("population size must be at least 2, got {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Checks that the rule can be evaluated for `family`.
    pub fn check_family(&self, family: RewardFamily) -> Result<()> {
        match (self, family) {
            (StoppingRule::HeuristicQuantile { .. }, RewardFamily::Gaussian { .. }) => Ok(()),
            (StoppingRule::HeuristicQuantile { .. }, other) => Err(Error::Unsupported(format!(
                "the heuristic quantile rule needs gaussian rewards, got {}",
                other.name()
            ))),
            _ => Ok(()),
        }
    }

    /// Returns `true` if the experiment should stop in `state`.
    pub fn should_stop(&self, state: &ExperimentState) -> Result<bool> {
        self.validate()?;
        self.check_family(state.family())?;
        if state.t() == 0 {
            return Ok(false);
        }
        match *self {
            StoppingRule::Never => Ok(false),
            StoppingRule::ExactThreshold { n } => {
                let (_, value) = state.stopping_statistic();
                Ok(value >= gamma(state.t(), n, state.k()))
            }
            StoppingRule::HeuristicQuantile { n } => {
                if !state.all_sampled() {
                    return Ok(false);
                }
                let z = heuristic_quantile(n, state.k());
                let leader = state.empirical_best();
                for j in 0..state.k() {
                    if j != leader && state.z_statistic(leader, j)? < z {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Explicit threshold `gamma_t(n)`; infinite at `t = 0`.
pub fn gamma(t: u64, n: u64, k: usize) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    let base = (n as f64).ln() + ((k - 1) as f64).ln();
    base + 6.0 * (base / 2.0 + 2.0).ln() + 6.0 * ((t as f64 / 2.0).ln() + 1.0).ln() + 14.0
}

/// Normal quantile at level `1 - 1/(n(k-1))`.
pub fn heuristic_quantile(n: u64, k: usize) -> f64 {
    let tail = 1.0 / (n as f64 * (k - 1) as f64);
    -normal::quantile(tail)
}

/// `h(u) = u - ln u` for `u >= 1`.
pub fn h(u: f64) -> f64 {
    u - u.ln()
}

/// Inverse of [`h`] on `[1, inf)`, by bisection to absolute tolerance 1e-12.
pub fn h_inverse(y: f64) -> Result<f64> {
    if !(y >= 1.0 && y.is_finite()) {
        return Err(Error::InvalidParameter(format!("h inverse needs y >= 1, got {y}")));
    }
    let hi = y + (2.0 * y).ln() + 1.0;
    bisect_increasing(h, y, 1.0, hi, Tolerance::Absolute(1e-12))
}

/// Breakpoint `h(1 / ln 1.5)` of [`h_tilde`].
pub fn h_tilde_breakpoint() -> f64 {
    h(1.0 / 1.5f64.ln())
}

/// Piecewise function entering the calibration function, for `y > 0`.
pub fn h_tilde(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParameter(format!("h tilde needs y > 0, got {y}")));
    }
    if y >= h_tilde_breakpoint() {
        let u = h_inverse(y)?;
        Ok((1.0 / u).exp() * u)
    } else {
        Ok(1.5 * (y - 1.5f64.ln().ln()))
    }
}

/// Calibration function `C_exp(x) = 2 h_tilde((h^{-1}(x + 1) + ln(pi^2 / 3)) / 2)`.
pub fn c_exp(x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_exp needs x >= 0, got {x}")));
    }
    let pi2_over_3 = std::f64::consts::PI.powi(2) / 3.0;
    let y = (h_inverse(x + 1.0)? + pi2_over_3.ln()) / 2.0;
    Ok(2.0 * h_tilde(y)?)
}

/// Mixture-martingale threshold `2 C_exp(ln((k-1)/delta) / 2) + 6 ln(ln(t/2) + 1)`.
pub fn kaufmann_threshold(t: u64, delta: f64, k: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("kaufmann threshold needs t >= 1".into()));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 arms, got {k}")));
    }
    let x = (((k - 1) as f64) / delta).ln() / 2.0;
    Ok(2.0 * c_exp(x)? + 6.0 * ((t as f64 / 2.0).ln() + 1.0).ln())
}
