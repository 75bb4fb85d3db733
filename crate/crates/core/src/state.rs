//! Sufficient statistics of one experiment trajectory.

use crate::error::{Error, Result};
use crate::exp_family::{argmax_lowest, RewardFamily};

/// Running counts and reward sums for one trajectory.
///
/// Means are derived from sums on demand. An arm with no observations has
/// mean 0 and infinite standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentState {
    family: RewardFamily,
    counts: Vec<u64>,
    sums: Vec<f64>,
    t: u64,
}

impl ExperimentState {
    /// Empty state for `k` arms.
    pub fn new(family: RewardFamily, k: usize) -> Result<Self> {
        family.validate()?;
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 arms, got {k}")));
        }
        Ok(ExperimentState { family, counts: vec![0; k], sums: vec![0.0; k], t: 0 })
    }

    /// Builds a state from explicit counts and sums.
    pub fn from_counts(family: RewardFamily, counts: Vec<u64>, sums: Vec<f64>) -> Result<Self> {
        let mut s = ExperimentState::new(family, counts.len())?;
        if sums.len() != counts.len() {
            return Err(Error::InvalidParameter("counts and sums differ in length".into()));
        }
        for (i, (&n, &x)) in counts.iter().zip(&sums).enumerate() {
            if n == 0 && x != 0.0 {
                return Err(Error::InvalidParameter(format!("arm {i} has a sum but no count")));
            }
        }
        s.t = counts.iter().sum();
        s.counts = counts;
        s.sums = sums;
        Ok(s)
    }

    /// Records one reward for `arm`.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.k() {
            return Err(Error::IndexOutOfRange { index: arm, k: self.k() });
        }
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.t += 1;
        Ok(())
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Number of observations so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    /// Empirical mean of arm `i`, 0 when unsampled.
    pub fn mean(&self, i: usize) -> f64 {
        if self.counts[i] == 0 {
            0.0
        } else {
            self.sums[i] / self.counts[i] as f64
        }
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.k()).map(|i| self.mean(i)).collect()
    }

    /// Share of observations that went to each arm (all zero at t = 0).
    pub fn proportions(&self) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.k()];
        }
        let t = self.t as f64;
        self.counts.iter().map(|&n| n as f64 / t).collect()
    }

    /// Standard error `sqrt(variance / N_i)`, using the family variance at the
    /// empirical mean. Infinite when unsampled.
    pub fn std_error(&self, i: usize) -> f64 {
        if self.counts[i] == 0 {
            f64::INFINITY
        } else {
            (self.family.variance(self.mean(i)) / self.counts[i] as f64).sqrt()
        }
    }

    /// Returns `true` if every arm has at least one observation.
    pub fn all_sampled(&self) -> bool {
        self.counts.iter().all(|&n| n > 0)
    }

    /// Lowest-index unsampled arm, if any.
    pub fn first_unsampled(&self) -> Option<usize> {
        self.counts.iter().position(|&n| n == 0)
    }

    /// Arm with the largest empirical mean, lowest index on ties.
    pub fn empirical_best(&self) -> usize {
        argmax_lowest(&self.means())
    }

    /// Z-statistic between arms `i` and `j` (Gaussian only). Zero when either
    /// arm is unsampled.
    pub fn z_statistic(&self, i: usize, j: usize) -> Result<f64> {
        let sigma = match self.family {
            RewardFamily::Gaussian { sigma } => sigma,
            other => {
                return Err(Error::Unsupported(format!(
                    "z statistics need a gaussian family, got {}",
                    other.name()
                )))
            }
        };
        for idx in [i, j] {
            if idx >= self.k() {
                return Err(Error::IndexOutOfRange { index: idx, k: self.k() });
            }
        }
        let (ni, nj) = (self.counts[i], self.counts[j]);
        if ni == 0 || nj == 0 {
            return Ok(0.0);
        }
        let var = sigma * sigma;
        let se = (var / ni as f64 + var / nj as f64).sqrt();
        Ok((self.mean(i) - self.mean(j)) / se)
    }

    /// Leader and `t * min_j D(m_leader, m_j; p_leader, p_j)`.
    ///
    /// The value is 0 while any arm is unsampled, so the experiment cannot stop
    /// before every arm has been observed.
    pub fn stopping_statistic(&self) -> (usize, f64) {
        let leader = self.empirical_best();
        if !self.all_sampled() {
            return (leader, 0.0);
        }
        let ml = self.mean(leader);
        let nl = self.counts[leader] as f64;
        let mut value = f64::INFINITY;
        for j in 0..self.k() {
            if j == leader {
                continue;
            }
            let d = chernoff_ext(self.family, ml, self.mean(j), nl, self.counts[j] as f64).0;
            value = value.min(d);
        }
        (leader, value)
    }
}

/// Weighted Chernoff information between two arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffInfo {
    /// `w_i KL(theta_i, bar) + w_j KL(theta_j, bar)`.
    pub value: f64,
    /// The weighted mean `bar`, which minimizes the weighted KL sum.
    pub minimizer: f64,
}

/// Weighted Chernoff information `min over theta_i >= x >= theta_j` of
/// `w_i KL(theta_i, x) + w_j KL(theta_j, x)`, attained at the weighted mean.
pub fn chernoff_info(
    family: RewardFamily,
    theta_i: f64,
    theta_j: f64,
    w_i: f64,
    w_j: f64,
) -> Result<ChernoffInfo> {
    family.check_mean(theta_i)?;
    family.check_mean(theta_j)?;
    if theta_i < theta_j {
        return Err(Error::Ordering(format!(
            "chernoff information needs theta_i >= theta_j, got {theta_i} < {theta_j}"
        )));
    }
    for w in [w_i, w_j] {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("weights must be nonnegative, got {w}")));
        }
    }
    let (value, minimizer) = chernoff_ext(family, theta_i, theta_j, w_i, w_j);
    Ok(ChernoffInfo { value, minimizer })
}

/// Unchecked weighted Chernoff information on the closure of the mean domain.
pub(crate) fn chernoff_ext(family: RewardFamily, a: f64, b: f64, wa: f64, wb: f64) -> (f64, f64) {
    let total = wa + wb;
    if total <= 0.0 {
        return (0.0, b);
    }
    let bar = (wa * a + wb * b) / total;
    let mut value = 0.0;
    if wa > 0.0 {
        value += wa * family.kl_ext(a, bar);
    }
    if wb > 0.0 {
        value += wb * family.kl_ext(b, bar);
    }
    (value, bar)
}
