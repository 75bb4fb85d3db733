//! Optimal allocations and the associated zero-sum game.
//!
//! Fix the best arm `b` of an instance. For a suboptimal arm `j` let
//!
//! ```text
//! g_j(x) = KL(theta_b, m) + x KL(theta_j, m),   m = (theta_b + x theta_j) / (1 + x),
//! ```
//!
//! the Chernoff information between `b` and `j` when `j` receives `x` times the
//! measurements of `b`. `g_j` increases from 0 towards `KL(theta_b, theta_j)`,
//! so it has an inverse `x_j(y)`. Information balance means every `g_j` takes
//! the same value `y`; the exploitation-rate condition
//!
//! ```text
//! F(y) = sum_j (C_j / C_b) KL(theta_b, m_j(y)) / KL(theta_j, m_j(y)) = 1
//! ```
//!
//! then pins down `y`, and the optimal allocation is proportional to
//! `(x_j(y))_j` with `x_b = 1`.

use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::exp_family::{Instance, RewardFamily};
use crate::roots::{bisect_increasing, Tolerance};
use crate::state::chernoff_ext;

/// Relative tolerance for every bisection in this module.
pub const REL_TOL: f64 = 1e-12;

/// The optimal allocation and equilibrium of the allocation game.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAllocation {
    /// Index of the best arm.
    pub best_arm: usize,
    /// Optimal measurement proportions, one per arm.
    pub p_star: Vec<f64>,
    /// Suboptimal arms, in increasing order; `q_star[r]` and
    /// `alternatives[r]` refer to `alternative_arms[r]`.
    pub alternative_arms: Vec<usize>,
    /// Skeptic's equilibrium mixture over the hard alternatives.
    pub q_star: Vec<f64>,
    /// Hard alternatives: the instance with the best arm and arm `j` both
    /// moved to their `p_star`-weighted mean.
    pub alternatives: Vec<Vec<f64>>,
    /// Equilibrium value of the game.
    pub equilibrium_value: f64,
    /// Coefficient of `ln n` in the optimal total cost, `1 / equilibrium_value`.
    pub lai_robbins_constant: f64,
    /// Common Chernoff information level, relative to the best arm's share.
    pub y_star: f64,
}

/// Information-balance and exploitation-rate residuals of an allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `max_{i,j} |D_i - D_j| / mean D` over suboptimal arms.
    pub balance: f64,
    /// `|F - 1|` evaluated at the allocation's pairwise weighted means.
    pub exploitation: f64,
}

/// `g_j(x)` for means `best > other`.
fn g_raw(family: RewardFamily, best: f64, other: f64, x: f64) -> f64 {
    chernoff_ext(family, best, other, 1.0, x).0
}

/// Solves `g(x) = y` for `0 <= y < KL(best, other)`.
fn x_of_y(family: RewardFamily, best: f64, other: f64, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g_raw(family, best, other, hi) < y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical(format!(
                "could not bracket g^-1({y}) for means {best} and {other}"
            )));
        }
    }
    bisect_increasing(|x| g_raw(family, best, other, x), y, lo, hi, Tolerance::Relative(REL_TOL))
}

/// Validated view of an instance used by the solvers.
struct Problem<'a> {
    family: RewardFamily,
    means: &'a [f64],
    best: usize,
    others: Vec<usize>,
    /// `min_j KL(theta_b, theta_j)`, the supremum of admissible `y`.
    y_max: f64,
}

impl<'a> Problem<'a> {
    fn new(instance: &'a Instance) -> Result<Self> {
        let best = instance.unique_best()?;
        let family = instance.family();
        let means = instance.means();
        let others: Vec<usize> = (0..means.len()).filter(|&j| j != best).collect();
        let y_max = others
            .iter()
            .map(|&j| family.kl_ext(means[best], means[j]))
            .fold(f64::INFINITY, f64::min);
        Ok(Problem { family, means, best, others, y_max })
    }

    fn x(&self, j: usize, y: f64) -> Result<f64> {
        x_of_y(self.family, self.means[self.best], self.means[j], y)
    }

    /// Finds `y` in `(0, y_max)` with `f(y) = target` for increasing `f` that
    /// diverges at `y_max`.
    fn solve_y<F>(&self, mut f: F, target: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut hi = (1.0 - 1e-9) * self.y_max;
        let mut expansions = 0;
        while f(hi)? < target {
            let next = self.y_max - 0.1 * (self.y_max - hi);
            if next <= hi || expansions > 60 {
                return Err(Error::Numerical(format!(
                    "could not bracket the root below y_max = {}",
                    self.y_max
                )));
            }
            hi = next;
            expansions += 1;
        }
        let mut err = None;
        let y = bisect_increasing(
            |y| match f(y) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            target,
            0.0,
            hi,
            Tolerance::Relative(REL_TOL),
        );
        match err {
            Some(e) => Err(e),
            None => y,
        }
    }
}

/// `g_j(x)`: Chernoff information between the best arm and arm `j` when `j`
/// receives `x` measurements per measurement of the best arm.
pub fn g(instance: &Instance, j: usize, x: f64) -> Result<f64> {
    let p = Problem::new(instance)?;
    check_other(&p, j)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("x must be nonnegative, got {x}")));
    }
    Ok(g_raw(p.family, p.means[p.best], p.means[j], x))
}

/// Inverse of [`g`]: the ratio `x` with `g_j(x) = y`, for
/// `0 <= y < KL(theta_b, theta_j)`.
pub fn g_inverse(instance: &Instance, j: usize, y: f64) -> Result<f64> {
    let p = Problem::new(instance)?;
    check_other(&p, j)?;
    let sup = p.family.kl_ext(p.means[p.best], p.means[j]);
    if !(y >= 0.0 && y < sup) {
        return Err(Error::OutOfRange(format!("g^-1 needs 0 <= y < {sup}, got {y}")));
    }
    p.x(j, y)
}

fn check_other(p: &Problem<'_>, j: usize) -> Result<()> {
    if j >= p.means.len() {
        return Err(Error::IndexOutOfRange { index: j, k: p.means.len() });
    }
    if j == p.best {
        return Err(Error::InvalidParameter(format!("arm {j} is the best arm")));
    }
    Ok(())
}

/// Optimal allocation `p*`, equilibrium strategy `q*`, equilibrium value and
/// Lai-Robbins constant for `instance` under `costs`.
pub fn solve_p_star(instance: &Instance, costs: &CostModel) -> Result<OptimalAllocation> {
    let prob = Problem::new(instance)?;
    costs.validate(instance.k())?;
    let c = costs.sampling_costs(instance.means())?;
    let (b, fam, theta) = (prob.best, prob.family, prob.means);
    let tb = theta[b];

    let f = |y: f64| -> Result<f64> {
        let mut total = 0.0;
        for &j in &prob.others {
            let x = prob.x(j, y)?;
            let bar = (tb + x * theta[j]) / (1.0 + x);
            total += c[j] / c[b] * fam.kl_ext(tb, bar) / fam.kl_ext(theta[j], bar);
        }
        Ok(total)
    };
    let y_star = prob.solve_y(f, 1.0)?;

    let mut x = vec![0.0; theta.len()];
    x[b] = 1.0;
    for &j in &prob.others {
        x[j] = prob.x(j, y_star)?;
    }
    let sum_x: f64 = x.iter().sum();
    let p_star: Vec<f64> = x.iter().map(|v| v / sum_x).collect();

    let mut alternatives = Vec::with_capacity(prob.others.len());
    let mut weights = Vec::with_capacity(prob.others.len());
    for &j in &prob.others {
        let bar = (p_star[b] * tb + p_star[j] * theta[j]) / (p_star[b] + p_star[j]);
        let mut alt = theta.to_vec();
        alt[b] = bar;
        alt[j] = bar;
        alternatives.push(alt);
        weights.push(c[j] / fam.kl_ext(theta[j], bar));
    }
    let kappa: f64 = weights.iter().sum();
    let q_star = weights.iter().map(|w| w / kappa).collect();

    Ok(OptimalAllocation {
        best_arm: b,
        p_star,
        alternative_arms: prob.others.clone(),
        q_star,
        alternatives,
        equilibrium_value: 1.0 / kappa,
        lai_robbins_constant: kappa,
        y_star,
    })
}

/// The information-balanced allocation that gives the best arm share `beta`.
pub fn solve_p_beta(instance: &Instance, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    let prob = Problem::new(instance)?;
    let target = (1.0 - beta) / beta;
    let total_x = |y: f64| -> Result<f64> {
        let mut s = 0.0;
        for &j in &prob.others {
            s += prob.x(j, y)?;
        }
        Ok(s)
    };
    let y = prob.solve_y(total_x, target)?;
    let mut p = vec![0.0; instance.k()];
    p[prob.best] = beta;
    for &j in &prob.others {
        p[j] = beta * prob.x(j, y)?;
    }
    Ok(p)
}

/// `sum_i p_i KL(theta_i, alt_i) / sum_i p_i C_i(theta)`: information gathered
/// against `alt` per unit of cost.
pub fn payoff(instance: &Instance, costs: &CostModel, p: &[f64], alt: &[f64]) -> Result<f64> {
    let k = instance.k();
    if p.len() != k || alt.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected vectors of length {k}, got {} and {}",
            p.len(),
            alt.len()
        )));
    }
    let fam = instance.family();
    let c = costs.sampling_costs(instance.means())?;
    let mut info = 0.0;
    let mut cost = 0.0;
    for i in 0..k {
        info += p[i] * fam.kl(instance.means()[i], alt[i])?;
        cost += p[i] * c[i];
    }
    Ok(info / cost)
}

/// Expected payoff of `p` when the skeptic mixes over the hard alternatives
/// with `alloc.q_star`.
pub fn mixed_payoff(
    instance: &Instance,
    costs: &CostModel,
    p: &[f64],
    alloc: &OptimalAllocation,
) -> Result<f64> {
    let mut total = 0.0;
    for (q, alt) in alloc.q_star.iter().zip(&alloc.alternatives) {
        total += q * payoff(instance, costs, p, alt)?;
    }
    Ok(total)
}

/// Optimal best-arm share under `LengthRegret { c }`.
pub fn beta_c(instance: &Instance, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let alloc = solve_p_star(instance, &CostModel::LengthRegret { c })?;
    Ok(alloc.p_star[alloc.best_arm])
}

/// Pairwise Chernoff information between the best arm and every other arm
/// under allocation `p`, in the order of the suboptimal arm indices.
pub fn pairwise_information(instance: &Instance, p: &[f64]) -> Result<Vec<f64>> {
    let prob = Problem::new(instance)?;
    if p.len() != instance.k() {
        return Err(Error::InvalidParameter("allocation length differs from k".into()));
    }
    let tb = prob.means[prob.best];
    Ok(prob
        .others
        .iter()
        .map(|&j| chernoff_ext(prob.family, tb, prob.means[j], p[prob.best], p[j]).0)
        .collect())
}

/// Balance and exploitation-rate residuals of `p`.
pub fn residuals(instance: &Instance, costs: &CostModel, p: &[f64]) -> Result<Residuals> {
    let prob = Problem::new(instance)?;
    let d = pairwise_information(instance, p)?;
    let mean_d = d.iter().sum::<f64>() / d.len() as f64;
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = costs.sampling_costs(instance.means())?;
    let (b, fam, theta) = (prob.best, prob.family, prob.means);
    let mut f = 0.0;
    for &j in &prob.others {
        let bar = (p[b] * theta[b] + p[j] * theta[j]) / (p[b] + p[j]);
        f += c[j] / c[b] * fam.kl_ext(theta[b], bar) / fam.kl_ext(theta[j], bar);
    }
    Ok(Residuals { balance: (hi - lo) / mean_d, exploitation: (f - 1.0).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(means: Vec<f64>) -> Instance {
        Instance::new(RewardFamily::gaussian(1.0).unwrap(), means).unwrap()
    }

    #[test]
    fn g_inverse_examples() {
        let inst = gaussian(vec![1.0, 0.0]);
        assert_eq!(g_inverse(&inst, 1, 0.0).unwrap(), 0.0);
        assert!((g(&inst, 1, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((g_inverse(&inst, 1, 0.25).unwrap() - 1.0).abs() < 1e-11);
        assert!(matches!(g_inverse(&inst, 1, 0.5), Err(Error::OutOfRange(_))));
        assert!(g_inverse(&inst, 0, 0.1).is_err());
    }

    #[test]
    fn g_inverse_matches_gaussian_closed_form() {
        // For Gaussian rewards g(x) = K x / (1 + x) with K = gap^2 / (2 sigma^2).
        let inst = Instance::new(RewardFamily::gaussian(2.0).unwrap(), vec![0.3, 1.5, -0.7]).unwrap();
        for (j, gap) in [(0usize, 1.2f64), (2, 2.2)] {
            let k = gap * gap / 8.0;
            for frac in [1e-6, 0.1, 0.5, 0.9, 0.999] {
                let y = frac * k;
                let x = g_inverse(&inst, j, y).unwrap();
                let expected = y / (k - y);
                assert!(((x - expected) / expected).abs() < 1e-10, "j={j} y={y}");
            }
        }
    }

    #[test]
    fn teaser_unit_cost_share() {
        let inst = gaussian(vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        let a = solve_p_star(&inst, &CostModel::Unit).unwrap();
        assert_eq!(a.best_arm, 5);
        assert!((a.p_star[5] - 0.446).abs() <= 0.005);
        let r = residuals(&inst, &CostModel::Unit, &a.p_star).unwrap();
        assert!(r.balance <= 1e-8 && r.exploitation <= 1e-8, "{r:?}");
    }

    #[test]
    fn two_arm_symmetric() {
        let inst = gaussian(vec![1.0, 0.0]);
        let a = solve_p_star(&inst, &CostModel::Unit).unwrap();
        assert!((a.p_star[0] - 0.5).abs() < 1e-10);
        assert_eq!(a.q_star, vec![1.0]);
        // kappa = C_1 / KL(0, 0.5) = 8.
        assert!((a.lai_robbins_constant - 8.0).abs() < 1e-8);
    }

    #[test]
    fn p_beta_examples() {
        let two = gaussian(vec![1.0, 0.0]);
        for beta in [0.1, 0.5, 0.77] {
            let p = solve_p_beta(&two, beta).unwrap();
            assert!((p[0] - beta).abs() < 1e-15);
            assert!((p[1] - (1.0 - beta)).abs() < 1e-10);
        }
        let sym = gaussian(vec![1.0, 0.0, 0.0]);
        let p = solve_p_beta(&sym, 0.5).unwrap();
        assert!((p[1] - 0.25).abs() < 1e-10 && (p[2] - 0.25).abs() < 1e-10);
        assert!(solve_p_beta(&sym, 1.0).is_err());
    }

    #[test]
    fn p_beta_reproduces_p_star() {
        let inst = Instance::new(RewardFamily::Bernoulli, vec![0.3, 0.55, 0.5, 0.1]).unwrap();
        let a = solve_p_star(&inst, &CostModel::LengthRegret { c: 0.3 }).unwrap();
        let p = solve_p_beta(&inst, a.p_star[1]).unwrap();
        for (u, v) in p.iter().zip(&a.p_star) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn non_unique_best_is_a_precondition_error() {
        let inst = gaussian(vec![1.0, 1.0, 0.0]);
        assert!(matches!(solve_p_star(&inst, &CostModel::Unit), Err(Error::Precondition(_))));
    }

    #[test]
    fn payoff_at_truth_is_zero() {
        let inst = gaussian(vec![1.0, 0.5, 0.0]);
        let p = [0.2, 0.3, 0.5];
        assert_eq!(payoff(&inst, &CostModel::Unit, &p, inst.means()).unwrap(), 0.0);
    }

    #[test]
    fn beta_c_rejects_nonpositive_c() {
        let inst = gaussian(vec![1.0, 0.5, 0.0]);
        assert!(beta_c(&inst, 0.0).is_err());
        assert!(beta_c(&inst, 1e-6).unwrap() >= 0.99);
    }
}
