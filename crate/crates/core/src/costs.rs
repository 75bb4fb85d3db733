//! Within-experiment and post-experiment cost models.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A user-supplied cost model. Implementations must be deterministic pure
/// functions of the mean vector; `sampling_cost` must be strictly positive and
/// `post_cost` must vanish exactly at the best arm.
pub trait CostFunction: Send + Sync {
    /// Cost of treating one person with arm `i` when the means are `theta`.
    fn sampling_cost(&self, i: usize, theta: &[f64]) -> f64;
    /// Per-person cost of deploying arm `i` after the experiment.
    fn post_cost(&self, i: usize, theta: &[f64]) -> f64;
}

/// Per-arm costs `C_i(theta)` and `Delta_i(theta)`.
#[derive(Clone)]
pub enum CostModel {
    /// `C_i = c + gap_i`, `Delta_i = gap_i`: experiment length priced at `c`
    /// per person plus cumulative regret.
    LengthRegret { c: f64 },
    /// `C_i = 1`, `Delta_i = 1{i not best}`.
    Unit,
    /// `C_i = c_i`, `Delta_i = 1{i not best}`.
    PerArmConstant(Vec<f64>),
    /// Arbitrary evaluator.
    Custom(Arc<dyn CostFunction>),
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::LengthRegret { c } => f.debug_struct("LengthRegret").field("c", c).finish(),
            CostModel::Unit => f.write_str("Unit"),
            CostModel::PerArmConstant(c) => f.debug_tuple("PerArmConstant").field(c).finish(),
            CostModel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CostModel {
    /// Checks the static parameters against an instance with `k` arms.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            CostModel::LengthRegret { c } if !(*c > 0.0 && c.is_finite()) => Err(
                Error::InvalidParameter(format!("length-regret price must be positive, got {c}")),
            ),
            CostModel::PerArmConstant(c) if c.len() != k => Err(Error::InvalidParameter(format!(
                "expected {k} per-arm costs, got {}",
                c.len()
            ))),
            CostModel::PerArmConstant(c) if c.iter().any(|&x| !(x > 0.0 && x.is_finite())) => Err(
                Error::InvalidParameter(format!("per-arm costs must be positive, got {c:?}")),
            ),
            _ => Ok(()),
        }
    }

    /// `C_i(theta)`.
    pub fn sampling_cost(&self, i: usize, theta: &[f64]) -> f64 {
        match self {
            CostModel::LengthRegret { c } => c + gap(i, theta),
            CostModel::Unit => 1.0,
            CostModel::PerArmConstant(c) => c[i],
            CostModel::Custom(f) => f.sampling_cost(i, theta),
        }
    }

    /// `Delta_i(theta)`.
    pub fn post_cost(&self, i: usize, theta: &[f64]) -> f64 {
        match self {
            CostModel::LengthRegret { .. } => gap(i, theta),
            CostModel::Unit | CostModel::PerArmConstant(_) => {
                if gap(i, theta) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CostModel::Custom(f) => f.post_cost(i, theta),
        }
    }

    /// `C(theta)` for every arm, checked to be positive and finite.
    pub fn sampling_costs(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let costs: Vec<f64> = (0..theta.len()).map(|i| self.sampling_cost(i, theta)).collect();
        if let Some(bad) = costs.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "sampling costs must be positive and finite, got {bad}"
            )));
        }
        Ok(costs)
    }

    /// `Delta(theta)` for every arm.
    pub fn post_costs(&self, theta: &[f64]) -> Vec<f64> {
        (0..theta.len()).map(|i| self.post_cost(i, theta)).collect()
    }
}

fn gap(i: usize, theta: &[f64]) -> f64 {
    let best = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - theta[i]
}
