//! The length-regret tradeoff of information-balanced allocations.
//!
//! Fixing the best arm's share at `beta` and balancing the rest gives an
//! allocation `p(beta)` whose experiment length and cumulative regret, divided
//! by `ln n`, tend to
//!
//! ```text
//! L(beta) = 1 / D(beta, p_j(beta))          (the same for every j)
//! R(beta) = L(beta) * sum_j p_j(beta) gap_j
//! ```
//!
//! Shares above the length-minimizing `beta_bai` trade length for regret;
//! shares below it are worse on both counts.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::exp_family::{Instance, RewardFamily};
use crate::simulator::write_comment;
use crate::solver::{pairwise_information, solve_p_beta, solve_p_star};

/// Best-arm share used for the regret limit when no closed form exists.
pub const REGRET_LIMIT_BETA: f64 = 1.0 - 1e-6;

/// One point of the frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub beta: f64,
    /// Normalized length `L(beta)`.
    pub norm_length: f64,
    /// Normalized regret `R(beta)`.
    pub norm_regret: f64,
    /// The balanced allocation `p(beta)`.
    pub allocation: Vec<f64>,
}

/// Endpoints of the frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    /// Smallest normalized length, attained at `beta_bai`.
    pub l_star: f64,
    /// Smallest normalized regret, approached as `beta -> 1`.
    pub r_star: f64,
    /// Best-arm share of the unit-cost optimal allocation.
    pub beta_bai: f64,
    /// `r_star` comes from the Gaussian closed form rather than a numerical
    /// limit at [`REGRET_LIMIT_BETA`].
    pub r_star_exact: bool,
}

/// Normalized length and regret of the balanced allocation with best-arm
/// share `beta`.
pub fn frontier_point(instance: &Instance, beta: f64) -> Result<FrontierPoint> {
    let p = solve_p_beta(instance, beta)?;
    let d = pairwise_information(instance, &p)?;
    let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let norm_length = 1.0 / d_min;
    let gaps = instance.gaps();
    let exploration: f64 = p.iter().zip(&gaps).map(|(pi, g)| pi * g).sum();
    Ok(FrontierPoint { beta, norm_length, norm_regret: norm_length * exploration, allocation: p })
}

/// Minimal length, minimal regret and the length-minimizing share.
pub fn extremes(instance: &Instance) -> Result<Extremes> {
    let alloc = solve_p_star(instance, &CostModel::Unit)?;
    let beta_bai = alloc.p_star[alloc.best_arm];
    let l_star = frontier_point(instance, beta_bai)?.norm_length;
    let (r_star, r_star_exact) = match instance.family() {
        RewardFamily::Gaussian { sigma } => {
            let inv: f64 = instance.gaps().iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).sum();
            (2.0 * sigma * sigma * inv, true)
        }
        _ => (frontier_point(instance, REGRET_LIMIT_BETA)?.norm_regret, false),
    };
    Ok(Extremes { l_star, r_star, beta_bai, r_star_exact })
}

/// Frontier points for every share in `grid`, sorted by share. Points are
/// computed in parallel.
pub fn trace_frontier(instance: &Instance, grid: &[f64]) -> Result<Vec<FrontierPoint>> {
    if let Some(b) = grid.iter().find(|&&b| !(b > 0.0 && b < 1.0)) {
        return Err(Error::InvalidParameter(format!("grid share {b} outside (0, 1)")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.par_iter().map(|&b| frontier_point(instance, b)).collect()
}

/// Evenly spaced shares `start, start + step, ...` up to `stop` inclusive.
pub fn beta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start <= stop) {
        return Err(Error::InvalidParameter(format!(
            "bad grid: start {start}, stop {stop}, step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Human-readable description of an instance.
pub fn describe_instance(instance: &Instance) -> String {
    let means: Vec<String> = instance.means().iter().map(|m| m.to_string()).collect();
    let family = match instance.family() {
        RewardFamily::Gaussian { sigma } => format!("gaussian sigma={sigma}"),
        other => other.name().to_string(),
    };
    format!("instance: {family} means=[{}]", means.join(","))
}

/// Writes the frontier as CSV: `beta,norm_length,norm_regret,dominated`, plus
/// `length,regret` (normalized values times `ln n`) when `ln_n` is given.
/// A point is dominated when its share is below `beta_bai`.
pub fn write_frontier_csv<W: Write>(
    mut w: W,
    points: &[FrontierPoint],
    ext: &Extremes,
    ln_n: Option<f64>,
    comment: Option<&str>,
) -> io::Result<()> {
    write_comment(&mut w, comment)?;
    match ln_n {
        Some(_) => writeln!(w, "beta,norm_length,norm_regret,dominated,length,regret")?,
        None => writeln!(w, "beta,norm_length,norm_regret,dominated")?,
    }
    for p in points {
        let dominated = p.beta < ext.beta_bai;
        write!(w, "{},{},{},{}", p.beta, p.norm_length, p.norm_regret, dominated)?;
        if let Some(l) = ln_n {
            write!(w, ",{},{}", l * p.norm_length, l * p.norm_regret)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(means: Vec<f64>) -> Instance {
        Instance::new(RewardFamily::gaussian(1.0).unwrap(), means).unwrap()
    }

    #[test]
    fn two_arm_point() {
        let p = frontier_point(&gaussian(vec![1.0, 0.0]), 0.5).unwrap();
        assert!((p.norm_length - 8.0).abs() < 1e-9);
        assert!((p.norm_regret - 4.0).abs() < 1e-9);
        let e = extremes(&gaussian(vec![1.0, 0.0])).unwrap();
        assert_eq!(e.r_star, 2.0);
        assert!(e.r_star_exact);
    }

    #[test]
    fn grid_helper() {
        let g = beta_grid(0.01, 0.99, 0.001).unwrap();
        assert_eq!(g.len(), 981);
        assert!((g[980] - 0.99).abs() < 1e-12);
        assert!(beta_grid(0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn csv_rows_and_flags() {
        let inst = gaussian(vec![1.0, 0.5, 0.0]);
        let ext = extremes(&inst).unwrap();
        let pts = trace_frontier(&inst, &[0.7, 0.2, 0.5]).unwrap();
        assert_eq!(pts.iter().map(|p| p.beta).collect::<Vec<_>>(), vec![0.2, 0.5, 0.7]);
        let mut buf = Vec::new();
        write_frontier_csv(&mut buf, &pts, &ext, Some(10.0), Some(&describe_instance(&inst))).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# instance: gaussian sigma=1 means=[1,0.5,0]");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].split(',').nth(3) == Some("true"));
        assert!(lines[3].split(',').nth(3) == Some("false"));
        assert!(trace_frontier(&inst, &[1.0]).is_err());
    }
}
