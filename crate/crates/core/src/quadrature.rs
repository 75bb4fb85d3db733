//! Gauss-Hermite quadrature and posterior optimality probabilities.

use std::sync::OnceLock;

use crate::normal;

/// Number of nodes used for optimality probabilities.
pub const DEFAULT_NODES: usize = 64;

/// Nodes whose weight falls below this contribute less than `64 * 1e-20` to
/// an integral of a function bounded by 1 and are skipped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-20;

/// The standard normal CDF rounds to exactly 1.0 from here on.
const CDF_IS_ONE: f64 = 8.5;

/// Gauss-Hermite rule for the weight `exp(-x^2)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence, with the usual asymptotic starting guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        GaussHermite { nodes: x, weights: w }
    }

    /// `sum_q w_q f(x_q)`, approximating the integral of `f(x) exp(-x^2)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// The shared 64-node rule with negligible-weight nodes removed.
fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| {
        let full = GaussHermite::new(DEFAULT_NODES);
        let keep: Vec<usize> =
            (0..DEFAULT_NODES).filter(|&q| full.weights[q] >= NEGLIGIBLE_WEIGHT).collect();
        GaussHermite {
            nodes: keep.iter().map(|&q| full.nodes[q]).collect(),
            weights: keep.iter().map(|&q| full.weights[q]).collect(),
        }
    })
}

/// Probability that each arm has the largest draw when arm `i` is
/// independently `Normal(means[i], sds[i]^2)`. All `sds` must be positive
/// and finite. The result is normalized to sum to 1.
pub fn optimality_probabilities(means: &[f64], sds: &[f64]) -> Vec<f64> {
    let rule = default_rule();
    let k = means.len();
    // Visiting competitors from the largest mean down lets the product
    // underflow as early as possible.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    let mut alpha = vec![0.0; k];
    for i in 0..k {
        let scale = sds[i] * std::f64::consts::SQRT_2;
        let mut total = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = means[i] + scale * x;
            let mut prod = w;
            for &j in &order {
                if j == i {
                    continue;
                }
                let z = (v - means[j]) / sds[j];
                if z >= CDF_IS_ONE {
                    continue;
                }
                prod *= normal::cdf(z);
                if prod < 1e-300 {
                    prod = 0.0;
                    break;
                }
            }
            total += prod;
        }
        alpha[i] = total;
    }
    let sum: f64 = alpha.iter().sum();
    if sum > 0.0 {
        for a in &mut alpha {
            *a /= sum;
        }
    } else {
        // Every integrand underflowed; fall back to the arm with the largest mean.
        let best = crate::exp_family::argmax_lowest(means);
        alpha.iter_mut().for_each(|a| *a = 0.0);
        alpha[best] = 1.0;
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_the_weight() {
        let rule = GaussHermite::new(64);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((rule.integrate(|_| 1.0) - sqrt_pi).abs() < 1e-13);
        assert!((rule.integrate(|x| x * x) - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((rule.integrate(|x| x.powi(4)) - 0.75 * sqrt_pi).abs() < 1e-12);
        assert!(rule.integrate(|x| x.powi(3)).abs() < 1e-13);
        // sqrt(2) x is standard normal under the weight, and E[cos Z] = exp(-1/2).
        let e = rule.integrate(|x| (std::f64::consts::SQRT_2 * x).cos()) / sqrt_pi;
        assert!((e - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn small_rule_matches_known_nodes() {
        let rule = GaussHermite::new(2);
        assert!((rule.nodes[0] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((rule.weights[0] - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_posteriors() {
        let a = optimality_probabilities(&[0.3, 0.3], &[0.5, 0.5]);
        assert!((a[0] - 0.5).abs() < 1e-6 && (a[1] - 0.5).abs() < 1e-6);
        let a = optimality_probabilities(&[1.0; 3], &[2.0; 3]);
        assert!(a.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-6));
    }

    #[test]
    fn cdf_is_exactly_one_past_cutoff() {
        assert_eq!(normal::cdf(CDF_IS_ONE), 1.0);
    }

    #[test]
    fn separated_posteriors() {
        let a = optimality_probabilities(&[10.0, 0.0], &[0.01, 0.01]);
        assert!(a[0] >= 1.0 - 1e-12);
    }

    #[test]
    fn two_arm_closed_form() {
        // P(X0 > X1) = Phi((m0 - m1) / sqrt(s0^2 + s1^2)).
        let (m, s) = ([0.4, 0.1], [0.3, 0.2]);
        let a = optimality_probabilities(&m, &s);
        let exact = normal::cdf(0.3 / (0.09f64 + 0.04).sqrt());
        assert!((a[0] - exact).abs() < 1e-9);
    }
}
