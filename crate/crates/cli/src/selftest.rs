//! Quick numerical checks of the library, run by `adaptexp selftest`.

use adaptexp::pareto::{extremes, frontier_point};
use adaptexp::policies::optimality_probabilities;
use adaptexp::solver::{mixed_payoff, residuals, solve_p_star};
use adaptexp::state::chernoff_info;
use adaptexp::stopping::{c_exp, gamma, kaufmann_threshold};
use adaptexp::{CostModel, ExperimentState, Instance, RewardFamily};

use crate::CliError;

type Check = Result<String, String>;

fn teaser() -> Instance {
    Instance::new(RewardFamily::gaussian(1.0).unwrap(), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap()
}

fn unit_cost_share() -> Check {
    let a = solve_p_star(&teaser(), &CostModel::Unit).map_err(|e| e.to_string())?;
    let share = a.p_star[5];
    if (share - 0.446).abs() <= 0.005 {
        Ok(format!("best-arm share {share:.4}"))
    } else {
        Err(format!("best-arm share {share:.4}, expected 0.446"))
    }
}

fn optimality_conditions() -> Check {
    let cases = [
        (teaser(), CostModel::LengthRegret { c: 1.0 }),
        (Instance::new(RewardFamily::Bernoulli, vec![0.3, 0.55, 0.5, 0.1]).unwrap(), CostModel::Unit),
        (Instance::new(RewardFamily::Poisson, vec![1.0, 3.0, 2.0]).unwrap(), CostModel::LengthRegret { c: 0.5 }),
    ];
    let mut worst: f64 = 0.0;
    for (inst, costs) in &cases {
        let a = solve_p_star(inst, costs).map_err(|e| e.to_string())?;
        let r = residuals(inst, costs, &a.p_star).map_err(|e| e.to_string())?;
        let gamma = mixed_payoff(inst, costs, &a.p_star, &a).map_err(|e| e.to_string())?;
        worst = worst.max(r.balance).max(r.exploitation).max((gamma * a.lai_robbins_constant - 1.0).abs());
    }
    if worst <= 1e-8 {
        Ok(format!("max residual {worst:.1e}"))
    } else {
        Err(format!("max residual {worst:.1e}"))
    }
}

fn gaussian_identity() -> Check {
    let fam = RewardFamily::gaussian(1.5).unwrap();
    let state = ExperimentState::from_counts(fam, vec![40, 70], vec![30.0, 14.0]).unwrap();
    let t = state.t() as f64;
    let d = chernoff_info(fam, state.mean(0), state.mean(1), 40.0 / t, 70.0 / t).map_err(|e| e.to_string())?;
    let z = state.z_statistic(0, 1).map_err(|e| e.to_string())?;
    let err = (t * d.value - z * z / 2.0).abs();
    if err <= 1e-10 {
        Ok(format!("|t D - Z^2/2| = {err:.1e}"))
    } else {
        Err(format!("|t D - Z^2/2| = {err:.1e}"))
    }
}

fn thresholds() -> Check {
    for k in [2usize, 5, 10] {
        for n in [100u64, 10_000, 1_000_000, 100_000_000] {
            for t in [1u64, 10, 100, 1000, 10_000] {
                let lhs = kaufmann_threshold(t, 1.0 / n as f64, k).map_err(|e| e.to_string())?;
                if lhs > gamma(t, n, k) {
                    return Err(format!("threshold order fails at t={t} n={n} k={k}"));
                }
            }
        }
    }
    for x in [0.52, 1.0, 2.0, 5.0, 10.0, 50.0] {
        if c_exp(x).map_err(|e| e.to_string())? > x + 3.0 * (x + 2.0).ln() + 7.0 {
            return Err(format!("C_exp bound fails at x={x}"));
        }
    }
    Ok("threshold order and C_exp bound hold".into())
}

fn quadrature_symmetry() -> Check {
    let fam = RewardFamily::gaussian(1.0).unwrap();
    let state = ExperimentState::from_counts(fam, vec![9, 9, 9], vec![4.5, 4.5, 4.5]).unwrap();
    let alpha = optimality_probabilities(&state).map_err(|e| e.to_string())?;
    let err = alpha.iter().map(|a| (a - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    if err <= 1e-6 {
        Ok(format!("max deviation from 1/3: {err:.1e}"))
    } else {
        Err(format!("max deviation from 1/3: {err:.1e}"))
    }
}

fn frontier_bounds() -> Check {
    let inst = teaser();
    let ext = extremes(&inst).map_err(|e| e.to_string())?;
    for beta in [1.0 / 3.0, 0.5, 0.7, 0.9] {
        let p = frontier_point(&inst, beta).map_err(|e| e.to_string())?;
        if p.norm_length > ext.l_star / (1.0 - beta) || p.norm_regret > ext.r_star / beta {
            return Err(format!("robustness bound fails at beta={beta}"));
        }
    }
    Ok(format!("beta_bai {:.4}, L* {:.3}, R* {:.3}", ext.beta_bai, ext.l_star, ext.r_star))
}

pub fn run() -> Result<(), CliError> {
    let checks: [(&str, fn() -> Check); 6] = [
        ("unit-cost best-arm share", unit_cost_share),
        ("optimality conditions", optimality_conditions),
        ("gaussian information identity", gaussian_identity),
        ("stopping thresholds", thresholds),
        ("quadrature symmetry", quadrature_symmetry),
        ("frontier robustness", frontier_bounds),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("{failed} self-test checks failed")))
    }
}
