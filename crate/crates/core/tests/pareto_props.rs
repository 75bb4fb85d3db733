use adaptexp::pareto::{beta_grid, extremes, frontier_point, trace_frontier};
use adaptexp::simulator::{run_trials, summarize};
use adaptexp::solver::{beta_c, pairwise_information};
use adaptexp::{AllocationRule, Coin, CostModel, Instance, RewardFamily, RuleKind, RunConfig, Sampler, StoppingRule};
use proptest::prelude::*;

fn teaser() -> Instance {
    Instance::new(RewardFamily::gaussian(1.0).unwrap(), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap()
}

fn gaussian_instance() -> impl Strategy<Value = Instance> {
    (0.3f64..3.0, prop::collection::vec(-2.0f64..2.0, 2..8))
        .prop_filter("clear best arm", |(_, m)| {
            let mut s = m.clone();
            s.sort_by(f64::total_cmp);
            s[s.len() - 1] - s[s.len() - 2] > 0.01
        })
        .prop_map(|(s, m)| Instance::new(RewardFamily::gaussian(s).unwrap(), m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balance_and_gaussian_regret_form(inst in gaussian_instance(), beta in 0.02f64..0.98) {
        let pt = frontier_point(&inst, beta).unwrap();
        let d = pairwise_information(&inst, &pt.allocation).unwrap();
        for x in &d {
            prop_assert!((1.0 / x - pt.norm_length).abs() <= 1e-8 * pt.norm_length);
        }
        let RewardFamily::Gaussian { sigma } = inst.family() else { unreachable!() };
        let best = inst.best_mean();
        let b = inst.best_arm();
        let r: f64 = (0..inst.k())
            .filter(|&j| j != b)
            .map(|j| (pt.allocation[j] / beta + 1.0) / (best - inst.means()[j]))
            .sum::<f64>()
            * 2.0
            * sigma
            * sigma;
        prop_assert!((pt.norm_regret - r).abs() <= 1e-10 * r);
    }

    #[test]
    fn robustness_and_halfway_point(inst in gaussian_instance()) {
        let ext = extremes(&inst).unwrap();
        prop_assert!(ext.beta_bai <= 0.5 + 1e-12);
        for beta in [1.0 / 3.0, 0.5, 0.7, 0.9] {
            let pt = frontier_point(&inst, beta).unwrap();
            prop_assert!(pt.norm_length <= ext.l_star / (1.0 - beta) * (1.0 + 1e-12));
            prop_assert!(pt.norm_regret <= ext.r_star / beta * (1.0 + 1e-12));
        }
        let half = frontier_point(&inst, 0.5).unwrap();
        prop_assert!(half.norm_length <= 2.0 * ext.l_star * (1.0 + 1e-12));
        prop_assert!(half.norm_regret <= 2.0 * ext.r_star * (1.0 + 1e-12));
    }

    #[test]
    fn regret_limit_near_one(inst in gaussian_instance()) {
        let ext = extremes(&inst).unwrap();
        let pt = frontier_point(&inst, 0.9999).unwrap();
        prop_assert!((pt.norm_regret - ext.r_star).abs() <= 1e-3 * ext.r_star);
    }
}

#[test]
fn teaser_frontier_shape() {
    let inst = teaser();
    let ext = extremes(&inst).unwrap();
    let grid = beta_grid(0.01, 0.99, 0.001).unwrap();
    let points = trace_frontier(&inst, &grid).unwrap();
    let argmin = points.iter().min_by(|a, b| a.norm_length.total_cmp(&b.norm_length)).unwrap();
    assert!((argmin.beta - ext.beta_bai).abs() <= 0.002, "{} vs {}", argmin.beta, ext.beta_bai);
    assert!(points.iter().all(|p| ext.l_star <= p.norm_length * (1.0 + 1e-12)));
    let branch: Vec<_> = points.iter().filter(|p| p.beta >= ext.beta_bai).collect();
    // Raising the best arm's share past beta_bai lengthens the experiment and
    // lowers regret.
    assert!(branch.windows(2).all(|w| w[0].norm_length < w[1].norm_length));
    assert!(branch.windows(2).all(|w| w[0].norm_regret > w[1].norm_regret));
    // Below beta_bai both get worse as the share shrinks.
    let below: Vec<_> = points.iter().filter(|p| p.beta < ext.beta_bai).collect();
    assert!(below.windows(2).all(|w| w[0].norm_length > w[1].norm_length));
    assert!(below.windows(2).all(|w| w[0].norm_regret > w[1].norm_regret));
}

/// Along the optimal path `beta_c`, a larger per-step cost `c` shortens the
/// experiment and raises regret.
#[test]
fn length_falls_and_regret_rises_with_c() {
    let inst = teaser();
    let points: Vec<_> = [0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&c| frontier_point(&inst, beta_c(&inst, c).unwrap()).unwrap())
        .collect();
    assert!(points.windows(2).all(|w| w[0].norm_length > w[1].norm_length));
    assert!(points.windows(2).all(|w| w[0].norm_regret < w[1].norm_regret));
}

#[test]
fn two_arm_regret_limit() {
    let inst = Instance::new(RewardFamily::gaussian(1.0).unwrap(), vec![1.0, 0.0]).unwrap();
    assert!((extremes(&inst).unwrap().r_star - 2.0).abs() <= 1e-12);
}

#[test]
fn bernoulli_regret_limit_is_numerical() {
    let inst = Instance::new(RewardFamily::Bernoulli, vec![0.2, 0.5, 0.4]).unwrap();
    let ext = extremes(&inst).unwrap();
    assert!(!ext.r_star_exact);
    assert!(ext.r_star > 0.0 && ext.r_star.is_finite());
    assert!(frontier_point(&inst, 0.9).unwrap().norm_regret > ext.r_star);
}

/// Mean length and regret over `ln n` of top-two TS with a fixed coin track
/// the frontier values at large n.
#[test]
fn simulation_tracks_frontier() {
    let n: u64 = 100_000_000;
    let ln_n = (n as f64).ln();
    for beta in [0.5, 0.7] {
        let pt = frontier_point(&teaser(), beta).unwrap();
        let config = RunConfig {
            instance: teaser(),
            rule: AllocationRule::new(RuleKind::TopTwoTs {
                coin: Coin::FixedBeta(beta),
                sampler: Sampler::ExactProbabilities,
            })
            .with_batch(10),
            stop: StoppingRule::HeuristicQuantile { n },
            costs: CostModel::Unit,
            n,
            trials: 100,
            base_seed: 12,
        };
        let s = summarize(&run_trials(&config).unwrap()).unwrap();
        let length = s.mean_length / ln_n;
        let regret = s.mean_regret / ln_n;
        assert!((length / pt.norm_length - 1.0).abs() <= 0.35, "beta {beta}: length {length} vs {}", pt.norm_length);
        assert!((regret / pt.norm_regret - 1.0).abs() <= 0.35, "beta {beta}: regret {regret} vs {}", pt.norm_regret);
    }
}
