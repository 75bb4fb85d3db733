use adaptexp::simulator::{evaluate_cost, run_trial, run_trials, run_trials_serial, run_trials_with_threads, summarize};
use adaptexp::{AllocationRule, Coin, CostModel, Instance, RewardFamily, RuleKind, RunConfig, Sampler, StoppingRule};
use proptest::prelude::*;

fn ttts(beta: f64) -> AllocationRule {
    AllocationRule::new(RuleKind::TopTwoTs { coin: Coin::FixedBeta(beta), sampler: Sampler::ExactProbabilities })
}

fn config(instance: Instance, rule: AllocationRule, stop: StoppingRule, n: u64, trials: u64) -> RunConfig {
    RunConfig { instance, rule, stop, costs: CostModel::LengthRegret { c: 0.5 }, n, trials, base_seed: 77 }
}

#[test]
fn dominant_arm_is_found_quickly() {
    let inst = Instance::new(RewardFamily::gaussian(0.01).unwrap(), vec![10.0, 0.0]).unwrap();
    let cfg = config(inst, ttts(0.5), StoppingRule::ExactThreshold { n: 1_000_000 }, 1_000_000, 100);
    let recs = run_trials(&cfg).unwrap();
    assert_eq!(recs.len(), 100);
    for r in &recs {
        assert!(r.correct);
        assert!(r.tau < 1000, "tau = {}", r.tau);
    }
}

#[test]
fn serial_and_parallel_records_match() {
    let inst = Instance::new(RewardFamily::Bernoulli, vec![0.3, 0.65, 0.45]).unwrap();
    let rule = AllocationRule::new(RuleKind::TopTwoTs {
        coin: Coin::CostAware(CostModel::Unit),
        sampler: Sampler::Rejection { max_tries: 1000 },
    });
    let cfg = config(inst, rule, StoppingRule::ExactThreshold { n: 5_000 }, 5_000, 12);
    let serial = run_trials_serial(&cfg).unwrap();
    assert_eq!(serial, run_trials_serial(&cfg).unwrap());
    assert_eq!(serial, run_trials_with_threads(&cfg, 3).unwrap());
    let a = summarize(&serial).unwrap();
    let mut reversed = serial.clone();
    reversed.reverse();
    let b = summarize(&reversed).unwrap();
    for (x, y) in [(a.mean_length, b.mean_length), (a.mean_regret, b.mean_regret), (a.mean_cost, b.mean_cost)] {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }
    assert!((a.mean_allocation.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn no_early_misselection_on_bernoulli() {
    let inst = Instance::new(RewardFamily::Bernoulli, vec![0.3, 0.5, 0.7]).unwrap();
    let rule = AllocationRule::new(RuleKind::TopTwoTs {
        coin: Coin::CostAware(CostModel::LengthRegret { c: 1.0 }),
        sampler: Sampler::Rejection { max_tries: 1000 },
    });
    let cfg = config(inst, rule, StoppingRule::ExactThreshold { n: 10_000 }, 10_000, 50);
    let recs = run_trials(&cfg).unwrap();
    assert_eq!(recs.iter().filter(|r| r.early_wrong()).count(), 0);
}

fn rule_strategy() -> impl Strategy<Value = AllocationRule> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(|epsilon| AllocationRule::new(RuleKind::EpsilonGreedy { epsilon })),
        Just(AllocationRule::new(RuleKind::ThompsonSampling)),
        (0.1f64..0.9).prop_map(ttts),
        Just(AllocationRule::new(RuleKind::DirectTracking { costs: CostModel::Unit }).with_batch(5)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn record_identities(
        rule in rule_strategy(),
        means in prop::collection::vec(-1.0f64..1.0, 2..5),
        n in 20u64..3000,
        c in 0.01f64..3.0,
        trial in 0u64..1000,
    ) {
        let inst = Instance::new(RewardFamily::gaussian(1.0).unwrap(), means.clone()).unwrap();
        let stop = StoppingRule::HeuristicQuantile { n };
        let mut cfg = config(inst.clone(), rule, stop, n, 1);
        cfg.costs = CostModel::LengthRegret { c };
        let r = run_trial(&cfg, trial).unwrap();
        prop_assert_eq!(&r, &run_trial(&cfg, trial).unwrap());
        prop_assert!(r.tau <= n);
        prop_assert_eq!(r.counts.iter().sum::<u64>(), r.tau);
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let within: f64 = r.counts.iter().zip(&means).map(|(&k, m)| k as f64 * (best - m)).sum();
        prop_assert!((r.within_regret - within).abs() <= 1e-9 * within.max(1.0));
        prop_assert_eq!(r.total_regret, r.within_regret + (n - r.tau) as f64 * (best - means[r.selected]));
        prop_assert!(r.total_regret >= 0.0);
        // Length-regret cost: c tau + total regret.
        prop_assert!((r.total_cost - (c * r.tau as f64 + r.total_regret)).abs() <= 1e-9 * r.total_cost.max(1.0));
        // Unit sampling cost with a wrong-selection indicator afterwards.
        let unit = evaluate_cost(&r, &CostModel::Unit, &inst).unwrap();
        let wrong = if means[r.selected] < best { 1.0 } else { 0.0 };
        prop_assert_eq!(unit, r.tau as f64 + (n - r.tau) as f64 * wrong);
        if r.correct {
            prop_assert_eq!(r.total_regret, r.within_regret);
        }
    }
}
