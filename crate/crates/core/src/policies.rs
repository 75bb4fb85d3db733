//! Allocation rules: epsilon-greedy, Thompson sampling, top-two Thompson
//! sampling and direct tracking.
//!
//! Every Thompson-style rule first plays the lowest-index unsampled arm, so
//! each arm is observed once within the first `k` steps. Rules never look at
//! the population size.
//!
//! The exponential-family form of the cost-aware coin (used for Bernoulli and
//! Poisson rewards) has no convergence guarantee yet and should be treated as
//! experimental.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::exp_family::{argmax_lowest, Instance, RewardFamily};
use crate::quadrature;
use crate::solver::solve_p_star;
use crate::state::ExperimentState;

/// Default cap on challenger resampling attempts.
pub const DEFAULT_MAX_TRIES: u32 = 1000;

/// Below this total probability the remaining arms are treated as having no
/// mass and the challenger is drawn uniformly.
const MASS_FLOOR: f64 = 1e-300;

/// Probability of playing the leader in top-two Thompson sampling.
#[derive(Debug, Clone)]
pub enum Coin {
    /// Bias from empirical proportions and plug-in sampling costs.
    CostAware(CostModel),
    /// Constant bias `beta`.
    FixedBeta(f64),
}

/// How the challenger is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Resample the posterior until a different arm comes out on top, up to
    /// `max_tries` times.
    Rejection { max_tries: u32 },
    /// Draw directly from the optimality probabilities (Gaussian only).
    ExactProbabilities,
}

/// The kind of allocation rule.
#[derive(Debug, Clone)]
pub enum RuleKind {
    EpsilonGreedy { epsilon: f64 },
    ThompsonSampling,
    TopTwoTs { coin: Coin, sampler: Sampler },
    DirectTracking { costs: CostModel },
}

/// An allocation rule with its refresh period.
#[derive(Debug, Clone)]
pub struct AllocationRule {
    pub kind: RuleKind,
    /// Number of steps between refreshes of the cached statistics. Counts and
    /// sums are always current.
    pub batch: u64,
}

impl AllocationRule {
    /// Rule with refresh period 1.
    pub fn new(kind: RuleKind) -> Self {
        AllocationRule { kind, batch: 1 }
    }

    pub fn with_batch(mut self, batch: u64) -> Self {
        self.batch = batch;
        self
    }

    /// Checks parameters against the reward family and arm count.
    pub fn validate(&self, family: RewardFamily, k: usize) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidParameter("batch must be positive".into()));
        }
        match &self.kind {
            RuleKind::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(epsilon) => {
                Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1], got {epsilon}")))
            }
            RuleKind::TopTwoTs { coin, sampler } => {
                match coin {
                    Coin::FixedBeta(b) if !(*b > 0.0 && *b < 1.0) => {
                        return Err(Error::InvalidParameter(format!(
                            "beta must lie in (0, 1), got {b}"
                        )))
                    }
                    Coin::CostAware(c) => c.validate(k)?,
                    _ => {}
                }
                match sampler {
                    Sampler::Rejection { max_tries: 0 } => {
                        Err(Error::InvalidParameter("max_tries must be positive".into()))
                    }
                    Sampler::ExactProbabilities if !is_gaussian(family) => Err(Error::Unsupported(
                        format!("exact optimality probabilities need gaussian rewards, got {}", family.name()),
                    )),
                    _ => Ok(()),
                }
            }
            RuleKind::DirectTracking { costs } => costs.validate(k),
            _ => Ok(()),
        }
    }

    /// Fresh per-trial policy state.
    pub fn start(&self, k: usize) -> Policy {
        Policy {
            rule: self.clone(),
            snapshot: None,
            last_refresh: 0,
            alpha: None,
            p_hat: vec![1.0 / k as f64; k],
            last_solve: None,
            fallbacks: 0,
        }
    }
}

/// Mutable state of one rule serving one trial.
#[derive(Debug, Clone)]
pub struct Policy {
    rule: AllocationRule,
    snapshot: Option<ExperimentState>,
    last_refresh: u64,
    alpha: Option<Vec<f64>>,
    p_hat: Vec<f64>,
    last_solve: Option<u64>,
    fallbacks: u64,
}

impl Policy {
    /// Number of times the rejection sampler hit its cap.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks
    }

    /// Current direct-tracking target.
    pub fn target(&self) -> &[f64] {
        &self.p_hat
    }

    /// Chooses the next arm to measure.
    pub fn next_arm<R: Rng + ?Sized>(&mut self, state: &ExperimentState, rng: &mut R) -> Result<usize> {
        match self.rule.kind.clone() {
            RuleKind::EpsilonGreedy { epsilon } => Ok(epsilon_greedy(state, epsilon, rng)),
            RuleKind::ThompsonSampling => {
                if let Some(i) = state.first_unsampled() {
                    return Ok(i);
                }
                self.refresh(state);
                let snap = self.snapshot.as_ref().expect("snapshot after refresh");
                Ok(posterior_argmax(snap, rng))
            }
            RuleKind::TopTwoTs { coin, sampler } => {
                if let Some(i) = state.first_unsampled() {
                    return Ok(i);
                }
                self.refresh(state);
                let snap = self.snapshot.as_ref().expect("snapshot after refresh");
                let draw = draw_pair(snap, sampler, rng, &mut self.alpha)?;
                if draw.fell_back {
                    self.fallbacks += 1;
                }
                let h = coin_bias(snap, &coin, draw.leader, draw.challenger)?;
                Ok(if rng.random::<f64>() < h { draw.leader } else { draw.challenger })
            }
            RuleKind::DirectTracking { costs } => {
                if let Some(i) = under_explored(state) {
                    return Ok(i);
                }
                let due = match self.last_solve {
                    None => true,
                    Some(s) => state.t() - s >= self.rule.batch,
                };
                if due {
                    self.last_solve = Some(state.t());
                    if let Some(p) = plug_in_allocation(state, &costs) {
                        self.p_hat = p;
                    }
                }
                Ok(track(state, &self.p_hat))
            }
        }
    }

    /// Refreshes the frozen statistics when the refresh period has elapsed.
    fn refresh(&mut self, state: &ExperimentState) {
        let stale = match &self.snapshot {
            None => true,
            Some(s) => !s.all_sampled() || state.t() - self.last_refresh >= self.rule.batch,
        };
        if stale {
            self.snapshot = Some(state.clone());
            self.last_refresh = state.t();
            self.alpha = None;
        }
    }
}

fn is_gaussian(family: RewardFamily) -> bool {
    matches!(family, RewardFamily::Gaussian { .. })
}

/// Plays the empirical best arm with probability `1 - epsilon` and a uniform
/// arm otherwise. Unsampled arms count as mean 0.
pub fn epsilon_greedy<R: Rng + ?Sized>(state: &ExperimentState, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..state.k())
    } else {
        state.empirical_best()
    }
}

/// One draw from the posterior of arm `i` (which must have observations).
/// Gaussian arms use the flat-prior normal posterior; Bernoulli arms a
/// Beta(1 + S, 1 + N - S) posterior; Poisson arms a Gamma(1 + S, N) posterior.
fn posterior_draw<R: Rng + ?Sized>(state: &ExperimentState, i: usize, rng: &mut R) -> f64 {
    let n = state.count(i) as f64;
    let s = state.sums()[i];
    match state.family() {
        RewardFamily::Gaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            state.mean(i) + sigma / n.sqrt() * z
        }
        RewardFamily::Bernoulli => Beta::new(1.0 + s, 1.0 + n - s)
            .expect("positive beta parameters")
            .sample(rng),
        RewardFamily::Poisson => Gamma::new(1.0 + s, 1.0 / n)
            .expect("positive gamma parameters")
            .sample(rng),
    }
}

/// Arm with the largest posterior draw.
fn posterior_argmax<R: Rng + ?Sized>(state: &ExperimentState, rng: &mut R) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..state.k() {
        let v = posterior_draw(state, i, rng);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Posterior probability that each arm is the best (Gaussian rewards).
///
/// If some arm is unsampled, all mass goes to the lowest-index unsampled arm,
/// matching the rule that such an arm is played first.
pub fn optimality_probabilities(state: &ExperimentState) -> Result<Vec<f64>> {
    let sigma = match state.family() {
        RewardFamily::Gaussian { sigma } => sigma,
        other => {
            return Err(Error::Unsupported(format!(
                "optimality probabilities need gaussian rewards, got {}",
                other.name()
            )))
        }
    };
    if let Some(i) = state.first_unsampled() {
        let mut alpha = vec![0.0; state.k()];
        alpha[i] = 1.0;
        return Ok(alpha);
    }
    let means = state.means();
    let sds: Vec<f64> = state.counts().iter().map(|&n| sigma / (n as f64).sqrt()).collect();
    Ok(quadrature::optimality_probabilities(&means, &sds))
}

/// Leader and challenger of one top-two draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopTwoDraw {
    pub leader: usize,
    pub challenger: usize,
    /// The rejection sampler hit its cap and the fallback draw was used.
    pub fell_back: bool,
}

/// Draws a leader and a distinct challenger from the posterior. Every arm
/// must have at least one observation.
pub fn top_two_pair<R: Rng + ?Sized>(
    state: &ExperimentState,
    sampler: Sampler,
    rng: &mut R,
) -> Result<TopTwoDraw> {
    if let Some(i) = state.first_unsampled() {
        return Err(Error::Precondition(format!("arm {i} has no observations")));
    }
    draw_pair(state, sampler, rng, &mut None)
}

fn draw_pair<R: Rng + ?Sized>(
    state: &ExperimentState,
    sampler: Sampler,
    rng: &mut R,
    alpha_cache: &mut Option<Vec<f64>>,
) -> Result<TopTwoDraw> {
    match sampler {
        Sampler::ExactProbabilities => {
            let alpha = cached_alpha(state, alpha_cache)?;
            let leader = sample_index(alpha, 1.0, rng);
            let challenger = challenger_from(alpha, leader, rng);
            Ok(TopTwoDraw { leader, challenger, fell_back: false })
        }
        Sampler::Rejection { max_tries } => {
            let leader = posterior_argmax(state, rng);
            for _ in 0..max_tries {
                let c = posterior_argmax(state, rng);
                if c != leader {
                    return Ok(TopTwoDraw { leader, challenger: c, fell_back: false });
                }
            }
            let challenger = if is_gaussian(state.family()) {
                let alpha = cached_alpha(state, alpha_cache)?;
                challenger_from(alpha, leader, rng)
            } else {
                uniform_other(state.k(), leader, rng)
            };
            Ok(TopTwoDraw { leader, challenger, fell_back: true })
        }
    }
}

fn cached_alpha<'a>(state: &ExperimentState, cache: &'a mut Option<Vec<f64>>) -> Result<&'a [f64]> {
    if cache.is_none() {
        *cache = Some(optimality_probabilities(state)?);
    }
    Ok(cache.as_deref().expect("alpha cached"))
}

/// Draws `j != leader` with probability proportional to `alpha_j`.
fn challenger_from<R: Rng + ?Sized>(alpha: &[f64], leader: usize, rng: &mut R) -> usize {
    let rest: f64 = alpha.iter().enumerate().filter(|&(j, _)| j != leader).map(|(_, a)| a).sum();
    if rest <= MASS_FLOOR {
        return uniform_other(alpha.len(), leader, rng);
    }
    let u = rng.random::<f64>() * rest;
    let mut acc = 0.0;
    let mut last = leader;
    for (j, &a) in alpha.iter().enumerate() {
        if j == leader || a <= 0.0 {
            continue;
        }
        acc += a;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

fn uniform_other<R: Rng + ?Sized>(k: usize, leader: usize, rng: &mut R) -> usize {
    let j = rng.random_range(0..k - 1);
    if j >= leader {
        j + 1
    } else {
        j
    }
}

/// Draws an index with probability `w_i / total`.
fn sample_index<R: Rng + ?Sized>(w: &[f64], total: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in w.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        acc += x;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Cost-aware coin `(1/(p_i c_i)) / (1/(p_i c_i) + 1/(p_j c_j))`.
pub fn cost_aware_coin(p_i: f64, c_i: f64, p_j: f64, c_j: f64) -> f64 {
    let a = 1.0 / (p_i * c_i);
    let b = 1.0 / (p_j * c_j);
    a / (a + b)
}

/// Exponential-family coin
/// `(p_i KL(m_i, m)/C_i) / (p_i KL(m_i, m)/C_i + p_j KL(m_j, m)/C_j)` with
/// `m` the count-weighted mean of the two arms and costs evaluated at the
/// empirical means. Both arms need observations and distinct means; callers
/// use 1/2 otherwise.
pub fn ef_coin_bias(state: &ExperimentState, costs: &CostModel, i: usize, j: usize) -> Result<f64> {
    for idx in [i, j] {
        if idx >= state.k() {
            return Err(Error::IndexOutOfRange { index: idx, k: state.k() });
        }
        if state.count(idx) == 0 {
            return Err(Error::Precondition(format!("arm {idx} has no observations")));
        }
    }
    let (mi, mj) = (state.mean(i), state.mean(j));
    if mi == mj {
        return Err(Error::Precondition("the two arms have equal empirical means".into()));
    }
    let c = costs.sampling_costs(&state.means())?;
    let (ni, nj) = (state.count(i) as f64, state.count(j) as f64);
    let bar = (ni * mi + nj * mj) / (ni + nj);
    let fam = state.family();
    let t = state.t() as f64;
    let a = ni / t * fam.kl_ext(mi, bar) / c[i];
    let b = nj / t * fam.kl_ext(mj, bar) / c[j];
    Ok(a / (a + b))
}

fn coin_bias(state: &ExperimentState, coin: &Coin, i: usize, j: usize) -> Result<f64> {
    match coin {
        Coin::FixedBeta(beta) => Ok(*beta),
        Coin::CostAware(costs) => {
            if state.count(i) == 0 || state.count(j) == 0 {
                return Ok(0.5);
            }
            let gaussian = is_gaussian(state.family());
            if !gaussian && state.mean(i) != state.mean(j) {
                return ef_coin_bias(state, costs, i, j);
            }
            let c = costs.sampling_costs(&state.means())?;
            let p = state.proportions();
            Ok(cost_aware_coin(p[i], c[i], p[j], c[j]))
        }
    }
}

/// Arm forced by under-exploration, if any: the least-sampled arm among those
/// with `N_i <= max(sqrt(t) - k/2, 0)`.
fn under_explored(state: &ExperimentState) -> Option<usize> {
    let threshold = ((state.t() as f64).sqrt() - state.k() as f64 / 2.0).max(0.0);
    let mut pick: Option<usize> = None;
    for (i, &n) in state.counts().iter().enumerate() {
        if n as f64 <= threshold && pick.is_none_or(|p| n < state.count(p)) {
            pick = Some(i);
        }
    }
    pick
}

/// Optimal allocation for the empirical means, if they define a valid
/// instance with a unique best arm.
fn plug_in_allocation(state: &ExperimentState, costs: &CostModel) -> Option<Vec<f64>> {
    let inst = Instance::new(state.family(), state.means()).ok()?;
    if !inst.has_unique_best() {
        return None;
    }
    solve_p_star(&inst, costs).ok().map(|a| a.p_star)
}

/// Arm furthest behind its target: `argmax_i t p_i - N_i`.
fn track(state: &ExperimentState, p_hat: &[f64]) -> usize {
    let t = state.t() as f64;
    let lag: Vec<f64> =
        p_hat.iter().zip(state.counts()).map(|(p, &n)| t * p - n as f64).collect();
    argmax_lowest(&lag)
}

/// One direct-tracking step with a fresh solve: returns the arm to play and
/// the updated target.
pub fn direct_tracking(
    state: &ExperimentState,
    costs: &CostModel,
    p_hat: &[f64],
) -> Result<(usize, Vec<f64>)> {
    if p_hat.len() != state.k() {
        return Err(Error::InvalidParameter("target length differs from k".into()));
    }
    if let Some(i) = under_explored(state) {
        return Ok((i, p_hat.to_vec()));
    }
    let target = plug_in_allocation(state, costs).unwrap_or_else(|| p_hat.to_vec());
    Ok((track(state, &target), target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gauss() -> RewardFamily {
        RewardFamily::gaussian(1.0).unwrap()
    }

    #[test]
    fn epsilon_greedy_pure_and_uniform() {
        let s = ExperimentState::from_counts(gauss(), vec![1, 1], vec![2.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| epsilon_greedy(&s, 0.0, &mut rng) == 0));
        let s = ExperimentState::new(gauss(), 4).unwrap();
        let n = 100_000;
        let mut freq = [0usize; 4];
        for _ in 0..n {
            freq[epsilon_greedy(&s, 1.0, &mut rng)] += 1;
        }
        let tol = 3.0 * (0.25f64 * 0.75 / n as f64).sqrt();
        assert!(freq.iter().all(|&f| (f as f64 / n as f64 - 0.25).abs() <= tol), "{freq:?}");
    }

    #[test]
    fn coin_examples() {
        assert_eq!(cost_aware_coin(0.2, 1.0, 0.1, 2.0), 0.5);
        assert!((cost_aware_coin(0.2, 1.0, 0.1, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ef_coin_symmetric_and_preconditions() {
        let s = ExperimentState::from_counts(gauss(), vec![5, 5], vec![5.0, -5.0]).unwrap();
        assert!((ef_coin_bias(&s, &CostModel::Unit, 0, 1).unwrap() - 0.5).abs() < 1e-15);
        let s = ExperimentState::from_counts(gauss(), vec![5, 0], vec![5.0, 0.0]).unwrap();
        assert!(ef_coin_bias(&s, &CostModel::Unit, 0, 1).is_err());
    }

    #[test]
    fn optimality_probabilities_cases() {
        let s = ExperimentState::from_counts(gauss(), vec![3, 0, 0], vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(optimality_probabilities(&s).unwrap(), vec![0.0, 1.0, 0.0]);
        let b = ExperimentState::new(RewardFamily::Bernoulli, 2).unwrap();
        assert!(matches!(optimality_probabilities(&b), Err(Error::Unsupported(_))));
    }

    #[test]
    fn direct_tracking_examples() {
        let s = ExperimentState::from_counts(gauss(), vec![2, 7], vec![0.0, 0.0]).unwrap();
        assert_eq!(direct_tracking(&s, &CostModel::Unit, &[0.5, 0.5]).unwrap().0, 0);
        let s = ExperimentState::new(gauss(), 3).unwrap();
        assert_eq!(direct_tracking(&s, &CostModel::Unit, &[1.0 / 3.0; 3]).unwrap().0, 0);
        // Tied means keep the previous target.
        let s = ExperimentState::from_counts(gauss(), vec![10, 10, 10], vec![5.0, 5.0, 0.0]).unwrap();
        let prev = [0.2, 0.5, 0.3];
        let (_, p) = direct_tracking(&s, &CostModel::Unit, &prev).unwrap();
        assert_eq!(p, prev.to_vec());
    }

    #[test]
    fn thompson_rules_play_unsampled_arms_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [
            RuleKind::ThompsonSampling,
            RuleKind::TopTwoTs { coin: Coin::FixedBeta(0.5), sampler: Sampler::ExactProbabilities },
        ] {
            let rule = AllocationRule::new(kind);
            let mut pol = rule.start(4);
            let mut s = ExperimentState::new(gauss(), 4).unwrap();
            for expected in 0..4 {
                let arm = pol.next_arm(&s, &mut rng).unwrap();
                assert_eq!(arm, expected);
                s.update(arm, 0.0).unwrap();
            }
        }
    }

    #[test]
    fn rule_validation() {
        let bad = AllocationRule::new(RuleKind::EpsilonGreedy { epsilon: 1.5 });
        assert!(bad.validate(gauss(), 2).is_err());
        let exact_bern = AllocationRule::new(RuleKind::TopTwoTs {
            coin: Coin::FixedBeta(0.5),
            sampler: Sampler::ExactProbabilities,
        });
        assert!(exact_bern.validate(RewardFamily::Bernoulli, 2).is_err());
        assert!(exact_bern.validate(gauss(), 2).is_ok());
        assert!(AllocationRule::new(RuleKind::ThompsonSampling).with_batch(0).validate(gauss(), 2).is_err());
    }
}
