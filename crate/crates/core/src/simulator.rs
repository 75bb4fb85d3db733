//! Single-trial simulation and Monte Carlo aggregation.
//!
//! A trial runs the allocation rule until the stopping rule fires or the
//! population of `n` people is exhausted, then deploys the empirical best
//! arm to everyone left. Trials are seeded from `(base_seed, trial_index)`
//! alone, so serial and parallel runs give identical records.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::exp_family::Instance;
use crate::policies::AllocationRule;
use crate::state::ExperimentState;
use crate::stopping::StoppingRule;

/// Everything needed to simulate a batch of trials.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: Instance,
    pub rule: AllocationRule,
    pub stop: StoppingRule,
    pub costs: CostModel,
    /// Population size.
    pub n: u64,
    pub trials: u64,
    pub base_seed: u64,
}

impl RunConfig {
    /// Checks the configuration as a whole.
    pub fn validate(&self) -> Result<()> {
        let k = self.instance.k();
        if self.n < k as u64 {
            return Err(Error::Config(format!("population n = {} is smaller than k = {k}", self.n)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.rule.validate(self.instance.family(), k)?;
        self.stop.validate()?;
        self.stop.check_family(self.instance.family())?;
        self.costs.validate(k)?;
        self.costs.sampling_costs(self.instance.means())?;
        Ok(())
    }
}

/// Outcome of one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// Stopping time: number of people treated during the experiment.
    pub tau: u64,
    /// Arm deployed after the experiment.
    pub selected: usize,
    /// `sum_t (theta_best - theta_{I_t})` over the experiment.
    pub within_regret: f64,
    /// `within_regret + (n - tau) (theta_best - theta_selected)`.
    pub total_regret: f64,
    /// Within-experiment cost plus `(n - tau) Delta_selected` under the run's
    /// cost model, at the true means.
    pub total_cost: f64,
    /// The deployed arm has the largest true mean.
    pub correct: bool,
    /// Rejection-sampler fallbacks during the trial.
    pub fallback_count: u64,
    /// Population size.
    pub n: u64,
    /// Measurements per arm at the stopping time.
    pub counts: Vec<u64>,
}

impl TrialRecord {
    /// Experiment length, equal to `tau`.
    pub fn length(&self) -> u64 {
        self.tau
    }

    /// Stopped before exhausting the population and deployed a wrong arm.
    pub fn early_wrong(&self) -> bool {
        self.tau < self.n && !self.correct
    }
}

/// Per-trial seed derived from the base seed and the trial index.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(trial_index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs trial `trial_index` of `config`.
pub fn run_trial(config: &RunConfig, trial_index: u64) -> Result<TrialRecord> {
    config.validate()?;
    let inst = &config.instance;
    let fam = inst.family();
    let k = inst.k();
    let theta = inst.means();
    let seed = trial_seed(config.base_seed, trial_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = ExperimentState::new(fam, k)?;
    let mut policy = config.rule.start(k);

    let mut tau = config.n;
    for t in 0..config.n {
        if config.stop.should_stop(&state)? {
            tau = t;
            break;
        }
        let arm = policy.next_arm(&state, &mut rng)?;
        let reward = fam.sample_unchecked(theta[arm], &mut rng);
        state.update(arm, reward)?;
    }
    let selected = state.empirical_best();
    let mut record = TrialRecord {
        trial: trial_index,
        seed,
        tau,
        selected,
        within_regret: 0.0,
        total_regret: 0.0,
        total_cost: 0.0,
        correct: theta[selected] == inst.best_mean(),
        fallback_count: policy.fallback_count(),
        n: config.n,
        counts: state.counts().to_vec(),
    };
    let gaps = inst.gaps();
    record.within_regret = dot(&record.counts, &gaps);
    record.total_regret = record.within_regret + (config.n - tau) as f64 * gaps[selected];
    record.total_cost = evaluate_cost(&record, &config.costs, inst)?;
    Ok(record)
}

fn dot(counts: &[u64], w: &[f64]) -> f64 {
    counts.iter().zip(w).map(|(&n, &x)| n as f64 * x).sum()
}

/// Total cost of a recorded trial under `costs`:
/// `sum_i N_i C_i(theta) + (n - tau) Delta_selected(theta)`.
pub fn evaluate_cost(record: &TrialRecord, costs: &CostModel, instance: &Instance) -> Result<f64> {
    let theta = instance.means();
    if record.counts.len() != theta.len() {
        return Err(Error::InvalidParameter("record and instance differ in arm count".into()));
    }
    let c = costs.sampling_costs(theta)?;
    let post = costs.post_cost(record.selected, theta);
    Ok(dot(&record.counts, &c) + (record.n - record.tau) as f64 * post)
}

/// Runs all trials on the current rayon pool. Records come back in trial
/// order.
pub fn run_trials(config: &RunConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    (0..config.trials).into_par_iter().map(|i| run_trial(config, i)).collect()
}

/// Runs all trials on the calling thread.
pub fn run_trials_serial(config: &RunConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    (0..config.trials).map(|i| run_trial(config, i)).collect()
}

/// Runs all trials on a dedicated pool of `threads` workers.
pub fn run_trials_with_threads(config: &RunConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("could not start {threads} worker threads: {e}")))?;
    pool.install(|| run_trials(config))
}

/// Monte Carlo aggregate over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: u64,
    pub n: u64,
    pub mean_length: f64,
    pub stderr_length: f64,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_cost: f64,
    pub stderr_cost: f64,
    /// Fraction of trials deploying a wrong arm.
    pub misselection_rate: f64,
    /// Trials that stopped early and deployed a wrong arm.
    pub early_wrong: u64,
    pub fallbacks: u64,
    /// Mean over trials of `N_i / tau`.
    pub mean_allocation: Vec<f64>,
}

/// Result of [`run_monte_carlo`].
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Runs every trial in parallel and aggregates them.
pub fn run_monte_carlo(config: &RunConfig) -> Result<MonteCarlo> {
    let records = run_trials(config)?;
    let summary = summarize(&records)?;
    Ok(MonteCarlo { records, summary })
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut acc = Accumulator::default();
    let mut count = 0usize;
    for x in xs.clone() {
        acc.add(x);
        count += 1;
    }
    let mean = acc.value() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let mut sq = Accumulator::default();
    for x in xs {
        sq.add((x - mean) * (x - mean));
    }
    let var = sq.value() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

/// Aggregates trial records.
pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    let first = records.first().ok_or_else(|| Error::Config("no trial records".into()))?;
    let k = first.counts.len();
    let m = records.len() as f64;
    let (mean_length, stderr_length) = mean_and_stderr(records.iter().map(|r| r.tau as f64));
    let (mean_regret, stderr_regret) = mean_and_stderr(records.iter().map(|r| r.total_regret));
    let (mean_cost, stderr_cost) = mean_and_stderr(records.iter().map(|r| r.total_cost));
    let wrong = records.iter().filter(|r| !r.correct).count();
    let mut mean_allocation = vec![0.0; k];
    for (i, slot) in mean_allocation.iter_mut().enumerate() {
        let mut acc = Accumulator::default();
        for r in records {
            if r.tau > 0 {
                acc.add(r.counts[i] as f64 / r.tau as f64);
            }
        }
        *slot = acc.value() / m;
    }
    Ok(Summary {
        trials: records.len() as u64,
        n: first.n,
        mean_length,
        stderr_length,
        mean_regret,
        stderr_regret,
        mean_cost,
        stderr_cost,
        misselection_rate: wrong as f64 / m,
        early_wrong: records.iter().filter(|r| r.early_wrong()).count() as u64,
        fallbacks: records.iter().map(|r| r.fallback_count).sum(),
        mean_allocation,
    })
}

/// Column header of the per-trial CSV.
pub const TRIALS_CSV_HEADER: &str =
    "trial,seed,tau,selected,correct,within_regret,total_regret,total_cost,fallbacks";

/// Writes per-trial records as CSV. Each line of `comment`, if given, is
/// written first prefixed by `# `.
pub fn write_trials_csv<W: Write>(mut w: W, records: &[TrialRecord], comment: Option<&str>) -> io::Result<()> {
    write_comment(&mut w, comment)?;
    writeln!(w, "{TRIALS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.tau,
            r.selected,
            r.correct,
            r.within_regret,
            r.total_regret,
            r.total_cost,
            r.fallback_count
        )?;
    }
    Ok(())
}

pub(crate) fn write_comment<W: Write>(w: &mut W, comment: Option<&str>) -> io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

impl Summary {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.fields() {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }

    /// CSV header matching [`Summary::csv_row`].
    pub fn csv_header(&self) -> String {
        self.fields().into_iter().map(|(k, _)| k).collect::<Vec<_>>().join(",")
    }

    /// One CSV row.
    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }

    fn fields(&self) -> Vec<(String, String)> {
        let mut f = vec![
            ("trials".to_string(), self.trials.to_string()),
            ("n".into(), self.n.to_string()),
            ("mean_length".into(), self.mean_length.to_string()),
            ("stderr_length".into(), self.stderr_length.to_string()),
            ("mean_regret".into(), self.mean_regret.to_string()),
            ("stderr_regret".into(), self.stderr_regret.to_string()),
            ("mean_cost".into(), self.mean_cost.to_string()),
            ("stderr_cost".into(), self.stderr_cost.to_string()),
            ("misselection_rate".into(), self.misselection_rate.to_string()),
            ("early_wrong".into(), self.early_wrong.to_string()),
            ("fallbacks".into(), self.fallbacks.to_string()),
        ];
        for (i, a) in self.mean_allocation.iter().enumerate() {
            f.push((format!("alloc_{i}"), a.to_string()));
        }
        f
    }
}
