//! Experiment configuration files.
//!
//! ```toml
//! [instance]
//! family = "gaussian"     # gaussian | bernoulli | poisson
//! sigma = 1.0             # gaussian only
//! means = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
//!
//! [costs]
//! model = "length_regret" # unit | length_regret | per_arm
//! c = 1.0                 # length_regret only
//! # per_arm = [1.0, ...]  # per_arm only
//!
//! [rule]
//! kind = "top_two_ts"     # epsilon_greedy | thompson | top_two_ts | direct_tracking
//! coin = "cost_aware"     # top_two_ts: cost_aware | fixed
//! # beta = 0.5           # fixed coin
//! sampler = "exact"       # top_two_ts: exact | rejection
//! # max_tries = 1000     # rejection sampler
//! # epsilon = 0.4        # epsilon_greedy
//! batch = 1
//!
//! [stop]
//! rule = "exact"          # exact | heuristic | never
//!
//! [run]
//! n = 1000000
//! trials = 1000
//! seed = 42
//!
//! [output]
//! dir = "results"
//!
//! [frontier]
//! start = 0.01
//! stop = 0.99
//! step = 0.001
//! ```
//!
//! Unknown keys and keys that do not apply to the chosen variant are errors.
//! The cost-aware coin and direct tracking use the `[costs]` model.

use std::path::PathBuf;

use adaptexp::policies::DEFAULT_MAX_TRIES;
use adaptexp::{AllocationRule, Coin, CostModel, Instance, RewardFamily, RuleKind, RunConfig, Sampler, StoppingRule};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: InstanceSection,
    #[serde(default)]
    pub costs: Option<CostsSection>,
    #[serde(default)]
    pub rule: Option<RuleSection>,
    #[serde(default)]
    pub stop: Option<StopSection>,
    #[serde(default)]
    pub run: Option<RunSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub frontier: Option<FrontierSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub family: String,
    pub sigma: Option<f64>,
    pub means: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    pub model: String,
    pub c: Option<f64>,
    pub per_arm: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    pub kind: String,
    pub epsilon: Option<f64>,
    pub coin: Option<String>,
    pub beta: Option<f64>,
    pub sampler: Option<String>,
    pub max_tries: Option<u32>,
    pub batch: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    pub rule: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n: Option<u64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierSection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

/// A parsed configuration together with the hash of its source text.
#[derive(Debug)]
pub struct Loaded {
    pub file: ConfigFile,
    pub sha256: String,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn forbid<T>(value: &Option<T>, key: &str, context: &str) -> Result<(), CliError> {
    match value {
        Some(_) => Err(config_error(format!("key `{key}` does not apply to {context}"))),
        None => Ok(()),
    }
}

fn require<T: Clone>(value: &Option<T>, key: &str, context: &str) -> Result<T, CliError> {
    value.clone().ok_or_else(|| config_error(format!("{context} needs key `{key}`")))
}

pub fn parse(text: &str) -> Result<Loaded, CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
    let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
    Ok(Loaded { file, sha256 })
}

pub fn load(path: &std::path::Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl ConfigFile {
    pub fn instance(&self) -> Result<Instance, CliError> {
        let s = &self.instance;
        let family = match s.family.as_str() {
            "gaussian" => RewardFamily::gaussian(require(&s.sigma, "sigma", "a gaussian instance")?)?,
            "bernoulli" => {
                forbid(&s.sigma, "sigma", "a bernoulli instance")?;
                RewardFamily::Bernoulli
            }
            "poisson" => {
                forbid(&s.sigma, "sigma", "a poisson instance")?;
                RewardFamily::Poisson
            }
            other => return Err(config_error(format!("unknown family `{other}`"))),
        };
        Ok(Instance::new(family, s.means.clone())?)
    }

    pub fn costs(&self) -> Result<CostModel, CliError> {
        let Some(s) = &self.costs else {
            return Ok(CostModel::Unit);
        };
        let model = match s.model.as_str() {
            "unit" => {
                forbid(&s.c, "c", "unit costs")?;
                forbid(&s.per_arm, "per_arm", "unit costs")?;
                CostModel::Unit
            }
            "length_regret" => {
                forbid(&s.per_arm, "per_arm", "length_regret costs")?;
                CostModel::LengthRegret { c: require(&s.c, "c", "length_regret costs")? }
            }
            "per_arm" => {
                forbid(&s.c, "c", "per_arm costs")?;
                CostModel::PerArmConstant(require(&s.per_arm, "per_arm", "per_arm costs")?)
            }
            other => return Err(config_error(format!("unknown cost model `{other}`"))),
        };
        model.validate(self.instance.means.len())?;
        Ok(model)
    }

    pub fn rule(&self) -> Result<AllocationRule, CliError> {
        let s = self.rule.as_ref().ok_or_else(|| config_error("missing [rule] section"))?;
        let costs = self.costs()?;
        let ctx = format!("rule `{}`", s.kind);
        let kind = match s.kind.as_str() {
            "epsilon_greedy" => {
                for (v, k) in [(&s.coin, "coin"), (&s.sampler, "sampler")] {
                    forbid(v, k, &ctx)?;
                }
                forbid(&s.beta, "beta", &ctx)?;
                forbid(&s.max_tries, "max_tries", &ctx)?;
                RuleKind::EpsilonGreedy { epsilon: require(&s.epsilon, "epsilon", &ctx)? }
            }
            "thompson" | "direct_tracking" => {
                forbid(&s.epsilon, "epsilon", &ctx)?;
                forbid(&s.coin, "coin", &ctx)?;
                forbid(&s.sampler, "sampler", &ctx)?;
                forbid(&s.beta, "beta", &ctx)?;
                forbid(&s.max_tries, "max_tries", &ctx)?;
                if s.kind == "thompson" {
                    RuleKind::ThompsonSampling
                } else {
                    RuleKind::DirectTracking { costs }
                }
            }
            "top_two_ts" => {
                forbid(&s.epsilon, "epsilon", &ctx)?;
                let coin = match s.coin.as_deref().unwrap_or("cost_aware") {
                    "cost_aware" => {
                        forbid(&s.beta, "beta", "the cost_aware coin")?;
                        Coin::CostAware(costs)
                    }
                    "fixed" => Coin::FixedBeta(require(&s.beta, "beta", "the fixed coin")?),
                    other => return Err(config_error(format!("unknown coin `{other}`"))),
                };
                let sampler = match s.sampler.as_deref().unwrap_or("exact") {
                    "exact" => {
                        forbid(&s.max_tries, "max_tries", "the exact sampler")?;
                        Sampler::ExactProbabilities
                    }
                    "rejection" => Sampler::Rejection { max_tries: s.max_tries.unwrap_or(DEFAULT_MAX_TRIES) },
                    other => return Err(config_error(format!("unknown sampler `{other}`"))),
                };
                RuleKind::TopTwoTs { coin, sampler }
            }
            other => return Err(config_error(format!("unknown rule kind `{other}`"))),
        };
        let rule = AllocationRule::new(kind).with_batch(s.batch.unwrap_or(1));
        rule.validate(self.instance()?.family(), self.instance.means.len())?;
        Ok(rule)
    }

    pub fn population(&self) -> Option<u64> {
        self.run.as_ref().and_then(|r| r.n)
    }

    pub fn stop(&self, n: u64) -> Result<StoppingRule, CliError> {
        let s = self.stop.as_ref().ok_or_else(|| config_error("missing [stop] section"))?;
        let stop = match s.rule.as_str() {
            "exact" => StoppingRule::ExactThreshold { n },
            "heuristic" => StoppingRule::HeuristicQuantile { n },
            "never" => StoppingRule::Never,
            other => return Err(config_error(format!("unknown stopping rule `{other}`"))),
        };
        stop.validate()?;
        Ok(stop)
    }

    /// Builds a simulation config; command-line overrides win.
    pub fn run_config(&self, seed: Option<u64>, trials: Option<u64>) -> Result<RunConfig, CliError> {
        let n = self.population().ok_or_else(|| config_error("[run] needs key `n`"))?;
        let run = self.run.as_ref();
        let trials = trials.or(run.and_then(|r| r.trials)).unwrap_or(1000);
        let base_seed = seed.or(run.and_then(|r| r.seed)).unwrap_or(0);
        let config = RunConfig {
            instance: self.instance()?,
            rule: self.rule()?,
            stop: self.stop(n)?,
            costs: self.costs()?,
            n,
            trials,
            base_seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_ref().and_then(|o| o.dir.clone())
    }

    pub fn frontier_grid(&self) -> Result<Vec<f64>, CliError> {
        let f = self.frontier.as_ref();
        let start = f.and_then(|f| f.start).unwrap_or(0.01);
        let stop = f.and_then(|f| f.stop).unwrap_or(0.99);
        let step = f.and_then(|f| f.step).unwrap_or(0.001);
        if !(start > 0.0 && stop < 1.0) {
            return Err(config_error(format!("frontier grid [{start}, {stop}] must lie inside (0, 1)")));
        }
        Ok(adaptexp::pareto::beta_grid(start, stop, step)?)
    }
}
