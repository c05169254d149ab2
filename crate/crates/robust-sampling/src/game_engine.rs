//! The adaptive sampling game: an adversary submits one element per round,
//! observing the sampler state after each, and the final (or every
//! intermediate) sample is judged against the realized stream.
//!
//! Verdicts are exact. A game fails when the checked sample is empty or is
//! not an epsilon-approximation of the stream consumed so far. In continuous
//! mode, rounds where the sample equals the whole stream pass trivially and
//! skip the sweep.

use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::adversaries::{AdversaryContext, AdversarySpec, GameParams};
use crate::core_sampling::{Sampler, SamplerConfig};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::numeric::{ceil_to_biguint, rational_to_f64, ratio_from_u64, wilson_interval_95};
use crate::rng::{derive_rng, derive_trial_seed};
use crate::set_systems::{is_eps_approximation, ApproxVerdict, SetSystem};

/// Full description of one game.
#[derive(Clone, Debug)]
pub struct GameConfig {
    pub n: u64,
    pub eps: BigRational,
    pub system: SetSystem,
    pub sampler: SamplerConfig,
    pub adversary: AdversarySpec,
    /// Judge every round (continuous robustness) instead of only the end.
    pub continuous: bool,
    /// In continuous mode, judge only at geometrically spaced checkpoint
    /// rounds `i_{j+1} = max(i_j + 1, floor((1 + eps/4) i_j))` plus `n`.
    pub checkpoints: bool,
    /// Keep per-round records in the transcript.
    pub record_rounds: bool,
    /// Seed for this trial; sampler and adversary generators are derived
    /// from it under the labels `"sampler"` and `"adversary"`.
    pub trial_seed: u64,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        self.sampler.validate()
    }

    fn game_params(&self) -> GameParams {
        GameParams {
            n: self.n,
            universe_size: self.system.universe_size().clone(),
            eps: self.eps.clone(),
        }
    }
}

/// One round as recorded in the transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub element: String,
    pub sampled: bool,
    pub sample_size: usize,
}

/// Everything needed to audit one game after the fact.
#[derive(Clone, Debug, PartialEq)]
pub struct GameTranscript {
    pub rounds: Vec<RoundRecord>,
    pub stream: Vec<Element>,
    pub final_sample: Vec<Element>,
    /// `true` iff every judged sample was a non-empty eps-approximation.
    pub approximation: bool,
    /// First judged round that failed, in continuous mode.
    pub failure_round: Option<u64>,
    /// Witness range description and exact gap for the failure, if any.
    pub witness: Option<(String, String)>,
    /// Round at which an attack window ran out of interior points.
    pub attack_exhausted: Option<u64>,
}

impl GameTranscript {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rounds": self.rounds,
            "stream": self.stream.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "final_sample": self.final_sample.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "verdict": u8::from(self.approximation),
            "approximation": self.approximation,
            "failure_round": self.failure_round,
            "witness": self.witness.as_ref().map(|(r, g)| json!({"range": r, "gap": g})),
            "attack_exhausted": self.attack_exhausted,
        })
    }
}

/// Rounds at which a continuous game is judged.
fn judged_rounds(n: u64, eps: &BigRational, checkpoints: bool) -> Vec<u64> {
    if !checkpoints {
        return (1..=n).collect();
    }
    let growth = ratio_from_u64(1) + eps / ratio_from_u64(4);
    let mut rounds = Vec::new();
    let mut i = 1u64;
    while i < n {
        rounds.push(i);
        let next = &growth * ratio_from_u64(i);
        let next = u64::try_from(ceil_to_biguint(&next.floor()).unwrap_or(BigUint::from(0u32)))
            .unwrap_or(u64::MAX);
        i = next.max(i + 1);
    }
    rounds.push(n);
    rounds
}

/// Judges the current sample against the stream so far. Returns the failure
/// witness if the sample is empty or not an eps-approximation.
fn judge(
    sample: &[Element],
    stream: &[Element],
    system: &SetSystem,
    eps: &BigRational,
) -> Result<Option<(String, String)>> {
    if sample.is_empty() {
        return Ok(Some(("(empty sample)".into(), "1".into())));
    }
    match is_eps_approximation(sample, stream, system, eps)? {
        ApproxVerdict::Approximation => Ok(None),
        ApproxVerdict::Violation { witness, gap } => {
            Ok(Some((witness.describe(), gap.to_string())))
        }
    }
}

/// Plays one full game and returns its transcript.
pub fn run_game(config: &GameConfig) -> Result<GameTranscript> {
    config.validate()?;
    let sampler_rng = derive_rng(config.trial_seed, "sampler", 0);
    let adversary_rng = derive_rng(config.trial_seed, "adversary", 0);
    let mut sampler = Sampler::with_rng(config.sampler.clone(), sampler_rng)?;
    let params = config.game_params();
    let sampler_p = match &config.sampler {
        SamplerConfig::Bernoulli { p, .. } => Some(p.clone()),
        SamplerConfig::Reservoir { .. } => None,
    };
    let mut adversary = config
        .adversary
        .build(sampler_p.as_ref(), &params, adversary_rng)?;

    let judged: Vec<u64> = if config.continuous {
        judged_rounds(config.n, &config.eps, config.checkpoints)
    } else {
        vec![config.n]
    };
    let mut judged_iter = judged.iter().copied().peekable();

    let mut stream: Vec<Element> = Vec::with_capacity(config.n as usize);
    let mut rounds = Vec::new();
    let mut approximation = true;
    let mut failure_round = None;
    let mut witness = None;

    for round in 1..=config.n {
        let ctx = AdversaryContext {
            prior_elements: &stream,
            observed_state: sampler.state(),
            round,
            params: &params,
        };
        let x = adversary.next_element(&ctx)?;
        stream.push(x.clone());
        let outcome = sampler.step(x.clone());
        if config.record_rounds {
            rounds.push(RoundRecord {
                round,
                element: x.to_string(),
                sampled: outcome.accepted,
                sample_size: sampler.current_sample().len(),
            });
        }
        if judged_iter.peek() == Some(&round) {
            judged_iter.next();
            let sample = sampler.current_sample();
            // A sample holding the entire stream is trivially exact.
            let verdict = if sample.len() as u64 == round {
                None
            } else {
                judge(sample, &stream, &config.system, &config.eps)?
            };
            if let Some(w) = verdict {
                approximation = false;
                failure_round = Some(round);
                witness = Some(w);
                if config.continuous {
                    // The continuous game outputs 0 and halts here.
                    break;
                }
            }
        }
    }

    Ok(GameTranscript {
        rounds,
        stream,
        final_sample: sampler.current_sample().to_vec(),
        approximation,
        failure_round,
        witness,
        attack_exhausted: adversary.exhausted_round(),
    })
}

/// Aggregate of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub trials: u64,
    /// Trials whose attack window never exhausted.
    pub valid_trials: u64,
    /// Failures among valid trials.
    pub failures: u64,
    /// Trials where the attack exhausted its window; those streams still
    /// complete (the attack degenerates to repeating `a`) and are judged,
    /// but they are excluded from `delta_hat`.
    pub aborts: u64,
    /// Failures over all trials, aborted ones included.
    pub failures_all: u64,
    /// Empirical failure probability among valid trials; `None` when every
    /// trial aborted.
    pub delta_hat: Option<f64>,
    /// Empirical failure probability over all trials.
    pub delta_hat_all: f64,
    /// 95% Wilson interval for `delta_hat`, when defined.
    pub ci: Option<(f64, f64)>,
}

impl McSummary {
    /// The valid-trial estimate, required; errors when no trial was valid.
    pub fn require_delta_hat(&self) -> Result<f64> {
        self.delta_hat.ok_or_else(|| {
            Error::Estimation("all trials aborted; failure probability is undefined".into())
        })
    }
}

/// Runs `trials` independent games; trial `i` is seeded by
/// `derive_trial_seed(master_seed, i)`.
pub fn monte_carlo(template: &GameConfig, trials: u64, master_seed: u64) -> Result<McSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    template.validate()?;
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut config = template.clone();
            config.trial_seed = derive_trial_seed(master_seed, i);
            config.record_rounds = false;
            let t = run_game(&config)?;
            Ok((t.approximation, t.attack_exhausted.is_some()))
        })
        .collect::<Result<_>>()?;
    let aborts = outcomes.iter().filter(|(_, ex)| *ex).count() as u64;
    let valid_trials = trials - aborts;
    let failures = outcomes
        .iter()
        .filter(|(ok, ex)| !ok && !ex)
        .count() as u64;
    let failures_all = outcomes.iter().filter(|(ok, _)| !ok).count() as u64;
    let (delta_hat, ci) = if valid_trials > 0 {
        (
            Some(failures as f64 / valid_trials as f64),
            Some(wilson_interval_95(failures, valid_trials)),
        )
    } else {
        (None, None)
    };
    Ok(McSummary {
        trials,
        valid_trials,
        failures,
        aborts,
        failures_all,
        delta_hat,
        delta_hat_all: failures_all as f64 / trials as f64,
        ci,
    })
}

/// Empirical mean of the end-of-stream range discrepancy over trials: for
/// Bernoulli, `|R cap S|/(np) - |R cap X|/n`; for the reservoir,
/// `(n/k)|R cap S| - |R cap X|`. Both statistics have expectation zero
/// round by round, even against adaptive streams.
pub fn mean_range_discrepancy(
    template: &GameConfig,
    range: &crate::set_systems::Range,
    trials: u64,
    master_seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let totals: Vec<BigRational> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut config = template.clone();
            config.trial_seed = derive_trial_seed(master_seed, i);
            config.record_rounds = false;
            let t = run_game(&config)?;
            let n = ratio_from_u64(config.n);
            let in_stream = t.stream.iter().filter(|x| range.contains(x)).count() as u64;
            let in_sample = t.final_sample.iter().filter(|x| range.contains(x)).count() as u64;
            let z = match &config.sampler {
                SamplerConfig::Bernoulli { p, .. } => {
                    ratio_from_u64(in_sample) / (&n * p) - ratio_from_u64(in_stream) / &n
                }
                SamplerConfig::Reservoir { k, .. } => {
                    &n / ratio_from_u64(*k) * ratio_from_u64(in_sample)
                        - ratio_from_u64(in_stream)
                }
            };
            Ok(z)
        })
        .collect::<Result<_>>()?;
    let sum: BigRational = totals.into_iter().sum();
    Ok(rational_to_f64(&sum) / trials as f64)
}
