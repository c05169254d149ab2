//! Streaming sampler state machines: Bernoulli and reservoir sampling.
//!
//! Both samplers sit behind [`Sampler`], the single contract the game engine
//! consumes. Acceptance decisions are made by exact integer comparison
//! against a 64-bit uniform draw; probabilities are quantized at `2^-64`,
//! which is negligible at desk scale and documented here once. For the
//! reservoir the classical boundary is used: the first `k` elements are kept
//! deterministically (condition `i <= k`), matching Vitter's algorithm.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::element::{Element, Stream};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// Sampler configuration; the variant selects which parameter is active.
#[derive(Clone, Debug, PartialEq)]
pub enum SamplerConfig {
    /// Keep each element independently with probability `p`.
    Bernoulli { p: BigRational, rng_seed: u64 },
    /// Fixed-capacity uniform sample of size `k`.
    Reservoir { k: u64, rng_seed: u64 },
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerConfig::Bernoulli { p, .. } => {
                if p.is_negative() || *p > BigRational::one() {
                    return Err(Error::Config(format!("p must lie in [0,1], got {p}")));
                }
            }
            SamplerConfig::Reservoir { k, .. } => {
                if *k == 0 {
                    return Err(Error::Config("k must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn rng_seed(&self) -> u64 {
        match self {
            SamplerConfig::Bernoulli { rng_seed, .. } | SamplerConfig::Reservoir { rng_seed, .. } => {
                *rng_seed
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerConfig::Bernoulli { .. } => "bernoulli",
            SamplerConfig::Reservoir { .. } => "reservoir",
        }
    }

    /// The active parameter rendered for reports: `p` or `k`.
    pub fn param_string(&self) -> String {
        match self {
            SamplerConfig::Bernoulli { p, .. } => p.to_string(),
            SamplerConfig::Reservoir { k, .. } => k.to_string(),
        }
    }
}

/// The sampler's state `sigma_i`: the held sample plus bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleState {
    held: Vec<Element>,
    round: u64,
    ever_sampled: u64,
}

impl SampleState {
    fn empty() -> Self {
        SampleState {
            held: Vec::new(),
            round: 0,
            ever_sampled: 0,
        }
    }

    /// The current sample `S_i`, in held order.
    pub fn held(&self) -> &[Element] {
        &self.held
    }

    /// Elements consumed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Count of elements ever accepted, including later-evicted ones
    /// (the attack analysis' `k'`).
    pub fn ever_sampled(&self) -> u64 {
        self.ever_sampled
    }
}

/// Outcome of one sampler step, exposed for transcripts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    /// Whether the element was accepted into the sample at this round.
    pub accepted: bool,
    /// Position overwritten, for reservoir replacements past the fill phase.
    pub replaced: Option<usize>,
}

enum Acceptance {
    Always,
    Never,
    /// Accept iff a fresh 64-bit draw is below the threshold.
    Below(u64),
}

/// A Bernoulli or reservoir sampler with its own deterministic generator.
pub struct Sampler {
    config: SamplerConfig,
    acceptance: Acceptance,
    rng: ChaCha8Rng,
    state: SampleState,
}

impl Sampler {
    /// Builds a sampler seeded from the config's `rng_seed`.
    pub fn new(config: SamplerConfig) -> Result<Self> {
        let rng = derive_rng(config.rng_seed(), "sampler", 0);
        Sampler::with_rng(config, rng)
    }

    /// Builds a sampler with a caller-derived generator (used per game trial).
    pub fn with_rng(config: SamplerConfig, rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let acceptance = match &config {
            SamplerConfig::Bernoulli { p, .. } => {
                if p.is_one() {
                    Acceptance::Always
                } else if p.is_zero() {
                    Acceptance::Never
                } else {
                    // floor(p * 2^64) as the acceptance threshold.
                    let scaled = (p.numer().magnitude() << 64u32) / p.denom().magnitude();
                    Acceptance::Below(u64::try_from(scaled).expect("p < 1 scales below 2^64"))
                }
            }
            SamplerConfig::Reservoir { .. } => Acceptance::Never, // unused
        };
        Ok(Sampler {
            config,
            acceptance,
            rng,
            state: SampleState::empty(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn state(&self) -> &SampleState {
        &self.state
    }

    /// The sample `S_i` as observed by the adversary.
    pub fn current_sample(&self) -> &[Element] {
        &self.state.held
    }

    /// Consumes one stream element and updates the state.
    pub fn step(&mut self, x: Element) -> StepOutcome {
        match self.config {
            SamplerConfig::Bernoulli { .. } => self.bernoulli_step(x),
            SamplerConfig::Reservoir { k, .. } => self.reservoir_step(k, x),
        }
    }

    fn bernoulli_step(&mut self, x: Element) -> StepOutcome {
        self.state.round += 1;
        // Exactly one draw per step, also when p is 0 or 1, so replay
        // oracles can reproduce the draw sequence position by position.
        let draw: u64 = self.rng.random();
        let accepted = match self.acceptance {
            Acceptance::Always => true,
            Acceptance::Never => false,
            Acceptance::Below(t) => draw < t,
        };
        if accepted {
            self.state.held.push(x);
            self.state.ever_sampled += 1;
        }
        StepOutcome {
            accepted,
            replaced: None,
        }
    }

    fn reservoir_step(&mut self, k: u64, x: Element) -> StepOutcome {
        let i = self.state.round + 1;
        self.state.round = i;
        if i <= k {
            self.state.held.push(x);
            self.state.ever_sampled += 1;
            return StepOutcome {
                accepted: true,
                replaced: None,
            };
        }
        // Accept with probability k/i: draw < k*2^64/i, evaluated exactly
        // in 128-bit integers.
        let draw: u64 = self.rng.random();
        let accepted = (draw as u128) * (i as u128) < (k as u128) << 64;
        if accepted {
            let j = self.rng.random_range(0..k as usize);
            self.state.held[j] = x;
            self.state.ever_sampled += 1;
            StepOutcome {
                accepted,
                replaced: Some(j),
            }
        } else {
            StepOutcome {
                accepted,
                replaced: None,
            }
        }
    }

    /// Canonical JSON form of the state, for transcript logging.
    pub fn state_json(&self) -> serde_json::Value {
        let held: Vec<String> = self.state.held.iter().map(|e| e.to_string()).collect();
        let mut obj = json!({
            "kind": self.config.kind_name(),
            "round": self.state.round,
            "ever_sampled": self.state.ever_sampled,
            "held": held,
        });
        match &self.config {
            SamplerConfig::Bernoulli { p, .. } => {
                obj["p"] = json!(p.to_string());
            }
            SamplerConfig::Reservoir { k, .. } => {
                obj["k"] = json!(k);
            }
        }
        obj
    }
}

/// Runs a sampler over a fixed stream and returns the final state.
pub fn run_static(config: SamplerConfig, stream: &Stream) -> Result<SampleState> {
    let mut sampler = Sampler::new(config)?;
    for x in stream {
        sampler.step(x.clone());
    }
    Ok(sampler.state.clone())
}

/// Convenience constructor for integer test streams.
pub fn stream_of(values: impl IntoIterator<Item = u64>) -> Stream {
    values.into_iter().map(Element::from_u64).collect()
}

#[allow(dead_code)]
fn _universe_placeholder(_n: &BigUint) {}
