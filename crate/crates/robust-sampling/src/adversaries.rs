//! Adversary strategies: the binary-search attack over `[N]`, its
//! continuous-domain midpoint variant over `[0,1]`, and static baselines.
//!
//! An adversary observes exactly the sampler state after each round and the
//! elements it has already submitted; whether its previous element was
//! accepted is inferred by diffing the `ever_sampled` counter across rounds
//! (acceptance at round `i` counts, even if the element is later evicted).
//!
//! The attack keeps a live window `(a, b)`; sampled elements push `a` up and
//! unsampled ones push `b` down, so at every round all sampled elements sit
//! below all unsampled ones. When the window runs out of interior points
//! (`b - a < 2`) the attack records the exhaustion round and degenerates to
//! resubmitting `a`, so the stream still completes all `n` rounds.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core_sampling::SampleState;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::numeric::attack_p_prime;
use crate::rng::uniform_in_universe;

/// Game-wide parameters visible to the adversary.
#[derive(Clone, Debug)]
pub struct GameParams {
    pub n: u64,
    pub universe_size: BigUint,
    pub eps: BigRational,
}

/// Exactly what the adversary may observe before choosing round `i`'s
/// element: the prior stream and the sampler state `sigma_{i-1}`.
pub struct AdversaryContext<'a> {
    pub prior_elements: &'a [Element],
    pub observed_state: &'a SampleState,
    pub round: u64,
    pub params: &'a GameParams,
}

pub trait Adversary {
    /// Chooses the element to submit at `ctx.round`.
    fn next_element(&mut self, ctx: &AdversaryContext<'_>) -> Result<Element>;

    /// First round at which an attack window ran out of interior points,
    /// if that happened.
    fn exhausted_round(&self) -> Option<u64> {
        None
    }
}

/// Always submits the same element.
pub struct ConstantAdversary {
    value: Element,
}

impl ConstantAdversary {
    pub fn new(value: Element) -> Self {
        ConstantAdversary { value }
    }
}

impl Adversary for ConstantAdversary {
    fn next_element(&mut self, _ctx: &AdversaryContext<'_>) -> Result<Element> {
        Ok(self.value.clone())
    }
}

/// Submits `1, 2, ..., n`, ignoring all observations.
pub struct SortedStaticAdversary;

impl Adversary for SortedStaticAdversary {
    fn next_element(&mut self, ctx: &AdversaryContext<'_>) -> Result<Element> {
        Ok(Element::from_u64(ctx.round))
    }
}

/// Submits independent uniform elements of `[1, N]`.
pub struct StaticRandomAdversary {
    rng: ChaCha8Rng,
}

impl StaticRandomAdversary {
    pub fn new(rng: ChaCha8Rng) -> Self {
        StaticRandomAdversary { rng }
    }
}

impl Adversary for StaticRandomAdversary {
    fn next_element(&mut self, ctx: &AdversaryContext<'_>) -> Result<Element> {
        Ok(Element::from_biguint(uniform_in_universe(
            &mut self.rng,
            &ctx.params.universe_size,
        )))
    }
}

/// Scale for the dyadic representation of `p'`; fine enough that the grid
/// rounding stays far below the 1e-12 accuracy target.
const P_PRIME_BITS: u32 = 48;

/// The binary-search attack over the integer universe `[N]`.
pub struct BinarySearchAttack {
    a: BigUint,
    b: BigUint,
    p_prime: BigRational,
    /// `ceil(p' * 2^48)`; the step uses `x = a + ((2^48 - num)(b-a)) >> 48`.
    p_prime_scaled: u64,
    prev_ever: Option<u64>,
    prev_x: Option<BigUint>,
    exhausted: Option<u64>,
}

impl BinarySearchAttack {
    /// `sampler_p` is the Bernoulli parameter when attacking Bernoulli
    /// sampling; `None` for reservoir sampling, where `p' = ln n / n`.
    pub fn new(sampler_p: Option<&BigRational>, n: u64, universe_size: &BigUint) -> Result<Self> {
        if universe_size < &BigUint::from(2u32) {
            return Err(Error::Config("attack needs a universe of size >= 2".into()));
        }
        let p_raw = attack_p_prime(sampler_p, n)?;
        // Round up onto the 2^-48 grid, keeping p' an upper bound.
        let scale = BigInt::one() << P_PRIME_BITS;
        let scaled = (&p_raw * BigRational::from_integer(scale.clone())).ceil();
        let scaled = u64::try_from(scaled.numer().magnitude().clone())
            .map_err(|_| Error::Config("p' out of range".into()))?;
        if scaled >= 1u64 << P_PRIME_BITS {
            return Err(Error::Config(format!(
                "attack requires p' < 1, got p' >= {p_raw}"
            )));
        }
        Ok(BinarySearchAttack {
            a: BigUint::one(),
            b: universe_size.clone(),
            p_prime: BigRational::new(BigInt::from(scaled), scale),
            p_prime_scaled: scaled,
            prev_ever: None,
            prev_x: None,
            exhausted: None,
        })
    }

    pub fn window(&self) -> (&BigUint, &BigUint) {
        (&self.a, &self.b)
    }

    pub fn p_prime(&self) -> &BigRational {
        &self.p_prime
    }

    fn observe(&mut self, state: &SampleState) {
        if let (Some(prev_ever), Some(prev_x)) = (self.prev_ever, self.prev_x.take()) {
            if state.ever_sampled() > prev_ever {
                self.a = prev_x;
            } else {
                self.b = prev_x;
            }
        }
        self.prev_ever = Some(state.ever_sampled());
    }
}

impl Adversary for BinarySearchAttack {
    fn next_element(&mut self, ctx: &AdversaryContext<'_>) -> Result<Element> {
        self.observe(ctx.observed_state);
        let x = if &self.b - &self.a < BigUint::from(2u32) {
            if self.exhausted.is_none() {
                self.exhausted = Some(ctx.round);
            }
            self.a.clone()
        } else {
            // x = floor(a + (1 - p')(b - a)), evaluated on the dyadic grid.
            let width = &self.b - &self.a;
            let shrink = ((1u64 << P_PRIME_BITS) - self.p_prime_scaled) * width;
            &self.a + (shrink >> P_PRIME_BITS)
        };
        self.prev_x = Some(x.clone());
        Ok(Element::from_biguint(x))
    }

    fn exhausted_round(&self) -> Option<u64> {
        self.exhausted
    }
}

/// The continuous-domain attack over `[0,1]`: always submits the exact
/// midpoint of the live window, so windows never exhaust.
pub struct MidpointAttack {
    a: BigRational,
    b: BigRational,
    prev_ever: Option<u64>,
    prev_x: Option<BigRational>,
}

impl MidpointAttack {
    pub fn new() -> Self {
        MidpointAttack {
            a: BigRational::zero(),
            b: BigRational::one(),
            prev_ever: None,
            prev_x: None,
        }
    }

    pub fn window(&self) -> (&BigRational, &BigRational) {
        (&self.a, &self.b)
    }
}

impl Default for MidpointAttack {
    fn default() -> Self {
        MidpointAttack::new()
    }
}

impl Adversary for MidpointAttack {
    fn next_element(&mut self, ctx: &AdversaryContext<'_>) -> Result<Element> {
        if let (Some(prev_ever), Some(prev_x)) = (self.prev_ever, self.prev_x.take()) {
            if ctx.observed_state.ever_sampled() > prev_ever {
                self.a = prev_x;
            } else {
                self.b = prev_x;
            }
        }
        self.prev_ever = Some(ctx.observed_state.ever_sampled());
        let x = (&self.a + &self.b) / BigRational::from_integer(BigInt::from(2));
        self.prev_x = Some(x.clone());
        Ok(Element::from_rational(x))
    }
}

/// Named strategy selection, as it appears in CLI configs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AdversarySpec {
    Attack,
    MidpointAttack,
    StaticSorted,
    StaticRandom,
    Constant { value: String },
}

impl AdversarySpec {
    pub fn name(&self) -> String {
        match self {
            AdversarySpec::Attack => "attack".into(),
            AdversarySpec::MidpointAttack => "midpoint-attack".into(),
            AdversarySpec::StaticSorted => "static-sorted".into(),
            AdversarySpec::StaticRandom => "static-random".into(),
            AdversarySpec::Constant { value } => format!("constant:{value}"),
        }
    }

    /// Instantiates the strategy for one game.
    pub fn build(
        &self,
        sampler_p: Option<&BigRational>,
        params: &GameParams,
        rng: ChaCha8Rng,
    ) -> Result<Box<dyn Adversary>> {
        Ok(match self {
            AdversarySpec::Attack => Box::new(BinarySearchAttack::new(
                sampler_p,
                params.n,
                &params.universe_size,
            )?),
            AdversarySpec::MidpointAttack => Box::new(MidpointAttack::new()),
            AdversarySpec::StaticSorted => Box::new(SortedStaticAdversary),
            AdversarySpec::StaticRandom => Box::new(StaticRandomAdversary::new(rng)),
            AdversarySpec::Constant { value } => {
                Box::new(ConstantAdversary::new(value.parse()?))
            }
        })
    }
}

impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attack" => Ok(AdversarySpec::Attack),
            "midpoint-attack" => Ok(AdversarySpec::MidpointAttack),
            "static-sorted" => Ok(AdversarySpec::StaticSorted),
            "static-random" => Ok(AdversarySpec::StaticRandom),
            other => {
                if let Some(value) = other.strip_prefix("constant:") {
                    value.parse::<Element>()?;
                    Ok(AdversarySpec::Constant {
                        value: value.to_string(),
                    })
                } else if other == "constant" {
                    Ok(AdversarySpec::Constant { value: "1".into() })
                } else {
                    Err(Error::Config(format!("unknown adversary {other:?}")))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_sampling::{Sampler, SamplerConfig};
    use crate::numeric::parse_rational;
    use crate::rng::derive_rng;

    fn params(n: u64, universe: u64) -> GameParams {
        GameParams {
            n,
            universe_size: BigUint::from(universe),
            eps: parse_rational("1/2").unwrap(),
        }
    }

    fn ctx<'a>(
        prior: &'a [Element],
        state: &'a SampleState,
        round: u64,
        params: &'a GameParams,
    ) -> AdversaryContext<'a> {
        AdversaryContext {
            prior_elements: prior,
            observed_state: state,
            round,
            params,
        }
    }

    fn fresh_state() -> SampleState {
        Sampler::new(SamplerConfig::Reservoir { k: 1, rng_seed: 0 })
            .unwrap()
            .state()
            .clone()
    }

    #[test]
    fn constant_and_sorted() {
        let p = params(5, 100);
        let state = fresh_state();
        let mut c = ConstantAdversary::new(Element::from_u64(9));
        let mut s = SortedStaticAdversary;
        for round in 1..=3 {
            assert_eq!(
                c.next_element(&ctx(&[], &state, round, &p)).unwrap(),
                Element::from_u64(9)
            );
            assert_eq!(
                s.next_element(&ctx(&[], &state, round, &p)).unwrap(),
                Element::from_u64(round)
            );
        }
    }

    #[test]
    fn static_adversaries_ignore_observed_state() {
        // Feed two different (scrambled) state digests; output must match.
        let p = params(10, 50);
        let empty = fresh_state();
        let mut busy_sampler = Sampler::new(SamplerConfig::Reservoir { k: 3, rng_seed: 1 }).unwrap();
        for v in [7, 8, 9] {
            busy_sampler.step(Element::from_u64(v));
        }
        let busy = busy_sampler.state().clone();

        let mut r1 = StaticRandomAdversary::new(derive_rng(42, "adversary", 0));
        let mut r2 = StaticRandomAdversary::new(derive_rng(42, "adversary", 0));
        for round in 1..=10 {
            let x1 = r1.next_element(&ctx(&[], &empty, round, &p)).unwrap();
            let x2 = r2.next_element(&ctx(&[], &busy, round, &p)).unwrap();
            assert_eq!(x1, x2);
        }
    }

    #[test]
    fn attack_first_element_half_window() {
        // p' = 1/2, N = 100: x_1 = floor(1 + (1/2) * 99) = 50.
        let p = params(4, 100);
        let state = fresh_state();
        let mut attack =
            BinarySearchAttack::new(Some(&parse_rational("1/2").unwrap()), 4, &p.universe_size)
                .unwrap();
        let x = attack.next_element(&ctx(&[], &state, 1, &p)).unwrap();
        assert_eq!(x, Element::from_u64(50));
    }

    #[test]
    fn attack_window_updates() {
        let p = params(4, 100);
        let mut attack =
            BinarySearchAttack::new(Some(&parse_rational("1/2").unwrap()), 4, &p.universe_size)
                .unwrap();

        // Round 1: window (1, 100), emits 50. Simulate "sampled".
        let mut sampler = Sampler::new(SamplerConfig::Bernoulli {
            p: parse_rational("1").unwrap(),
            rng_seed: 0,
        })
        .unwrap();
        let x1 = attack
            .next_element(&ctx(&[], sampler.state(), 1, &p))
            .unwrap();
        assert_eq!(x1, Element::from_u64(50));
        sampler.step(x1.clone());

        // Sampled: a moves to 50.
        let _x2 = attack
            .next_element(&ctx(std::slice::from_ref(&x1), sampler.state(), 2, &p))
            .unwrap();
        let (a, b) = attack.window();
        assert_eq!((a.clone(), b.clone()), (BigUint::from(50u32), BigUint::from(100u32)));
    }

    #[test]
    fn attack_window_update_on_unsampled() {
        let p = params(4, 100);
        let mut attack =
            BinarySearchAttack::new(Some(&parse_rational("1/2").unwrap()), 4, &p.universe_size)
                .unwrap();
        let mut sampler = Sampler::new(SamplerConfig::Bernoulli {
            p: parse_rational("0").unwrap(),
            rng_seed: 0,
        })
        .unwrap();
        let x1 = attack
            .next_element(&ctx(&[], sampler.state(), 1, &p))
            .unwrap();
        sampler.step(x1.clone());
        let _x2 = attack
            .next_element(&ctx(std::slice::from_ref(&x1), sampler.state(), 2, &p))
            .unwrap();
        let (a, b) = attack.window();
        assert_eq!((a.clone(), b.clone()), (BigUint::from(1u32), BigUint::from(50u32)));
    }

    #[test]
    fn attack_rejects_p_prime_one() {
        let universe = BigUint::from(100u32);
        assert!(
            BinarySearchAttack::new(Some(&parse_rational("1").unwrap()), 10, &universe).is_err()
        );
    }

    #[test]
    fn midpoint_attack_first_rounds() {
        let p = params(4, 100);
        let mut attack = MidpointAttack::new();
        let mut sampler = Sampler::new(SamplerConfig::Bernoulli {
            p: parse_rational("1").unwrap(),
            rng_seed: 0,
        })
        .unwrap();
        let x1 = attack
            .next_element(&ctx(&[], sampler.state(), 1, &p))
            .unwrap();
        assert_eq!(x1, "1/2".parse().unwrap());
        sampler.step(x1.clone());
        // Sampled at round 1: round 2 emits the midpoint of [1/2, 1].
        let x2 = attack
            .next_element(&ctx(std::slice::from_ref(&x1), sampler.state(), 2, &p))
            .unwrap();
        assert_eq!(x2, "3/4".parse().unwrap());
    }

    #[test]
    fn midpoint_denominators_are_dyadic() {
        let p = params(16, 100);
        let mut attack = MidpointAttack::new();
        let mut sampler = Sampler::new(SamplerConfig::Bernoulli {
            p: parse_rational("1/2").unwrap(),
            rng_seed: 5,
        })
        .unwrap();
        let mut prior = Vec::new();
        for round in 1..=16u64 {
            let x = attack
                .next_element(&ctx(&prior, sampler.state(), round, &p))
                .unwrap();
            let denom = x.value().denom().magnitude().clone();
            assert!(denom <= (BigUint::one() << round));
            sampler.step(x.clone());
            prior.push(x);
        }
    }

    #[test]
    fn spec_names_parse() {
        for name in [
            "attack",
            "midpoint-attack",
            "static-sorted",
            "static-random",
            "constant:7",
        ] {
            let spec: AdversarySpec = name.parse().unwrap();
            assert_eq!(spec.name(), name);
        }
        assert!("no-such".parse::<AdversarySpec>().is_err());
    }
}
