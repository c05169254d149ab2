//! Closed-form parameter calculators: sampler sizes that guarantee
//! (eps, delta)-robustness, the continuous-robustness size, and the
//! thresholds below which the binary-search attack provably wins.
//!
//! Logarithms are rounded in the safe direction (up for sizes, inward for
//! window membership), so advised values never understate the analytic
//! thresholds they implement.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{
    ceil_to_biguint, ln_lower, ln_lower_biguint, ln_upper, ln_upper_biguint, ratio_from_u64,
};

/// The requested guarantee: an eps-approximation with probability at least
/// `1 - delta`, for a set system of the given cardinality.
#[derive(Clone, Debug)]
pub struct RobustnessSpec {
    pub eps: BigRational,
    pub delta: BigRational,
    pub n: u64,
    pub system_cardinality: BigUint,
    /// Informational only; robust sizes scale with `ln |R|`, not with the
    /// VC dimension.
    pub vc_dimension: Option<u64>,
}

impl RobustnessSpec {
    pub fn validate(&self) -> Result<()> {
        let one = BigRational::one();
        if !self.eps.is_positive() || self.eps >= one {
            return Err(Error::Config(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !self.delta.is_positive() || self.delta >= one {
            return Err(Error::Config(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.system_cardinality.is_zero() {
            return Err(Error::Config("set system cardinality must be >= 1".into()));
        }
        Ok(())
    }

    /// `ln |R| + ln (a / delta)`, rounded up.
    fn log_term(&self, a: u64) -> Result<BigRational> {
        let ln_card = ln_upper_biguint(&self.system_cardinality)?;
        let ln_conf = ln_upper(&(ratio_from_u64(a) / &self.delta))?;
        Ok(ln_card + ln_conf)
    }
}

/// Bernoulli rate sufficient for (eps, delta)-robustness:
/// `10 (ln|R| + ln(4/delta)) / (eps^2 n)`, capped at 1.
pub fn bernoulli_p_robust(spec: &RobustnessSpec) -> Result<BigRational> {
    spec.validate()?;
    let p = ratio_from_u64(10) * spec.log_term(4)?
        / (&spec.eps * &spec.eps * ratio_from_u64(spec.n));
    Ok(p.min(BigRational::one()))
}

/// Reservoir capacity sufficient for (eps, delta)-robustness:
/// `ceil(2 (ln|R| + ln(2/delta)) / eps^2)`.
pub fn reservoir_k_robust(spec: &RobustnessSpec) -> Result<BigUint> {
    spec.validate()?;
    let k = ratio_from_u64(2) * spec.log_term(2)? / (&spec.eps * &spec.eps);
    ceil_to_biguint(&k)
}

/// The cardinality-free per-range thresholds: the same formulas with
/// `ln |R| = 0`.
pub fn single_range_bounds(spec: &RobustnessSpec) -> Result<(BigRational, BigUint)> {
    let mut single = spec.clone();
    single.system_cardinality = BigUint::one();
    Ok((bernoulli_p_robust(&single)?, reservoir_k_robust(&single)?))
}

/// Reservoir capacity sufficient for continuous robustness:
/// `ceil(c (ln|R| + ln(1/delta) + ln(1/eps) + ln ln n) / eps^2)`, with
/// `ln ln n` clamped at 0 for tiny `n`. The analysis fixes no explicit
/// constant; `c = 8` is a working default.
pub fn reservoir_k_continuous(spec: &RobustnessSpec, c: &BigRational) -> Result<BigUint> {
    spec.validate()?;
    if !c.is_positive() {
        return Err(Error::Config(format!("c must be positive, got {c}")));
    }
    let ln_card = ln_upper_biguint(&spec.system_cardinality)?;
    let ln_delta = ln_upper(&(BigRational::one() / &spec.delta))?;
    let ln_eps = ln_upper(&(BigRational::one() / &spec.eps))?;
    let ln_n = ln_upper(&ratio_from_u64(spec.n))?;
    let ln_ln_n = if ln_n > BigRational::one() {
        ln_upper(&ln_n)?
    } else {
        BigRational::zero()
    };
    let k = c * (ln_card + ln_delta + ln_eps + ln_ln_n.max(BigRational::zero()))
        / (&spec.eps * &spec.eps);
    ceil_to_biguint(&k)
}

pub fn default_continuous_c() -> BigRational {
    ratio_from_u64(8)
}

/// Attack-regime report: parameter thresholds below which the binary-search
/// attack defeats the sampler, over the prefix system on `[N]`.
#[derive(Clone, Debug, Serialize)]
pub struct AttackRegimeReport {
    /// `c ln N / (n ln n)`: Bernoulli rates at or below this lose.
    pub bernoulli_p_threshold: String,
    /// `c ln N / ln n`: reservoir capacities at or below this lose.
    pub reservoir_k_threshold: String,
    /// Whether `N` certifiably lies in the admissible window
    /// `[n^{6 ln n}, 2^{n/2}]`.
    pub universe_ok: bool,
}

/// The analysis fixes no explicit constant; `c = 1/12` is a conservative
/// working default.
pub fn default_attack_c() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(12))
}

pub fn attack_regime(
    spec: &RobustnessSpec,
    universe_size: &BigUint,
    c: &BigRational,
) -> Result<AttackRegimeReport> {
    spec.validate()?;
    if !c.is_positive() {
        return Err(Error::Config(format!("c must be positive, got {c}")));
    }
    if universe_size.is_zero() {
        return Err(Error::Config("universe size must be >= 1".into()));
    }
    let n = ratio_from_u64(spec.n);
    let ln_n_up = ln_upper(&n)?;
    // Thresholds rounded down: being at or below them certifies the attack.
    let ln_univ_lo = ln_lower_biguint(universe_size)?;
    let p_threshold = c * &ln_univ_lo / (&n * &ln_n_up);
    let k_threshold = c * &ln_univ_lo / &ln_n_up;
    // Window membership, certified with inward rounding:
    // ln N >= 6 (ln n)^2 and ln N <= (n/2) ln 2.
    let ln_univ_up = ln_upper_biguint(universe_size)?;
    let ln2_lo = ln_lower(&ratio_from_u64(2))?;
    let universe_ok = ln_univ_lo >= ratio_from_u64(6) * &ln_n_up * &ln_n_up
        && ln_univ_up <= &n / ratio_from_u64(2) * ln2_lo;
    Ok(AttackRegimeReport {
        bernoulli_p_threshold: p_threshold.to_string(),
        reservoir_k_threshold: k_threshold.to_string(),
        universe_ok,
    })
}

/// Default attack universe for experiments: `2^ceil(6 (ln n)^2)`, clamped
/// to `2^(n/2)`.
pub fn default_attack_universe(n: u64) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let ln_n = ln_upper(&ratio_from_u64(n))?.max(BigRational::zero());
    let exp = ceil_to_biguint(&(ratio_from_u64(6) * &ln_n * &ln_n))?;
    let exp = u64::try_from(exp).map_err(|_| Error::Config("n too large".into()))?;
    let exp = exp.min(n / 2).max(1);
    Ok(BigUint::one() << exp)
}

/// Supported end applications, each reduced to a set-system cardinality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApplicationKind {
    /// Rank and quantile queries: prefix intervals, `|R| = N`.
    Quantiles,
    /// Frequency estimation: singletons, `|R| = N`, with the internal
    /// accuracy tightened to `eps/3`.
    HeavyHitters,
    /// Axis-aligned box counting over `[m]^d`: `|R| = (m(m+1)/2)^d`.
    RangeQueriesBoxes { m: u64, d: u32 },
}

/// Sampler parameters sufficient for the application's guarantee, obtained
/// by substituting its set-system cardinality (and, for heavy hitters, the
/// tightened accuracy) into the robust-size formulas.
pub fn application_params(
    app: &ApplicationKind,
    spec: &RobustnessSpec,
) -> Result<(BigRational, BigUint)> {
    let mut derived = spec.clone();
    match app {
        ApplicationKind::Quantiles => {}
        ApplicationKind::HeavyHitters => {
            derived.eps = &spec.eps / ratio_from_u64(3);
        }
        ApplicationKind::RangeQueriesBoxes { m, d } => {
            if *m == 0 || *d == 0 {
                return Err(Error::Config("boxes need m >= 1 and d >= 1".into()));
            }
            let per_axis = BigUint::from(*m) * BigUint::from(m + 1) / BigUint::from(2u32);
            derived.system_cardinality = per_axis.pow(*d);
        }
    }
    Ok((
        bernoulli_p_robust(&derived)?,
        reservoir_k_robust(&derived)?,
    ))
}
