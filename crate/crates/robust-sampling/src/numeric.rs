//! Exact-rational helpers: parsing, directed-rounding logarithms, and the
//! Wilson score interval used by the Monte Carlo summaries.
//!
//! Logarithms are evaluated in double precision and then padded in the safe
//! direction, so advisor outputs and the attack's `p'` never understate the
//! quantities they bound. The pad is `1e-12` absolute plus a relative term
//! covering the float evaluation error for very large arguments.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `"0.2"`, `"1/5"`, `"3"`, or `"2^169"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |_| Error::Config(format!("cannot parse rational: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(bad)?;
        let d: BigInt = den.trim().parse().map_err(bad)?;
        if d.is_zero() {
            return Err(Error::Config(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((base, exp)) = s.split_once('^') {
        let b: BigInt = base.trim().parse().map_err(bad)?;
        let e: u32 = exp
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse exponent in {s:?}")))?;
        return Ok(BigRational::from_integer(b.pow(e)));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = format!("{int_part}{frac_part}");
        let n: BigInt = digits.parse().map_err(bad)?;
        let d = BigInt::from(10u32).pow(frac_part.len() as u32);
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(bad)?;
    Ok(BigRational::from_integer(n))
}

pub fn ratio_from_u64(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio_from_biguint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

/// `ln` of an arbitrary-size positive integer in double precision.
/// Values beyond `f64` range are split as `x = m * 2^s`.
fn ln_biguint_f64(x: &BigUint) -> f64 {
    debug_assert!(!x.is_zero());
    if let Some(f) = x.to_f64() {
        if f.is_finite() {
            return f.ln();
        }
    }
    let shift = x.bits().saturating_sub(53);
    let mantissa = (x >> shift).to_f64().expect("53-bit mantissa fits f64");
    mantissa.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_rational_f64(x: &BigRational) -> Result<f64> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("ln of non-positive value {x}")));
    }
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    Ok(ln_biguint_f64(num) - ln_biguint_f64(den))
}

fn ln_pad(v: f64) -> f64 {
    1e-12 + v.abs() * 1e-13
}

/// Rational upper bound on `ln x`, accurate to well under `1e-9` at the
/// magnitudes used here.
pub fn ln_upper(x: &BigRational) -> Result<BigRational> {
    let v = ln_rational_f64(x)?;
    Ok(BigRational::from_float(v + ln_pad(v)).expect("finite"))
}

/// Rational lower bound on `ln x`.
pub fn ln_lower(x: &BigRational) -> Result<BigRational> {
    let v = ln_rational_f64(x)?;
    Ok(BigRational::from_float(v - ln_pad(v)).expect("finite"))
}

pub fn ln_upper_biguint(x: &BigUint) -> Result<BigRational> {
    ln_upper(&ratio_from_biguint(x))
}

pub fn ln_lower_biguint(x: &BigUint) -> Result<BigRational> {
    ln_lower(&ratio_from_biguint(x))
}

/// Ceiling of a non-negative rational as a big integer.
pub fn ceil_to_biguint(x: &BigRational) -> Result<BigUint> {
    let c = x.ceil();
    c.numer()
        .to_biguint()
        .ok_or_else(|| Error::Domain(format!("ceiling of negative value {x}")))
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    let num = x.numer();
    let den = x.denom();
    match (num.to_f64(), den.to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => {
            // Fall back to a log-domain estimate for extreme magnitudes.
            let sign = if num.sign() == Sign::Minus { -1.0 } else { 1.0 };
            if num.is_zero() {
                return 0.0;
            }
            let l = ln_biguint_f64(num.magnitude()) - ln_biguint_f64(den.magnitude());
            sign * l.exp()
        }
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval_95(failures: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

/// `max{p, ln n / n}` with the logarithm rounded up, per the attack setup.
pub fn attack_p_prime(p: Option<&BigRational>, n: u64) -> Result<BigRational> {
    let ln_n_over_n = ln_upper(&ratio_from_u64(n))? / ratio_from_u64(n);
    Ok(match p {
        Some(p) if *p > ln_n_over_n => p.clone(),
        _ => ln_n_over_n,
    })
}

pub fn rational_one_half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parse_forms() {
        assert_eq!(r("0.2"), r("1/5"));
        assert_eq!(r("3"), BigRational::from_integer(BigInt::from(3)));
        assert_eq!(r("2^10"), r("1024"));
        assert_eq!(r("-0.5"), r("-1/2"));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn ln_bounds_bracket_true_value() {
        // ln 10^4 = 9.210340371976184...
        let x = r("10000");
        let up = ln_upper(&x).unwrap();
        let lo = ln_lower(&x).unwrap();
        assert!(rational_to_f64(&lo) < 9.210_340_372);
        assert!(rational_to_f64(&up) > 9.210_340_371);
        assert!(up > lo);
    }

    #[test]
    fn ln_of_huge_integer() {
        // ln 2^5000 = 5000 ln 2 = 3465.7359...
        let x = BigUint::from(1u8) << 5000;
        let v = rational_to_f64(&ln_upper_biguint(&x).unwrap());
        assert!((v - 3465.735_902_8).abs() < 1e-4);
    }

    #[test]
    fn wilson_zero_failures() {
        let (lo, hi) = wilson_interval_95(0, 500);
        assert!(lo.abs() < 1e-12);
        assert!(hi < 0.01);
    }

    #[test]
    fn p_prime_is_max() {
        // ln 50 / 50 = 0.07824...
        let small = r("1/100");
        let big = r("1/2");
        let p1 = attack_p_prime(Some(&small), 50).unwrap();
        let p2 = attack_p_prime(Some(&big), 50).unwrap();
        assert!(rational_to_f64(&p1) > 0.0782 && rational_to_f64(&p1) < 0.0783);
        assert_eq!(p2, big);
        // Upper bound never understates ln n / n.
        assert!(p1 > r("78239/1000000"));
    }
}
