//! Universe elements and streams.
//!
//! Elements are exact rationals so that both the integer universe `[N]`
//! (possibly far beyond machine-word range) and the continuous `[0,1]`
//! midpoint-attack domain share one representation. Integer elements print
//! and parse as plain decimal strings; non-integers as `num/den`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{Error, Result};

/// A single universe member. Ordered by numeric value.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Element(BigRational);

/// A stream is an ordered sequence of elements; repetitions are allowed.
pub type Stream = Vec<Element>;

impl Element {
    pub fn from_u64(v: u64) -> Self {
        Element(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_biguint(v: BigUint) -> Self {
        Element(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_rational(v: BigRational) -> Self {
        Element(v)
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// The element as a non-negative integer, if it is one.
    pub fn to_biguint(&self) -> Option<BigUint> {
        if self.0.is_integer() && !self.0.is_negative() {
            self.0.numer().to_biguint()
        } else {
            None
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_biguint().and_then(|v| u64::try_from(v).ok())
    }

    /// Checks membership in the configured universe `[1, N]`.
    pub fn in_universe(&self, universe_size: &BigUint) -> bool {
        let one = BigRational::one();
        let n = BigRational::from_integer(BigInt::from(universe_size.clone()));
        self.0 >= one && self.0 <= n
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        crate::numeric::parse_rational(s).map(Element)
    }
}
