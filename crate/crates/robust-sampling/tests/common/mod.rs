//! Shared helpers for integration tests: an independent brute-force density
//! oracle that enumerates every range of a system directly over `u64`
//! values, with no shared code paths with the library's sweep.

use num_bigint::BigInt;
use num_rational::BigRational;

use robust_sampling::core_sampling::stream_of;
use robust_sampling::element::Element;

/// Range families at oracle scale (tiny universes).
#[derive(Clone, Copy, Debug)]
pub enum OracleKind {
    Prefix { n: u64 },
    Intervals { n: u64 },
    Singletons { n: u64 },
    /// 2-D boxes over `[m]^2`, points encoded as `1 + (x-1) + m*(y-1)`.
    Boxes2 { m: u64 },
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn abs_diff(a: BigRational, b: BigRational) -> BigRational {
    if a > b {
        a - b
    } else {
        b - a
    }
}

/// Density gap of one predicate over sample vs stream.
fn gap(sample: &[u64], stream: &[u64], pred: &dyn Fn(u64) -> bool) -> BigRational {
    let cs = sample.iter().filter(|&&v| pred(v)).count();
    let cx = stream.iter().filter(|&&v| pred(v)).count();
    abs_diff(ratio(cs, sample.len()), ratio(cx, stream.len()))
}

/// Maximum density gap over every range of the family, by enumeration.
pub fn brute_force_gap(sample: &[u64], stream: &[u64], kind: OracleKind) -> BigRational {
    assert!(!sample.is_empty() && !stream.is_empty());
    let mut best = BigRational::new(BigInt::from(0), BigInt::from(1));
    let mut consider = |g: BigRational| {
        if g > best {
            best = g;
        }
    };
    match kind {
        OracleKind::Prefix { n } => {
            for b in 1..=n {
                consider(gap(sample, stream, &|v| v <= b));
            }
        }
        OracleKind::Singletons { n } => {
            for x in 1..=n {
                consider(gap(sample, stream, &|v| v == x));
            }
        }
        OracleKind::Intervals { n } => {
            for lo in 1..=n {
                for hi in lo..=n {
                    consider(gap(sample, stream, &|v| lo <= v && v <= hi));
                }
            }
        }
        OracleKind::Boxes2 { m } => {
            let coords = |v: u64| ((v - 1) % m + 1, (v - 1) / m + 1);
            for x_lo in 1..=m {
                for x_hi in x_lo..=m {
                    for y_lo in 1..=m {
                        for y_hi in y_lo..=m {
                            consider(gap(sample, stream, &|v| {
                                let (x, y) = coords(v);
                                x_lo <= x && x <= x_hi && y_lo <= y && y <= y_hi
                            }));
                        }
                    }
                }
            }
        }
    }
    best
}

pub fn elems(values: &[u64]) -> Vec<Element> {
    stream_of(values.iter().copied())
}

/// Deterministic test generator: splitmix64 over a counter.
pub struct TinyRng(u64);

impl TinyRng {
    pub fn new(seed: u64) -> Self {
        TinyRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[1, n]` (small n; modulo bias is irrelevant for tests).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n + 1
    }

    pub fn flip(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }
}
