//! Set systems over the universe, exact density computation, and
//! epsilon-approximation verification.
//!
//! All verdicts use exact rational arithmetic: densities are compared by
//! integer cross-multiplication, never floating point, so the game's 0/1
//! verdict is deterministic. The verifier finds the true maximum density gap
//! by sweeping candidate ranges whose endpoints lie at occurring element
//! values (the gap is a step function of the range bounds, so its extrema
//! occur there). Axis-aligned boxes use the same coordinate-compressed idea
//! per axis.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{Error, Result};

/// The supported range families.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetSystemKind {
    /// Ranges `[1,b]` for `b in [N]`; cardinality `N`.
    PrefixIntervals,
    /// Ranges `[a,b]` for `a <= b in [N]`; cardinality `N(N+1)/2`.
    AllIntervals,
    /// Ranges `{a}` for `a in [N]`; cardinality `N`.
    Singletons,
    /// Axis-aligned boxes over `[m]^d`, encoded into `[m^d]`.
    AxisBoxes { m: u64, d: u32 },
}

/// A finite family of ranges over the universe `[N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSystem {
    universe_size: BigUint,
    kind: SetSystemKind,
}

impl SetSystem {
    pub fn new(universe_size: BigUint, kind: SetSystemKind) -> Result<Self> {
        if universe_size.is_zero() {
            return Err(Error::Config("universe size N must be at least 1".into()));
        }
        if let SetSystemKind::AxisBoxes { m, d } = kind {
            if m == 0 || d == 0 {
                return Err(Error::Config("axis boxes need m >= 1 and d >= 1".into()));
            }
            let expected = BigUint::from(m).pow(d);
            if universe_size != expected {
                return Err(Error::Config(format!(
                    "axis boxes over [{m}]^{d} require N = m^d = {expected}, got {universe_size}"
                )));
            }
        }
        Ok(SetSystem {
            universe_size,
            kind,
        })
    }

    pub fn prefix_intervals(universe_size: BigUint) -> Self {
        SetSystem::new(universe_size, SetSystemKind::PrefixIntervals).expect("valid")
    }

    pub fn all_intervals(universe_size: BigUint) -> Self {
        SetSystem::new(universe_size, SetSystemKind::AllIntervals).expect("valid")
    }

    pub fn singletons(universe_size: BigUint) -> Self {
        SetSystem::new(universe_size, SetSystemKind::Singletons).expect("valid")
    }

    pub fn axis_boxes(m: u64, d: u32) -> Result<Self> {
        SetSystem::new(BigUint::from(m).pow(d), SetSystemKind::AxisBoxes { m, d })
    }

    pub fn universe_size(&self) -> &BigUint {
        &self.universe_size
    }

    pub fn kind(&self) -> &SetSystemKind {
        &self.kind
    }

    /// The declared family size `|R|`.
    pub fn cardinality(&self) -> BigUint {
        let n = &self.universe_size;
        match &self.kind {
            SetSystemKind::PrefixIntervals | SetSystemKind::Singletons => n.clone(),
            SetSystemKind::AllIntervals => (n * (n + 1u32)) >> 1,
            SetSystemKind::AxisBoxes { m, d } => {
                let per_axis = BigUint::from(*m) * BigUint::from(m + 1) / BigUint::from(2u32);
                per_axis.pow(*d)
            }
        }
    }
}

impl Serialize for SetSystem {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = ser.serialize_map(None)?;
        match &self.kind {
            SetSystemKind::PrefixIntervals => map.serialize_entry("kind", "prefix")?,
            SetSystemKind::AllIntervals => map.serialize_entry("kind", "intervals")?,
            SetSystemKind::Singletons => map.serialize_entry("kind", "singletons")?,
            SetSystemKind::AxisBoxes { m, d } => {
                map.serialize_entry("kind", "boxes")?;
                map.serialize_entry("m", m)?;
                map.serialize_entry("d", d)?;
            }
        }
        map.serialize_entry("N", &self.universe_size.to_string())?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for SetSystem {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            kind: String,
            #[serde(rename = "N")]
            n: String,
            m: Option<u64>,
            d: Option<u32>,
        }
        let raw = Raw::deserialize(de)?;
        let n: BigUint = raw
            .n
            .parse()
            .map_err(|_| serde::de::Error::custom(format!("bad universe size {:?}", raw.n)))?;
        let kind = match raw.kind.as_str() {
            "prefix" => SetSystemKind::PrefixIntervals,
            "intervals" => SetSystemKind::AllIntervals,
            "singletons" => SetSystemKind::Singletons,
            "boxes" => SetSystemKind::AxisBoxes {
                m: raw.m.ok_or_else(|| serde::de::Error::custom("boxes need m"))?,
                d: raw.d.ok_or_else(|| serde::de::Error::custom("boxes need d"))?,
            },
            other => return Err(serde::de::Error::custom(format!("unknown kind {other:?}"))),
        };
        SetSystem::new(n, kind).map_err(serde::de::Error::custom)
    }
}

/// One concrete range from a set system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    Prefix { b: Element },
    Interval { lo: Element, hi: Element },
    Singleton { v: Element },
    AxisBox { m: u64, lo: Vec<u64>, hi: Vec<u64> },
}

impl Range {
    pub fn contains(&self, x: &Element) -> bool {
        match self {
            Range::Prefix { b } => x <= b,
            Range::Interval { lo, hi } => lo <= x && x <= hi,
            Range::Singleton { v } => x == v,
            Range::AxisBox { m, lo, hi } => match decode_box_point(x, *m, lo.len() as u32) {
                Some(coords) => coords
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(c, (l, h))| l <= c && c <= h),
                None => false,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Range::Prefix { b } => format!("[1,{b}]"),
            Range::Interval { lo, hi } => format!("[{lo},{hi}]"),
            Range::Singleton { v } => format!("{{{v}}}"),
            Range::AxisBox { lo, hi, .. } => {
                let axes: Vec<String> = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| format!("[{l},{h}]"))
                    .collect();
                axes.join("x")
            }
        }
    }
}

/// Decodes a universe integer in `[1, m^d]` into coordinates in `[m]^d`.
pub fn decode_box_point(x: &Element, m: u64, d: u32) -> Option<Vec<u64>> {
    let v = x.to_biguint()?;
    if v.is_zero() || v > BigUint::from(m).pow(d) {
        return None;
    }
    let mut rest = v - 1u32;
    let m_big = BigUint::from(m);
    let mut coords = Vec::with_capacity(d as usize);
    for _ in 0..d {
        let (q, r) = rest.div_rem(&m_big);
        coords.push(u64::try_from(r).expect("digit below m") + 1);
        rest = q;
    }
    Some(coords)
}

/// Encodes coordinates in `[m]^d` into a universe integer in `[1, m^d]`.
pub fn encode_box_point(coords: &[u64], m: u64) -> Element {
    let mut v = BigUint::zero();
    for &c in coords.iter().rev() {
        v = v * m + (c - 1);
    }
    Element::from_biguint(v + 1u32)
}

/// The exact density of `range` in `seq`, counting multiplicity.
pub fn density(range: &Range, seq: &[Element]) -> Result<BigRational> {
    if seq.is_empty() {
        return Err(Error::Domain(
            "density of an empty sequence is undefined".into(),
        ));
    }
    let count = seq.iter().filter(|x| range.contains(x)).count();
    Ok(BigRational::new(
        BigInt::from(count),
        BigInt::from(seq.len()),
    ))
}

/// Verdict of an epsilon-approximation check.
#[derive(Clone, Debug, PartialEq)]
pub enum ApproxVerdict {
    Approximation,
    Violation {
        /// A range attaining the maximum density gap.
        witness: Range,
        /// That maximum gap, exact.
        gap: BigRational,
    },
}

impl ApproxVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ApproxVerdict::Approximation)
    }
}

/// `true` iff every range gap is at most `eps`; otherwise the maximizing
/// witness and its gap.
pub fn is_eps_approximation(
    sample: &[Element],
    stream: &[Element],
    system: &SetSystem,
    eps: &BigRational,
) -> Result<ApproxVerdict> {
    if eps.is_negative() {
        return Err(Error::Config(format!("eps must be non-negative, got {eps}")));
    }
    let (gap, witness) = max_density_gap(sample, stream, system)?;
    if gap <= *eps {
        Ok(ApproxVerdict::Approximation)
    } else {
        Ok(ApproxVerdict::Violation { witness, gap })
    }
}

/// The maximum over all ranges of `|d_R(stream) - d_R(sample)|`, with a
/// range attaining it.
pub fn max_density_gap(
    sample: &[Element],
    stream: &[Element],
    system: &SetSystem,
) -> Result<(BigRational, Range)> {
    if sample.is_empty() {
        return Err(Error::Domain(
            "epsilon-approximation is defined only for non-empty samples".into(),
        ));
    }
    if stream.is_empty() {
        return Err(Error::Domain("stream must be non-empty".into()));
    }

    // value -> (stream count, sample count), ordered by value.
    let mut counts: BTreeMap<&Element, (u64, u64)> = BTreeMap::new();
    for x in stream {
        counts.entry(x).or_default().0 += 1;
    }
    for x in sample {
        counts.entry(x).or_default().1 += 1;
    }

    let n = BigInt::from(stream.len());
    let s = BigInt::from(sample.len());
    let den = &n * &s;

    // Per-value gap numerator over the common denominator n*s.
    let weight = |cx: u64, cs: u64| BigInt::from(cx) * &s - BigInt::from(cs) * &n;

    let (best_num, witness) = match system.kind() {
        SetSystemKind::PrefixIntervals => {
            let mut cum = BigInt::zero();
            let mut best: Option<(BigInt, Range)> = None;
            for (v, &(cx, cs)) in &counts {
                cum += weight(cx, cs);
                let g = cum.abs();
                if best.as_ref().is_none_or(|(b, _)| g > *b) {
                    best = Some((g, Range::Prefix { b: (*v).clone() }));
                }
            }
            best.expect("stream non-empty")
        }
        SetSystemKind::Singletons => {
            let mut best: Option<(BigInt, Range)> = None;
            for (v, &(cx, cs)) in &counts {
                let g = weight(cx, cs).abs();
                if best.as_ref().is_none_or(|(b, _)| g > *b) {
                    best = Some((g, Range::Singleton { v: (*v).clone() }));
                }
            }
            best.expect("stream non-empty")
        }
        SetSystemKind::AllIntervals => {
            let values: Vec<&Element> = counts.keys().copied().collect();
            let weights: Vec<BigInt> = counts.values().map(|&(cx, cs)| weight(cx, cs)).collect();
            let (pos, pi, pj) = max_subarray(&weights);
            let negated: Vec<BigInt> = weights.iter().map(|w| -w).collect();
            let (neg, ni, nj) = max_subarray(&negated);
            let (g, i, j) = if pos >= neg { (pos, pi, pj) } else { (neg, ni, nj) };
            (
                g.max(BigInt::zero()),
                Range::Interval {
                    lo: values[i].clone(),
                    hi: values[j].clone(),
                },
            )
        }
        SetSystemKind::AxisBoxes { m, d } => {
            box_sweep(&counts, *m, *d, &n, &s)?
        }
    };

    Ok((BigRational::new(best_num, den), witness))
}

/// Maximum nonempty-subarray sum with its index span.
fn max_subarray(w: &[BigInt]) -> (BigInt, usize, usize) {
    let mut best = w[0].clone();
    let mut best_span = (0, 0);
    let mut cur = w[0].clone();
    let mut cur_start = 0;
    for (i, x) in w.iter().enumerate().skip(1) {
        if cur.is_negative() {
            cur = x.clone();
            cur_start = i;
        } else {
            cur += x;
        }
        if cur > best {
            best = cur.clone();
            best_span = (cur_start, i);
        }
    }
    (best, best_span.0, best_span.1)
}

/// Coordinate-compressed sweep over axis-aligned boxes: candidate faces lie
/// at occurring coordinates, which is exact because snapping a box's faces
/// inward to the nearest occurring coordinates preserves its intersection
/// with the data.
fn box_sweep(
    counts: &BTreeMap<&Element, (u64, u64)>,
    m: u64,
    d: u32,
    n: &BigInt,
    s: &BigInt,
) -> Result<(BigInt, Range)> {
    struct Point {
        coords: Vec<u64>,
        cx: u64,
        cs: u64,
    }
    let mut points = Vec::with_capacity(counts.len());
    for (v, &(cx, cs)) in counts {
        let coords = decode_box_point(v, m, d).ok_or_else(|| {
            Error::Domain(format!(
                "element {v} is not a point of the [{m}]^{d} universe"
            ))
        })?;
        points.push(Point { coords, cx, cs });
    }

    // Per-axis candidate (lo, hi) pairs over occurring coordinates.
    let mut axis_pairs: Vec<Vec<(u64, u64)>> = Vec::with_capacity(d as usize);
    for axis in 0..d as usize {
        let mut coords: Vec<u64> = points.iter().map(|p| p.coords[axis]).collect();
        coords.sort_unstable();
        coords.dedup();
        let mut pairs = Vec::new();
        for (i, &lo) in coords.iter().enumerate() {
            for &hi in &coords[i..] {
                pairs.push((lo, hi));
            }
        }
        axis_pairs.push(pairs);
    }

    let mut best = BigInt::zero();
    let mut best_box = (vec![1u64; d as usize], vec![1u64; d as usize]);
    let mut selection = vec![0usize; d as usize];
    loop {
        let lo: Vec<u64> = selection
            .iter()
            .zip(&axis_pairs)
            .map(|(&i, pairs)| pairs[i].0)
            .collect();
        let hi: Vec<u64> = selection
            .iter()
            .zip(&axis_pairs)
            .map(|(&i, pairs)| pairs[i].1)
            .collect();
        let (mut cx, mut cs) = (0u64, 0u64);
        for p in &points {
            let inside = p
                .coords
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(c, (l, h))| l <= c && c <= h);
            if inside {
                cx += p.cx;
                cs += p.cs;
            }
        }
        let g = (BigInt::from(cx) * s - BigInt::from(cs) * n).abs();
        if g > best {
            best = g;
            best_box = (lo, hi);
        }
        // Odometer over the per-axis pair lists.
        let mut axis = 0;
        loop {
            if axis == d as usize {
                return Ok((
                    best,
                    Range::AxisBox {
                        m,
                        lo: best_box.0,
                        hi: best_box.1,
                    },
                ));
            }
            selection[axis] += 1;
            if selection[axis] < axis_pairs[axis].len() {
                break;
            }
            selection[axis] = 0;
            axis += 1;
        }
    }
}

/// Approximation level after substituting up to `v` of `k` sample values:
/// `alpha + v/k`.
pub fn approx_after_substitution(alpha: &BigRational, v: u64, k: u64) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if v > k {
        return Err(Error::Config(format!("v = {v} exceeds k = {k}")));
    }
    Ok(alpha + BigRational::new(BigInt::from(v), BigInt::from(k)))
}

/// Approximation level after the stream grows to at most `(1+beta)` times
/// its length: `alpha + beta`.
pub fn approx_after_growth(alpha: &BigRational, beta: &BigRational) -> Result<BigRational> {
    if alpha.is_negative() || beta.is_negative() {
        return Err(Error::Config("alpha and beta must be non-negative".into()));
    }
    Ok(alpha + beta)
}
