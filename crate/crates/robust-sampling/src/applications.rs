//! End applications built on approximating samples: rank and quantile
//! estimation, heavy hitters, range-count queries, and 1-D center points.
//!
//! Each guarantee here is conditional on the sample being an
//! eps-approximation (for the relevant set system), which is itself
//! checkable with [`crate::set_systems::is_eps_approximation`]; the property
//! tests generate instances, filter by that predicate, and assert the
//! downstream guarantee.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::numeric::ratio_from_u64;
use crate::set_systems::Range;

fn require_non_empty(sample: &[Element]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::Domain(
            "application queries need a non-empty sample".into(),
        ));
    }
    Ok(())
}

/// Estimated rank of `target` in a stream of length `n`:
/// `n * |{s in sample : s <= target}| / |sample|`. On an eps-approximating
/// sample (prefix intervals), the error is at most `eps * n`.
pub fn estimate_rank(target: &Element, sample: &[Element], n: u64) -> Result<BigRational> {
    require_non_empty(sample)?;
    let below = sample.iter().filter(|s| *s <= target).count();
    Ok(ratio_from_u64(n) * BigRational::new(BigInt::from(below), BigInt::from(sample.len())))
}

/// The `ceil(q |sample|)`-th smallest sample element, for `q` in `(0,1)`.
pub fn estimate_quantile(q: &BigRational, sample: &[Element]) -> Result<Element> {
    require_non_empty(sample)?;
    if !q.is_positive() || *q >= BigRational::one() {
        return Err(Error::Config(format!("q must lie in (0,1), got {q}")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort();
    let idx = (q * ratio_from_u64(sorted.len() as u64)).ceil();
    let idx = usize::try_from(idx.numer()).expect("index fits") - 1;
    Ok(sorted[idx].clone())
}

/// All distinct sample elements with sample density at least `alpha - eps/3`,
/// ascending. On an (eps/3)-approximating sample (singletons), the output
/// contains every element of stream density >= alpha and none of stream
/// density <= alpha - eps.
pub fn heavy_hitters(
    sample: &[Element],
    alpha: &BigRational,
    eps: &BigRational,
) -> Result<Vec<Element>> {
    require_non_empty(sample)?;
    if eps >= alpha {
        return Err(Error::Config(format!(
            "heavy hitters need eps < alpha, got eps = {eps}, alpha = {alpha}"
        )));
    }
    let threshold = alpha - eps / ratio_from_u64(3);
    let mut sorted = sample.to_vec();
    sorted.sort();
    let size = ratio_from_u64(sorted.len() as u64);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|x| **x == sorted[i]).count();
        if BigRational::new(BigInt::from(j), BigInt::one()) / &size >= threshold {
            out.push(sorted[i].clone());
        }
        i += j;
    }
    Ok(out)
}

/// Estimated count of stream elements in `range`:
/// `|range cap sample| * n / |sample|`. On an eps-approximating sample, the
/// error is at most `eps * n`.
pub fn answer_range_query(range: &Range, sample: &[Element], n: u64) -> Result<BigRational> {
    require_non_empty(sample)?;
    let hits = sample.iter().filter(|x| range.contains(x)).count();
    Ok(ratio_from_u64(n) * BigRational::new(BigInt::from(hits), BigInt::from(sample.len())))
}

/// A beta-center of the stream, computed as the sample's lower median. The
/// guarantee needs the sample to be a (beta/5)-approximation with respect to
/// intervals and `beta <= 1/2`: a (6 beta/5)-center of the sample is then a
/// beta-center of the stream, and the median is one whenever
/// `6 beta/5 <= 1/2`.
pub fn center_point_1d(sample: &[Element], beta: &BigRational) -> Result<Element> {
    require_non_empty(sample)?;
    if !beta.is_positive() || *beta > BigRational::new(BigInt::one(), BigInt::from(2)) {
        return Err(Error::Config(format!(
            "beta must lie in (0, 1/2], got {beta}"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort();
    Ok(sorted[(sorted.len() - 1) / 2].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_sampling::stream_of;
    use crate::numeric::parse_rational;
    use crate::set_systems::{is_eps_approximation, SetSystem};
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn rank_examples() {
        let full = stream_of(1..=100);
        assert_eq!(
            estimate_rank(&Element::from_u64(50), &full, 100).unwrap(),
            r("50")
        );
        let sample = stream_of([2, 4, 6]);
        assert_eq!(
            estimate_rank(&Element::from_u64(5), &sample, 30).unwrap(),
            r("20")
        );
        assert!(estimate_rank(&Element::from_u64(1), &[], 10).is_err());
    }

    #[test]
    fn rank_is_monotone_in_target() {
        let sample = stream_of([3, 1, 4, 1, 5, 9, 2, 6]);
        let mut prev = r("-1");
        for t in 0..=10 {
            let est = estimate_rank(&Element::from_u64(t), &sample, 50).unwrap();
            assert!(est >= prev);
            prev = est;
        }
    }

    #[test]
    fn quantile_examples() {
        let sample = stream_of(1..=100);
        assert_eq!(
            estimate_quantile(&r("1/2"), &sample).unwrap(),
            Element::from_u64(50)
        );
        let single = stream_of([7]);
        for q in ["1/10", "1/2", "9/10"] {
            assert_eq!(
                estimate_quantile(&r(q), &single).unwrap(),
                Element::from_u64(7)
            );
        }
        assert!(estimate_quantile(&r("0"), &sample).is_err());
        assert!(estimate_quantile(&r("1"), &sample).is_err());
    }

    #[test]
    fn heavy_hitters_examples() {
        let sample = stream_of([5, 5, 5, 5]);
        assert_eq!(
            heavy_hitters(&sample, &r("1/2"), &r("1/4")).unwrap(),
            stream_of([5])
        );
        // All distinct with a threshold above 1/|sample|.
        let sample = stream_of([1, 2, 3, 4]);
        assert!(heavy_hitters(&sample, &r("1/2"), &r("1/4")).unwrap().is_empty());
        assert!(heavy_hitters(&sample, &r("1/4"), &r("1/2")).is_err());
    }

    #[test]
    fn heavy_hitters_shrink_as_alpha_grows() {
        let sample = stream_of([1, 1, 1, 2, 2, 3]);
        let loose = heavy_hitters(&sample, &r("1/4"), &r("1/8")).unwrap();
        let tight = heavy_hitters(&sample, &r("1/2"), &r("1/8")).unwrap();
        assert!(tight.iter().all(|x| loose.contains(x)));
        assert!(tight.len() <= loose.len());
    }

    #[test]
    fn range_query_examples() {
        let sample = stream_of([1, 3, 9]);
        let range = Range::Interval {
            lo: Element::from_u64(1),
            hi: Element::from_u64(4),
        };
        assert_eq!(answer_range_query(&range, &sample, 9).unwrap(), r("6"));
        let stream = stream_of(1..=20);
        assert_eq!(
            answer_range_query(&range, &stream, 20).unwrap(),
            r("4")
        );
    }

    #[test]
    fn center_examples() {
        assert_eq!(
            center_point_1d(&stream_of(1..=100), &r("1/4")).unwrap(),
            Element::from_u64(50)
        );
        assert_eq!(
            center_point_1d(&stream_of([1, 2, 3, 4, 5]), &r("1/5")).unwrap(),
            Element::from_u64(3)
        );
        assert!(center_point_1d(&[], &r("1/4")).is_err());
        assert!(center_point_1d(&stream_of([1]), &r("3/4")).is_err());
    }

    /// Subsample of `stream` selected by bits, forced non-empty.
    fn subsample(stream: &[u64], bits: &[bool]) -> Vec<u64> {
        let mut s: Vec<u64> = stream
            .iter()
            .zip(bits)
            .filter(|(_, &keep)| keep)
            .map(|(&x, _)| x)
            .collect();
        if s.is_empty() {
            s.push(stream[0]);
        }
        s
    }

    fn true_rank(target: u64, stream: &[u64]) -> u64 {
        stream.iter().filter(|&&x| x <= target).count() as u64
    }

    proptest! {
        /// Rank guarantee on prefix-approximating samples.
        #[test]
        fn rank_error_bounded_on_approx_samples(
            stream in proptest::collection::vec(1u64..30, 1..40),
            bits in proptest::collection::vec(any::<bool>(), 40),
        ) {
            let sample = subsample(&stream, &bits);
            let sys = SetSystem::prefix_intervals(BigUint::from(30u32));
            let eps = r("1/4");
            let s = stream_of(sample.iter().copied());
            let x = stream_of(stream.iter().copied());
            prop_assume!(is_eps_approximation(&s, &x, &sys, &eps).unwrap().holds());
            let n = stream.len() as u64;
            let bound = &eps * ratio_from_u64(n);
            for t in 0..=30u64 {
                let est = estimate_rank(&Element::from_u64(t), &s, n).unwrap();
                let err = (est - ratio_from_u64(true_rank(t, &stream))).abs();
                prop_assert!(err <= bound, "target {t}: error {err}");
            }
        }

        /// Quantile guarantee: the returned element's true normalized rank
        /// is within eps of q.
        #[test]
        fn quantile_rank_close_on_approx_samples(
            stream in proptest::collection::vec(1u64..30, 1..40),
            bits in proptest::collection::vec(any::<bool>(), 40),
            q_num in 1u64..8,
        ) {
            let sample = subsample(&stream, &bits);
            let sys = SetSystem::prefix_intervals(BigUint::from(30u32));
            let eps = r("1/4");
            let s = stream_of(sample.iter().copied());
            let x = stream_of(stream.iter().copied());
            prop_assume!(is_eps_approximation(&s, &x, &sys, &eps).unwrap().holds());
            let q = BigRational::new(BigInt::from(q_num), BigInt::from(8));
            let out = estimate_quantile(&q, &s).unwrap();
            let v = out.to_u64().unwrap();
            let n = stream.len() as u64;
            // Normalized rank interval of v in the stream: elements <= v
            // give the upper rank, elements < v the lower.
            let hi = ratio_from_u64(true_rank(v, &stream)) / ratio_from_u64(n);
            let lo = ratio_from_u64(stream.iter().filter(|&&x| x < v).count() as u64)
                / ratio_from_u64(n);
            prop_assert!(hi >= &q - &eps, "rank {hi} too low for q {q}");
            prop_assert!(lo <= &q + &eps, "rank {lo} too high for q {q}");
        }

        /// Heavy-hitter guarantee on (eps/3)-approximating samples.
        #[test]
        fn heavy_hitters_guarantee_on_approx_samples(
            stream in proptest::collection::vec(1u64..8, 1..40),
            bits in proptest::collection::vec(any::<bool>(), 40),
        ) {
            let sample = subsample(&stream, &bits);
            let sys = SetSystem::singletons(BigUint::from(8u32));
            let alpha = r("1/2");
            let eps = r("1/4");
            let fine = &eps / ratio_from_u64(3);
            let s = stream_of(sample.iter().copied());
            let x = stream_of(stream.iter().copied());
            prop_assume!(is_eps_approximation(&s, &x, &sys, &fine).unwrap().holds());
            let out = heavy_hitters(&s, &alpha, &eps).unwrap();
            let n = stream.len() as u64;
            for v in 1..8u64 {
                let d = ratio_from_u64(stream.iter().filter(|&&y| y == v).count() as u64)
                    / ratio_from_u64(n);
                let present = out.contains(&Element::from_u64(v));
                if d >= alpha {
                    prop_assert!(present, "frequent {v} (density {d}) missing");
                }
                if d <= &alpha - &eps {
                    prop_assert!(!present, "rare {v} (density {d}) present");
                }
            }
        }

        /// Range-count guarantee on interval-approximating samples.
        #[test]
        fn range_count_error_bounded_on_approx_samples(
            stream in proptest::collection::vec(1u64..20, 1..40),
            bits in proptest::collection::vec(any::<bool>(), 40),
            lo in 1u64..20,
            span in 0u64..19,
        ) {
            let sample = subsample(&stream, &bits);
            let sys = SetSystem::all_intervals(BigUint::from(20u32));
            let eps = r("1/4");
            let s = stream_of(sample.iter().copied());
            let x = stream_of(stream.iter().copied());
            prop_assume!(is_eps_approximation(&s, &x, &sys, &eps).unwrap().holds());
            let hi = (lo + span).min(20);
            let range = Range::Interval {
                lo: Element::from_u64(lo),
                hi: Element::from_u64(hi),
            };
            let n = stream.len() as u64;
            let truth = stream.iter().filter(|&&y| lo <= y && y <= hi).count() as u64;
            let est = answer_range_query(&range, &s, n).unwrap();
            let err = (est - ratio_from_u64(truth)).abs();
            prop_assert!(err <= &eps * ratio_from_u64(n), "error {err}");
        }

        /// Center guarantee: every closed half-line containing the output
        /// holds at least beta * n stream elements.
        #[test]
        fn center_is_beta_center_on_approx_samples(
            stream in proptest::collection::vec(1u64..20, 1..40),
            // The beta/5 = 1/20 condition needs dense samples; bias the
            // retention high and skip (rather than reject) the misses.
            bits in proptest::collection::vec(proptest::bool::weighted(0.9), 40),
        ) {
            let sample = subsample(&stream, &bits);
            let sys = SetSystem::all_intervals(BigUint::from(20u32));
            let beta = r("1/4");
            let fine = &beta / ratio_from_u64(5);
            let s = stream_of(sample.iter().copied());
            let x = stream_of(stream.iter().copied());
            if !is_eps_approximation(&s, &x, &sys, &fine).unwrap().holds() {
                return Ok(());
            }
            let c = center_point_1d(&s, &beta).unwrap();
            let cv = c.to_u64().unwrap();
            let n = stream.len() as u64;
            let need = &beta * ratio_from_u64(n);
            // Minimal closed half-lines containing c in each direction.
            let left = stream.iter().filter(|&&y| y <= cv).count() as u64;
            let right = stream.iter().filter(|&&y| y >= cv).count() as u64;
            prop_assert!(ratio_from_u64(left) >= need, "left mass {left}/{n}");
            prop_assert!(ratio_from_u64(right) >= need, "right mass {right}/{n}");
        }
    }
}
