//! Sample sizes for each test.
//!
//! Natural logarithms throughout; results are ceilings. Sizes for tests that
//! sample without replacement are capped at `n`.

use crate::error::{Error, Result};

fn ceil_size(x: f64) -> usize {
    // tolerate round-off just above an integer
    let r = x.round();
    let c = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (c.max(1.0)) as usize
}

/// Shared shape `4n(6 ± ·)/(3 t δ²) · log(·)` of the three counting tests.
fn two_branch(n: usize, t: f64, delta: f64, log_a: f64, log_b: f64) -> f64 {
    let scale = 4.0 * n as f64 / (3.0 * t * delta * delta);
    let a = scale * (6.0 + delta) * log_a;
    let b = scale * (6.0 - 5.0 * delta) * log_b;
    a.max(b)
}

/// Sample size of the diameter test (with replacement, uncapped).
pub fn sample_size_diameter(n: usize, diam: f64, delta: f64, epsilon: f64) -> usize {
    let nf = n as f64;
    ceil_size(two_branch(
        n,
        diam,
        delta,
        (1.0 / epsilon).ln(),
        (nf * nf / epsilon).ln(),
    ))
}

/// Sample size of the max-degree test, capped at `n`.
pub fn sample_size_maxdeg(n: usize, max_degree: f64, delta: f64, epsilon: f64) -> usize {
    let raw = two_branch(
        n,
        max_degree,
        delta,
        (1.0 / epsilon).ln(),
        (n as f64 / epsilon).ln(),
    );
    ceil_size(raw).min(n)
}

/// Sample size of the leaf-count test, capped at `n`.
pub fn sample_size_leaves(n: usize, leaves: f64, delta: f64, epsilon: f64) -> usize {
    let l = (1.0 / epsilon).ln();
    ceil_size(two_branch(n, leaves, delta, l, l)).min(n)
}

/// Sample size of the U-statistic test: `(4 · bound / (δℓ))² · log(1/budget)`,
/// at least 2 so that one pair exists.
pub fn sample_size_ustat(diam_bound: f64, ell: f64, delta: f64, budget: f64) -> usize {
    let r = 4.0 * diam_bound / (delta * ell);
    ceil_size(r * r * (1.0 / budget).ln()).max(2)
}

/// Sum of the two tail bounds controlling the path-count test at size `size`:
/// `2 exp(-⌊N/2⌋(δℓ)²/(32 D²)) + N² exp(-(N-2)(δℓ)²/(8nD + 2nδℓ/3))`.
pub fn pathcount_tail_bound(n: usize, diam_bound: f64, ell: f64, delta: f64, size: usize) -> f64 {
    let dl = delta * ell;
    let nf = n as f64;
    let big = size as f64;
    let half = (size / 2) as f64;
    let first = 2.0 * (-half * dl * dl / (32.0 * diam_bound * diam_bound)).exp();
    let second = big * big
        * (-(big - 2.0) * dl * dl / (8.0 * nf * diam_bound + 2.0 * nf * dl / 3.0)).exp();
    first + second
}

/// Smallest `N ≥ 3` with [`pathcount_tail_bound`] at most `budget`.
///
/// Below `N = 2/b` (with `b` the second exponent's rate) the second term
/// alone exceeds 1, and beyond it both terms decrease, so the admissible
/// sizes form an up-set and bisection finds the smallest.
pub fn sample_size_pathcount(
    n: usize,
    diam_bound: f64,
    ell: f64,
    delta: f64,
    budget: f64,
) -> Result<usize> {
    let ok = |size: usize| pathcount_tail_bound(n, diam_bound, ell, delta, size) <= budget;
    let mut hi = 3usize;
    while !ok(hi) {
        hi = hi
            .checked_mul(2)
            .filter(|&h| h < 1 << 48)
            .ok_or_else(|| Error::InvalidParameter("path-count sample size diverges".into()))?;
    }
    let mut lo = 3usize.max(hi / 2);
    if ok(lo) {
        return Ok(lo);
    }
    // invariant: !ok(lo), ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_example() {
        assert_eq!(sample_size_diameter(1000, 100.0, 0.5, 0.1), 3009);
    }

    #[test]
    fn diameter_decreases_in_threshold() {
        let mut prev = usize::MAX;
        for d in (10..=1000).step_by(10) {
            let s = sample_size_diameter(1000, d as f64, 0.3, 0.1);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn diameter_at_full_threshold() {
        // D = n: only (1/δ²)·log(n²/ε) remains
        let (n, delta, eps) = (1000usize, 0.5, 0.1);
        let expect = 4.0 * (6.0 - 5.0 * delta) / (3.0 * delta * delta)
            * ((n * n) as f64 / eps).ln();
        assert_eq!(sample_size_diameter(n, n as f64, delta, eps), expect.ceil() as usize);
    }

    #[test]
    fn maxdeg_example_and_cap() {
        assert_eq!(sample_size_maxdeg(500, 250.0, 0.5, 0.1), 318);
        assert_eq!(sample_size_maxdeg(500, 2.0, 0.5, 0.1), 500);
        let mut prev = usize::MAX;
        for d in 1..500 {
            let s = sample_size_maxdeg(500, d as f64, 0.5, 0.1);
            assert!(s <= prev);
            prev = s;
        }
        assert_eq!(prev, sample_size_maxdeg(500, 499.0, 0.5, 0.1));
    }

    #[test]
    fn leaves_example_halving_and_cap() {
        assert_eq!(sample_size_leaves(500, 250.0, 0.5, 0.1), 160);
        let a = sample_size_leaves(500, 100.0, 0.5, 0.1);
        let b = sample_size_leaves(500, 200.0, 0.5, 0.1);
        assert!(b == a.div_ceil(2) || b == a / 2, "{a} {b}");
        assert_eq!(sample_size_leaves(500, 1.0, 0.5, 0.1), 500);
    }

    #[test]
    fn ustat_size() {
        // (4 * 300 / 24)^2 * ln 10 = 2500 * 2.302585...
        assert_eq!(sample_size_ustat(300.0, 80.0, 0.3, 0.1), 5757);
        assert_eq!(sample_size_ustat(1.0, 1000.0, 0.9, 0.9), 2);
    }

    #[test]
    fn pathcount_size_is_smallest_admissible() {
        for &(n, d, ell, delta, budget) in &[
            (300usize, 300.0, 80.0, 0.3, 0.1),
            (300, 3.0, 80.0, 0.3, 0.1),
            (500, 500.0, 100.0, 0.3, 0.05),
            (50, 10.0, 5.0, 0.5, 0.2),
        ] {
            let s = sample_size_pathcount(n, d, ell, delta, budget).unwrap();
            assert!(s >= 3);
            assert!(pathcount_tail_bound(n, d, ell, delta, s) <= budget);
            if s > 3 {
                assert!(pathcount_tail_bound(n, d, ell, delta, s - 1) > budget);
            }
        }
    }
}
