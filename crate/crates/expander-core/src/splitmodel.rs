//! Combinatorics of a single dyadic split.
//!
//! A column set of size `s` is halved recursively into ceiling/floor halves.
//! Each merge of two halves is a two-set union whose size is governed by a
//! hypergeometric law ([`intersect_prob`]); its large-deviation exponent is
//! [`psi_n`] and the accompanying polynomial prefactor is [`pi_poly`].
//!
//! All logarithms are natural.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{bail, Result};

/// Relative tolerance used when a function receives non-integral arguments.
pub const REAL_TOLERANCE: f64 = 1e-12;

/// Shannon entropy `H(p) = -p ln p - (1-p) ln(1-p)` with `H(0) = H(1) = 0`.
pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        bail!(Domain, "entropy argument {p} outside [0, 1]");
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * libm::log(p)) - (1.0 - p) * libm::log1p(-p)
}

/// Smallest `L` with `2^L >= s`; zero for `s <= 1`.
pub fn ceil_log2(s: u64) -> u32 {
    if s <= 1 {
        0
    } else {
        u64::BITS - (s - 1).leading_zeros()
    }
}

/// Real-argument version of [`ceil_log2`].
pub fn ceil_log2_real(s: f64) -> u32 {
    let mut l = 0u32;
    while l < 63 && ((1u64 << l) as f64) < s {
        l += 1;
    }
    l
}

/// Sizes and multiplicities of the subsets at one level of the dyadic tree.
///
/// At level `j` there are `2^j` subsets: `big_count` of size `big` and
/// `small_count` of size `small = big - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitLevel {
    pub level: u32,
    pub big: u64,
    pub small: u64,
    pub big_count: u64,
    pub small_count: u64,
}

/// Census of level `j` for a parent set of size `s >= 2`, valid for
/// `0 <= j <= ceil(log2 s) - 1`.
pub fn split_census(s: u64, j: u32) -> Result<SplitLevel> {
    if s < 2 {
        bail!(InvalidParameter, "split census needs s >= 2, got {s}");
    }
    let depth = ceil_log2(s);
    if j >= depth {
        bail!(InvalidParameter, "level {j} outside 0..{depth} for s = {s}");
    }
    let width = 1u64 << j;
    let big = s.div_ceil(width);
    // s - 2^j * Q + 2^j is at least 1 because 2^j (Q - 1) < s.
    let big_count = s + width - width * big;
    Ok(SplitLevel {
        level: j,
        big,
        small: big - 1,
        big_count,
        small_count: width - big_count,
    })
}

/// All levels of the dyadic tree for `s >= 2`, root first.
pub fn split_tree(s: u64) -> Result<Vec<SplitLevel>> {
    (0..ceil_log2(s.max(2)))
        .map(|j| split_census(s, j))
        .collect()
}

fn all_integral(values: &[f64]) -> bool {
    values.iter().all(|v| libm::floor(*v) == *v)
}

/// Absolute slack allowed in domain checks and degeneracy tests:
/// zero for integral inputs, `REAL_TOLERANCE * n` otherwise.
fn slack(n: f64, args: &[f64]) -> f64 {
    if all_integral(args) {
        0.0
    } else {
        REAL_TOLERANCE * n.max(1.0)
    }
}

fn check_triple(n: f64, x: f64, y: f64, z: f64, tol: f64) -> Result<()> {
    if ![n, x, y, z].iter().all(|v| v.is_finite()) {
        bail!(Domain, "non-finite argument in ({n}, {x}, {y}, {z})");
    }
    if n <= 0.0 {
        bail!(Domain, "n must be positive, got {n}");
    }
    if y < -tol || z < -tol || y > n + tol || z > n + tol {
        bail!(Domain, "set sizes y = {y}, z = {z} must lie in [0, n = {n}]");
    }
    if x < y.max(z) - tol || x > y + z + tol || x > n + tol {
        bail!(
            Domain,
            "union size x = {x} must lie in [max(y, z), min(y + z, n)] for y = {y}, z = {z}, n = {n}"
        );
    }
    Ok(())
}

fn clamp01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Large-deviation exponent of one two-set union:
/// `psi_n(x, y, z) = y H((x - z)/y) + (n - y) H((x - y)/(n - y)) - n H(z/n)`.
///
/// `y` and `z` are the sizes of the two sets, `x` the size of their union.
/// Arguments may be real; an entropy term with a zero prefactor is zero.
pub fn psi_n(n: f64, x: f64, y: f64, z: f64) -> Result<f64> {
    let tol = slack(n, &[n, x, y, z]);
    check_triple(n, x, y, z, tol)?;
    Ok(psi_n_unchecked(n, x, y, z))
}

pub(crate) fn psi_n_unchecked(n: f64, x: f64, y: f64, z: f64) -> f64 {
    let first = if y > 0.0 {
        y * entropy_unchecked(clamp01((x - z) / y))
    } else {
        0.0
    };
    let rest = n - y;
    let second = if rest > 0.0 {
        rest * entropy_unchecked(clamp01((x - y) / rest))
    } else {
        0.0
    };
    first + second - n * entropy_unchecked(clamp01(z / n))
}

/// Which closed form of the polynomial prefactor applies to a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiCase {
    /// `max(y, z) < x < y + z` and `x < n`.
    General,
    /// `x = y > z > 0`.
    LeftEqual,
    /// `x = z > y > 0`, the mirror image of `LeftEqual`.
    RightEqual,
    /// `x = y + z` with both sets non-empty and `x < n`.
    Disjoint,
    /// `x = y = z` with `0 < z < n`.
    AllEqual,
    /// Any other triple: an empty or full set, or a union filling all of `n`.
    Boundary,
}

// One binomial factor C(m, j) of the intersection probability, as seen by
// the Stirling bracket. `Exact` means j is 0 or m and the factor equals 1.
enum Factor {
    Exact,
    Stirling(f64),
}

fn factor(m: f64, j: f64, tol: f64) -> Factor {
    if j <= tol || m - j <= tol {
        Factor::Exact
    } else {
        Factor::Stirling(2.0 * PI * j * (m - j) / m)
    }
}

fn factors(n: f64, x: f64, y: f64, z: f64, tol: f64) -> [Factor; 3] {
    [
        factor(y, y + z - x, tol),
        factor(n - y, x - y, tol),
        factor(n, z, tol),
    ]
}

/// Classify a triple for [`pi_poly`]. Equalities are exact on integral input
/// and use a `1e-12` relative tolerance otherwise.
pub fn pi_case(n: f64, x: f64, y: f64, z: f64) -> Result<PiCase> {
    let tol = slack(n, &[n, x, y, z]);
    check_triple(n, x, y, z, tol)?;
    use Factor::{Exact, Stirling};
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    let case = match factors(n, x, y, z, tol) {
        [Stirling(_), Stirling(_), Stirling(_)] => PiCase::General,
        [Stirling(_), Exact, Stirling(_)] if eq(x, y) => PiCase::LeftEqual,
        [Exact, Stirling(_), Stirling(_)] if eq(x, y + z) => PiCase::Disjoint,
        [Exact, Stirling(_), Stirling(_)] if eq(x, z) => PiCase::RightEqual,
        [Exact, Exact, Stirling(_)] if eq(x, y) && eq(x, z) => PiCase::AllEqual,
        _ => PiCase::Boundary,
    };
    Ok(case)
}

/// Polynomial prefactor `pi` with `P_n(x, y, z) <= pi * exp(psi_n(x, y, z))`.
///
/// Obtained by bounding the two numerator binomials from above and the
/// denominator binomial from below with the Stirling bracket. A binomial with
/// nothing to choose is exactly 1 and contributes no polynomial factor.
/// In the four classical cases this reproduces
///
/// * general: `(5/4)^4 sqrt(y z (n-y)(n-z) / (2 pi n (y+z-x)(x-y)(x-z)(n-x)))`
/// * `x = y > z`: `(5/4)^3 sqrt(y (n-z) / (n (y-z)))`
/// * `x = y + z`: `(5/4)^3 sqrt((n-y)(n-z) / (n (n-y-z)))`
/// * `x = y = z`: `(5/4)^2 sqrt(2 pi z (n-z) / n)`
pub fn pi_poly(n: f64, x: f64, y: f64, z: f64) -> Result<f64> {
    let tol = slack(n, &[n, x, y, z]);
    check_triple(n, x, y, z, tol)?;
    let [a, b, c] = factors(n, x, y, z, tol);
    let mut pi = 1.0;
    for upper in [a, b] {
        if let Factor::Stirling(v) = upper {
            pi *= 1.25 / libm::sqrt(v);
        }
    }
    if let Factor::Stirling(v) = c {
        pi *= (25.0 / 16.0) * libm::sqrt(v);
    }
    Ok(pi)
}

/// Table of `ln k!` for `k = 0..=max`, built once and shared by reference.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += libm::log(k as f64);
            table.push(acc);
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    pub fn ln_factorial(&self, k: u64) -> Result<f64> {
        match self.table.get(k as usize) {
            Some(v) => Ok(*v),
            None => bail!(TooLarge, "ln {k}! requested from a table of size {}", self.max()),
        }
    }

    /// `ln C(m, j)`, or `-inf` when `j > m`.
    pub fn ln_choose(&self, m: u64, j: u64) -> Result<f64> {
        if j > m {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.ln_factorial(m)? - self.ln_factorial(j)? - self.ln_factorial(m - j)?)
    }

    /// Logarithm of [`intersect_prob`].
    pub fn ln_intersect_prob(&self, n: u64, b: u64, b1: u64, b2: u64) -> Result<f64> {
        if b1 > n || b2 > n {
            bail!(Domain, "set sizes {b1}, {b2} exceed n = {n}");
        }
        if b < b1.max(b2) || b > b1 + b2 {
            bail!(Domain, "union size {b} outside [max({b1}, {b2}), {b1} + {b2}]");
        }
        if b > n {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.ln_choose(b1, b1 + b2 - b)? + self.ln_choose(n - b1, b - b1)?
            - self.ln_choose(n, b2)?)
    }

    /// See [`intersect_prob`].
    pub fn intersect_prob(&self, n: u64, b: u64, b1: u64, b2: u64) -> Result<f64> {
        Ok(libm::exp(self.ln_intersect_prob(n, b, b1, b2)?))
    }
}

/// Probability that a fixed `b1`-subset and a uniform `b2`-subset of an
/// `n`-set have a union of exactly `b` elements:
/// `C(b1, b1+b2-b) C(n-b1, b-b1) / C(n, b2)`.
///
/// Zero when `b > n`; an error when `b` lies outside `[max(b1,b2), b1+b2]`.
pub fn intersect_prob(n: u64, b: u64, b1: u64, b2: u64) -> Result<f64> {
    LnFactorials::new(n as usize).intersect_prob(n, b, b1, b2)
}

/// Two-sided Stirling bracket around `C(total, chosen)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingBracket {
    pub lower: f64,
    pub upper: f64,
}

/// `ln` of the bracket `(16/25) f <= C(N, Np) <= (5/4) f` with
/// `f = (2 pi p (1-p) N)^(-1/2) exp(N H(p))`, `p = chosen / total`.
pub fn ln_stirling_bounds(total: u64, chosen: u64) -> Result<StirlingBracket> {
    if chosen == 0 || chosen >= total {
        bail!(Domain, "Stirling bracket needs 0 < {chosen} < {total}");
    }
    let big_n = total as f64;
    let p = chosen as f64 / big_n;
    let ln_f = -0.5 * libm::log(2.0 * PI * p * (1.0 - p) * big_n) + big_n * entropy_unchecked(p);
    Ok(StirlingBracket {
        lower: libm::log(16.0 / 25.0) + ln_f,
        upper: libm::log(1.25) + ln_f,
    })
}

/// The bracket of [`ln_stirling_bounds`] on the linear scale.
pub fn stirling_bounds(total: u64, chosen: u64) -> Result<StirlingBracket> {
    let ln = ln_stirling_bounds(total, chosen)?;
    Ok(StirlingBracket {
        lower: libm::exp(ln.lower),
        upper: libm::exp(ln.upper),
    })
}
