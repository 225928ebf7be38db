//! Tail bounds on the number of neighbours of `s` random columns.
//!
//! The dyadic chain `a_1 = d, a_2, a_4, ..., a_{2^(L-1)}, a_s` (with
//! `L = ceil(log2 s)`) tracks the union size along one path of the splitting
//! tree. Left free, the chain sits at the expected values
//! `a_hat_i = n (1 - (1 - d/n)^i)`. Pinned at a smaller top value it follows
//! the cubic relation
//!
//! ```text
//! a_{2i}^3 - 2 a_i a_{2i}^2 + 2 a_i^2 a_{2i} - a_i^2 a_{4i} = 0
//! ```
//!
//! with the last relation using the top entry `a_s` in place of `a_{4i}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{bail, Error, Result};
use crate::splitmodel::{ceil_log2_real, entropy_unchecked, psi_n_unchecked, REAL_TOLERANCE};

fn check_nd(n: u64, d: u64) -> Result<()> {
    if n == 0 || d == 0 || d > n {
        bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !s.is_finite() || s < 1.0 {
        bail!(InvalidParameter, "column count s must be >= 1, got {s}");
    }
    Ok(())
}

/// Expected number of non-empty rows among `s` independent columns, each with
/// `d` uniformly placed nonzeros: `n (1 - (1 - d/n)^s)`. `s` may be real.
pub fn expected_neighbors(n: u64, d: u64, s: f64) -> Result<f64> {
    check_nd(n, d)?;
    if !s.is_finite() || s < 0.0 {
        bail!(InvalidParameter, "column count must be a non-negative number, got {s}");
    }
    Ok(expected_unchecked(n as f64, d as f64, s))
}

fn expected_unchecked(n: f64, d: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if d >= n {
        return n;
    }
    let v = -n * libm::expm1(s * libm::log1p(-d / n));
    if s >= 1.0 {
        // keep rounding from leaving [d, n]
        v.clamp(d, n)
    } else {
        v
    }
}

/// Union sizes along the dyadic chain for a set of `s` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborChain {
    n: u64,
    d: u64,
    s: f64,
    values: Vec<f64>,
}

impl NeighborChain {
    /// Wraps explicit chain values. Needs `ceil(log2 s) + 1` entries starting
    /// at exactly `d`, each step within `[a_i, min(2 a_i, n)]`.
    pub fn new(n: u64, d: u64, s: f64, values: Vec<f64>) -> Result<Self> {
        check_nd(n, d)?;
        check_s(s)?;
        let want = ceil_log2_real(s) as usize + 1;
        if values.len() != want {
            return Err(Error::DimensionMismatch { expected: want, found: values.len() });
        }
        if values[0] != d as f64 {
            bail!(Domain, "chain must start at d = {d}, got {}", values[0]);
        }
        let chain = Self { n, d, s, values };
        big_psi(&chain)?;
        Ok(chain)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of merges `L` along the chain; there are `L + 1` entries.
    pub fn levels(&self) -> usize {
        self.values.len() - 1
    }

    /// Chain entries `a_1, a_2, ..., a_{2^(L-1)}, a_s`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column counts the entries refer to: `1, 2, ..., 2^(L-1), s`.
    pub fn indices(&self) -> Vec<f64> {
        let l = self.levels();
        (0..l)
            .map(|j| (1u64 << j) as f64)
            .chain(core::iter::once(self.s))
            .collect()
    }

    pub fn top(&self) -> f64 {
        self.values[self.levels()]
    }

    /// Residuals of the cubic relation at every interior entry.
    pub fn residuals(&self) -> Vec<f64> {
        self.values
            .windows(3)
            .map(|w| cubic_residual(w[0], w[1], w[2]))
            .collect()
    }
}

/// `b^3 - 2 a b^2 + 2 a^2 b - a^2 c` for consecutive entries `(a, b, c)`.
pub fn cubic_residual(a: f64, b: f64, c: f64) -> f64 {
    b * b * b - 2.0 * a * b * b + 2.0 * a * a * b - a * a * c
}

/// Chain of expected values `a_hat` (closed form), with `a_1 = d` exactly.
pub fn expected_chain(n: u64, d: u64, s: f64) -> Result<NeighborChain> {
    check_nd(n, d)?;
    check_s(s)?;
    let levels = ceil_log2_real(s) as usize;
    let (nf, df) = (n as f64, d as f64);
    let mut values = Vec::with_capacity(levels + 1);
    values.push(df);
    for j in 1..levels {
        values.push(expected_unchecked(nf, df, (1u64 << j) as f64));
    }
    if levels > 0 {
        values.push(expected_unchecked(nf, df, s));
    }
    Ok(NeighborChain { n, d, s, values })
}

/// Polynomial prefactor `p_max(s, d) = 2 / (25 sqrt(2 pi s^3 d^3))`.
pub fn p_max(s: f64, d: f64) -> Result<f64> {
    if !(s > 0.0 && d > 0.0 && s.is_finite() && d.is_finite()) {
        bail!(InvalidParameter, "p_max needs positive s and d, got s = {s}, d = {d}");
    }
    Ok(2.0 / (25.0 * libm::sqrt(2.0 * PI * s * s * s * d * d * d)))
}

/// Aggregated per-row exponent
/// `Psi = (1/n) [ sum_j (s / 2^(j+1)) psi_n(a_{2^(j+1)}, a_{2^j}, a_{2^j}) + 3 s ln(5 d) ]`,
/// where the last merge uses the top entry `a_s`.
pub fn big_psi(chain: &NeighborChain) -> Result<f64> {
    let nf = chain.n as f64;
    let tol = REAL_TOLERANCE * nf;
    let v = &chain.values;
    for w in v.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi.is_finite() && hi >= lo - tol && hi <= 2.0 * lo + tol && hi <= nf + tol) {
            bail!(
                Domain,
                "chain step {lo} -> {hi} is not a valid union size (n = {})",
                chain.n
            );
        }
    }
    Ok(big_psi_unchecked(chain))
}

fn big_psi_unchecked(chain: &NeighborChain) -> f64 {
    let nf = chain.n as f64;
    let s = chain.s;
    let mut sum = 0.0;
    for (j, w) in chain.values.windows(2).enumerate() {
        let weight = s / (2u64 << j) as f64;
        sum += weight * psi_n_unchecked(nf, w[1], w[0], w[0]);
    }
    (sum + 3.0 * s * libm::log(5.0 * chain.d as f64)) / nf
}

// One forward step of the cubic relation, written through the growth ratio:
// a_{4i} = a_{2i} (1 + ((a_{2i} - a_i) / a_i)^2).
fn forward(prev: f64, cur: f64) -> f64 {
    let r = (cur - prev) / prev;
    cur * (1.0 + r * r)
}

// Propagate from (d, a_2) through `levels` merges. Returns None on
// overshooting n.
fn shoot(d: f64, a2: f64, levels: usize, n: f64, out: &mut Vec<f64>) -> Option<f64> {
    out.clear();
    out.push(d);
    out.push(a2);
    let (mut prev, mut cur) = (d, a2);
    for _ in 1..levels {
        let next = forward(prev, cur);
        if !(next <= n * (1.0 + REAL_TOLERANCE)) {
            return None;
        }
        out.push(next);
        prev = cur;
        cur = next;
    }
    Some(cur)
}

/// Solution of the cubic chain relations with the top entry pinned at `a_s`.
///
/// Shooting on `a_2 in [d, 2d]`: the cubic relation is propagated forward
/// and `a_2` is bisected until the propagated top matches `a_s`. The ends of
/// the interval give the constant chain `a_i = d` and the disjoint chain
/// `a_i = d i`, so any `a_s` between `d` and the disjoint top is reachable.
/// Below `a_hat_s` this is the maximiser used by [`tail_bound`]. The top
/// entry of the returned chain is `a_s` itself.
pub fn solve_constrained_chain(n: u64, d: u64, s: f64, a_s: f64) -> Result<NeighborChain> {
    check_nd(n, d)?;
    check_s(s)?;
    let (nf, df) = (n as f64, d as f64);
    let tol = REAL_TOLERANCE * nf;
    if !a_s.is_finite() || a_s < df - tol {
        bail!(Domain, "a_s = {a_s} is below the single-column size d = {d}");
    }
    if a_s > nf + tol {
        bail!(Domain, "a_s = {a_s} exceeds n = {n}");
    }
    let levels = ceil_log2_real(s) as usize;
    let unreachable = |top: f64| {
        Err(Error::NoBracket(alloc::format!("a_s = {a_s} exceeds the disjoint-chain top {top}")))
    };
    let values = match levels {
        0 => alloc::vec![df],
        1 => {
            if a_s > 2.0 * df * (1.0 + REAL_TOLERANCE) {
                return unreachable(2.0 * df);
            }
            alloc::vec![df, a_s.max(df)]
        }
        _ => {
            let mut buf = Vec::with_capacity(levels + 1);
            let mut lo = df;
            let mut hi = 2.0 * df;
            let mut top_lo = df;
            let mut top_hi = shoot(df, hi, levels, nf, &mut buf).unwrap_or(f64::INFINITY);
            if a_s > top_hi * (1.0 + REAL_TOLERANCE) {
                return unreachable(top_hi);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let top = shoot(df, mid, levels, nf, &mut buf).unwrap_or(f64::INFINITY);
                // Exact arithmetic makes the map increasing; allow rounding noise.
                let slop = 1e-12 * top_hi.min(nf);
                if top < top_lo - slop || top > top_hi + slop {
                    bail!(Infeasible, "shooting map is not monotone near a_2 = {mid}");
                }
                if top < a_s {
                    lo = mid;
                    top_lo = top;
                } else {
                    hi = mid;
                    top_hi = top;
                }
            }
            let a2 = if (a_s - top_lo).abs() <= (top_hi - a_s).abs() { lo } else { hi };
            shoot(df, a2, levels, nf, &mut buf);
            buf.truncate(levels);
            buf.push(a_s);
            buf
        }
    };
    Ok(NeighborChain { n, d, s, values })
}

/// Outcome of [`tail_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailBound {
    pub a_s: f64,
    /// `p_max exp(n Psi)`; may exceed 1 or overflow to infinity.
    pub value: f64,
    pub ln_value: f64,
    /// True when the bound is larger than 1 and says nothing.
    pub vacuous: bool,
    /// True when the chain was pinned below its expected top.
    pub constrained: bool,
    pub chain: NeighborChain,
}

/// Upper bound on `Prob(|A_s| <= a_s)` for `d <= a_s <= min(d s, n)`.
///
/// Uses the constrained chain when `a_s` is below the expected value and the
/// expected chain otherwise. Values above 1 are returned unclipped.
pub fn tail_bound(n: u64, d: u64, s: f64, a_s: f64) -> Result<TailBound> {
    check_nd(n, d)?;
    check_s(s)?;
    let (nf, df) = (n as f64, d as f64);
    let tol = REAL_TOLERANCE * nf;
    if !a_s.is_finite() || a_s < df - tol || a_s > (df * s).min(nf) + tol {
        bail!(Domain, "a_s = {a_s} outside [d, min(d s, n)] = [{d}, {}]", (df * s).min(nf));
    }
    let top_hat = expected_unchecked(nf, df, s);
    let (chain, constrained) = if a_s < top_hat {
        (solve_constrained_chain(n, d, s, a_s)?, true)
    } else {
        (expected_chain(n, d, s)?, false)
    };
    let psi = big_psi(&chain)?;
    let ln_value = libm::log(p_max(s, df)?) + nf * psi;
    let value = libm::exp(ln_value);
    Ok(TailBound {
        a_s,
        value,
        ln_value,
        vacuous: ln_value > 0.0,
        constrained,
        chain,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        bail!(InvalidParameter, "epsilon must lie in (0, 1/2), got {eps}");
    }
    Ok(())
}

/// Tail bound at `a_s = (1 - eps) d s`, the size below which `s` columns
/// fail to expand.
pub fn rip1_tail_bound(n: u64, d: u64, s: f64, eps: f64) -> Result<TailBound> {
    check_nd(n, d)?;
    check_s(s)?;
    check_eps(eps)?;
    let a_s = (1.0 - eps) * d as f64 * s;
    if a_s < d as f64 {
        bail!(Domain, "(1 - eps) s = {} < 1: a single column always expands", (1.0 - eps) * s);
    }
    if a_s > n as f64 {
        bail!(Infeasible, "(1 - eps) d s = {a_s} exceeds n = {n}");
    }
    tail_bound(n, d, s, a_s)
}

/// Exponent `Psi(k, d, eps)` of the expansion failure probability for one
/// set of `k` columns; `k` may be real.
pub fn expansion_psi(n: u64, d: u64, k: f64, eps: f64) -> Result<f64> {
    check_nd(n, d)?;
    check_s(k)?;
    check_eps(eps)?;
    let a_k = (1.0 - eps) * d as f64 * k;
    if a_k < d as f64 || a_k > n as f64 {
        bail!(Domain, "(1 - eps) d k = {a_k} outside [d, n] = [{d}, {n}]");
    }
    let chain = if a_k < expected_unchecked(n as f64, d as f64, k) {
        solve_constrained_chain(n, d, k, a_k)?
    } else {
        expected_chain(n, d, k)?
    };
    big_psi(&chain)
}

/// Union-bound exponent `H(k/N) + (n/N) Psi(k, d, eps)` over all `k`-subsets
/// of `N` columns. Requires `k <= N/2`.
pub fn psi_net(k: f64, n: u64, big_n: f64, d: u64, eps: f64) -> Result<f64> {
    if !(big_n.is_finite() && big_n >= n as f64) {
        bail!(InvalidParameter, "need N >= n, got N = {big_n}, n = {n}");
    }
    if !(k <= 0.5 * big_n) {
        bail!(Regime, "k = {k} exceeds N/2 = {}", 0.5 * big_n);
    }
    let psi = expansion_psi(n, d, k, eps)?;
    Ok(entropy_unchecked(k / big_n) + (n as f64 / big_n) * psi)
}

/// Prefactor of the union bound, `1 / (16 pi k sqrt(d^3 (1 - k/N)))`.
pub fn p_prime_max(big_n: f64, k: f64, d: f64) -> Result<f64> {
    if !(k > 0.0 && k < big_n && d > 0.0) {
        bail!(InvalidParameter, "need 0 < k < N and d > 0, got k = {k}, N = {big_n}, d = {d}");
    }
    Ok(1.0 / (16.0 * PI * k * libm::sqrt(d * d * d * (1.0 - k / big_n))))
}
