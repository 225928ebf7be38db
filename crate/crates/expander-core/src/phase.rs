//! Phase transitions in the `(delta, rho) = (n/N, k/n)` plane.
//!
//! For each `delta` the curve value is the largest `rho` at which the
//! union-bound exponent crosses zero from below. `k = rho n` is treated as a
//! real number throughout.

use alloc::vec::Vec;

use crate::bounds::psi_net;
use crate::error::{bail, Result};
use crate::splitmodel::entropy_unchecked;

/// Number of uniform cells scanned before bisecting.
pub const SCAN_POINTS: usize = 1024;
const MAX_BISECTIONS: usize = 200;
const BRACKET_SHRINK: f64 = 1.0 - 1e-9;

/// Recovery algorithm whose expander requirement defines a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    L1,
    Ssmp,
    Er,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::L1, Algorithm::Ssmp, Algorithm::Er];

    /// Expansion threshold: 1/6 for l1, 1/16 for SSMP, 1/4 for ER.
    pub fn epsilon(self) -> f64 {
        match self {
            Algorithm::L1 => 1.0 / 6.0,
            Algorithm::Ssmp => 1.0 / 16.0,
            Algorithm::Er => 0.25,
        }
    }

    /// Set-size inflation in the underlying theorem: ER needs `2k`-expanders,
    /// SSMP (with `c = 2`) `3k`-expanders.
    pub fn sparsity_factor(self) -> f64 {
        match self {
            Algorithm::L1 => 1.0,
            Algorithm::Ssmp => 3.0,
            Algorithm::Er => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::L1 => "l1",
            Algorithm::Ssmp => "ssmp",
            Algorithm::Er => "er",
        }
    }
}

/// Which exponent a curve zeroes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Dyadic-splitting exponent `H(k/N) + (n/N) Psi(k, d, eps)`.
    Exp { eps: f64 },
    /// Baseline `H(k/N) + (dk/N) H(eps) + (eps dk/N) ln(dk/n)`.
    Bi { eps: f64 },
    /// `Exp` at the algorithm's threshold; with `rescale` the resulting
    /// `rho` is divided by the algorithm's sparsity factor.
    Alg { algorithm: Algorithm, rescale: bool },
}

impl CurveKind {
    pub fn epsilon(self) -> f64 {
        match self {
            CurveKind::Exp { eps } | CurveKind::Bi { eps } => eps,
            CurveKind::Alg { algorithm, .. } => algorithm.epsilon(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Exp { .. } => "exp",
            CurveKind::Bi { .. } => "bi",
            CurveKind::Alg { algorithm, .. } => algorithm.name(),
        }
    }
}

/// How a curve point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootStatus {
    /// Sign change located; `rho` is the root.
    Root,
    /// Exponent positive over the whole bracket; `rho = 0` marker.
    AllPositive,
    /// Exponent negative over the whole bracket; `rho = 1` marker.
    AllNegative,
    /// The exponent could not be evaluated anywhere in the bracket.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub delta: f64,
    pub rho: f64,
    pub status: RootStatus,
    /// Exponent at `rho` (NaN unless `status == Root`).
    pub residual: f64,
}

impl PhasePoint {
    pub fn is_root(&self) -> bool {
        self.status == RootStatus::Root
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub d: u64,
    pub n: u64,
    pub kind: CurveKind,
    pub points: Vec<PhasePoint>,
}

impl PhaseCurve {
    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho).collect()
    }
}

fn validate(delta: f64, d: u64, eps: f64, n: u64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        bail!(InvalidParameter, "delta must lie in (0, 1), got {delta}");
    }
    if !(eps > 0.0 && eps < 0.5) {
        bail!(InvalidParameter, "epsilon must lie in (0, 1/2), got {eps}");
    }
    if d == 0 || d > n || n < 4 {
        bail!(InvalidParameter, "need 1 <= d <= n and n >= 4, got n = {n}, d = {d}");
    }
    Ok(())
}

/// Search interval for `rho`: from `k = 2` up to the first of
/// `rho = 1`, `(1 - eps) d k = n` and `k = N/2`.
pub fn rho_bracket(delta: f64, d: u64, eps: f64, n: u64) -> (f64, f64) {
    let lo = 2.0 / n as f64;
    let hi = 1.0f64.min(1.0 / ((1.0 - eps) * d as f64)).min(0.5 / delta) * BRACKET_SHRINK;
    (lo, hi)
}

/// `H(k/N) + (n/N) Psi(k, d, eps)` at `k = rho n`, `N = n / delta`.
pub fn net_exponent(rho: f64, delta: f64, d: u64, eps: f64, n: u64) -> Result<f64> {
    let nf = n as f64;
    psi_net(rho * nf, n, nf / delta, d, eps)
}

/// Baseline exponent `H(rho delta) + d rho delta H(eps) + eps d rho delta ln(d rho)`.
pub fn bi_exponent(rho: f64, delta: f64, d: u64, eps: f64) -> f64 {
    let df = d as f64;
    let kn = rho * delta;
    entropy_unchecked(kn) + df * kn * entropy_unchecked(eps) + eps * df * kn * libm::log(df * rho)
}

// Largest root of `f` in [lo, hi]: scan for the last cell whose sign goes
// from negative to non-negative, then bisect it down to adjacent floats.
fn largest_root<F>(delta: f64, lo: f64, hi: f64, f: F) -> PhasePoint
where
    F: Fn(f64) -> Option<f64>,
{
    let step = (hi - lo) / SCAN_POINTS as f64;
    let grid = |i: usize| if i == SCAN_POINTS { hi } else { lo + step * i as f64 };
    let values: Vec<Option<f64>> = (0..=SCAN_POINTS).map(|i| f(grid(i))).collect();

    let cell = (0..SCAN_POINTS).rev().find(|&i| {
        matches!((values[i], values[i + 1]), (Some(a), Some(b)) if a < 0.0 && b >= 0.0)
    });
    let Some(i) = cell else {
        let finite: Vec<f64> = values.iter().flatten().copied().collect();
        let (rho, status) = if finite.is_empty() {
            (f64::NAN, RootStatus::Infeasible)
        } else if finite.iter().all(|&v| v < 0.0) {
            (1.0, RootStatus::AllNegative)
        } else if finite.iter().all(|&v| v >= 0.0) {
            (0.0, RootStatus::AllPositive)
        } else {
            // Only positive-to-negative crossings: nothing below is negative.
            (0.0, RootStatus::AllPositive)
        };
        return PhasePoint { delta, rho, status, residual: f64::NAN };
    };

    let (mut a, mut b) = (grid(i), grid(i + 1));
    let (mut fa, mut fb) = (values[i].unwrap(), values[i + 1].unwrap());
    for _ in 0..MAX_BISECTIONS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        match f(m) {
            Some(v) if v < 0.0 => {
                a = m;
                fa = v;
            }
            Some(v) => {
                b = m;
                fb = v;
            }
            None => break,
        }
    }
    let (rho, residual) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    PhasePoint { delta, rho, status: RootStatus::Root, residual }
}

/// Largest `rho` zeroing the dyadic-splitting exponent.
pub fn rho_exp(delta: f64, d: u64, eps: f64, n: u64) -> Result<PhasePoint> {
    validate(delta, d, eps, n)?;
    let (lo, hi) = rho_bracket(delta, d, eps, n);
    if !(lo < hi) {
        return Ok(PhasePoint { delta, rho: f64::NAN, status: RootStatus::Infeasible, residual: f64::NAN });
    }
    Ok(largest_root(delta, lo, hi, |rho| net_exponent(rho, delta, d, eps, n).ok()))
}

/// Largest `rho` zeroing the baseline exponent, on the same bracket as
/// [`rho_exp`].
pub fn rho_exp_bi(delta: f64, d: u64, eps: f64, n: u64) -> Result<PhasePoint> {
    validate(delta, d, eps, n)?;
    let (lo, hi) = rho_bracket(delta, d, eps, n);
    if !(lo < hi) {
        return Ok(PhasePoint { delta, rho: f64::NAN, status: RootStatus::Infeasible, residual: f64::NAN });
    }
    Ok(largest_root(delta, lo, hi, |rho| Some(bi_exponent(rho, delta, d, eps))))
}

/// [`rho_exp`] at the algorithm's threshold, optionally divided by its
/// sparsity factor.
pub fn rho_alg(delta: f64, d: u64, n: u64, algorithm: Algorithm, rescale: bool) -> Result<PhasePoint> {
    let mut p = rho_exp(delta, d, algorithm.epsilon(), n)?;
    if rescale && p.is_root() {
        p.rho /= algorithm.sparsity_factor();
    }
    Ok(p)
}

pub fn phase_point(kind: CurveKind, delta: f64, d: u64, n: u64) -> Result<PhasePoint> {
    match kind {
        CurveKind::Exp { eps } => rho_exp(delta, d, eps, n),
        CurveKind::Bi { eps } => rho_exp_bi(delta, d, eps, n),
        CurveKind::Alg { algorithm, rescale } => rho_alg(delta, d, n, algorithm, rescale),
    }
}

/// Validates a `delta` grid: strictly increasing, inside (0, 1).
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!(InvalidParameter, "empty delta grid");
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        bail!(InvalidParameter, "delta grid must be strictly increasing");
    }
    Ok(())
}

/// Evaluates every grid point in order. Points without a root carry a
/// marker status instead of failing the whole curve.
pub fn phase_curve(grid: &[f64], d: u64, kind: CurveKind, n: u64) -> Result<PhaseCurve> {
    check_grid(grid)?;
    let points = grid
        .iter()
        .map(|&delta| phase_point(kind, delta, d, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseCurve { d, n, kind, points })
}

/// The grid `0.05, 0.10, ..., 0.95`.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[18], 0.95);
    }

    #[test]
    fn log_term_sign() {
        // eps d rho delta ln(d rho) < 0 when d rho < 1
        let with = bi_exponent(0.01, 0.5, 8, 0.25);
        let without = entropy_unchecked(0.005) + 8.0 * 0.005 * entropy_unchecked(0.25);
        assert!(with < without);
    }
}
