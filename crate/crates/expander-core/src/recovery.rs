//! Sparse recovery from `y = A x` with SE/SSE matrices: Expander Recovery
//! (ER) and Sequential Sparse Matching Pursuit (SSMP).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::matrices::SparseMatrix;

const GAP_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Outcome of a recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub estimate: Vec<f64>,
    /// ER: coordinate updates. SSMP: accepted inner steps.
    pub iterations: usize,
    /// SSMP only: outer (thresholding) rounds performed.
    pub outer_iterations: usize,
    pub converged: bool,
    /// `||y - A x_hat||_1` for the returned estimate.
    pub residual_l1: f64,
}

impl Recovery {
    pub fn support_size(&self) -> usize {
        self.estimate.iter().filter(|v| **v != 0.0).count()
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn check_y(m: &SparseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != m.n() {
        return Err(Error::DimensionMismatch { expected: m.n(), found: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        bail!(InvalidParameter, "measurements must be finite");
    }
    Ok(())
}

/// Gaps `g = y - A x_hat`.
pub fn gaps(m: &SparseMatrix, x_hat: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_y(m, y)?;
    let ax = m.mul_vec(x_hat)?;
    Ok(y.iter().zip(&ax).map(|(a, b)| a - b).collect())
}

/// Keeps the `k` largest-magnitude entries; ties go to the lower index.
pub fn hard_threshold(x: &[f64], k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if order.len() <= k {
        return x.to_vec();
    }
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; x.len()];
    for &i in &order[..k] {
        out[i] = x[i];
    }
    out
}

/// Minimiser of `||r - z a||_1` over `z`, where column `a` has the given
/// rows and `+-1` values. Returns `(z, ||r - z a||_1)`.
///
/// `z` is a median of the sign-adjusted residuals `r_i a_i`; when the
/// median interval is not a single point the point closest to zero is used.
pub fn best_increment(residual: &[f64], rows: &[usize], values: &[i8]) -> (f64, f64) {
    increment_on(residual, rows, values, l1(residual))
}

fn increment_on(residual: &[f64], rows: &[usize], values: &[i8], total: f64) -> (f64, f64) {
    if rows.is_empty() {
        return (0.0, total);
    }
    let mut w: Vec<f64> = rows
        .iter()
        .zip(values)
        .map(|(&r, &v)| residual[r] * v as f64)
        .collect();
    w.sort_by(f64::total_cmp);
    let len = w.len();
    let z = if len % 2 == 1 {
        w[len / 2]
    } else {
        let (a, b) = (w[len / 2 - 1], w[len / 2]);
        if a <= 0.0 && b >= 0.0 {
            0.0
        } else if a > 0.0 {
            a
        } else {
            b
        }
    };
    let before: f64 = w.iter().map(|v| v.abs()).sum();
    let after: f64 = w.iter().map(|v| (v - z).abs()).sum();
    (z, total - before + after)
}

/// How ER elects a coordinate among those whose gaps agree often enough.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErRule {
    /// The lowest-index qualifying column.
    LowestIndex,
    /// The qualifying column with the most agreeing gaps, then lowest index.
    #[default]
    MostVotes,
}

fn gaps_equal(a: f64, b: f64, exact: bool) -> bool {
    if exact {
        a == b
    } else {
        (a - b).abs() <= GAP_RELATIVE_TOLERANCE * a.abs().max(b.abs())
    }
}

// Most frequent nonzero value among `w` (sorted in place), with its count.
// Count ties go to the smaller value.
fn modal_gap(w: &mut [f64], exact: bool) -> Option<(f64, usize)> {
    w.sort_by(f64::total_cmp);
    let mut best: Option<(f64, usize)> = None;
    let mut i = 0;
    while i < w.len() {
        let mut j = i + 1;
        while j < w.len() && gaps_equal(w[i], w[j], exact) {
            j += 1;
        }
        let value = w[i + (j - i) / 2];
        if value != 0.0 && best.is_none_or(|(_, c)| j - i > c) {
            best = Some((value, j - i));
        }
        i = j;
    }
    best
}

/// Expander Recovery.
///
/// Repeatedly picks a column whose sign-adjusted gaps `g_i a_ij` share one
/// nonzero value on at least `(1 - 2 eps) d` of its rows and adds that value
/// to the estimate. Stops when all gaps vanish, when no column qualifies
/// (stall), or after `2k` updates. Gap values are compared exactly when `y`
/// is integral and to a relative `1e-9` otherwise.
pub fn er_recover(m: &SparseMatrix, y: &[f64], k: usize, eps: f64, rule: ErRule) -> Result<Recovery> {
    check_y(m, y)?;
    if k == 0 {
        bail!(InvalidParameter, "target sparsity must be at least 1");
    }
    if !(0.0..0.5).contains(&eps) {
        bail!(InvalidParameter, "epsilon must lie in [0, 1/2), got {eps}");
    }
    let exact = y.iter().all(|v| libm::floor(*v) == *v);
    let need = (1.0 - 2.0 * eps) * m.d() as f64;
    let mut x = vec![0.0; m.num_cols()];
    let mut g = y.to_vec();
    let mut iterations = 0;
    let mut buf = Vec::with_capacity(m.d());

    let settled = |g: &[f64]| g.iter().all(|v| *v == 0.0);
    while !settled(&g) && iterations < 2 * k {
        let mut pick: Option<(usize, f64, usize)> = None;
        for j in 0..m.num_cols() {
            buf.clear();
            buf.extend(m.column(j).map(|(r, v)| g[r] * v));
            let Some((value, count)) = modal_gap(&mut buf, exact) else { continue };
            if (count as f64) + GAP_RELATIVE_TOLERANCE < need {
                continue;
            }
            match rule {
                ErRule::LowestIndex => {
                    pick = Some((j, value, count));
                    break;
                }
                ErRule::MostVotes => {
                    if pick.is_none_or(|(_, _, c)| count > c) {
                        pick = Some((j, value, count));
                    }
                }
            }
        }
        let Some((j, value, _)) = pick else { break };
        x[j] += value;
        for (r, v) in m.column(j) {
            g[r] -= value * v;
            if !exact && g[r].abs() <= GAP_RELATIVE_TOLERANCE * value.abs() {
                g[r] = 0.0;
            }
        }
        iterations += 1;
    }
    let residual_l1 = l1(&g);
    Ok(Recovery {
        converged: settled(&g),
        estimate: x,
        iterations,
        outer_iterations: 0,
        residual_l1,
    })
}

/// Tuning for [`ssmp_recover`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmpParams {
    /// Inner updates per round are `(c - 1) k`; `c >= 2`.
    pub c: usize,
    /// Number of thresholding rounds; `None` picks
    /// `max(1, ceil(ln(||y||_1 / max(eta, 1e-12))))`.
    pub outer: Option<usize>,
    /// Noise level `||e||_1`.
    pub eta: f64,
}

impl Default for SsmpParams {
    fn default() -> Self {
        Self { c: 2, outer: None, eta: 0.0 }
    }
}

/// Default round count for measurements `y` and noise level `eta`.
pub fn ssmp_auto_rounds(y: &[f64], eta: f64) -> usize {
    let ratio = l1(y) / eta.max(1e-12);
    if ratio <= 1.0 {
        return 1;
    }
    (libm::ceil(libm::log(ratio)) as usize).max(1)
}

/// Sequential Sparse Matching Pursuit.
///
/// Each round makes up to `(c - 1) k` greedy updates, every one choosing the
/// coordinate and increment with the largest drop in `||y - A x||_1`
/// (lowest index on ties), then hard-thresholds to `k` entries.
pub fn ssmp_recover(m: &SparseMatrix, y: &[f64], k: usize, params: SsmpParams) -> Result<Recovery> {
    check_y(m, y)?;
    if k == 0 {
        bail!(InvalidParameter, "target sparsity must be at least 1");
    }
    if params.c < 2 {
        bail!(InvalidParameter, "expansion factor c must be at least 2, got {}", params.c);
    }
    if !(params.eta >= 0.0 && params.eta.is_finite()) {
        bail!(InvalidParameter, "noise level must be non-negative, got {}", params.eta);
    }
    let rounds = params.outer.unwrap_or_else(|| ssmp_auto_rounds(y, params.eta));
    let mut x = vec![0.0; m.num_cols()];
    let mut r = y.to_vec();
    let mut total = l1(&r);
    let mut iterations = 0;
    let mut outer = 0;

    while outer < rounds && total > 0.0 {
        outer += 1;
        let before = x.clone();
        for _ in 0..(params.c - 1) * k {
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..m.num_cols() {
                let (z, after) = increment_on(&r, m.column_rows(j), m.column_values(j), total);
                if z != 0.0 && after < total && best.is_none_or(|(_, _, b)| after < b) {
                    best = Some((j, z, after));
                }
            }
            let Some((j, z, _)) = best else { break };
            x[j] += z;
            for (row, v) in m.column(j) {
                r[row] -= z * v;
            }
            total = l1(&r);
            iterations += 1;
            if total == 0.0 {
                break;
            }
        }
        x = hard_threshold(&x, k);
        r = gaps(m, &x, y)?;
        total = l1(&r);
        if x == before {
            break;
        }
    }
    Ok(Recovery {
        converged: total <= 1e-12 * l1(y).max(1.0),
        estimate: x,
        iterations,
        outer_iterations: outer,
        residual_l1: total,
    })
}
