//! Multi-threaded drivers over the core routines. Results are merged in
//! canonical order, so they are identical for any thread count.

use expander_core::bounds::{solve_constrained_chain, tail_bound, NeighborChain, TailBound};
use expander_core::matrices::{summarize_trials, trial_neighbor_counts, EnsembleStats, SupportModel};
use expander_core::phase::{check_grid, phase_point, CurveKind, PhaseCurve};
use expander_core::{Error, Result};
use rayon::prelude::*;

/// Runs `f` on a pool with `threads` workers (0 lets rayon decide).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Parallel counterpart of `monte_carlo_neighbors`: trials are independent
/// and their counts are summed exactly.
pub fn monte_carlo_neighbors(n: usize, d: usize, k_grid: &[usize], trials: usize, seed: u64) -> Result<EnsembleStats> {
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("need 1 <= d <= n, got n = {n}, d = {d}")));
    }
    let kmax = k_grid.iter().copied().max().unwrap_or(0);
    let counts: Vec<Vec<usize>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| trial_neighbor_counts(n, d, kmax, seed, t, SupportModel::WithoutReplacement))
        .collect();
    summarize_trials(n, d, seed, k_grid, &counts)
}

/// Parallel counterpart of `phase_curve`.
pub fn phase_curve(grid: &[f64], d: u64, kind: CurveKind, n: u64) -> Result<PhaseCurve> {
    check_grid(grid)?;
    let points = grid
        .par_iter()
        .map(|&delta| phase_point(kind, delta, d, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseCurve { d, n, kind, points })
}

/// `tail_bound` at each `a_s`, in input order, paired with the chain pinned
/// at `a_s` (the bound's own chain when it is constrained).
pub fn tail_bounds(n: u64, d: u64, s: f64, a_values: &[f64]) -> Result<Vec<(TailBound, NeighborChain)>> {
    a_values
        .par_iter()
        .map(|&a| {
            let b = tail_bound(n, d, s, a)?;
            let pinned = if b.constrained { b.chain.clone() } else { solve_constrained_chain(n, d, s, a)? };
            Ok((b, pinned))
        })
        .collect()
}
