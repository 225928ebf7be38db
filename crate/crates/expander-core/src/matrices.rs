//! Random sparse binary (SE) and signed (SSE) matrices, neighbour sets,
//! ensemble statistics and small exact oracles.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::expected_neighbors;
use crate::error::{bail, Error, Result};
use crate::splitmodel::LnFactorials;

/// How the row indices of one column are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportModel {
    /// `d` distinct rows, uniform over `d`-subsets.
    #[default]
    WithoutReplacement,
    /// `d` independent uniform rows, duplicates merged; columns may end up
    /// with fewer than `d` nonzeros.
    WithReplacement,
}

/// Column-major `n x N` matrix with at most `d` nonzeros per column, all of
/// value `1` (SE) or `+-1` (SSE). Row indices within a column are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    n: usize,
    d: usize,
    signed: bool,
    seed: u64,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<i8>,
}

impl SparseMatrix {
    /// Builds a matrix from explicit columns of `(row, value)` pairs.
    ///
    /// Each column must have distinct rows below `n`, at most `d` of them,
    /// and values `+-1` (only `1` unless `signed`). Rows are sorted here.
    pub fn from_columns(
        n: usize,
        d: usize,
        signed: bool,
        seed: u64,
        columns: Vec<Vec<(usize, i8)>>,
    ) -> Result<Self> {
        if d == 0 || d > n {
            bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
        }
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut rows = Vec::with_capacity(columns.len() * d);
        let mut vals = Vec::with_capacity(columns.len() * d);
        col_ptr.push(0);
        for (j, mut col) in columns.into_iter().enumerate() {
            if col.is_empty() || col.len() > d {
                bail!(InvalidParameter, "column {j} has {} entries, expected 1..={d}", col.len());
            }
            col.sort_unstable_by_key(|e| e.0);
            for (k, &(r, v)) in col.iter().enumerate() {
                if r >= n {
                    bail!(InvalidParameter, "column {j}: row {r} out of range for n = {n}");
                }
                if k > 0 && col[k - 1].0 == r {
                    bail!(InvalidParameter, "column {j}: row {r} repeated");
                }
                if !(v == 1 || (signed && v == -1)) {
                    bail!(InvalidParameter, "column {j}: value {v} not allowed");
                }
                rows.push(r);
                vals.push(v);
            }
            col_ptr.push(rows.len());
        }
        Ok(Self { n, d, signed, seed, col_ptr, rows, vals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns `N`.
    pub fn num_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted row indices of column `j`.
    pub fn column_rows(&self, j: usize) -> &[usize] {
        &self.rows[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// Values matching [`column_rows`](Self::column_rows).
    pub fn column_values(&self, j: usize) -> &[i8] {
        &self.vals[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.column_rows(j)
            .iter()
            .zip(self.column_values(j))
            .map(|(&r, &v)| (r, v as f64))
    }

    /// `A x` for a dense `x` of length `N`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.num_cols() {
            return Err(Error::DimensionMismatch { expected: self.num_cols(), found: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (r, v) in self.column(j) {
                    y[r] += v * xj;
                }
            }
        }
        Ok(y)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one column of one trial. Every `(seed, trial, column)`
/// triple gets its own ChaCha8 stream, so columns and trials can be drawn in
/// any order or in parallel.
pub fn column_rng(seed: u64, trial: u64, column: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)));
    rng.set_stream(column);
    rng
}

/// Uniform `d`-subset of `0..n` (Floyd's algorithm), sorted.
pub fn floyd_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(d);
    for j in n - d..n {
        let t = rng.random_range(0..=j);
        let pick = match out.binary_search(&t) {
            Ok(_) => j,
            Err(_) => t,
        };
        // j is larger than everything drawn so far.
        let pos = out.binary_search(&pick).unwrap_err();
        out.insert(pos, pick);
    }
    out
}

/// Row support of one column under `model`, sorted and distinct.
pub fn sample_support<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    model: SupportModel,
) -> Vec<usize> {
    match model {
        SupportModel::WithoutReplacement => floyd_sample(rng, n, d),
        SupportModel::WithReplacement => {
            let mut rows: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();
            rows.sort_unstable();
            rows.dedup();
            rows
        }
    }
}

fn random_column(
    n: usize,
    d: usize,
    signed: bool,
    model: SupportModel,
    seed: u64,
    trial: u64,
    j: usize,
) -> Vec<(usize, i8)> {
    let mut rng = column_rng(seed, trial, j as u64);
    let support = sample_support(&mut rng, n, d, model);
    support
        .into_iter()
        .map(|r| {
            let v = if signed && rng.random::<bool>() { -1 } else { 1 };
            (r, v)
        })
        .collect()
}

/// Random SE (`signed = false`) or SSE matrix with `d`-subset supports.
/// Deterministic in all arguments.
pub fn generate(n: usize, num_cols: usize, d: usize, signed: bool, seed: u64) -> Result<SparseMatrix> {
    generate_with(n, num_cols, d, signed, seed, SupportModel::WithoutReplacement)
}

pub fn generate_with(
    n: usize,
    num_cols: usize,
    d: usize,
    signed: bool,
    seed: u64,
    model: SupportModel,
) -> Result<SparseMatrix> {
    if d == 0 || d > n {
        bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
    }
    let columns = (0..num_cols)
        .map(|j| random_column(n, d, signed, model, seed, 0, j))
        .collect();
    SparseMatrix::from_columns(n, d, signed, seed, columns)
}

fn check_set(m: &SparseMatrix, set: &[usize]) -> Result<()> {
    if let Some(&j) = set.iter().find(|&&j| j >= m.num_cols()) {
        bail!(InvalidParameter, "column {j} out of range for N = {}", m.num_cols());
    }
    Ok(())
}

/// `|A_S|`: number of rows with a nonzero in at least one column of `set`.
/// Repeated indices count once.
pub fn neighbor_count(m: &SparseMatrix, set: &[usize]) -> Result<usize> {
    check_set(m, set)?;
    let mut hit = vec![false; m.n()];
    let mut count = 0;
    for &j in set {
        for &r in m.column_rows(j) {
            if !hit[r] {
                hit[r] = true;
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `|A_S| / |S|`.
pub fn expansion(m: &SparseMatrix, set: &[usize]) -> Result<f64> {
    if set.is_empty() {
        bail!(InvalidParameter, "expansion of an empty set");
    }
    Ok(neighbor_count(m, set)? as f64 / set.len() as f64)
}

/// Largest column count accepted by [`is_expander_on`].
pub const MAX_CERTIFY_COLUMNS: usize = 24;

const CERTIFY_TOLERANCE: f64 = 1e-9;

struct Certifier<'a> {
    m: &'a SparseMatrix,
    k: usize,
    per_column: f64,
    row_count: Vec<u32>,
}

impl Certifier<'_> {
    // Extends the current set (of `size` columns covering `covered` rows) by
    // columns `start..`; false as soon as some set falls short.
    fn dfs(&mut self, start: usize, size: usize, covered: usize) -> bool {
        for j in start..self.m.num_cols() {
            let mut c = covered;
            for &r in self.m.column_rows(j) {
                if self.row_count[r] == 0 {
                    c += 1;
                }
                self.row_count[r] += 1;
            }
            let ok = c as f64 + CERTIFY_TOLERANCE >= self.per_column * (size + 1) as f64
                && (size + 1 == self.k || self.dfs(j + 1, size + 1, c));
            for &r in self.m.column_rows(j) {
                self.row_count[r] -= 1;
            }
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Exhaustive check that every set of at most `k` columns has at least
/// `(1 - eps) d |X|` neighbours. Limited to `N <= 24`.
pub fn is_expander_on(m: &SparseMatrix, k: usize, eps: f64) -> Result<bool> {
    if m.num_cols() > MAX_CERTIFY_COLUMNS {
        bail!(TooLarge, "exhaustive certification limited to N <= {MAX_CERTIFY_COLUMNS}, got {}", m.num_cols());
    }
    if !(0.0..1.0).contains(&eps) {
        bail!(InvalidParameter, "epsilon must lie in [0, 1), got {eps}");
    }
    if k == 0 {
        return Ok(true);
    }
    let mut c = Certifier {
        m,
        k: k.min(m.num_cols()),
        per_column: (1.0 - eps) * m.d() as f64,
        row_count: vec![0; m.n()],
    };
    Ok(c.dfs(0, 0, 0))
}

/// Random matrix that is a certified `(k, d, eps)`-expander, built column by
/// column: a candidate column is kept only if the partial matrix still
/// passes [`is_expander_on`]. Returns `None` after `max_draws` candidates.
///
/// Column `c` of draw `t` comes from `column_rng(seed, t, c)`, so the result
/// is deterministic in the arguments.
#[allow(clippy::too_many_arguments)]
pub fn certified_expander(
    n: usize,
    num_cols: usize,
    d: usize,
    k: usize,
    eps: f64,
    signed: bool,
    seed: u64,
    max_draws: usize,
) -> Result<Option<SparseMatrix>> {
    if num_cols > MAX_CERTIFY_COLUMNS {
        bail!(TooLarge, "exhaustive certification limited to N <= {MAX_CERTIFY_COLUMNS}, got {num_cols}");
    }
    if d == 0 || d > n {
        bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
    }
    let mut columns: Vec<Vec<(usize, i8)>> = Vec::with_capacity(num_cols);
    for draw in 0..max_draws {
        if columns.len() == num_cols {
            break;
        }
        let col = random_column(n, d, signed, SupportModel::WithoutReplacement, seed, draw as u64, columns.len());
        columns.push(col);
        let m = SparseMatrix::from_columns(n, d, signed, seed, columns.clone())?;
        if !is_expander_on(&m, k, eps)? {
            columns.pop();
        }
    }
    if columns.len() < num_cols {
        return Ok(None);
    }
    SparseMatrix::from_columns(n, d, signed, seed, columns).map(Some)
}

/// `||A x||_1 / (d ||x||_1)`.
pub fn rip1_ratio(m: &SparseMatrix, x: &[f64]) -> Result<f64> {
    let norm: f64 = x.iter().map(|v| v.abs()).sum();
    if !(norm > 0.0 && norm.is_finite()) {
        bail!(InvalidParameter, "x must be nonzero and finite");
    }
    let ax = m.mul_vec(x)?;
    Ok(ax.iter().map(|v| v.abs()).sum::<f64>() / (m.d() as f64 * norm))
}

/// Largest `n` accepted by [`exact_union_distribution`].
pub const MAX_EXACT_ROWS: usize = 64;
/// Largest `s` accepted by [`exact_union_distribution`].
pub const MAX_EXACT_SET: usize = 16;

/// Exact law of `|A_s|` for `s` independent uniform `d`-subsets of `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionDistribution {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    /// `pmf[b] = Prob(|A_s| = b)` for `b = 0..=n`.
    pub pmf: Vec<f64>,
}

impl UnionDistribution {
    /// `Prob(|A_s| <= b)`.
    pub fn cdf(&self, b: usize) -> f64 {
        self.pmf[..=b.min(self.n)].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(b, p)| b as f64 * p).sum()
    }

    /// Admissible sizes `d..=min(d s, n)`.
    pub fn range(&self) -> core::ops::RangeInclusive<usize> {
        self.d..=(self.d * self.s).min(self.n)
    }
}

/// Adds one column at a time: from union size `b`, a fresh column with `m`
/// new rows moves it to `b + m` with probability
/// `C(n-b, m) C(b, d-m) / C(n, d)`.
pub fn exact_union_distribution(n: usize, d: usize, s: usize) -> Result<UnionDistribution> {
    if d == 0 || d > n {
        bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
    }
    if s == 0 {
        bail!(InvalidParameter, "need s >= 1");
    }
    if n > MAX_EXACT_ROWS || s > MAX_EXACT_SET {
        bail!(TooLarge, "exact distribution limited to n <= {MAX_EXACT_ROWS}, s <= {MAX_EXACT_SET}");
    }
    let lf = LnFactorials::new(n);
    let mut pmf = vec![0.0; n + 1];
    pmf[d] = 1.0;
    for _ in 1..s {
        let mut next = vec![0.0; n + 1];
        for (b, &p) in pmf.iter().enumerate().skip(d) {
            if p == 0.0 {
                continue;
            }
            for (nb, slot) in next.iter_mut().enumerate().take((b + d).min(n) + 1).skip(b.max(d)) {
                *slot += p * lf.intersect_prob(n as u64, nb as u64, b as u64, d as u64)?;
            }
        }
        pmf = next;
    }
    Ok(UnionDistribution { n, d, s, pmf })
}

/// `|A_k|` for `k = 1..=kmax` over the leading columns of the matrix drawn
/// for `trial` (trial 0 is the matrix [`generate`] returns).
pub fn trial_neighbor_counts(
    n: usize,
    d: usize,
    kmax: usize,
    seed: u64,
    trial: u64,
    model: SupportModel,
) -> Vec<usize> {
    let mut hit = vec![false; n];
    let mut covered = 0;
    let mut out = Vec::with_capacity(kmax);
    for j in 0..kmax {
        let mut rng = column_rng(seed, trial, j as u64);
        for r in sample_support(&mut rng, n, d, model) {
            if !hit[r] {
                hit[r] = true;
                covered += 1;
            }
        }
        out.push(covered);
    }
    out
}

/// Monte-Carlo summary of `|A_k|` at one set size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KStats {
    pub k: usize,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single trial).
    pub std: f64,
    pub min: usize,
    pub max: usize,
    pub expected: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub per_k: Vec<KStats>,
}

/// Folds per-trial counts (as from [`trial_neighbor_counts`], each covering
/// `1..=max(k_grid)`) into statistics for every `k` in `k_grid`.
///
/// Sums are kept in integers, so the result does not depend on trial order.
pub fn summarize_trials(
    n: usize,
    d: usize,
    seed: u64,
    k_grid: &[usize],
    trials: &[Vec<usize>],
) -> Result<EnsembleStats> {
    if trials.is_empty() {
        bail!(InvalidParameter, "need at least one trial");
    }
    let mut per_k = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        if k == 0 || trials.iter().any(|t| t.len() < k) {
            bail!(InvalidParameter, "set size {k} not covered by the trials");
        }
        let (mut sum, mut sumsq) = (0u128, 0u128);
        let (mut lo, mut hi) = (usize::MAX, 0);
        for t in trials {
            let v = t[k - 1];
            sum += v as u128;
            sumsq += (v as u128) * (v as u128);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let m = trials.len() as u128;
        let mean = sum as f64 / m as f64;
        let std = if m > 1 {
            let num = m * sumsq - sum * sum;
            libm::sqrt(num as f64 / (m * (m - 1)) as f64)
        } else {
            0.0
        };
        let expected = expected_neighbors(n as u64, d as u64, k as f64)?;
        per_k.push(KStats {
            k,
            trials: trials.len(),
            mean,
            std,
            min: lo,
            max: hi,
            expected,
            rel_error: (mean - expected).abs() / expected,
        });
    }
    Ok(EnsembleStats { n, d, seed, per_k })
}

/// Sequential Monte Carlo over `trials` independent matrices.
pub fn monte_carlo_neighbors(
    n: usize,
    d: usize,
    k_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    if d == 0 || d > n {
        bail!(InvalidParameter, "need 1 <= d <= n, got n = {n}, d = {d}");
    }
    let kmax = k_grid.iter().copied().max().unwrap_or(0);
    let counts: Vec<Vec<usize>> = (0..trials as u64)
        .map(|t| trial_neighbor_counts(n, d, kmax, seed, t, SupportModel::WithoutReplacement))
        .collect();
    summarize_trials(n, d, seed, k_grid, &counts)
}
