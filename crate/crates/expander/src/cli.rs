//! Command-line front end. [`run`] never exits the process; it returns the
//! exit code (0 success, 2 invalid input, 1 internal failure).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use expander_core::matrices::{certified_expander, exact_union_distribution, floyd_sample, generate_with, SupportModel};
use expander_core::phase::{default_grid, Algorithm, CurveKind, PhaseCurve, RootStatus};
use expander_core::recovery::{er_recover, ssmp_recover, ErRule, Recovery, SsmpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csv::{read_rows, Cell, CsvWriter};
use crate::format::{read_matrix, read_vector, write_matrix, write_vector, FormatError};
use crate::parallel;
use crate::parse::parse_ratio;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, parameters or input files.
    #[error("{0}")]
    Invalid(String),
    /// Anything else, e.g. failing to write output.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<expander_core::Error> for CliError {
    fn from(e: expander_core::Error) -> Self {
        match e {
            expander_core::Error::NoBracket(_) => CliError::Internal(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn output_error(e: io::Error) -> CliError {
    CliError::Internal(format!("writing output: {e}"))
}

fn input_error(path: &Path, e: FormatError) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "expander", version, about = "Expander-graph measurement matrices: bounds, phase transitions, recovery")]
pub struct Cli {
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw an SE/SSE matrix and write it in the plain-text format.
    Gen(GenArgs),
    /// Monte-Carlo statistics of |A_k| against the expected value.
    NeighborStats(NeighborArgs),
    /// Tail bound Prob(|A_s| <= a_s) over a sweep of a_s, with the chain
    /// pinned at each a_s.
    Bound(BoundArgs),
    /// Phase-transition curve rho(delta).
    Phase(PhaseArgs),
    /// Recover a sparse vector with ER or SSMP.
    Recover(RecoverArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Without,
    With,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub d: usize,
    /// Random signs (SSE) instead of all ones (SE).
    #[arg(long)]
    pub signed: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "without")]
    pub support: ModelArg,
    /// Keep drawing columns until the matrix is a certified (k, d, eps)-expander.
    #[arg(long)]
    pub certify_k: Option<usize>,
    #[arg(long, value_parser = parse_ratio, default_value = "1/4")]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_draws: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NeighborArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub kmin: usize,
    #[arg(long)]
    pub kmax: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub s: u64,
    /// Smallest a_s in the sweep (default d).
    #[arg(long)]
    pub a_min: Option<u64>,
    /// Largest a_s in the sweep (default min(d s, n)).
    #[arg(long)]
    pub a_max: Option<u64>,
    /// Add the exact tail probability (small n and s only).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Exp,
    Bi,
    L1,
    Ssmp,
    Er,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub n: u64,
    /// Expansion threshold for exp and bi; fixed by the algorithm otherwise.
    #[arg(long, value_parser = parse_ratio)]
    pub eps: Option<f64>,
    /// Divide algorithm curves by their sparsity factor (ER 2, SSMP 3).
    #[arg(long)]
    pub rescale: bool,
    /// Comma-separated delta values (default 0.05, 0.10, ..., 0.95).
    #[arg(long, value_parser = parse_ratio, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// CSV whose first two columns are delta and a value; the value is
    /// passed through as an extra column at matching deltas.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Er,
    Ssmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    LowestIndex,
    MostVotes,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Sparsity level.
    #[arg(long)]
    pub k: usize,
    /// Measurements; without it a k-sparse x is drawn with --seed.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Ground truth for the exact-recovery flag when --y is given.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_ratio, default_value = "1/4")]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "most-votes")]
    pub er_rule: RuleArg,
    #[arg(long, default_value_t = 2)]
    pub c: usize,
    /// SSMP rounds (default from ||y||_1 and eta).
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// CSV of `index,estimate[,truth]`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the measurement vector used (handy with synthesized x).
    #[arg(long)]
    pub save_y: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let invocation = args.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    match dispatch(cli, &invocation, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, invocation: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Gen(a) => cmd_gen(a, stdout),
        Command::NeighborStats(a) => cmd_neighbor_stats(a, threads, invocation, stdout),
        Command::Bound(a) => cmd_bound(a, threads, invocation, stdout),
        Command::Phase(a) => cmd_phase(a, threads, invocation, stdout),
        Command::Recover(a) => cmd_recover(a, invocation, stdout),
    }
}

// Output goes to `path`, or to `stdout` when absent.
fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(stdout),
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn open_in(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn cmd_gen(a: GenArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = match a.support {
        ModelArg::Without => SupportModel::WithoutReplacement,
        ModelArg::With => SupportModel::WithReplacement,
    };
    let m = match a.certify_k {
        None => generate_with(a.n, a.big_n, a.d, a.signed, a.seed, model)?,
        Some(k) => {
            if model != SupportModel::WithoutReplacement {
                return Err(CliError::Invalid("certification uses supports without replacement".into()));
            }
            certified_expander(a.n, a.big_n, a.d, k, a.eps, a.signed, a.seed, a.max_draws)?.ok_or_else(|| {
                CliError::Invalid(format!("no certified expander found within {} draws", a.max_draws))
            })?
        }
    };
    write_matrix(&m, open_out(a.out.as_deref(), stdout)?).map_err(output_error)
}

fn cmd_neighbor_stats(a: NeighborArgs, threads: usize, invocation: &str, stdout: &mut dyn Write) -> CliResult<()> {
    if a.kmin == 0 || a.kmin > a.kmax {
        return Err(CliError::Invalid(format!("need 1 <= kmin <= kmax, got {}..{}", a.kmin, a.kmax)));
    }
    if a.trials == 0 {
        return Err(CliError::Invalid("need at least one trial".into()));
    }
    let grid: Vec<usize> = (a.kmin..=a.kmax).collect();
    let stats = parallel::with_threads(threads, || parallel::monte_carlo_neighbors(a.n, a.d, &grid, a.trials, a.seed))?;
    let mut w = CsvWriter::new(open_out(a.out.as_deref(), stdout)?, invocation, &["k", "mean", "std", "expected", "rel_error"])
        .map_err(output_error)?;
    for s in &stats.per_k {
        w.row(&[s.k.into(), s.mean.into(), s.std.into(), s.expected.into(), s.rel_error.into()])
            .map_err(output_error)?;
    }
    w.finish().map_err(output_error)?;
    Ok(())
}

fn cmd_bound(a: BoundArgs, threads: usize, invocation: &str, stdout: &mut dyn Write) -> CliResult<()> {
    if a.s == 0 || a.d == 0 || a.d > a.n {
        return Err(CliError::Invalid(format!("need s >= 1 and 1 <= d <= n, got n = {}, d = {}, s = {}", a.n, a.d, a.s)));
    }
    let top = (a.d * a.s).min(a.n);
    let lo = a.a_min.unwrap_or(a.d);
    let hi = a.a_max.unwrap_or(top);
    if lo < a.d || hi > top || lo > hi {
        return Err(CliError::Invalid(format!("a_s range must lie in [{}, {top}], got [{lo}, {hi}]", a.d)));
    }
    let a_values: Vec<f64> = (lo..=hi).map(|v| v as f64).collect();
    let bounds = parallel::with_threads(threads, || parallel::tail_bounds(a.n, a.d, a.s as f64, &a_values))?;
    let exact = if a.exact { Some(exact_union_distribution(a.n as usize, a.d as usize, a.s as usize)?) } else { None };

    let chain_names: Vec<String> = bounds[0].1.indices().iter().map(|i| format!("a_{i}")).collect();
    let mut header = vec!["a_s", "bound", "ln_bound", "vacuous", "constrained"];
    if exact.is_some() {
        header.push("exact_tail");
    }
    header.extend(chain_names.iter().map(String::as_str));
    let mut w = CsvWriter::new(open_out(a.out.as_deref(), stdout)?, invocation, &header).map_err(output_error)?;
    for (b, pinned) in &bounds {
        let mut row: Vec<Cell> = vec![b.a_s.into(), b.value.into(), b.ln_value.into(), b.vacuous.into(), b.constrained.into()];
        if let Some(dist) = &exact {
            row.push(dist.cdf(b.a_s as usize).into());
        }
        row.extend(pinned.values().iter().map(|&v| Cell::from(v)));
        w.row(&row).map_err(output_error)?;
    }
    w.finish().map_err(output_error)?;
    Ok(())
}

/// Curve kind for the flags; exp and bi need `--eps`, algorithm curves
/// reject it.
pub fn curve_kind(kind: KindArg, eps: Option<f64>, rescale: bool) -> CliResult<CurveKind> {
    let alg = |algorithm| {
        if eps.is_some() {
            Err(CliError::Invalid("--eps is fixed by the algorithm for l1, ssmp and er".into()))
        } else {
            Ok(CurveKind::Alg { algorithm, rescale })
        }
    };
    let need_eps = || eps.ok_or_else(|| CliError::Invalid("--eps is required for exp and bi".into()));
    if rescale && matches!(kind, KindArg::Exp | KindArg::Bi) {
        return Err(CliError::Invalid("--rescale applies to algorithm curves only".into()));
    }
    match kind {
        KindArg::Exp => Ok(CurveKind::Exp { eps: need_eps()? }),
        KindArg::Bi => Ok(CurveKind::Bi { eps: need_eps()? }),
        KindArg::L1 => alg(Algorithm::L1),
        KindArg::Ssmp => alg(Algorithm::Ssmp),
        KindArg::Er => alg(Algorithm::Er),
    }
}

fn read_overlay(path: &Path) -> CliResult<Vec<(f64, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    read_rows(&text)
        .into_iter()
        .map(|row| {
            let delta = row
                .first()
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| CliError::Invalid(format!("{}: bad delta in row {row:?}", path.display())))?;
            Ok((delta, row.get(1).cloned().unwrap_or_default()))
        })
        .collect()
}

fn status_name(s: RootStatus) -> &'static str {
    match s {
        RootStatus::Root => "root",
        RootStatus::AllPositive => "all_positive",
        RootStatus::AllNegative => "all_negative",
        RootStatus::Infeasible => "infeasible",
    }
}

/// Writes `delta,rho,status[,overlay]`; `rho` is empty where no root exists.
pub fn write_phase_csv<W: Write>(
    out: W,
    invocation: &str,
    curve: &PhaseCurve,
    overlay: Option<&[(f64, String)]>,
) -> io::Result<W> {
    let mut header = vec!["delta", "rho", "status"];
    if overlay.is_some() {
        header.push("overlay");
    }
    let mut w = CsvWriter::new(out, invocation, &header)?;
    for p in &curve.points {
        let rho = if p.is_root() { Cell::Real(p.rho) } else { Cell::Missing };
        let mut row = vec![Cell::Real(p.delta), rho, status_name(p.status).into()];
        if let Some(ov) = overlay {
            let hit = ov.iter().find(|(d, _)| (d - p.delta).abs() <= 1e-12 * p.delta.max(1.0));
            row.push(hit.map_or(Cell::Missing, |(_, v)| Cell::Text(v.clone())));
        }
        w.row(&row)?;
    }
    w.finish()
}

fn cmd_phase(a: PhaseArgs, threads: usize, invocation: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let kind = curve_kind(a.kind, a.eps, a.rescale)?;
    let grid = a.grid.unwrap_or_else(default_grid);
    let overlay = a.overlay.as_deref().map(read_overlay).transpose()?;
    let curve = parallel::with_threads(threads, || parallel::phase_curve(&grid, a.d, kind, a.n))?;
    write_phase_csv(open_out(a.out.as_deref(), stdout)?, invocation, &curve, overlay.as_deref()).map_err(output_error)?;
    Ok(())
}

/// A `k`-sparse vector of length `len` with entries in {-3, ..., 3} \ {0}.
pub fn synthesize_signal(len: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; len];
    for j in floyd_sample(&mut rng, len, k) {
        let mag = rng.random_range(1..=3) as f64;
        x[j] = if rng.random::<bool>() { mag } else { -mag };
    }
    x
}

fn cmd_recover(a: RecoverArgs, invocation: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let m = read_matrix(open_in(&a.matrix)?).map_err(|e| input_error(&a.matrix, e))?;
    if a.k == 0 || a.k > m.num_cols() {
        return Err(CliError::Invalid(format!("need 1 <= k <= N = {}, got {}", m.num_cols(), a.k)));
    }
    let (y, truth) = match &a.y {
        Some(path) => {
            let y = read_vector(open_in(path)?).map_err(|e| input_error(path, e))?;
            let truth = match &a.x {
                Some(p) => Some(read_vector(open_in(p)?).map_err(|e| input_error(p, e))?),
                None => None,
            };
            (y, truth)
        }
        None => {
            let seed = a.seed.ok_or_else(|| CliError::Invalid("--seed is required when x is synthesized".into()))?;
            if a.x.is_some() {
                return Err(CliError::Invalid("--x needs --y".into()));
            }
            let x = synthesize_signal(m.num_cols(), a.k, seed);
            (m.mul_vec(&x)?, Some(x))
        }
    };
    if let Some(x) = &truth {
        if x.len() != m.num_cols() {
            return Err(CliError::Invalid(format!("x has length {}, matrix has {} columns", x.len(), m.num_cols())));
        }
    }
    if let Some(path) = &a.save_y {
        write_vector(&y, create(path)?).map_err(output_error)?;
    }
    let r: Recovery = match a.algo {
        AlgoArg::Er => {
            let rule = match a.er_rule {
                RuleArg::LowestIndex => ErRule::LowestIndex,
                RuleArg::MostVotes => ErRule::MostVotes,
            };
            er_recover(&m, &y, a.k, a.eps, rule)?
        }
        AlgoArg::Ssmp => ssmp_recover(&m, &y, a.k, SsmpParams { c: a.c, outer: a.rounds, eta: a.eta })?,
    };
    let exact = truth.as_ref().map(|x| *x == r.estimate);

    let report = (|| -> io::Result<()> {
        writeln!(stdout, "algorithm: {}", match a.algo { AlgoArg::Er => "er", AlgoArg::Ssmp => "ssmp" })?;
        writeln!(stdout, "converged: {}", r.converged)?;
        writeln!(stdout, "iterations: {}", r.iterations)?;
        if a.algo == AlgoArg::Ssmp {
            writeln!(stdout, "rounds: {}", r.outer_iterations)?;
        }
        writeln!(stdout, "residual_l1: {:e}", r.residual_l1)?;
        writeln!(stdout, "support_size: {}", r.support_size())?;
        match exact {
            Some(e) => writeln!(stdout, "exact: {e}")?,
            None => writeln!(stdout, "exact: unknown")?,
        }
        Ok(())
    })();
    report.map_err(output_error)?;

    if let Some(path) = &a.out {
        let mut header = vec!["index", "estimate"];
        if truth.is_some() {
            header.push("truth");
        }
        let mut w = CsvWriter::new(create(path)?, invocation, &header).map_err(output_error)?;
        for (i, v) in r.estimate.iter().enumerate() {
            let mut row = vec![Cell::from(i), Cell::Real(*v)];
            if let Some(x) = &truth {
                row.push(Cell::Real(x[i]));
            }
            w.row(&row).map_err(output_error)?;
        }
        w.finish().map_err(output_error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn eps_rules_for_kinds() {
        assert!(curve_kind(KindArg::Exp, None, false).is_err());
        assert!(curve_kind(KindArg::Er, Some(0.25), false).is_err());
        assert!(curve_kind(KindArg::Exp, Some(0.25), true).is_err());
        assert_eq!(
            curve_kind(KindArg::Ssmp, None, true).unwrap(),
            CurveKind::Alg { algorithm: Algorithm::Ssmp, rescale: true }
        );
    }
}
