use std::path::Path;
use std::process::Command;

use expander::cli::run;
use expander::csv::read_rows;
use expander::format::{matrix_to_string, read_matrix, read_vector, write_vector};
use expander_core::bounds::expected_neighbors;
use expander_core::matrices::{exact_union_distribution, generate};
use expander_core::phase::rho_exp;
use tempfile::TempDir;

fn run_ok(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("expander").chain(args.iter().copied()), &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    String::from_utf8(out).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    let mut sink = Vec::new();
    let mut err = Vec::new();
    run(std::iter::once("expander").chain(args.iter().copied()), &mut sink, &mut err)
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_expander")).args(args).output().unwrap()
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_round_trips_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.txt"), p(&dir, "b.txt"));
    for f in [&a, &b] {
        run_ok(&["gen", "--n", "1024", "--N", "4096", "--d", "8", "--seed", "7", "--out", f]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let m = read_matrix(text.as_bytes()).unwrap();
    assert_eq!(m, generate(1024, 4096, 8, false, 7).unwrap());
    assert_eq!(matrix_to_string(&m), text);
    // stdout and file output agree
    assert_eq!(run_ok(&["gen", "--n", "1024", "--N", "4096", "--d", "8", "--seed", "7"]), text);
    assert!(text.starts_with("1024 4096 8 0 7\n"));
}

#[test]
fn gen_signed_round_trip() {
    let text = run_ok(&["gen", "--n", "50", "--N", "30", "--d", "5", "--signed", "--seed", "3"]);
    let m = read_matrix(text.as_bytes()).unwrap();
    assert!(m.signed());
    assert_eq!(m, generate(50, 30, 5, true, 3).unwrap());
}

#[test]
fn gen_certified() {
    let text = run_ok(&["gen", "--n", "24", "--N", "12", "--d", "4", "--seed", "6", "--certify-k", "3", "--eps", "1/5"]);
    let m = read_matrix(text.as_bytes()).unwrap();
    assert!(expander_core::matrices::is_expander_on(&m, 3, 0.2).unwrap());
}

#[test]
fn exit_codes() {
    let out = bin(&["gen", "--d", "9", "--n", "8", "--N", "4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d <= n"));
    // seed is mandatory for stochastic commands
    assert_eq!(bin(&["gen", "--n", "8", "--N", "4", "--d", "2"]).status.code(), Some(2));
    assert_eq!(bin(&["neighbor-stats", "--n", "8", "--d", "2", "--kmax", "3", "--trials", "2"]).status.code(), Some(2));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    assert_eq!(bin(&["phase", "--kind", "exp", "--d", "8", "--n", "1024"]).status.code(), Some(2));
    assert_eq!(bin(&["phase", "--kind", "exp", "--d", "8", "--n", "1024", "--eps", "1/2"]).status.code(), Some(2));
    // unwritable output is an internal failure
    assert_eq!(
        exit_code(&["gen", "--n", "8", "--N", "4", "--d", "2", "--seed", "1", "--out", "/nonexistent/dir/m.txt"]),
        1
    );
}

#[test]
fn csv_header_comment_records_invocation() {
    let text = run_ok(&["neighbor-stats", "--n", "64", "--d", "4", "--kmax", "3", "--trials", "5", "--seed", "2"]);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(&format!("# expander {}", env!("CARGO_PKG_VERSION"))));
    assert!(first.ends_with("neighbor-stats --n 64 --d 4 --kmax 3 --trials 5 --seed 2"));
    assert_eq!(text.lines().nth(1).unwrap(), "k,mean,std,expected,rel_error");
}

#[test]
fn neighbor_stats_single_k() {
    let text = run_ok(&["neighbor-stats", "--n", "1024", "--d", "8", "--kmax", "1", "--trials", "50", "--seed", "1"]);
    let rows = read_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1");
    assert_eq!(num(&rows[0][1]), 8.0);
    assert_eq!(num(&rows[0][2]), 0.0);
}

#[test]
fn neighbor_stats_matches_exact_mean_on_small_instance() {
    let text = run_ok(&["neighbor-stats", "--n", "12", "--d", "3", "--kmax", "5", "--trials", "20000", "--seed", "4"]);
    let rows = read_rows(&text);
    assert_eq!(rows.len(), 5);
    for row in rows {
        let k: usize = row[0].parse().unwrap();
        let (mean, std) = (num(&row[1]), num(&row[2]));
        let dist = exact_union_distribution(12, 3, k).unwrap();
        assert!((mean - dist.mean()).abs() < 5.0 * std / (20000f64).sqrt() + 1e-12, "k={k}");
        assert!((num(&row[3]) - dist.mean()).abs() < 1e-10);
    }
}

#[test]
fn neighbor_stats_independent_of_threads() {
    let base = ["neighbor-stats", "--n", "256", "--d", "4", "--kmax", "40", "--trials", "64", "--seed", "9"];
    let one = run_ok(&[&base[..], &["--threads", "1"]].concat());
    let many = run_ok(&[&base[..], &["--threads", "5"]].concat());
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&one), body(&many));
}

#[test]
fn bound_sweep_monotone_below_expected() {
    let text = run_ok(&["bound", "--n", "1024", "--d", "8", "--s", "16"]);
    let header = text.lines().nth(1).unwrap();
    assert_eq!(header, "a_s,bound,ln_bound,vacuous,constrained,a_1,a_2,a_4,a_8,a_16");
    let rows = read_rows(&text);
    assert_eq!(rows.len(), 128 - 8 + 1);
    let a_hat = expected_neighbors(1024, 8, 16.0).unwrap();
    let below: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (num(&r[0]), num(&r[2])))
        .filter(|(a, _)| *a < a_hat)
        .collect();
    assert!(below.len() > 100);
    for w in below.windows(2) {
        assert!(w[0].1 <= w[1].1, "{:?}", w);
    }
    // a_s = d s: every pair of columns disjoint
    let last = rows.last().unwrap();
    assert_eq!(num(&last[0]), 128.0);
    let chain: Vec<f64> = last[5..].iter().map(|c| num(c)).collect();
    assert_eq!(chain, [8.0, 16.0, 32.0, 64.0, 128.0]);
    assert!(rows.iter().all(|r| r[3] == "0" || num(&r[1]) > 1.0 || r[1].is_empty()));
}

#[test]
fn bound_dominates_exact_tail() {
    let text = run_ok(&["bound", "--n", "16", "--d", "3", "--s", "5", "--exact"]);
    let rows = read_rows(&text);
    assert_eq!(rows.len(), 15 - 3 + 1);
    for r in rows {
        let exact = num(&r[5]);
        let bound = num(&r[1]);
        assert!(bound >= exact, "a_s {}: {bound} < {exact}", r[0]);
    }
    assert_eq!(exit_code(&["bound", "--n", "16", "--d", "3", "--s", "5", "--a-max", "16"]), 2);
}

#[test]
fn phase_exp_matches_core() {
    let text = run_ok(&["phase", "--kind", "exp", "--d", "8", "--eps", "0.25", "--n", "1024"]);
    let rows = read_rows(&text);
    assert_eq!(rows.len(), 19);
    for r in &rows {
        let delta = num(&r[0]);
        let pt = rho_exp(delta, 8, 0.25, 1024).unwrap();
        if pt.is_root() {
            assert_eq!(num(&r[1]), pt.rho);
            assert_eq!(r[2], "root");
        } else {
            assert!(r[1].is_empty());
        }
    }
    // fraction and decimal give the same thresholds
    let frac = run_ok(&["phase", "--kind", "exp", "--d", "8", "--eps", "1/4", "--n", "1024"]);
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&text), body(&frac));
}

#[test]
fn phase_markers_are_empty_cells() {
    let text = run_ok(&["phase", "--kind", "exp", "--d", "8", "--eps", "1/16", "--n", "1024", "--grid", "0.5"]);
    assert_eq!(read_rows(&text), vec![vec!["5.0000000000000000e-1".to_string(), String::new(), "all_positive".into()]]);
}

#[test]
fn phase_bi_and_exp_side_by_side() {
    let args = |kind: &str| {
        run_ok(&["phase", "--kind", kind, "--d", "8", "--eps", "1/4", "--n", "1048576", "--grid", "0.1,0.5,0.9"])
    };
    let (bi, exp) = (read_rows(&args("bi")), read_rows(&args("exp")));
    assert_eq!(bi.len(), 3);
    assert_eq!(exp.len(), 3);
    for (b, e) in bi.iter().zip(&exp) {
        assert_eq!(b[0], e[0]);
        assert_eq!(b[2], "root");
    }
}

#[test]
fn algorithm_curves_ordered() {
    let rho = |kind: &str| -> Vec<f64> {
        read_rows(&run_ok(&["phase", "--kind", kind, "--d", "8", "--n", "1024"]))
            .iter()
            .map(|r| if r[1].is_empty() { 0.0 } else { num(&r[1]) })
            .collect()
    };
    let (er, l1, ssmp) = (rho("er"), rho("l1"), rho("ssmp"));
    for i in 0..er.len() {
        assert!(er[i] >= l1[i] && l1[i] >= ssmp[i]);
    }
    assert!(er.iter().any(|v| *v > 0.0));
}

#[test]
fn phase_overlay_passes_through() {
    let dir = TempDir::new().unwrap();
    let ov = p(&dir, "ov.csv");
    std::fs::write(&ov, "# digitised\ndelta,rho\n0.1,0.002\n0.5,0.0021\n").unwrap();
    let text = run_ok(&["phase", "--kind", "er", "--d", "8", "--n", "1024", "--grid", "0.1,0.3,0.5", "--overlay", &ov]);
    assert_eq!(text.lines().nth(1).unwrap(), "delta,rho,status,overlay");
    let rows = read_rows(&text);
    assert_eq!(rows[0][3], "0.002");
    assert_eq!(rows[1][3], "");
    assert_eq!(rows[2][3], "0.0021");
}

fn write_certified(dir: &TempDir, signed: bool) -> String {
    let path = p(dir, "m.txt");
    let mut args = vec!["gen", "--n", "24", "--N", "12", "--d", "4", "--seed", "6", "--certify-k", "3", "--eps", "1/5", "--out", &path];
    if signed {
        args.push("--signed");
    }
    run_ok(&args);
    path
}

#[test]
fn recover_synthesized_one_sparse_er() {
    let dir = TempDir::new().unwrap();
    let m = p(&dir, "m.txt");
    run_ok(&["gen", "--n", "200", "--N", "50", "--d", "6", "--seed", "5", "--out", &m]);
    let out_csv = p(&dir, "x.csv");
    let report = run_ok(&["recover", "--algo", "er", "--matrix", &m, "--k", "1", "--seed", "11", "--out", &out_csv]);
    assert!(report.contains("exact: true"), "{report}");
    assert!(report.contains("iterations: 1\n"));
    assert!(report.contains("converged: true"));
    let rows = read_rows(&std::fs::read_to_string(&out_csv).unwrap());
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r[1] == r[2]));
}

#[test]
fn recover_certified_ssmp_from_files() {
    let dir = TempDir::new().unwrap();
    let m_path = write_certified(&dir, true);
    let m = read_matrix(std::fs::read_to_string(&m_path).unwrap().as_bytes()).unwrap();
    let mut x = vec![0.0; 12];
    x[2] = 2.0;
    x[9] = -1.0;
    let y = m.mul_vec(&x).unwrap();
    let (xp, yp) = (p(&dir, "x.vec"), p(&dir, "y.vec"));
    write_vector(&x, std::fs::File::create(&xp).unwrap()).unwrap();
    write_vector(&y, std::fs::File::create(&yp).unwrap()).unwrap();
    let report = run_ok(&["recover", "--algo", "ssmp", "--matrix", &m_path, "--k", "2", "--y", &yp, "--x", &xp]);
    assert!(report.contains("exact: true"), "{report}");
    assert!(report.contains("residual_l1: 0e0"));
    let report = run_ok(&["recover", "--algo", "er", "--matrix", &m_path, "--k", "2", "--y", &yp, "--eps", "1/5"]);
    assert!(report.contains("exact: unknown") && report.contains("converged: true"));
}

#[test]
fn recover_validation() {
    let dir = TempDir::new().unwrap();
    let m = write_certified(&dir, false);
    let yp = p(&dir, "y.vec");
    write_vector(&[1.0; 23], std::fs::File::create(&yp).unwrap()).unwrap();
    assert_eq!(exit_code(&["recover", "--algo", "er", "--matrix", &m, "--k", "1", "--y", &yp]), 2);
    assert_eq!(exit_code(&["recover", "--algo", "er", "--matrix", &m, "--k", "1"]), 2);
    assert_eq!(exit_code(&["recover", "--algo", "er", "--matrix", "/no/such/file", "--k", "1", "--seed", "1"]), 2);
    assert_eq!(exit_code(&["recover", "--algo", "ssmp", "--matrix", &m, "--k", "1", "--seed", "1", "--c", "1"]), 2);
}

#[test]
fn recover_saves_measurements() {
    let dir = TempDir::new().unwrap();
    let m_path = write_certified(&dir, false);
    let yp = p(&dir, "y.vec");
    run_ok(&["recover", "--algo", "ssmp", "--matrix", &m_path, "--k", "2", "--seed", "3", "--save-y", &yp]);
    let y = read_vector(std::fs::read_to_string(Path::new(&yp)).unwrap().as_bytes()).unwrap();
    assert_eq!(y.len(), 24);
    assert!(y.iter().any(|v| *v != 0.0));
}
