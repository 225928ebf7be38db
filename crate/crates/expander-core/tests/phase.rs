use expander_core::phase::*;
use expander_core::Error;
use proptest::prelude::*;

// Independent baseline exponent, written out from the closed form.
fn bi_oracle(rho: f64, delta: f64, d: f64, eps: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.ln() - (1.0 - p) * (1.0 - p).ln() };
    let kn = rho * delta;
    h(kn) + d * kn * h(eps) + eps * d * kn * (d * rho).ln()
}

#[test]
fn exp_roots_have_tiny_residual_and_bracket_sign() {
    for &delta in &[0.1, 0.3, 0.5, 0.9] {
        let p = rho_exp(delta, 8, 0.25, 1024).unwrap();
        assert!(p.is_root(), "delta {delta}: {:?}", p.status);
        assert!(p.residual.abs() < 1e-10, "{}", p.residual);
        let again = net_exponent(p.rho, delta, 8, 0.25, 1024).unwrap();
        assert_eq!(again, p.residual);
        // negative just below, non-negative just above the reported root
        let below = net_exponent(p.rho * (1.0 - 1e-6), delta, 8, 0.25, 1024).unwrap();
        let above = net_exponent(p.rho * (1.0 + 1e-6), delta, 8, 0.25, 1024).unwrap();
        assert!(below < 0.0 && above > 0.0, "{below} {above}");
        // nothing negative above the root
        let (_, hi) = rho_bracket(delta, 8, 0.25, 1024);
        for i in 1..=200 {
            let rho = p.rho * (1.0 + 1e-6) + (hi - p.rho) * i as f64 / 200.0;
            if rho < hi {
                assert!(net_exponent(rho, delta, 8, 0.25, 1024).unwrap() >= 0.0);
            }
        }
    }
}

#[test]
fn bi_roots_match_oracle() {
    let n = 1 << 20;
    for &delta in &default_grid() {
        // eps d must be large enough for the log term to beat the entropies
        for &eps in &[1.0 / 16.0, 1.0 / 6.0] {
            assert_eq!(rho_exp_bi(delta, 8, eps, n).unwrap().status, RootStatus::AllPositive);
        }
        for &eps in &[0.25, 0.3] {
            let p = rho_exp_bi(delta, 8, eps, n).unwrap();
            assert!(p.is_root(), "delta {delta} eps {eps}: {:?}", p.status);
            assert!(p.residual.abs() < 1e-10);
            assert!((bi_oracle(p.rho, delta, 8.0, eps) - p.residual).abs() < 1e-14);
            assert!(bi_oracle(p.rho * (1.0 - 1e-6), delta, 8.0, eps) < 0.0);
            assert!(bi_oracle(p.rho * (1.0 + 1e-6), delta, 8.0, eps) > 0.0);
        }
    }
}

#[test]
fn curves_are_deterministic() {
    let grid = default_grid();
    let a = phase_curve(&grid, 8, CurveKind::Exp { eps: 0.25 }, 1024).unwrap();
    let b = phase_curve(&grid, 8, CurveKind::Exp { eps: 0.25 }, 1024).unwrap();
    assert_eq!(a.rhos().iter().map(|r| r.to_bits()).collect::<Vec<_>>(), b.rhos().iter().map(|r| r.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.deltas(), grid);
}

#[test]
fn markers() {
    // no root at small eps for n = 2^10: the exponent stays positive
    let p = rho_exp(0.5, 8, 1.0 / 16.0, 1024).unwrap();
    assert_eq!(p.status, RootStatus::AllPositive);
    assert_eq!(p.rho, 0.0);
    assert!(p.residual.is_nan());
    // bracket collapses when 2/n exceeds 1/((1-eps)d)
    let p = rho_exp(0.5, 8, 0.25, 8).unwrap();
    assert_eq!(p.status, RootStatus::Infeasible);
    assert!(p.rho.is_nan());
}

#[test]
fn alg_curves_reuse_exp() {
    for alg in Algorithm::ALL {
        for &delta in &[0.2, 0.7] {
            let e = rho_exp(delta, 8, alg.epsilon(), 1024).unwrap();
            let a = rho_alg(delta, 8, 1024, alg, false).unwrap();
            assert_eq!((a.rho.to_bits(), a.status), (e.rho.to_bits(), e.status));
            let r = rho_alg(delta, 8, 1024, alg, true).unwrap();
            if e.is_root() {
                assert_eq!(r.rho, e.rho / alg.sparsity_factor());
            } else {
                assert_eq!((r.rho.to_bits(), r.status), (e.rho.to_bits(), e.status));
            }
        }
    }
    assert_eq!(Algorithm::Er.epsilon(), 0.25);
    assert_eq!(Algorithm::Ssmp.epsilon(), 1.0 / 16.0);
    assert_eq!(Algorithm::L1.epsilon(), 1.0 / 6.0);
}

#[test]
fn bracket_caps() {
    let (lo, hi) = rho_bracket(0.5, 8, 0.25, 1024);
    assert_eq!(lo, 2.0 / 1024.0);
    assert!((hi - 1.0 / 6.0).abs() < 1e-9);
    // k <= N/2 binds at large delta and small d
    let (_, hi) = rho_bracket(0.9, 1, 0.25, 1024);
    assert!((hi - 0.5 / 0.9).abs() < 1e-9);
}

#[test]
fn grid_validation() {
    assert!(matches!(check_grid(&[]), Err(Error::InvalidParameter(_))));
    assert!(check_grid(&[0.2, 0.1]).is_err());
    assert!(check_grid(&[0.2, 0.2]).is_err());
    assert!(phase_curve(&[0.0, 0.5], 8, CurveKind::Exp { eps: 0.25 }, 1024).is_err());
    assert!(phase_curve(&[0.5, 1.0], 8, CurveKind::Exp { eps: 0.25 }, 1024).is_err());
    assert!(rho_exp(0.5, 8, 0.5, 1024).is_err());
    assert!(rho_exp(0.5, 0, 0.25, 1024).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bi_root_is_largest_crossing(delta in 0.02f64..0.98, eps in 0.02f64..0.45, d in 2u64..40) {
        let n = 1 << 20;
        let p = rho_exp_bi(delta, d, eps, n).unwrap();
        prop_assume!(p.is_root());
        prop_assert!(p.residual.abs() < 1e-10);
        let (_, hi) = rho_bracket(delta, d, eps, n);
        for i in 1..=100 {
            let rho = p.rho + (hi - p.rho) * i as f64 / 100.0;
            prop_assert!(bi_oracle(rho, delta, d as f64, eps) >= -1e-12);
        }
    }
}
