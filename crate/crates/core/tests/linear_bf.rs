mod common;

use common::*;
use drbf::linear::*;
use drbf::types::*;
use proptest::prelude::*;
use rand::Rng;

fn random_moments(r: &mut impl Rng, n: usize, m: usize) -> JointMoments {
    let big = psd(r, n + m, n + m + 3, 0.05);
    JointMoments::split(&big, n).unwrap()
}

fn model(r: &mut impl Rng, n: usize, m: usize) -> (CMat, CMat, CMat) {
    (cmat(r, n, m), psd(r, m, m + 2, 0.1), psd(r, n, n + 2, 0.1))
}

#[test]
fn wiener_examples() {
    let m = JointMoments::new(CMat::identity(1, 1), CMat::identity(1, 1), CMat::identity(1, 1)).unwrap();
    assert!((wiener(&m).unwrap().w[(0, 0)] - C64::from(1.0)).norm() < 1e-15);
    let m2 = JointMoments::new(
        CMat::identity(2, 2) * C64::from(2.0),
        CMat::from_row_slice(2, 1, &[C64::from(1.0), C64::from(0.0)]),
        CMat::identity(1, 1),
    )
    .unwrap();
    let w = wiener(&m2).unwrap().w;
    assert!((w[(0, 0)].re - 0.5).abs() < 1e-15 && w[(0, 1)].norm() < 1e-15);
    let sing = JointMoments::new(CMat::zeros(2, 2), CMat::zeros(2, 1), CMat::identity(1, 1)).unwrap();
    assert!(matches!(wiener(&sing), Err(drbf::Error::NearSingular { .. })));
}

#[test]
fn wiener_solves_normal_equations() {
    let mut r = rng(1);
    for _ in 0..30 {
        let m = random_moments(&mut r, 5, 3);
        let w = wiener(&m).unwrap().w;
        let oracle = right_solve(&m.r_xs.adjoint(), &m.r_x);
        assert!(rel_err(&w, &oracle) < 1e-10);
    }
}

#[test]
fn wiener_optimality_against_perturbations() {
    let mut r = rng(2);
    let m = random_moments(&mut r, 4, 2);
    let w = wiener(&m).unwrap().w;
    let base = estimation_error(&m, &w);
    assert!((base - min_error(&m).unwrap()).abs() < 1e-10);
    for _ in 0..200 {
        let d = cmat(&mut r, 2, 4) * C64::from(r.random_range(1e-3..1.0));
        assert!(estimation_error(&m, &(&w + d)) > base);
    }
}

#[test]
fn wiener_ce_matches_wiener_on_model_moments() {
    let mut r = rng(3);
    for _ in 0..20 {
        let (h, rs, rv) = model(&mut r, 6, 3);
        let m = JointMoments::from_model(&h, &rs, &rv).unwrap();
        let a = wiener(&m).unwrap().w;
        let b = wiener_ce(&h, &rs, &rv).unwrap().w;
        assert!(rel_err(&a, &b) < 1e-9);
    }
    // R_s = I, H = I, R_v = I gives 0.5 I.
    let w = wiener_ce(&CMat::identity(3, 3), &CMat::identity(3, 3), &CMat::identity(3, 3)).unwrap().w;
    assert!(max_abs(&(w - CMat::identity(3, 3) * C64::from(0.5))) < 1e-15);
}

fn f1(m: &JointMoments) -> f64 {
    min_error(m).unwrap()
}

#[test]
fn min_error_is_monotone_in_joint_moments() {
    let mut r = rng(4);
    for i in 0..100 {
        let (n, mm) = (2 + i % 4, 1 + i % 3);
        let r2 = psd(&mut r, n + mm, n + mm + 1, 0.01);
        let delta = psd(&mut r, n + mm, 1 + i % (n + mm), 0.0) * C64::from(r.random_range(0.01..3.0));
        let a = JointMoments::split(&(&r2 + delta), n).unwrap();
        let b = JointMoments::split(&r2, n).unwrap();
        assert!(f1(&a) >= f1(&b) - 1e-9, "instance {i}: {} < {}", f1(&a), f1(&b));
    }
}

#[test]
fn min_error_is_monotone_in_received_covariance() {
    let mut r = rng(5);
    for i in 0..100 {
        let (n, mm) = (2 + i % 4, 1 + i % 3);
        let base = random_moments(&mut r, n, mm);
        let delta = psd(&mut r, n, 1 + i % n, 0.0) * C64::from(r.random_range(0.01..3.0));
        let bigger = JointMoments::new(&base.r_x + delta, base.r_xs.clone(), base.r_s.clone()).unwrap();
        assert!(f1(&bigger) >= f1(&base) - 1e-9, "instance {i}");
    }
}

#[test]
fn diagonal_loading_is_ridge_regression() {
    let mut r = rng(6);
    for _ in 0..50 {
        let m = random_moments(&mut r, 6, 3);
        let eps = r.random_range(0.0..2.0);
        let w = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, eps)).unwrap().w;
        // Stationarity of the penalized objective: W(R_x + εI) = R_xsᴴ.
        let oracle = right_solve(&m.r_xs.adjoint(), &(&m.r_x + CMat::identity(6, 6) * C64::from(eps)));
        assert!(rel_err(&w, &oracle) < 1e-8);
    }
}

#[test]
fn diagonal_loading_shrinks_weights() {
    let mut r = rng(7);
    for _ in 0..30 {
        let m = random_moments(&mut r, 5, 2);
        let norms: Vec<f64> = [0.0, 0.1, 1.0, 10.0]
            .iter()
            .map(|&e| frob(&dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, e)).unwrap().w))
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn moment_set_examples() {
    let mut r = rng(8);
    let m = random_moments(&mut r, 4, 2);
    let wien = wiener(&m).unwrap().w;
    for kind in [UncertaintyKind::DiagLoading, UncertaintyKind::Multiplicative] {
        let w = dr_beamformer(&m, &UncertaintySpec::new(kind, 0.0)).unwrap().w;
        assert!(rel_err(&w, &wien) < 1e-12);
    }
    // Additive set with E = I equals diagonal loading on R_x; E_xs block is zero.
    let e = CMat::identity(6, 6);
    let am = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::AdditiveMoment, 0.3).with_matrix(e)).unwrap();
    let dl = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, 0.3)).unwrap();
    assert!(rel_err(&am.w, &dl.w) < 1e-12);
    // Generalized loading with F = I is plain loading.
    let gdl = dr_beamformer(
        &m,
        &UncertaintySpec::new(UncertaintyKind::GeneralizedDl, 0.3).with_matrix(CMat::identity(4, 4)),
    )
    .unwrap();
    assert!(rel_err(&gdl.w, &dl.w) < 1e-12);
    // Modified multiplicative scales Wiener by 1/θ₂.
    let mmm = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::ModifiedMultiplicative, 0.0).with_theta2(2.0)).unwrap();
    assert!(rel_err(&mmm.w, &(&wien * C64::from(0.5))) < 1e-12);
    assert!(dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::ModifiedMultiplicative, 0.0).with_theta2(0.5)).is_err());
    assert!(dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::AdditiveMoment, 0.3)).is_err());
    assert!(dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, -1.0)).is_err());
}

#[test]
fn infeasible_radius_is_flagged_not_rejected() {
    let m = JointMoments::new(CMat::identity(2, 2), CMat::zeros(2, 1), CMat::identity(1, 1)).unwrap();
    let ok = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, 0.5)).unwrap();
    assert!(!ok.infeasible_set);
    let big = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, 2.0)).unwrap();
    assert!(big.infeasible_set);
}

#[test]
fn distortionless_beamformers() {
    let mut r = rng(9);
    for _ in 0..50 {
        let (n, m) = (6, 3);
        let h = cmat(&mut r, n, m);
        let rx = psd(&mut r, n, n + 2, 0.05);
        let eye = CMat::identity(m, m);
        for eps in [0.0, 0.1, 1.0] {
            let w = capon(&h, &rx, eps).unwrap().w;
            assert!(frob(&(&w * &h - &eye)) <= 1e-8);
        }
        let z = zero_forcing(&h).unwrap().w;
        assert!(frob(&(&z * &h - &eye)) <= 1e-8);
    }
}

#[test]
fn capon_and_zf_examples() {
    let h = CMat::identity(2, 2);
    let w = capon(&h, &CMat::identity(2, 2), 0.0).unwrap().w;
    assert!(max_abs(&(w - CMat::identity(2, 2))) < 1e-14);
    // Rank-deficient channel is rejected.
    let mut hd = CMat::zeros(3, 2);
    hd[(0, 0)] = C64::from(1.0);
    hd[(0, 1)] = C64::from(1.0);
    assert!(zero_forcing(&hd).is_err());
    assert!(capon(&hd, &CMat::identity(3, 3), 0.0).is_err());
    // N < M is rejected.
    assert!(capon(&CMat::identity(2, 3), &CMat::identity(2, 2), 0.0).is_err());
}

#[test]
fn eigen_threshold_examples() {
    let d = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(4.0), C64::from(0.1)]));
    let t = eigen_threshold_cov(&d, 0.5).unwrap();
    assert!((t[(0, 0)].re - 4.0).abs() < 1e-12 && (t[(1, 1)].re - 2.0).abs() < 1e-12);
    assert!(rel_err(&eigen_threshold_cov(&d, 0.0).unwrap(), &d) < 1e-14);
    let full = eigen_threshold_cov(&d, 1.0).unwrap();
    assert!(rel_err(&full, &(CMat::identity(2, 2) * C64::from(4.0))) < 1e-12);
    assert!(eigen_threshold_cov(&d, 1.5).is_err());
    let mut r = rng(10);
    let a = psd(&mut r, 5, 3, 0.0);
    let t = eigen_threshold_cov(&a, 0.2).unwrap();
    assert!(min_eigenvalue(&(&t - &a)) >= -1e-9);
}

#[test]
fn rs_rv_variants() {
    let mut r = rng(11);
    let (h, rs, rv) = model(&mut r, 4, 4);
    let ce = wiener_ce(&h, &rs, &rv).unwrap().w;
    for v in [RsRvVariant::RsIdentity, RsRvVariant::RsChannelWeighted, RsRvVariant::RvIdentity] {
        let w = dr_rs_rv_beamformer(&h, &rs, &rv, 0.0, 0.0, v).unwrap().w;
        assert!(rel_err(&w, &ce) < 1e-10, "{v:?}");
    }
    // R_v loading equals diagonal loading of model-built moments.
    let (h, rs, rv) = model(&mut r, 6, 2);
    let m = JointMoments::from_model(&h, &rs, &rv).unwrap();
    let a = dr_rs_rv_beamformer(&h, &rs, &rv, 0.0, 0.4, RsRvVariant::RvIdentity).unwrap().w;
    let b = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, 0.4)).unwrap().w;
    assert!(rel_err(&a, &b) < 1e-10);
    // With H = I both signal-side sets coincide.
    let eye = CMat::identity(3, 3);
    let (_, rs, rv) = model(&mut r, 3, 3);
    let a = dr_rs_rv_beamformer(&eye, &rs, &rv, 0.7, 0.0, RsRvVariant::RsIdentity).unwrap().w;
    let b = dr_rs_rv_beamformer(&eye, &rs, &rv, 0.7, 0.0, RsRvVariant::RsChannelWeighted).unwrap().w;
    assert!(rel_err(&a, &b) < 1e-10);
    // Tall channels make HHᴴ singular.
    let (h, rs, rv) = model(&mut r, 5, 2);
    assert!(dr_rs_rv_beamformer(&h, &rs, &rv, 0.1, 0.0, RsRvVariant::RsChannelWeighted).is_err());
}

#[test]
fn multi_frame_limits() {
    let mut r = rng(12);
    for _ in 0..10 {
        let m = random_moments(&mut r, 5, 2);
        let w0 = wiener(&m).unwrap();
        let prev = BeamformerWeights::new(cmat(&mut r, 2, 5), "prior");
        let a = multi_frame_wiener(&m, &prev, 0.0, 0.0).unwrap().w;
        assert!(rel_err(&a, &w0.w) < 1e-12);
        let b = multi_frame_wiener(&m, &prev, 1e6, 0.0).unwrap().w;
        assert!(rel_err(&b, &prev.w) <= 1e-3);
        let c = multi_frame_wiener(&m, &w0, 3.7, 0.0).unwrap().w;
        assert!(rel_err(&c, &w0.w) < 1e-8);
    }
    let m = random_moments(&mut r, 5, 2);
    let bad = BeamformerWeights::new(CMat::zeros(2, 4), "prior");
    assert!(matches!(multi_frame_wiener(&m, &bad, 1.0, 0.0), Err(drbf::Error::Dimension(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loading_never_increases_weight_norm(seed in any::<u64>(), e1 in 0.0f64..5.0, de in 0.0f64..5.0) {
        let mut r = rng(seed);
        let m = random_moments(&mut r, 4, 2);
        let a = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, e1)).unwrap();
        let b = dr_beamformer(&m, &UncertaintySpec::new(UncertaintyKind::DiagLoading, e1 + de)).unwrap();
        prop_assert!(frob(&b.w) <= frob(&a.w) + 1e-12);
    }

    #[test]
    fn robust_error_dominates_nominal(seed in any::<u64>(), eps in 0.0f64..2.0) {
        let mut r = rng(seed);
        let m = random_moments(&mut r, 3, 2);
        let loaded = JointMoments::split(&(m.assemble() + CMat::identity(5, 5) * C64::from(eps)), 3).unwrap();
        prop_assert!(min_error(&loaded).unwrap() >= min_error(&m).unwrap() - 1e-9);
    }
}
