mod common;

use common::{biseparable_mixture, noisy_ghz, random_product};
use genent_core::criteria::{
    classify_werner, fit_werner, ge_certify, negativity, one_copy_distillable_search, ppt_certificate, ppt_check,
    verify_certificate, werner_state, GeOptions, Verdict, WernerClass, WernerParams,
};
use genent_core::hilbert::partial_transpose;
use genent_core::linalg::{self, CMatrix, CVector, C64};
use genent_core::{HilbertStructure, StateMatrix, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `ρ^Γ` of a Werner state is `(I + p d Φ⁺)/(d² + pd)`, so its smallest
/// eigenvalue is `(1 + pd)/(d² + pd)`.
fn werner_min_pt_eigenvalue(d: usize, p: f64) -> f64 {
    let df = d as f64;
    ((1.0 + p * df) / (df * df + p * df)).min(1.0 / (df * df + p * df))
}

#[test]
fn werner_partial_transpose_spectrum() {
    for d in 2..=4 {
        for k in 0..=20 {
            let p = -1.0 + 0.1 * k as f64;
            let rho = werner_state(WernerParams::new(d, p).unwrap()).unwrap();
            let pt = partial_transpose(&rho, &["B"]).unwrap();
            let got = linalg::min_eigenvalue(&pt);
            assert!((got - werner_min_pt_eigenvalue(d, p)).abs() < 1e-13, "d={d} p={p}");
            let neg = negativity(&rho, &["A"]).unwrap();
            assert!((neg - (-werner_min_pt_eigenvalue(d, p)).max(0.0)).abs() < 1e-13);
        }
    }
}

#[test]
fn werner_ppt_boundary_is_minus_one_over_d() {
    let tol = Tolerances::default();
    for d in 2..=4 {
        let edge = -1.0 / d as f64;
        for (p, ppt) in [(edge + 1e-6, true), (edge, true), (edge - 1e-6, false)] {
            let rho = werner_state(WernerParams::new(d, p).unwrap()).unwrap();
            assert_eq!(ppt_check(&rho, &["A"], &tol).unwrap().0, ppt, "d={d} p={p}");
        }
    }
}

#[test]
fn werner_classes_follow_the_intervals() {
    let class = |d, p| classify_werner(WernerParams::new(d, p).unwrap()).unwrap();
    assert_eq!(class(3, -0.6), WernerClass::Npt1CopyDistillable);
    assert_eq!(class(3, -0.4), WernerClass::Npt1CopyUndistillable);
    assert_eq!(class(3, -1.0 / 3.0), WernerClass::Separable);
    assert_eq!(class(4, -0.5), WernerClass::Npt1CopyUndistillable);
    assert_eq!(class(2, -0.51), WernerClass::Npt1CopyDistillable);
    assert_eq!(class(2, -0.5), WernerClass::Separable);
    assert!(WernerParams::new(1, 0.0).is_err());
    assert!(WernerParams::new(3, 1.5).is_err());
}

#[test]
fn werner_fit_recovers_parameters() {
    for (d, p) in [(2, -0.9), (3, -0.6), (4, 0.3)] {
        let (params, residual) = fit_werner(&werner_state(WernerParams::new(d, p).unwrap()).unwrap()).unwrap();
        assert_eq!(params.d, d);
        assert!((params.p - p).abs() < 1e-12);
        assert!(residual < 1e-14);
    }
}

#[test]
fn distillability_search_on_werner_states() {
    let tol = Tolerances::default();
    let rho = werner_state(WernerParams::new(3, -0.8).unwrap()).unwrap();
    let cert = one_copy_distillable_search(&rho, &["A"], 20, 1, &tol).unwrap();
    assert_eq!(cert.verdict, Verdict::OneCopyDistillable);
    assert!(cert.value < 0.0);
    assert!(verify_certificate(&cert, &rho, &tol).passed());

    let rho = werner_state(WernerParams::new(3, -0.45).unwrap()).unwrap();
    let cert = one_copy_distillable_search(&rho, &["A"], 50, 1, &tol).unwrap();
    assert_eq!(cert.verdict, Verdict::NotFoundDistillable);
}

#[test]
fn ppt_certificates_verify_and_reject_other_states() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ghz = noisy_ghz(&mut rng);
    let cert = ppt_certificate(&ghz, &["B"], &tol).unwrap();
    assert_eq!(cert.verdict, Verdict::Npt);
    assert!(verify_certificate(&cert, &ghz, &tol).passed());
    let product = random_product(&mut rng);
    let check = verify_certificate(&cert, &product, &tol);
    assert!(!check.passed());
    let sep = ppt_certificate(&product, &["B"], &tol).unwrap();
    assert_eq!(sep.verdict, Verdict::Ppt);
    assert!(verify_certificate(&sep, &product, &tol).passed());
}

fn ghz() -> StateMatrix {
    let mut v = CVector::zeros(8);
    v[0] = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    v[7] = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    StateMatrix::new(HilbertStructure::new(vec![2, 2, 2], vec!["A", "B", "C"]).unwrap(), linalg::outer(&v)).unwrap()
}

#[test]
fn ge_certificate_and_tamper_probes() {
    let tol = Tolerances::default();
    let rho = ghz();
    let cert = ge_certify(&rho, &GeOptions::default(), &tol).unwrap();
    assert_eq!(cert.verdict, Verdict::GeCertified);
    assert!(verify_certificate(&cert, &rho, &tol).passed());

    let w = cert.evidence.witness.clone().unwrap();
    assert!((w.clone() * rho.matrix()).trace().re < 0.0);

    let mut tampered = cert.clone();
    tampered.evidence.witness.as_mut().unwrap()[(0, 0)] += C64::from(1e-3);
    let check = verify_certificate(&tampered, &rho, &tol);
    assert!(check.failures().any(|c| c.name.starts_with("decomposability_residual")));

    let mut shifted = cert.clone();
    shifted.value += 1e-3;
    assert!(!verify_certificate(&shifted, &rho, &tol).passed());

    let mixed = StateMatrix::new(rho.structure().clone(), CMatrix::identity(8, 8).unscale(8.0)).unwrap();
    assert!(!verify_certificate(&cert, &mixed, &tol).passed());
}

#[test]
fn ppt_mixtures_are_not_certified() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3 {
        let rho = biseparable_mixture(&mut rng);
        let cert = ge_certify(&rho, &GeOptions::default(), &tol).unwrap();
        assert_eq!(cert.verdict, Verdict::PptMixtureFeasible);
        assert!(verify_certificate(&cert, &rho, &tol).passed());
        let parts = cert.evidence.parts.as_ref().unwrap();
        let sum = parts.iter().fold(CMatrix::zeros(8, 8), |acc, p| acc + p);
        assert!(linalg::frobenius(&(sum - rho.matrix().unscale(rho.trace()))) < 1e-8);

        let mut broken = cert.clone();
        broken.evidence.parts.as_mut().unwrap()[0][(0, 0)] += C64::from(1e-3);
        let check = verify_certificate(&broken, &rho, &tol);
        assert!(check.failures().any(|c| c.name == "sum_residual"));
    }
}
