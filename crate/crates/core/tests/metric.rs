use num_complex::Complex64;

use sturm_metric::forge::{
    canned_incompatible, gen_dressed, gen_hermitian_pencil, DEFAULT_CONDITION_CAP,
};
use sturm_metric::matrix::{eig_hermitian, scaled_difference};
use sturm_metric::metric::*;
use sturm_metric::pencil::{
    solve_pencil, BiorthogonalSystem, Provenance, SturmianPencil, REALITY_TOL,
};
use sturm_metric::{ComplexMatrix, Error};

fn solved(p: &SturmianPencil) -> BiorthogonalSystem {
    solve_pencil(p, REALITY_TOL).unwrap()
}

fn upper() -> SturmianPencil {
    SturmianPencil::new(
        ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 2.0]]),
        ComplexMatrix::identity(2),
        Provenance::Canned,
        "upper",
    )
    .unwrap()
}

#[test]
fn hermitian_pencils_collapse_to_identity() {
    for seed in 0..5 {
        let p = gen_hermitian_pencil(5, seed).unwrap();
        let theta = build_metric_single(&solved(&p), &unit_weights(5))
            .unwrap()
            .theta;
        assert!((&theta - &ComplexMatrix::identity(5)).max_abs() <= 1e-10);
    }
}

#[test]
fn upper_triangular_metric_by_hand() {
    let sys = solved(&upper());
    let unit = build_metric_single(&sys, &[1.0, 1.0]).unwrap().theta;
    assert!(
        (&unit - &ComplexMatrix::from_real_rows(&[[1.0, -1.0], [-1.0, 3.0]])).max_abs() <= 1e-14
    );
    let weighted = build_metric_single(&sys, &[1.0, 0.5]).unwrap().theta;
    let expected = ComplexMatrix::from_real_rows(&[[1.0, -1.0], [-1.0, 2.0]]);
    assert!((&weighted - &expected).max_abs() <= 1e-14);

    let d = dress(
        &upper(),
        &MetricCandidate::external(expected, MetricMethod::File).unwrap(),
    )
    .unwrap();
    assert!(d.h_residual <= 1e-14);
    let spectrum = eig_hermitian(&d.h.hermitian_part()).unwrap().eigenvalues;
    assert!((spectrum[0] - 1.0).abs() <= 1e-14 && (spectrum[1] - 2.0).abs() <= 1e-14);
}

#[test]
fn incompatible_pair_is_flagged() {
    let p = canned_incompatible();
    let cand = build_metric_single(&solved(&p), &unit_weights(2)).unwrap();
    assert!(
        (&cand.theta - &ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]])).max_abs()
            <= 1e-14
    );
    let r = verify_metric(&p, &cand, &Tolerances::default()).unwrap();
    assert!((r.hermiticity_max - 1.0).abs() <= 1e-14);
    assert!(r.intertwine_h > 0.0 && r.intertwine_w > 0.0);
    assert!(!r.verdict.hermitian && !r.passed());
}

#[test]
fn m_coefficients() {
    let herm = SturmianPencil::new(
        gen_hermitian_pencil(4, 2).unwrap().h,
        ComplexMatrix::identity(4),
        Provenance::Hermitian,
        "w=1",
    )
    .unwrap();
    let m = compute_m(&solved(&herm), &herm).unwrap();
    assert!((&m - &ComplexMatrix::identity(4)).max_abs() <= 1e-12);
    let id_metric = build_metric_double(&solved(&herm), &ComplexMatrix::identity(4)).unwrap();
    assert!((&id_metric.theta - &ComplexMatrix::identity(4)).max_abs() <= 1e-12);

    let upper_m = compute_m(&solved(&upper()), &upper()).unwrap();
    assert!((&upper_m - &ComplexMatrix::identity(2)).max_abs() <= 1e-14);

    let model = gen_dressed(8, 42, DEFAULT_CONDITION_CAP).unwrap();
    let sys = solved(&model.pencil);
    let forms = compute_m_forms(&sys, &model.pencil).unwrap();
    assert!(forms.disagreement() <= 1e-10);
    let double = build_metric_double(&sys, &forms.pairing_form).unwrap();
    let single = build_metric_single(&sys, &unit_weights(8)).unwrap();
    assert!(scaled_difference(&double.theta, &single.theta, single.theta.frobenius_norm()) <= 1e-9);
    assert!(build_metric_double(&sys, &ComplexMatrix::identity(3)).is_err());
}

#[test]
fn verification_of_trivial_and_dressed_metrics() {
    let p = gen_hermitian_pencil(4, 3).unwrap();
    let id = MetricCandidate::external(ComplexMatrix::identity(4), MetricMethod::File).unwrap();
    let r = verify_metric(&p, &id, &Tolerances::default()).unwrap();
    assert!(r.hermiticity_residual <= 1e-12 && r.intertwine_h <= 1e-12 && r.intertwine_w <= 1e-12);
    assert!(r.min_eig_theta > 0.0 && r.min_eig_theta_w > 0.0 && r.passed());

    let model = gen_dressed(8, 42, DEFAULT_CONDITION_CAP).unwrap();
    let cand = build_metric_single(&solved(&model.pencil), &unit_weights(8)).unwrap();
    let r = verify_metric(&model.pencil, &cand, &Tolerances::default()).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(verify_metric(&model.pencil, &id, &Tolerances::default()).is_err());
}

#[test]
fn inner_products() {
    let id = MetricCandidate::external(ComplexMatrix::identity(2), MetricMethod::File).unwrap();
    let psi = [Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)];
    let phi = [Complex64::new(3.0, 0.0), Complex64::new(1.0, 1.0)];
    let dirac: Complex64 = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
    assert_eq!(inner_product_s(&id, &psi, &phi).unwrap(), dirac);

    let model = gen_dressed(6, 11, DEFAULT_CONDITION_CAP).unwrap();
    let sys = solved(&model.pencil);
    let cand = build_metric_single(&sys, &unit_weights(6)).unwrap();
    for j in 0..6 {
        for k in 0..6 {
            let v = inner_product_s(&cand, &sys.right_kets.column(j), &sys.curly_kets.column(k))
                .unwrap();
            let expected = if j == k { 1.0 } else { 0.0 };
            assert!((v - expected).norm() <= 1e-9, "({j},{k}) = {v}");
        }
        let norm =
            inner_product_s(&cand, &sys.right_kets.column(j), &sys.right_kets.column(j)).unwrap();
        assert!(norm.re > 0.0);
    }
    assert!(inner_product_s(&cand, &psi, &phi).is_err());
}

#[test]
fn dressing() {
    let p = gen_hermitian_pencil(3, 1).unwrap();
    let d = dress(
        &p,
        &MetricCandidate::external(ComplexMatrix::identity(3), MetricMethod::File).unwrap(),
    )
    .unwrap();
    assert_eq!(d.omega, ComplexMatrix::identity(3));
    assert!((&d.h - &p.h).max_abs() <= 1e-15 && (&d.w - &p.w).max_abs() <= 1e-15);

    let model = gen_dressed(8, 5, DEFAULT_CONDITION_CAP).unwrap();
    let sys = solved(&model.pencil);
    let d = dress(
        &model.pencil,
        &build_metric_single(&sys, &unit_weights(8)).unwrap(),
    )
    .unwrap();
    assert!(d.h_residual <= 1e-9 && d.w_residual <= 1e-9);
    assert!(d.isospectrality_defect(&sys.lambdas) <= 1e-9);

    let bad = MetricCandidate::external(
        ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 1.0]]),
        MetricMethod::File,
    )
    .unwrap();
    assert!(matches!(
        dress(&upper(), &bad),
        Err(Error::NotPositiveDefinite { .. })
    ));
}

#[test]
fn truncation_scan() {
    let model = gen_dressed(16, 3, DEFAULT_CONDITION_CAP).unwrap();
    let sys = solved(&model.pencil);
    let tol = Tolerances::default();
    let w = unit_weights(16);
    let scan = truncate_scan(&sys, &model.pencil, &w, &tol).unwrap();
    assert_eq!(scan.len(), 17);
    let full = verify_metric(&model.pencil, &build_metric_single(&sys, &w).unwrap(), &tol).unwrap();
    assert_eq!(
        scan[16].report.intertwine_h.to_bits(),
        full.intertwine_h.to_bits()
    );
    assert_eq!(
        scan[16].report.hermiticity_residual.to_bits(),
        full.hermiticity_residual.to_bits()
    );
    assert!(scan[15].report.intertwine_h > scan[16].report.intertwine_h);
    assert_eq!(scan[0].report.intertwine_h, 0.0);
    assert_eq!(scan[0].report.min_eig_theta, 0.0);
    assert!(scan[0].rank_deficient());
    assert!(!scan[16].rank_deficient());
}

#[test]
fn ground_truth_alignment() {
    let model = gen_dressed(8, 1, DEFAULT_CONDITION_CAP).unwrap();
    let sys = solved(&model.pencil);
    for a in mode_alignment(&model.theta_true, &sys).unwrap() {
        assert!(a.positive_parallel(1e-8), "{a:?}");
    }
}
