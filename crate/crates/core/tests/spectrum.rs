use std::f64::consts::PI;

use tadpole::secular::eval_d;
use tadpole::spectrum::{
    asymptotic_coefficients, asymptotic_deviation, asymptotic_seed, certify, count_roots_rectangle, disk_roots,
    embedded_eigenvalues, lambda_alpha_derivative, point_spectrum, refine_branch_root, refine_root, track_branch,
    write_spectrum_csv, Family, SeedSign, LN3,
};
use tadpole::{Error, GraphParams, C64};

fn params(l: f64, alpha: f64) -> GraphParams {
    GraphParams::with_defaults(l, alpha).unwrap()
}

#[test]
fn embedded_examples() {
    let p = params(2.0 * PI, 1.0);
    let e: Vec<f64> = embedded_eigenvalues(3, &p).iter().map(|s| s.lambda.re).collect();
    for (a, b) in e.iter().zip([1.0, 2.0, 3.0]) {
        assert!((a - b).abs() < 1e-14);
    }
    let q = params(PI, 1.0);
    let pts = embedded_eigenvalues(2, &q);
    assert!((pts[1].lambda_sq.re - 16.0).abs() < 1e-12);
    assert!(pts.iter().all(|s| s.family == Family::Embedded && s.residual < 1e-12));
}

#[test]
fn double_embedded_root_is_flagged() {
    let p = params(2.0 * PI, 1.0);
    let pts = embedded_eigenvalues(3, &p);
    assert_eq!(pts[0].multiplicity, 2);
    assert_eq!(pts[1].multiplicity, 1);
}

#[test]
fn seeds_at_zero_alpha() {
    let l = 2.0 * PI;
    let p = params(l, 0.0);
    let plus = asymptotic_seed(1, &p, SeedSign::Plus);
    let minus = asymptotic_seed(1, &p, SeedSign::Minus);
    assert!((plus - C64::new(1.0, 0.174_850)).norm() < 1e-6);
    assert!((minus - C64::new(1.0, -0.174_850)).norm() < 1e-6);
    let (l0, a, _) = asymptotic_coefficients(1, &params(l, 0.1), SeedSign::Plus);
    assert!((l0.im - LN3 / l).abs() < 1e-15);
    // a = 4i / (3 L lambda0)
    assert!((a - C64::new(0.0, 4.0) / (3.0 * l * l0)).norm() < 1e-15);
}

#[test]
fn zero_alpha_roots_are_closed_form() {
    let l = 2.0 * PI;
    let p = params(l, 0.0);
    for n in 1..=5 {
        let pt = refine_root(asymptotic_seed(n, &p, SeedSign::Minus) + C64::new(0.01, 0.01), &p).unwrap();
        let exact = C64::new(2.0 * PI * n as f64 / l, -LN3 / l);
        assert!((pt.lambda - exact).norm() < 1e-10, "n = {n}: {}", pt.lambda);
        assert_eq!(pt.family, Family::ResonanceCandidate);
    }
}

#[test]
fn frozen_roots_at_unit_alpha() {
    let p = params(2.0 * PI, 1.0);
    let disk = disk_roots(&p);
    assert_eq!(disk.len(), 1);
    assert!((disk[0].lambda - C64::new(0.281_956_438_0, 0.154_612_580_7)).norm() < 1e-9);
    assert_eq!(disk[0].family, Family::Damped);
    assert_eq!(disk[0].index, 0);
    let r2 = refine_root(asymptotic_seed(2, &p, SeedSign::Minus), &p).unwrap();
    assert!((r2.lambda - C64::new(1.996_544_135_3, -0.081_284_824_5)).norm() < 1e-9);
    assert!(r2.residual < 1e-10);
}

#[test]
fn disk_roots_across_alpha() {
    let l = 2.0 * PI;
    let cases: [(f64, &[(f64, f64)]); 3] =
        [(0.25, &[(0.12883, 0.06942)]), (0.5, &[(0.19075, 0.11250)]), (2.0, &[(0.40487, 0.15462), (1.04994, 0.14482)])];
    for (alpha, expected) in cases {
        let roots = disk_roots(&params(l, alpha));
        assert_eq!(roots.len(), expected.len(), "alpha = {alpha}");
        for (r, (re, im)) in roots.iter().zip(expected) {
            assert!((r.lambda - C64::new(*re, *im)).norm() < 2e-5, "alpha = {alpha}: {}", r.lambda);
        }
    }
}

#[test]
fn refine_root_embedded_classification() {
    let p = params(2.0 * PI, 1.0);
    let pt = refine_root(C64::new(2.001, 0.0005), &p).unwrap();
    assert_eq!(pt.family, Family::Embedded);
    assert_eq!(pt.index, 2);
    assert_eq!(pt.lambda, C64::new(2.0, 0.0));
    assert!(matches!(refine_root(C64::new(0.0, 0.0), &p), Err(Error::Singularity(_))));
}

#[test]
fn rectangle_counts() {
    let l = 2.0 * PI;
    // three simple embedded roots and three damped roots
    let c = count_roots_rectangle([0.5, 3.5, -0.5, 0.1], &params(l, 0.0)).unwrap();
    assert_eq!(c.winding_count, 6);
    let c = count_roots_rectangle([0.1, 0.5, 0.01, 0.4], &params(l, 1.0)).unwrap();
    assert_eq!(c.winding_count, 1);
    let c = count_roots_rectangle([1.2, 1.8, 0.05, 0.5], &params(l, 1.0)).unwrap();
    assert_eq!(c.winding_count, 0);
    // double root at lambda = 1
    let c = count_roots_rectangle([0.7, 1.3, -0.05, 0.05], &params(l, 1.0)).unwrap();
    assert_eq!(c.winding_count, 2);
}

#[test]
fn contour_through_root_is_rejected() {
    let p = params(2.0 * PI, 1.0);
    assert!(matches!(count_roots_rectangle([0.5, 2.0, -0.2, 0.2], &p), Err(Error::ContourTooClose { .. })));
    assert!(matches!(count_roots_rectangle([1.0, 0.5, 0.0, 1.0], &p), Err(Error::InvalidParams(_))));
}

#[test]
fn full_spectrum_is_certified() {
    let p = params(2.0 * PI, 1.0);
    let pts = point_spectrum(30, &p).unwrap();
    assert_eq!(pts.len(), 60);
    assert!(pts.iter().all(|s| s.residual < 1e-10));
    let certs = certify(&pts, 30, &p).unwrap();
    assert_eq!(certs.len(), 31);
    assert!(certs.iter().all(|c| c.certified()));
    let total: i64 = certs.iter().map(|c| c.winding_count).sum();
    assert_eq!(total, 61);
}

#[test]
fn matching_expansion_improves_with_n() {
    let p = params(2.0 * PI, 1.0);
    let pts = point_spectrum(40, &p).unwrap();
    let root = |n: usize| {
        pts.iter().find(|s| s.family != Family::Embedded && s.index == n).unwrap().lambda
    };
    for n in [5, 10, 20] {
        let a = asymptotic_deviation(n, root(n), &p);
        let b = asymptotic_deviation(2 * n, root(2 * n), &p);
        assert!(b.deviation_matching < a.deviation_matching);
        assert!(b.deviation_reference > a.deviation_reference);
    }
}

#[test]
fn alpha_derivative_matches_finite_difference() {
    let l = 2.0 * PI;
    let delta = 1e-6;
    for n in [1, 2, 3] {
        let p = params(l, 0.5);
        let lam = track_branch(n, &p).unwrap();
        let up = refine_branch_root(lam, &p.with_alpha(0.5 + delta)).unwrap();
        let dn = refine_branch_root(lam, &p.with_alpha(0.5 - delta)).unwrap();
        let fd = (up - dn) / (2.0 * delta);
        let an = lambda_alpha_derivative(lam, &p);
        assert!((fd - an).norm() < 1e-6 * an.norm(), "n = {n}");
    }
    let lam = track_branch(1, &params(l, 0.5)).unwrap();
    assert!((lam - C64::new(0.99306, -0.08124)).norm() < 1e-5);
}

#[test]
fn small_alpha_roots_have_small_residuals() {
    let p = params(2.0 * PI, 0.1);
    for n in 1..=10 {
        let pt = refine_root(asymptotic_seed(n, &p, SeedSign::Minus), &p).unwrap();
        assert!(eval_d(pt.lambda, &p).unwrap().norm() < 1e-10);
        assert!((pt.lambda - asymptotic_seed(n, &p, SeedSign::Minus)).norm() < 1e-2);
    }
}

#[test]
fn csv_has_header_and_rows() {
    let p = params(2.0 * PI, 1.0);
    let pts = point_spectrum(3, &p).unwrap();
    let mut buf = Vec::new();
    write_spectrum_csv(&mut buf, &pts, Some("alpha = 1")).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# alpha = 1");
    assert!(lines[1].starts_with("family,index,re_lambda,im_lambda"));
    assert_eq!(lines.len(), 2 + pts.len());
}
