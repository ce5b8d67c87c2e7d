use std::f64::consts::PI;

use tadpole::graph::{inner_product, vertex_residuals};
use tadpole::modes::{
    build_confined_mode, build_damped_mode, expand_damped, exponential_packet_gram, gram_closed_form, gram_matrix,
    project_pp_plus, riesz_diagnostics, NormDomain, Segment,
};
use tadpole::spectrum::{disk_roots, point_spectrum, refine_root, asymptotic_seed, Family, SeedSign, SpectralPoint};
use tadpole::{GraphFunction, GraphParams, C64};

fn params(alpha: f64) -> GraphParams {
    GraphParams::with_defaults(2.0 * PI, alpha).unwrap()
}

fn damped_point(n: usize, p: &GraphParams) -> SpectralPoint {
    let mut pt = refine_root(asymptotic_seed(n, p, SeedSign::Minus), p).unwrap();
    pt.index = n;
    pt
}

#[test]
fn confined_mode_values() {
    let p = params(1.0);
    let m = build_confined_mode(1, &p);
    assert!((m.eval_r2(PI / 2.0).re - 0.564_189_583_5).abs() < 1e-10);
    assert_eq!(m.eval_r1(3.0), C64::new(0.0, 0.0));
    assert_eq!(m.vertex_value().norm(), 0.0);
    let a = build_confined_mode(2, &p).sample(&p);
    let b = build_confined_mode(4, &p).sample(&p);
    assert!(inner_product(&a, &b, &p).unwrap().norm() < 1e-10);
}

#[test]
fn confined_gram_is_identity() {
    let p = params(1.0);
    let modes: Vec<_> = (1..=10).map(|k| build_confined_mode(k, &p)).collect();
    let g = gram_matrix(&modes, Segment::FullGraph, &p).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g.entries[(i, j)] - e).norm() < 1e-8);
        }
    }
}

#[test]
fn damped_mode_coefficients() {
    let p = params(1.0);
    let pt = damped_point(2, &p);
    let m = build_damped_mode(&pt, &p).unwrap();
    assert!((m.a1 - (m.a2 + m.b2)).norm() < 1e-14);
    let expected_b2 = m.a2 * (3.0 * pt.lambda - 1.0) / (pt.lambda + 1.0);
    assert!((m.b2 - expected_b2).norm() < 1e-14);
    assert_eq!(m.normalized_over, NormDomain::Truncated);
    let p0 = params(0.0);
    let m0 = build_damped_mode(&damped_point(1, &p0), &p0).unwrap();
    assert!((m0.b2 / m0.a2 - 3.0).norm() < 1e-12);
}

#[test]
fn disk_mode_is_normalized_over_half_line() {
    let p = params(1.0);
    let pt = disk_roots(&p)[0];
    let m = build_damped_mode(&pt, &p).unwrap();
    assert_eq!(m.normalized_over, NormDomain::FullHalfline);
    assert_eq!(m.family, Family::Damped);
    let g = gram_closed_form(&[m], Segment::FullGraph, &p);
    assert!((g.entries[(0, 0)] - 1.0).norm() < 1e-12);
    // quadrature over the truncated grid loses only the e^{-2 Im(lambda) x_max} tail
    let q = m.sample(&p).norm();
    assert!((q - 1.0).abs() < 1e-6);
}

#[test]
fn vertex_residual_is_second_order() {
    let l = 2.0 * PI;
    let mut res = Vec::new();
    for n in [400.0, 4000.0] {
        let p = GraphParams::new(l, 1.0, 4.0 * l, l / n, l / n).unwrap();
        let m = build_damped_mode(&disk_roots(&p)[0], &p).unwrap();
        let r = vertex_residuals(&m.sample(&p), &p).unwrap();
        assert!(r.continuity_01.norm() < 1e-12 && r.continuity_0l.norm() < 1e-12);
        res.push(r.kirchhoff.norm());
    }
    assert!(res[0] < 1e-5, "{res:?}");
    assert!(res[1] < 1e-7, "{res:?}");
    assert!(res[0] / res[1] > 50.0);
}

#[test]
fn packet_gram_matches_quadrature() {
    let l = 2.0 * PI;
    let p = params(1.0);
    let lambdas: Vec<C64> = (1..=6).map(|n| damped_point(n, &p).lambda).collect();
    let g = exponential_packet_gram(&lambdas, l);
    let fs: Vec<GraphFunction> = lambdas
        .iter()
        .map(|lam| GraphFunction::sample(&p, |_| C64::new(0.0, 0.0), |x| (C64::new(0.0, 1.0) * lam * x).exp()))
        .collect();
    for i in 0..6 {
        for j in 0..6 {
            let q = inner_product(&fs[i], &fs[j], &p).unwrap();
            assert!((q - g[(i, j)]).norm() < 1e-6, "({i},{j}) {q} vs {}", g[(i, j)]);
        }
    }
}

#[test]
fn gram_closed_form_matches_quadrature() {
    let p = params(1.0);
    let mut modes = vec![build_damped_mode(&disk_roots(&p)[0], &p).unwrap()];
    modes.extend((1..=5).map(|n| build_damped_mode(&damped_point(n, &p), &p).unwrap()));
    for seg in [Segment::FullGraph, Segment::R2Only] {
        let a = gram_closed_form(&modes, seg, &p);
        let b = gram_matrix(&modes, seg, &p).unwrap();
        for i in 0..modes.len() {
            for j in 0..modes.len() {
                let tol = 1e-6 * (1.0 + a.entries[(i, j)].norm());
                assert!((a.entries[(i, j)] - b.entries[(i, j)]).norm() < tol, "{seg:?} ({i},{j})");
                assert!((b.entries[(i, j)] - b.entries[(j, i)].conj()).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn riesz_diagnostics_examples() {
    let p = params(1.0);
    let modes: Vec<_> = (1..=8).map(|k| build_confined_mode(k, &p)).collect();
    let d = riesz_diagnostics(&gram_closed_form(&modes, Segment::FullGraph, &p));
    assert!(d.fitted_c < 1e-12);
    assert!((d.min_eig - 1.0).abs() < 1e-12 && (d.max_eig - 1.0).abs() < 1e-12);
    let damped: Vec<_> = (1..=50).map(|n| build_damped_mode(&damped_point(n, &p), &p).unwrap()).collect();
    let d = riesz_diagnostics(&gram_closed_form(&damped, Segment::R2Only, &p));
    assert!(d.fitted_c.is_finite() && d.fitted_c < 1e3);
    assert!(d.min_eig > 0.0 && d.max_eig < 10.0);
}

#[test]
fn confined_projection() {
    let p = params(1.0);
    let phi2 = build_confined_mode(2, &p).sample(&p);
    let proj = project_pp_plus(&phi2, 5, &p).unwrap();
    assert!((proj.coeffs[1] - 1.0).norm() < 1e-8);
    assert!(proj.remainder.norm() < 1e-8);
    // data supported on R1 has no confined component
    let f = GraphFunction::sample(&p, |x| C64::new((-x).exp(), 0.0), |_| C64::new(0.0, 0.0));
    let proj = project_pp_plus(&f, 5, &p).unwrap();
    assert!(proj.coeffs.iter().all(|c| c.norm() < 1e-12));
    // idempotence
    let g = GraphFunction::sample(&p, |x| C64::new((-x).exp(), 0.0), |x| C64::new(x.sin() + 1.0, x.cos()));
    let once = project_pp_plus(&g, 5, &p).unwrap().remainder;
    let twice = project_pp_plus(&once, 5, &p).unwrap();
    assert!(twice.coeffs.iter().all(|c| c.norm() < 1e-10));
}

#[test]
fn damped_expansion_recovers_coefficients() {
    let p = params(1.0);
    let modes: Vec<_> = (1..=4).map(|n| build_damped_mode(&damped_point(n, &p), &p).unwrap()).collect();
    let c = [C64::new(1.0, 0.5), C64::new(-0.3, 0.0), C64::new(0.0, 2.0), C64::new(0.7, -0.1)];
    let mut f = GraphFunction::zeros(p.grid());
    for (ci, m) in c.iter().zip(&modes) {
        f = f.axpy(*ci, &m.sample(&p)).unwrap();
    }
    let e = expand_damped(&f, &modes, &p).unwrap();
    for (a, b) in e.coeffs.iter().zip(&c) {
        assert!((a - b).norm() < 1e-8);
    }
    assert!(e.residual < 1e-8);
    assert!(e.condition >= 1.0);
}

#[test]
fn confined_modes_are_orthogonal_to_damped_modes() {
    let p = params(1.0);
    let pts = point_spectrum(6, &p).unwrap();
    let damped: Vec<_> = pts
        .iter()
        .filter(|s| s.family != Family::Embedded)
        .map(|s| build_damped_mode(s, &p).unwrap().sample(&p))
        .collect();
    for k in 1..=6 {
        let phi = build_confined_mode(k, &p).sample(&p);
        for psi in &damped {
            assert!(inner_product(psi, &phi, &p).unwrap().norm() < 1e-8, "k = {k}");
        }
    }
}

#[test]
fn sidecar_has_required_fields() {
    let p = params(1.0);
    let v = build_damped_mode(&damped_point(3, &p), &p).unwrap().sidecar_json();
    for key in ["lambda_re", "lambda_im", "A1", "A2", "B2", "norm_const", "family", "index", "normalized_over"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["normalized_over"], "truncated");
    assert_eq!(v["index"], 3);
}
