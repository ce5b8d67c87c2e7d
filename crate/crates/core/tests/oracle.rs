use std::f64::consts::PI;

use nalgebra::DMatrix;
use tadpole::modes::build_confined_mode;
use tadpole::oracle::{
    adjudicate, build_discrete_operator, eigenpairs_raw, energy_identity_check, green_column, oracle_eigenpairs,
    oracle_evolve, weyl_residual, BandMatrix, Closure, Verdict,
};
use tadpole::resolvent::kernel_direct;
use tadpole::spectrum::disk_roots;
use tadpole::{Error, GraphFunction, GraphParams, GraphPoint, C64};

fn coarse(alpha: f64, n: f64) -> GraphParams {
    let l = 2.0 * PI;
    GraphParams::new(l, alpha, 4.0 * l, l / n, l / n).unwrap()
}

fn packet(p: &GraphParams) -> GraphFunction {
    GraphFunction::sample(
        p,
        |x| C64::new((-(x - 3.0).powi(2)).exp(), 0.0) * C64::new(0.0, 2.0 * x).exp(),
        |x| C64::new((PI * x / p.l).sin().powi(2), 0.0),
    )
}

#[test]
fn band_lu_solves_small_system() {
    let mut a = BandMatrix::zeros(7, 2, 2);
    for i in 0..7 {
        a.add(i, i, C64::new(1.0 + i as f64 * 0.1, 0.5));
        if i + 1 < 7 {
            a.add(i, i + 1, C64::new(3.0, -1.0));
            a.add(i + 1, i, C64::new(-0.5, 0.2));
        }
        if i + 2 < 7 {
            a.add(i, i + 2, C64::new(0.7, 0.0));
            a.add(i + 2, i, C64::new(4.0, 1.0));
        }
    }
    let b: Vec<C64> = (0..7).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
    let dense = a.to_dense();
    let x = a.clone().lu().unwrap().solve(&b);
    let r = &dense * DMatrix::from_column_slice(7, 1, &x) - DMatrix::from_column_slice(7, 1, &b);
    assert!(r.norm() < 1e-12);
}

#[test]
fn stiffness_symmetry() {
    let op0 = build_discrete_operator(&coarse(0.0, 40.0), Closure::Dirichlet).unwrap();
    let s0 = op0.stiffness();
    assert!((&s0 - s0.adjoint()).norm() < 1e-10);
    let op1 = build_discrete_operator(&coarse(1.0, 40.0), Closure::Dirichlet).unwrap();
    let s1 = op1.stiffness();
    let d = &s1 - s1.adjoint();
    let v = op1.vertex_index;
    assert!((d[(v, v)] - C64::new(0.0, 2.0)).norm() < 1e-10);
    let mut rest = d.clone();
    rest[(v, v)] = C64::new(0.0, 0.0);
    assert!(rest.norm() < 1e-10);
}

#[test]
fn confined_eigenvalue_is_recovered() {
    let p = coarse(1.0, 200.0);
    let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
    let pairs = oracle_eigenpairs(&op, C64::new(4.0, 0.0), 1).unwrap();
    let (mu, f) = &pairs[0];
    assert!((mu - 4.0).norm() < 2e-3, "{mu}");
    let peak = f.r2_values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(f.r1_values.iter().all(|v| v.norm() < 1e-6 * peak));
}

#[test]
fn self_adjoint_case_has_real_eigenvalues() {
    let op = build_discrete_operator(&coarse(0.0, 40.0), Closure::Dirichlet).unwrap();
    for (mu, _, _) in eigenpairs_raw(&op, C64::new(2.3, 0.1), 4).unwrap() {
        assert!(mu.im.abs() < 1e-8, "{mu}");
    }
}

#[test]
fn crank_nicolson_conserves_norm_without_damping() {
    let p = coarse(0.0, 80.0);
    let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
    let run = oracle_evolve(&op, &packet(&p), 1e-2, 200, 50).unwrap();
    let n0 = run.trace.norms_sq[0];
    assert!(run.trace.norms_sq.iter().all(|n| (n - n0).abs() < 1e-10 * n0));
    assert!(energy_identity_check(&run.trace, 0.0) < 1e-10);
    assert_eq!(run.snapshots.last().unwrap().0, 2.0);
    assert_eq!(run.snapshots.len(), 5);
}

#[test]
fn crank_nicolson_energy_law_with_damping() {
    let mut res = Vec::new();
    for (n, dt) in [(200.0, 2e-3), (400.0, 1e-3)] {
        let p = coarse(1.0, n);
        let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
        let run = oracle_evolve(&op, &packet(&p), dt, (1.0 / dt) as usize, 100).unwrap();
        assert!(run.trace.norms_sq.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        res.push(energy_identity_check(&run.trace, 1.0));
    }
    assert!(res[1] < 1e-5 && res[1] < res[0], "{res:?}");
    assert!(matches!(
        oracle_evolve(&build_discrete_operator(&coarse(1.0, 40.0), Closure::Dirichlet).unwrap(), &packet(&coarse(1.0, 40.0)), 0.0, 1, 1),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn confined_mode_is_stationary_under_crank_nicolson() {
    let p = coarse(1.0, 200.0);
    let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
    let phi = build_confined_mode(2, &p).sample(&p);
    let run = oracle_evolve(&op, &phi, 1e-2, 100, 100).unwrap();
    let n0 = run.trace.norms_sq[0];
    assert!(run.trace.norms_sq.iter().all(|n| (n - n0).abs() < 1e-8));
    assert!(run.trace.vertex_values.iter().all(|v| v.norm() < 1e-10));
}

#[test]
fn weyl_packets() {
    let l = 2.0 * PI;
    let p = GraphParams::new(l, 1.0, 24.0 * l, l / 100.0, l / 100.0).unwrap();
    let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
    let r: Vec<f64> = [8, 16, 32].iter().map(|n| weyl_residual(&op, 1.5, *n).unwrap().residual).collect();
    assert!(r[0] / r[1] > 1.6 && r[1] / r[2] > 1.6, "{r:?}");
    // at zero energy the residual is the packet curvature only
    let r0: Vec<f64> = [8, 16].iter().map(|n| weyl_residual(&op, 0.0, *n).unwrap().residual).collect();
    assert!(r0[0] / r0[1] > 3.5, "{r0:?}");
    let w = weyl_residual(&op, 1.5, 16).unwrap();
    assert!(w.packet_norm > 1.0 && w.packet_norm < 2f64.sqrt(), "{}", w.packet_norm);
    assert!(matches!(weyl_residual(&op, 1.5, 100), Err(Error::PacketTruncation { .. })));
}

#[test]
fn green_column_matches_kernel() {
    let z = C64::new(-1.0, 2.0);
    let l = 2.0 * PI;
    let mut err = Vec::new();
    for n in [100.0, 200.0] {
        let p = coarse(1.0, n);
        let op = build_discrete_operator(&p, Closure::Dirichlet).unwrap();
        let y = GraphPoint::r2(l / 4.0);
        let g = green_column(&op, z * z, y).unwrap();
        let mut worst: f64 = 0.0;
        for (j, v) in g.r2_values.iter().enumerate().step_by(5) {
            let k = kernel_direct(GraphPoint::r2(g.grid.x2(j)), y, z, &p).unwrap();
            worst = worst.max((v - k).norm());
        }
        for (j, v) in g.r1_values.iter().enumerate().take(g.grid.n1 / 4).step_by(5) {
            let k = kernel_direct(GraphPoint::r1(g.grid.x1(j)), y, z, &p).unwrap();
            worst = worst.max((v - k).norm());
        }
        err.push(worst);
    }
    assert!(err[0] < 1e-3, "{err:?}");
    assert!(err[0] / err[1] > 3.0, "{err:?}");
}

#[test]
fn disk_root_is_confirmed() {
    let p = GraphParams::with_defaults(2.0 * PI, 1.0).unwrap();
    let lam = disk_roots(&p)[0].lambda;
    let a = adjudicate(lam, &p).unwrap();
    assert_eq!(a.verdict, Verdict::Confirmed);
    assert_eq!(a.closure, Closure::Dirichlet);
    assert!(a.distance <= a.tolerance);
    let v = serde_json::to_value(&a).unwrap();
    for key in ["root", "lambda_sq", "oracle_mu", "distance", "tolerance", "closure", "h1", "h2", "verdict"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["verdict"], "confirmed");
}

#[test]
fn oracle_is_independent_of_the_analytic_modules() {
    let src = include_str!("../src/oracle.rs");
    for m in ["secular", "spectrum", "resolvent", "modes", "evolution"] {
        assert!(!src.contains(&format!("crate::{m}")), "{m}");
        assert!(!src.contains(&format!("super::{m}")), "{m}");
    }
}
