use std::f64::consts::PI;

use tadpole::evolution::{decay_rate_report, energy_trace, evolve_modal, modal_expansion};
use tadpole::modes::build_confined_mode;
use tadpole::spectrum::{asymptotic_seed, disk_roots, embedded_eigenvalues, refine_root, SeedSign};
use tadpole::verify::mixed_initial_data;
use tadpole::{Error, GraphFunction, GraphParams, C64};

fn params() -> GraphParams {
    GraphParams::with_defaults(2.0 * PI, 1.0).unwrap()
}

#[test]
fn expansion_reconstructs_initial_data() {
    let p = params();
    let (u0, spec) = mixed_initial_data(&p).unwrap();
    let exp = modal_expansion(&u0, &spec, &p).unwrap();
    assert!(exp.residual < 1e-10);
    assert!(exp.evaluate(0.0).sub(&u0).unwrap().norm() < 1e-10 * u0.norm());
    assert_eq!(exp.confined.len(), 1);
    assert_eq!(exp.damped.len(), 1);
}

#[test]
fn confined_mode_keeps_unit_norm() {
    let p = params();
    let phi = build_confined_mode(2, &p).sample(&p);
    let spec = embedded_eigenvalues(3, &p);
    for t in [0.5, 3.0, 10.0] {
        let u = evolve_modal(&phi, &spec, t, &p).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-8);
        // u(t) = e^{4 i t} phi_2
        let expected = phi.scale(C64::new(0.0, 4.0 * t).exp());
        assert!(u.sub(&expected).unwrap().norm() < 1e-10);
    }
}

#[test]
fn damped_mode_decays_at_its_rate() {
    let p = params();
    let pt = disk_roots(&p)[0];
    let psi = tadpole::modes::build_damped_mode(&pt, &p).unwrap().sample(&p);
    let times: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
    let tr = energy_trace(&psi, &[pt], &times, &p).unwrap();
    let rate = pt.lambda_sq.im;
    for (t, e) in times.iter().zip(&tr.e_minus) {
        assert!((e / tr.e_minus[0] - (-2.0 * rate * t).exp()).abs() < 1e-10);
    }
    let slope = (tr.e_minus[10].ln() - tr.e_minus[0].ln()) / 2.0;
    assert!((slope + 2.0 * rate).abs() < 1e-10);
    assert!(tr.decay_bound_holds());
    assert_eq!(tr.omega_hat, Some(rate));
}

#[test]
fn evolution_is_linear_and_a_semigroup() {
    let p = params();
    let (u0, spec) = mixed_initial_data(&p).unwrap();
    let v0 = u0.scale(C64::new(0.3, -1.1));
    let (t, s) = (0.7, 1.3);
    let a = evolve_modal(&u0.axpy(C64::new(2.0, 0.0), &v0).unwrap(), &spec, t, &p).unwrap();
    let b = evolve_modal(&u0, &spec, t, &p).unwrap().axpy(C64::new(2.0, 0.0), &evolve_modal(&v0, &spec, t, &p).unwrap()).unwrap();
    assert!(a.sub(&b).unwrap().norm() < 1e-10 * a.norm());
    let ut = evolve_modal(&u0, &spec, t, &p).unwrap();
    let two_step = evolve_modal(&ut, &spec, s, &p).unwrap();
    let one_step = evolve_modal(&u0, &spec, t + s, &p).unwrap();
    assert!(two_step.sub(&one_step).unwrap().norm() < 1e-8 * one_step.norm());
}

#[test]
fn energy_balance() {
    let p = params();
    let (u0, spec) = mixed_initial_data(&p).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    let tr = energy_trace(&u0, &spec, &times, &p).unwrap();
    assert!(tr.is_nonincreasing(1e-12));
    assert!(tr.decay_bound_holds());
    assert!(tr.max_e_plus_drift() == 0.0);
    for i in 0..times.len() {
        let split = tr.e_plus[i] + tr.e_minus[i];
        assert!((tr.e[i] - split).abs() < 1e-8 * tr.e[0], "t = {}", times[i]);
        let law = tr.e[0] - tr.e[i] - 0.5 * tr.flux_integral[i];
        assert!(law.abs() < 1e-8 * tr.e[0], "t = {}: {law}", times[i]);
        assert!((tr.e_minus[i] - tr.e_minus_diagonal[i]).abs() < 1e-12);
        assert!(tr.e[i] <= tr.bound[i] * (1.0 + 1e-10));
    }
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,E,E_plus,E_minus,flux_integral,bound_E_plus0_plus_exp\n"));
    assert_eq!(text.lines().count(), 22);
    assert!(matches!(energy_trace(&u0, &spec, &[0.0, 1.0, 0.5], &p), Err(Error::InvalidParams(_))));
}

#[test]
fn unsupported_data_is_rejected() {
    let p = params();
    let spec = vec![disk_roots(&p)[0]];
    let g = GraphFunction::sample(&p, |x| C64::new((-(x - 5.0).powi(2)).exp(), 0.0), |_| C64::new(0.0, 0.0));
    assert!(matches!(modal_expansion(&g, &spec, &p), Err(Error::OutOfSpan(_))));
    let res = refine_root(asymptotic_seed(2, &p, SeedSign::Minus), &p).unwrap();
    assert!(matches!(modal_expansion(&g, &[res], &p), Err(Error::ResonanceMode(_))));
    let zero = GraphFunction::zeros(p.grid());
    assert!(matches!(modal_expansion(&zero, &spec, &p), Err(Error::InvalidParams(_))));
}

#[test]
fn decay_rate_comparison() {
    let p = params();
    let mut spec = embedded_eigenvalues(2, &p);
    spec.push(disk_roots(&p)[0]);
    let r = decay_rate_report(&spec, &p).unwrap();
    assert!((r.reference_rate - 0.424_413).abs() < 1e-6);
    assert_eq!(r.per_mode[0], 0.0);
    assert_eq!(r.per_mode[1], 0.0);
    assert!(r.per_mode[2] < 0.0);
    assert_eq!(r.sup_re_i_lambda_sq, 0.0);
    assert!(!r.agrees);
    assert!(decay_rate_report(&[], &p).is_err());
}
