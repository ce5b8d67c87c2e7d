//! Resolvent coefficients, determinants and characteristic functions.
//!
//! Conventions: for a spectral parameter z with Im z > 0 we write
//! omega = -i z (so Re omega > 0) and E = e^{-omega L} = e^{i z L}. The
//! resolvent kernel of (H - z^2)^{-1} is assembled from
//! e^{-omega |x - y|} / (2 omega) plus reflected waves whose amplitudes are
//! the nine coefficients below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphParams, C64, I};

/// Below this magnitude a denominator is treated as vanishing.
pub const POLE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub z: C64,
    pub omega: C64,
    /// e^{-omega L}
    pub e: C64,
    pub f1: C64,
    pub f2: C64,
    pub f3: C64,
    pub g1: C64,
    pub g2: C64,
    pub g3: C64,
    pub h1: C64,
    pub h2: C64,
    pub h3: C64,
    /// F3 / E, H1 / E, G3 / E, H2 / E and H3 / E^2: the combinations that
    /// multiply decaying exponentials in the kernel.
    pub f3_over_e: C64,
    pub h1_over_e: C64,
    pub g3_over_e: C64,
    pub h2_over_e: C64,
    pub h3_over_e2: C64,
    pub d_alpha: C64,
    pub omega_c: C64,
    pub a_alpha: C64,
}

fn guard(factor: &'static str, v: C64) -> Result<()> {
    if v.norm() < POLE_TOL {
        Err(Error::PoleProximity { factor, magnitude: v.norm() })
    } else {
        Ok(())
    }
}

/// Evaluates all resolvent coefficients at `z`.
pub fn eval_coefficients(z: C64, params: &GraphParams) -> Result<CoefficientSet> {
    if z.norm() == 0.0 {
        return Err(Error::Singularity("z = 0".into()));
    }
    let a = params.alpha;
    let l = params.l;
    let omega = -I * z;
    let e = (-omega * l).exp();
    guard("omega - i alpha", omega - I * a)?;
    let omega_c = (3.0 * omega + I * a) / (omega - I * a);
    guard("e^{-omega L} - 1", e - 1.0)?;
    guard("e^{-omega L} - omega_c", e - omega_c)?;
    // den = i (omega - i alpha) (E - omega_c)
    let den = e * (a + I * omega) + a - 3.0 * I * omega;
    let em1 = e - 1.0;

    let f1 = (e * (a + 3.0 * I * omega) + a - I * omega) / den;
    let g1 = -2.0 * I * omega / den;
    let f2 = g1;
    let h1 = e * g1;
    let f3 = h1;
    let g2 = (a - I * omega) / (em1 * den);
    let g3_over_e = -(e * (a + I * omega) - 2.0 * I * omega) / (em1 * den);
    let h2_over_e = g3_over_e;
    let h3_over_e2 = (a - I * omega) / (em1 * den);

    let d_alpha = (1.0 - I * a / omega) * (1.0 - e) * (e - omega_c) / e;
    let a_alpha = (omega + I * a) * (11.0 * omega * omega + a * a + 6.0 * I * a * omega)
        / (2.0 * omega * (omega - I * a) * (omega - I * a));

    Ok(CoefficientSet {
        z,
        omega,
        e,
        f1,
        f2,
        f3,
        g1,
        g2,
        g3: e * g3_over_e,
        h1,
        h2: e * h2_over_e,
        h3: e * e * h3_over_e2,
        f3_over_e: g1,
        h1_over_e: g1,
        g3_over_e,
        h2_over_e,
        h3_over_e2,
        d_alpha,
        omega_c,
        a_alpha,
    })
}

/// Maximum relative residual of each of the three 3x3 systems (continuity
/// at both loop ends plus Kirchhoff) that define the coefficients, written in
/// scaled unknowns so that no growing exponential appears.
pub fn linear_system_residuals(cs: &CoefficientSet, params: &GraphParams) -> [f64; 3] {
    let e = cs.e;
    let k = 1.0 + I * params.alpha / cs.omega;
    let rel = |terms: &[C64], rhs: C64| {
        let lhs: C64 = terms.iter().sum();
        let scale = terms.iter().map(|t| t.norm()).sum::<f64>().max(rhs.norm()).max(1.0);
        (lhs - rhs).norm() / scale
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);

    // system 1: unknowns F1, G1, H1 = E h
    let (f, g, h) = (cs.f1, cs.g1, cs.h1_over_e);
    let s1 = [
        rel(&[f, g, e * h], one),
        rel(&[g * (1.0 - e), h * (e - 1.0)], zero),
        rel(&[k * f, g * (e - 1.0), h * (e - 1.0)], -1.0 + I * params.alpha / cs.omega),
    ];
    // system 2: unknowns F2, G2, H2 = E h
    let (f, g, h) = (cs.f2, cs.g2, cs.h2_over_e);
    let s2 = [
        rel(&[-f, g, e * h], -one),
        rel(&[g * (1.0 - e), h * (e - 1.0)], -one),
        rel(&[-k * f, g * (e - 1.0), h * (e - 1.0)], -one),
    ];
    // system 3: unknowns F3 = E f, G3 = E g, H3 = E^2 h, rows divided by E
    let (f, g, h) = (cs.f3_over_e, cs.g3_over_e, cs.h3_over_e2);
    let s3 = [
        rel(&[-f, g, e * h], zero),
        rel(&[g * (1.0 - e), h * (e - 1.0)], one),
        rel(&[-k * f, g * (e - 1.0), h * (e - 1.0)], -one),
    ];
    let mx = |s: [f64; 3]| s.iter().cloned().fold(0.0, f64::max);
    [mx(s1), mx(s2), mx(s3)]
}

fn check_lambda(lambda: C64) -> Result<()> {
    if lambda.norm() == 0.0 {
        Err(Error::Singularity("lambda = 0".into()))
    } else {
        Ok(())
    }
}

/// T2(lambda) = (3 lambda - alpha) / (lambda + alpha).
pub fn t2(lambda: C64, alpha: f64) -> C64 {
    (3.0 * lambda - alpha) / (lambda + alpha)
}

/// Secular function d(lambda) = (1 + a/l) T - 4 + (3 - a/l) / T with
/// T = e^{i lambda L}.
pub fn eval_d(lambda: C64, params: &GraphParams) -> Result<C64> {
    check_lambda(lambda)?;
    let r = params.alpha / lambda;
    let t = (I * lambda * params.l).exp();
    Ok((1.0 + r) * t - 4.0 + (3.0 - r) / t)
}

/// First derivative of d.
pub fn eval_d_prime(lambda: C64, params: &GraphParams) -> Result<C64> {
    check_lambda(lambda)?;
    let (a, l) = (params.alpha, params.l);
    let t = (I * lambda * l).exp();
    let ti = 1.0 / t;
    let l2 = lambda * lambda;
    Ok(-a / l2 * t + (1.0 + a / lambda) * I * l * t + a / l2 * ti - I * l * (3.0 - a / lambda) * ti)
}

/// Second derivative of d.
pub fn eval_d_second(lambda: C64, params: &GraphParams) -> Result<C64> {
    check_lambda(lambda)?;
    let (a, l) = (params.alpha, params.l);
    let t = (I * lambda * l).exp();
    let ti = 1.0 / t;
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let ta = 2.0 * a / l3 * t - 2.0 * I * l * a / l2 * t - l * l * (1.0 + a / lambda) * t;
    let tb = -2.0 * a / l3 * ti - 2.0 * I * l * a / l2 * ti - l * l * (3.0 - a / lambda) * ti;
    Ok(ta + tb)
}

/// Factorized form e^{-i l L} (1 + a/l) (T - 1) (T - T2).
pub fn eval_d_factorized(lambda: C64, params: &GraphParams) -> Result<C64> {
    check_lambda(lambda)?;
    let t = (I * lambda * params.l).exp();
    Ok((1.0 + params.alpha / lambda) * (t - 1.0) * (t - t2(lambda, params.alpha)) / t)
}

/// h_alpha(lambda) = e^{i lambda L} + 4 alpha / (lambda + alpha) - 3.
pub fn eval_h(lambda: C64, params: &GraphParams) -> Result<C64> {
    let s = lambda + params.alpha;
    if s.norm() < POLE_TOL {
        return Err(Error::PoleProximity { factor: "lambda + alpha", magnitude: s.norm() });
    }
    Ok((I * lambda * params.l).exp() + 4.0 * params.alpha / s - 3.0)
}

/// Entire form of the damped-family factor: g(lambda) = (lambda + alpha) T - (3 lambda - alpha).
pub fn eval_branch(lambda: C64, params: &GraphParams) -> C64 {
    let t = (I * lambda * params.l).exp();
    (lambda + params.alpha) * t - (3.0 * lambda - params.alpha)
}

pub fn eval_branch_prime(lambda: C64, params: &GraphParams) -> C64 {
    let t = (I * lambda * params.l).exp();
    t + (lambda + params.alpha) * I * params.l * t - 3.0
}

/// Matrix of the homogeneous system for an eigenfunction
/// u1 = A1 e^{i l x}, u2 = A2 e^{i l x} + B2 e^{-i l x}; unknowns (A1, A2, B2).
pub fn eigen_system(lambda: C64, params: &GraphParams) -> [[C64; 3]; 3] {
    let t = (I * lambda * params.l).exp();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    [
        [one, -one, -one],
        [zero, 1.0 - t, 1.0 - 1.0 / t],
        [I * (lambda - params.alpha), I * lambda * (1.0 - t), I * lambda * (1.0 / t - 1.0)],
    ]
}

/// Number of (numerically) zero singular values of the eigen system, i.e.
/// the geometric multiplicity of lambda^2 as an eigenvalue of the formal
/// problem.
pub fn geometric_multiplicity(lambda: C64, params: &GraphParams, tol: f64) -> usize {
    let m = eigen_system(lambda, params);
    let mat = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    let sv = mat.singular_values();
    let smax = sv.max().max(1.0);
    sv.iter().filter(|s| **s < tol * smax).count()
}
