//! Confined and damped eigenfunctions, Gram matrices, Riesz diagnostics and
//! spectral projections.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{exp_integral, inner_product, inner_product_r2, GraphFunction, GraphParams, C64, I};
use crate::secular::{t2, POLE_TOL};
use crate::spectrum::{Family, SpectralPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormDomain {
    FullHalfline,
    Truncated,
}

/// u1 = A1 e^{i l x} on R1 and u2 = A2 e^{i l x} + B2 e^{-i l x} on R2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub lambda: C64,
    pub a1: C64,
    pub a2: C64,
    pub b2: C64,
    pub norm_const: C64,
    pub family: Family,
    pub normalized_over: NormDomain,
    pub index: usize,
}

impl ModeFunction {
    pub fn eval_r1(&self, x: f64) -> C64 {
        if self.a1 == C64::new(0.0, 0.0) {
            return self.a1;
        }
        self.a1 * (I * self.lambda * x).exp()
    }

    pub fn eval_r2(&self, x: f64) -> C64 {
        self.a2 * (I * self.lambda * x).exp() + self.b2 * (-I * self.lambda * x).exp()
    }

    pub fn sample(&self, params: &GraphParams) -> GraphFunction {
        GraphFunction::sample(params, |x| self.eval_r1(x), |x| self.eval_r2(x))
    }

    /// Value at the vertex.
    pub fn vertex_value(&self) -> C64 {
        self.a2 + self.b2
    }

    /// Closed-form squared norm of the R2 part.
    pub fn r2_norm_sq(&self, params: &GraphParams) -> f64 {
        r2_norm_sq(self.lambda, self.a2, self.b2, params.l)
    }

    /// JSON sidecar with complex numbers as [re, im].
    pub fn sidecar_json(&self) -> serde_json::Value {
        let c = |z: C64| serde_json::json!([z.re, z.im]);
        serde_json::json!({
            "lambda_re": self.lambda.re,
            "lambda_im": self.lambda.im,
            "A1": c(self.a1),
            "A2": c(self.a2),
            "B2": c(self.b2),
            "norm_const": c(self.norm_const),
            "family": self.family.tag(),
            "index": self.index,
            "normalized_over": match self.normalized_over {
                NormDomain::FullHalfline => "full_halfline",
                NormDomain::Truncated => "truncated",
            },
        })
    }
}

/// Integral over [0, L] of |A e^{i l x} + B e^{-i l x}|^2.
fn r2_norm_sq(lambda: C64, a: C64, b: C64, l: f64) -> f64 {
    let mu = lambda.im;
    let ia = exp_integral(C64::new(-2.0 * mu, 0.0), l).re;
    let ib = exp_integral(C64::new(2.0 * mu, 0.0), l).re;
    let cross = exp_integral(C64::new(0.0, 2.0 * lambda.re), l);
    a.norm_sqr() * ia + b.norm_sqr() * ib + 2.0 * (a * b.conj() * cross).re
}

/// Integral of |e^{i l x}|^2 over [0, x_max], or over [0, inf) when `full`.
fn r1_norm_sq(lambda: C64, x_max: f64, full: bool) -> f64 {
    let mu = lambda.im;
    if full {
        1.0 / (2.0 * mu)
    } else {
        exp_integral(C64::new(-2.0 * mu, 0.0), x_max).re
    }
}

/// sqrt(2/L) sin(2 k pi x / L) on R2, zero on R1.
pub fn build_confined_mode(k: usize, params: &GraphParams) -> ModeFunction {
    let lambda = C64::new(2.0 * PI * k as f64 / params.l, 0.0);
    let c = (2.0 / params.l).sqrt();
    let a2 = c / (2.0 * I);
    ModeFunction {
        lambda,
        a1: C64::new(0.0, 0.0),
        a2,
        b2: -a2,
        norm_const: C64::new(c, 0.0),
        family: Family::Embedded,
        normalized_over: NormDomain::FullHalfline,
        index: k,
    }
}

/// Damped-family mode: A2 = C, B2 = C (3 l - a)/(l + a), A1 = C 4 l/(l + a),
/// normalized over the half-line when Im lambda > 0 and over [0, x_max]
/// otherwise.
pub fn build_damped_mode(point: &SpectralPoint, params: &GraphParams) -> Result<ModeFunction> {
    let lambda = point.lambda;
    let a = params.alpha;
    if (lambda + a).norm() < POLE_TOL {
        return Err(Error::PoleProximity { factor: "lambda + alpha", magnitude: (lambda + a).norm() });
    }
    if lambda.norm() == 0.0 {
        return Err(Error::Singularity("lambda = 0".into()));
    }
    let ratio = t2(lambda, a);
    let a1_unit = 4.0 * lambda / (lambda + a);
    let full = lambda.im > 0.0;
    let nsq = a1_unit.norm_sqr() * r1_norm_sq(lambda, params.x_max, full)
        + r2_norm_sq(lambda, C64::new(1.0, 0.0), ratio, params.l);
    let c = C64::new(1.0 / nsq.sqrt(), 0.0);
    Ok(ModeFunction {
        lambda,
        a1: c * a1_unit,
        a2: c,
        b2: c * ratio,
        norm_const: c,
        family: point.family,
        normalized_over: if full { NormDomain::FullHalfline } else { NormDomain::Truncated },
        index: point.index,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    /// R2 restrictions, each rescaled to unit norm on [0, L].
    R2Only,
    FullGraph,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<C64>,
    pub segment: Segment,
    pub indices: Vec<usize>,
}

/// Gram matrix by quadrature on the sampling grid: entry (n, m) = <psi_n, psi_m>.
pub fn gram_matrix(modes: &[ModeFunction], segment: Segment, params: &GraphParams) -> Result<GramMatrix> {
    if modes.is_empty() {
        return Err(Error::Shape("empty mode list".into()));
    }
    let samples: Vec<GraphFunction> = modes
        .par_iter()
        .map(|m| {
            let s = m.sample(params);
            match segment {
                Segment::FullGraph => s,
                Segment::R2Only => {
                    let r = s.restrict_r2();
                    let nr = r.r2_norm();
                    r.scale(C64::new(1.0 / nr, 0.0))
                }
            }
        })
        .collect();
    gram_of_functions(&samples, segment, modes.iter().map(|m| m.index).collect(), params)
}

/// Gram matrix of arbitrary sampled functions.
pub fn gram_of_functions(
    fs: &[GraphFunction],
    segment: Segment,
    indices: Vec<usize>,
    params: &GraphParams,
) -> Result<GramMatrix> {
    let n = fs.len();
    for f in fs {
        f.check_same_grid(&fs[0])?;
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let vals: Vec<Result<C64>> = pairs
        .par_iter()
        .map(|&(i, j)| match segment {
            Segment::FullGraph => inner_product(&fs[i], &fs[j], params),
            Segment::R2Only => inner_product_r2(&fs[i], &fs[j]),
        })
        .collect();
    let mut g = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (&(i, j), v) in pairs.iter().zip(vals) {
        let v = v?;
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    Ok(GramMatrix { entries: g, segment, indices })
}

/// Exact Gram matrix of the closed-form modes (R1 integrals over the
/// declared normalization domain).
pub fn gram_closed_form(modes: &[ModeFunction], segment: Segment, params: &GraphParams) -> GramMatrix {
    let l = params.l;
    let n = modes.len();
    // <a e^{i p x} + b e^{-i p x}, c e^{i q x} + d e^{-i q x}> on [0, L]
    let r2 = |m: &ModeFunction, k: &ModeFunction| {
        let (p, q) = (m.lambda, k.lambda.conj());
        m.a2 * k.a2.conj() * exp_integral(I * (p - q), l)
            + m.a2 * k.b2.conj() * exp_integral(I * (p + q), l)
            + m.b2 * k.a2.conj() * exp_integral(-I * (p + q), l)
            + m.b2 * k.b2.conj() * exp_integral(-I * (p - q), l)
    };
    let r1 = |m: &ModeFunction, k: &ModeFunction| {
        if m.a1.norm() == 0.0 || k.a1.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let c = I * (m.lambda - k.lambda.conj());
        let full = m.normalized_over == NormDomain::FullHalfline && k.normalized_over == NormDomain::FullHalfline;
        let integral = if full { -1.0 / c } else { exp_integral(c, params.x_max) };
        m.a1 * k.a1.conj() * integral
    };
    let scale: Vec<f64> = modes
        .iter()
        .map(|m| match segment {
            Segment::FullGraph => 1.0,
            Segment::R2Only => 1.0 / m.r2_norm_sq(params).sqrt(),
        })
        .collect();
    let mut g = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let mut v = r2(&modes[i], &modes[j]);
            if segment == Segment::FullGraph {
                v += r1(&modes[i], &modes[j]);
            }
            g[(i, j)] = v * scale[i] * scale[j];
        }
    }
    GramMatrix { entries: g, segment, indices: modes.iter().map(|m| m.index).collect() }
}

/// Gram matrix of pure exponentials e^{i l_n x} on [0, L]:
/// (e^{i (l_n - conj l_m) L} - 1) / (i (l_n - conj l_m)).
pub fn exponential_packet_gram(lambdas: &[C64], l: f64) -> DMatrix<C64> {
    let n = lambdas.len();
    DMatrix::from_fn(n, n, |i, j| exp_integral(I * (lambdas[i] - lambdas[j].conj()), l))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszDiagnostics {
    pub fitted_c: f64,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// Weighted off-diagonal decay constant and extreme eigenvalues of a Gram matrix.
pub fn riesz_diagnostics(g: &GramMatrix) -> RieszDiagnostics {
    let m = &g.entries;
    let n = m.nrows();
    let mut fitted_c: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (g.indices[i] as f64, g.indices[j] as f64);
            let w = (1.0 + a.min(b).powi(2)).sqrt() * (a - b).abs();
            fitted_c = fitted_c.max(m[(i, j)].norm() * w);
        }
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm).eigenvalues;
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    RieszDiagnostics { fitted_c, min_eig, max_eig }
}

#[derive(Clone, Debug)]
pub struct PpProjection {
    pub coeffs: Vec<C64>,
    pub remainder: GraphFunction,
}

/// Projection onto the span of the confined modes phi_(2k), k = 1..kmax.
pub fn project_pp_plus(f: &GraphFunction, kmax: usize, params: &GraphParams) -> Result<PpProjection> {
    let mut remainder = f.clone();
    let mut coeffs = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let phi = build_confined_mode(k, params).sample(params);
        let c = inner_product(f, &phi, params)?;
        remainder = remainder.axpy(-c, &phi)?;
        coeffs.push(c);
    }
    Ok(PpProjection { coeffs, remainder })
}

#[derive(Clone, Debug)]
pub struct DampedExpansion {
    pub coeffs: Vec<C64>,
    /// ||f - sum c_n psi_n||
    pub residual: f64,
    pub condition: f64,
}

/// Solves the Gram system for the coefficients of f in a nonorthogonal family.
pub fn expand_damped(f: &GraphFunction, modes: &[ModeFunction], params: &GraphParams) -> Result<DampedExpansion> {
    let samples: Vec<GraphFunction> = modes.iter().map(|m| m.sample(params)).collect();
    expand_in_functions(f, &samples, params)
}

/// Coefficients of f in the span of the given functions (least squares in
/// the graph inner product).
pub fn expand_in_functions(f: &GraphFunction, basis: &[GraphFunction], params: &GraphParams) -> Result<DampedExpansion> {
    if basis.is_empty() {
        return Ok(DampedExpansion { coeffs: vec![], residual: f.norm(), condition: 1.0 });
    }
    let g = gram_of_functions(basis, Segment::FullGraph, (0..basis.len()).collect(), params)?;
    let eig = nalgebra::SymmetricEigen::new(g.entries.clone()).eigenvalues;
    let (mn, mx) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let condition = if mn > 0.0 { mx / mn } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(Error::IllConditioned(condition));
    }
    let n = basis.len();
    // sum_m c_m <psi_m, psi_n> = <f, psi_n>, i.e. G^T c = b
    let mut b = nalgebra::DVector::from_element(n, C64::new(0.0, 0.0));
    for (i, psi) in basis.iter().enumerate() {
        b[i] = inner_product(f, psi, params)?;
    }
    let a = g.entries.transpose();
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::LinearSolve("singular Gram matrix".into()))?;
    let mut r = f.clone();
    for (i, psi) in basis.iter().enumerate() {
        r = r.axpy(-c[i], psi)?;
    }
    Ok(DampedExpansion { coeffs: c.iter().cloned().collect(), residual: r.norm(), condition })
}
