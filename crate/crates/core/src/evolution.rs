//! Modal solution of u' = iHu, energy traces and decay-rate comparison.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{exp_integral, GraphFunction, GraphParams, C64, I};
use crate::modes::{
    build_confined_mode, build_damped_mode, expand_in_functions, gram_of_functions, ModeFunction, Segment,
};
use crate::spectrum::{Family, SpectralPoint};

/// Relative expansion residual above which data is rejected.
pub const SPAN_TOL: f64 = 1e-4;

/// Expansion of initial data in confined modes plus damped modes.
#[derive(Clone, Debug)]
pub struct ModalExpansion {
    pub params: GraphParams,
    pub confined: Vec<ModeFunction>,
    pub confined_coeffs: Vec<C64>,
    pub damped: Vec<ModeFunction>,
    pub damped_coeffs: Vec<C64>,
    /// Entry (n, m) = <psi_n, psi_m> by quadrature.
    pub damped_gram: DMatrix<C64>,
    /// ||u0 - expansion|| / ||u0||
    pub residual: f64,
    samples: Vec<GraphFunction>,
}

fn select_modes(spec: &[SpectralPoint], params: &GraphParams) -> Result<(Vec<ModeFunction>, Vec<ModeFunction>)> {
    let mut confined: Vec<ModeFunction> = Vec::new();
    let mut damped = Vec::new();
    for p in spec {
        match p.family {
            Family::Embedded => {
                if !confined.iter().any(|m| m.index == p.index) {
                    confined.push(build_confined_mode(p.index, params));
                }
            }
            _ => {
                if p.lambda_sq.im <= 0.0 {
                    return Err(Error::ResonanceMode(p.lambda));
                }
                damped.push(build_damped_mode(p, params)?);
            }
        }
    }
    Ok((confined, damped))
}

pub fn modal_expansion(u0: &GraphFunction, spec: &[SpectralPoint], params: &GraphParams) -> Result<ModalExpansion> {
    let (confined, damped) = select_modes(spec, params)?;
    let u_norm = u0.norm();
    if u_norm == 0.0 {
        return Err(Error::InvalidParams("zero initial data".into()));
    }
    let confined_samples: Vec<GraphFunction> = confined.iter().map(|m| m.sample(params)).collect();
    let mut remainder = u0.clone();
    let mut confined_coeffs = Vec::with_capacity(confined.len());
    for phi in &confined_samples {
        let c = crate::graph::inner_product(u0, phi, params)?;
        remainder = remainder.axpy(-c, phi)?;
        confined_coeffs.push(c);
    }
    let damped_samples: Vec<GraphFunction> = damped.par_iter().map(|m| m.sample(params)).collect();
    let exp = expand_in_functions(&remainder, &damped_samples, params)?;
    let residual = exp.residual / u_norm;
    if residual >= SPAN_TOL {
        return Err(Error::OutOfSpan(residual));
    }
    let damped_gram = if damped_samples.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        gram_of_functions(&damped_samples, Segment::FullGraph, damped.iter().map(|m| m.index).collect(), params)?
            .entries
    };
    let mut samples = confined_samples;
    samples.extend(damped_samples);
    Ok(ModalExpansion {
        params: *params,
        confined,
        confined_coeffs,
        damped,
        damped_coeffs: exp.coeffs,
        damped_gram,
        residual,
        samples,
    })
}

impl ModalExpansion {
    fn lambdas_sq(&self) -> impl Iterator<Item = C64> + '_ {
        self.confined.iter().chain(&self.damped).map(|m| m.lambda * m.lambda)
    }

    fn coeffs(&self) -> impl Iterator<Item = C64> + '_ {
        self.confined_coeffs.iter().chain(&self.damped_coeffs).cloned()
    }

    /// sum c e^{i lambda^2 t} psi
    pub fn evaluate(&self, t: f64) -> GraphFunction {
        let mut u = GraphFunction::zeros(self.samples[0].grid);
        for ((c, l2), s) in self.coeffs().zip(self.lambdas_sq()).zip(&self.samples) {
            u = u.axpy(c * (I * l2 * t).exp(), s).expect("same grid");
        }
        u
    }

    fn damped_coeffs_at(&self, t: f64) -> Vec<C64> {
        self.damped
            .iter()
            .zip(&self.damped_coeffs)
            .map(|(m, c)| c * (I * m.lambda * m.lambda * t).exp())
            .collect()
    }

    /// 1/2 sum |c_k|^2
    pub fn e_plus(&self) -> f64 {
        0.5 * self.confined_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// 1/2 || sum d_n(t) psi_n ||^2 through the Gram matrix.
    pub fn e_minus(&self, t: f64) -> f64 {
        let d = self.damped_coeffs_at(t);
        let mut s = C64::new(0.0, 0.0);
        for (n, dn) in d.iter().enumerate() {
            for (m, dm) in d.iter().enumerate() {
                s += dn * dm.conj() * self.damped_gram[(n, m)];
            }
        }
        0.5 * s.re
    }

    /// 1/2 sum |d_n(t)|^2 <psi_n, psi_n>
    pub fn e_minus_diagonal(&self, t: f64) -> f64 {
        let d = self.damped_coeffs_at(t);
        0.5 * d.iter().enumerate().map(|(n, c)| c.norm_sqr() * self.damped_gram[(n, n)].re).sum::<f64>()
    }

    /// 2 alpha int_0^t |u(vertex, s)|^2 ds in closed form.
    pub fn flux_integral(&self, t: f64) -> f64 {
        let w: Vec<(C64, C64)> = self
            .damped
            .iter()
            .zip(&self.damped_coeffs)
            .map(|(m, c)| (c * m.vertex_value(), m.lambda * m.lambda))
            .collect();
        let mut s = C64::new(0.0, 0.0);
        for (a, la) in &w {
            for (b, lb) in &w {
                s += a * b.conj() * exp_integral(I * (la - lb.conj()), t);
            }
        }
        2.0 * self.params.alpha * s.re
    }

    /// min Im lambda^2 over the damped modes used.
    pub fn omega_hat(&self) -> Option<f64> {
        self.damped.iter().map(|m| (m.lambda * m.lambda).im).reduce(f64::min)
    }
}

pub fn evolve_modal(u0: &GraphFunction, spec: &[SpectralPoint], t: f64, params: &GraphParams) -> Result<GraphFunction> {
    Ok(modal_expansion(u0, spec, params)?.evaluate(t))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    /// 1/2 ||u(t)||^2 by quadrature
    pub e: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub e_minus_diagonal: Vec<f64>,
    pub flux_integral: Vec<f64>,
    pub omega_hat: Option<f64>,
    /// E_plus(0) + e^{-2 omega_hat t} E_minus(0)
    pub bound: Vec<f64>,
    pub expansion_residual: f64,
}

impl EnergyTrace {
    /// E_minus(t) <= e^{-2 omega_hat t} E_minus(0) (1 + 1e-8) at every time.
    pub fn decay_bound_holds(&self) -> bool {
        let w = self.omega_hat.unwrap_or(0.0);
        self.times
            .iter()
            .zip(&self.e_minus)
            .all(|(t, e)| *e <= (-2.0 * w * t).exp() * self.e_minus[0] * (1.0 + 1e-8) + 1e-300)
    }

    pub fn max_e_plus_drift(&self) -> f64 {
        self.e_plus.iter().map(|e| (e - self.e_plus[0]).abs()).fold(0.0, f64::max)
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.e.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t,E,E_plus,E_minus,flux_integral,bound_E_plus0_plus_exp")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.e[i], self.e_plus[i], self.e_minus[i], self.flux_integral[i], self.bound[i]
            )?;
        }
        Ok(())
    }
}

pub fn energy_trace_of(exp: &ModalExpansion, times: &[f64]) -> EnergyTrace {
    let omega_hat = exp.omega_hat();
    let w = omega_hat.unwrap_or(0.0);
    let rows: Vec<(f64, f64, f64, f64)> = times
        .par_iter()
        .map(|&t| (0.5 * exp.evaluate(t).norm().powi(2), exp.e_minus(t), exp.e_minus_diagonal(t), exp.flux_integral(t)))
        .collect();
    let e_plus = exp.e_plus();
    let e_minus0 = exp.e_minus(0.0);
    EnergyTrace {
        times: times.to_vec(),
        e: rows.iter().map(|r| r.0).collect(),
        e_plus: vec![e_plus; times.len()],
        e_minus: rows.iter().map(|r| r.1).collect(),
        e_minus_diagonal: rows.iter().map(|r| r.2).collect(),
        flux_integral: rows.iter().map(|r| r.3).collect(),
        omega_hat,
        bound: times.iter().map(|t| e_plus + (-2.0 * w * t).exp() * e_minus0).collect(),
        expansion_residual: exp.residual,
    }
}

pub fn energy_trace(u0: &GraphFunction, spec: &[SpectralPoint], times: &[f64], params: &GraphParams) -> Result<EnergyTrace> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("times must be increasing".into()));
    }
    Ok(energy_trace_of(&modal_expansion(u0, spec, params)?, times))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRateReport {
    /// sup of Re(i lambda^2) = -Im lambda^2 over the supplied points.
    pub sup_re_i_lambda_sq: f64,
    /// 8 alpha / (3 L)
    pub reference_rate: f64,
    pub per_mode: Vec<f64>,
    /// Whether -sup agrees with the quoted rate to 1e-3 relative.
    pub agrees: bool,
}

pub fn decay_rate_report(spec: &[SpectralPoint], params: &GraphParams) -> Result<DecayRateReport> {
    if spec.is_empty() {
        return Err(Error::InvalidParams("empty spectrum".into()));
    }
    let per_mode: Vec<f64> = spec
        .iter()
        .map(|p| match p.family {
            Family::Embedded => 0.0,
            _ => -p.lambda_sq.im,
        })
        .collect();
    let sup = per_mode.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let reference_rate = 8.0 * params.alpha / (3.0 * params.l);
    let agrees = (-sup - reference_rate).abs() <= 1e-3 * reference_rate.abs().max(1e-300);
    Ok(DecayRateReport { sup_re_i_lambda_sq: sup, reference_rate, per_mode, agrees })
}
