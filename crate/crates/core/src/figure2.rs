//! Damped-family branches lambda_n(alpha) for a sweep of damping constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{GraphParams, C64};
use crate::spectrum::track_branch;

/// Damping constants of the default sweep.
pub const DEFAULT_SWEEP: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Figure2Row {
    pub alpha: f64,
    pub n: usize,
    pub lambda: C64,
    /// Re(i lambda^2) = -Im lambda^2
    pub re_i_lambda_sq: f64,
    /// -8 alpha / (3 L)
    pub reference: f64,
}

pub fn figure2_rows(alphas: &[f64], nmax: usize, l: f64) -> Result<Vec<Figure2Row>> {
    let jobs: Vec<(f64, usize)> = alphas.iter().flat_map(|a| (1..=nmax).map(move |n| (*a, n))).collect();
    jobs.par_iter()
        .map(|&(alpha, n)| {
            let p = GraphParams::with_defaults(l, alpha)?;
            let lambda = track_branch(n, &p)?;
            Ok(Figure2Row {
                alpha,
                n,
                lambda,
                re_i_lambda_sq: -(lambda * lambda).im,
                reference: -8.0 * alpha / (3.0 * l),
            })
        })
        .collect()
}

/// CSV text with an optional leading comment line and a line listing the sweep.
pub fn figure2_csv_with(alphas: &[f64], nmax: usize, l: f64, comment: Option<&str>) -> Result<String> {
    let rows = figure2_rows(alphas, nmax, l)?;
    let mut s = String::new();
    if let Some(c) = comment {
        s.push_str(&format!("# {c}\n"));
    }
    s.push_str(&format!("# alpha sweep {:?}, L = {l}\n", alphas));
    s.push_str("alpha,n,re_lambda,im_lambda,re_i_lambda_sq,reference_re_i_lambda_sq\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.alpha, r.n, r.lambda.re, r.lambda.im, r.re_i_lambda_sq, r.reference
        ));
    }
    Ok(s)
}

pub fn figure2_csv(alphas: &[f64], nmax: usize, l: f64) -> Result<String> {
    figure2_csv_with(alphas, nmax, l, None)
}
