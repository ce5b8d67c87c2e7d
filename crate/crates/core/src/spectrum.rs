//! Point spectrum: embedded eigenvalues, the damped family and its
//! continuation, and argument-principle certification.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphParams, C64, I};
use crate::secular::{eval_branch, eval_branch_prime, eval_d, eval_d_prime, eval_d_second};

pub const LN3: f64 = 1.098_612_288_668_109_7;
const MAX_NEWTON: usize = 50;
pub const MERGE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Embedded,
    Damped,
    ResonanceCandidate,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Embedded => "embedded",
            Family::Damped => "damped",
            Family::ResonanceCandidate => "resonance_candidate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedBranch {
    Plus,
    Minus,
    Both,
}

impl SeedBranch {
    pub fn signs(&self) -> &'static [SeedSign] {
        match self {
            SeedBranch::Plus => &[SeedSign::Plus],
            SeedBranch::Minus => &[SeedSign::Minus],
            SeedBranch::Both => &[SeedSign::Minus, SeedSign::Plus],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: C64,
    pub lambda_sq: C64,
    pub family: Family,
    pub index: usize,
    pub residual: f64,
    pub seed: C64,
    /// Order of the zero of d at lambda.
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCertificate {
    /// [re_min, re_max, im_min, im_max]
    pub rectangle: [f64; 4],
    pub winding_count: i64,
    pub roots_found: i64,
}

impl RootCertificate {
    pub fn certified(&self) -> bool {
        self.winding_count == self.roots_found
    }
}

fn residual_tol(lambda: C64) -> f64 {
    1e-12 * (1.0 + lambda.norm())
}

fn nu(params: &GraphParams) -> f64 {
    2.0 * PI / params.l
}

/// Order of the zero of d at a converged root.
fn zero_order(lambda: C64, params: &GraphParams) -> usize {
    let dp = eval_d_prime(lambda, params).map(|v| v.norm()).unwrap_or(f64::INFINITY);
    let scale = params.l * (1.0 + lambda.norm());
    if dp < 1e-6 * scale {
        2
    } else {
        1
    }
}

/// lambda = 2 k pi / L for k = 1..kmax.
pub fn embedded_eigenvalues(kmax: usize, params: &GraphParams) -> Vec<SpectralPoint> {
    (1..=kmax)
        .map(|k| {
            let lambda = C64::new(k as f64 * nu(params), 0.0);
            let residual = eval_d(lambda, params).map(|d| d.norm()).unwrap_or(f64::NAN);
            let multiplicity = if eval_branch(lambda, params).norm() < 1e-10 * (1.0 + lambda.norm()) {
                2
            } else {
                1
            };
            SpectralPoint {
                lambda,
                lambda_sq: lambda * lambda,
                family: Family::Embedded,
                index: k,
                residual,
                seed: lambda,
                multiplicity,
            }
        })
        .collect()
}

/// Base point 2 n pi / L +- i ln3 / L and the perturbation coefficients a, b.
pub fn asymptotic_coefficients(n: usize, params: &GraphParams, sign: SeedSign) -> (C64, C64, C64) {
    let l = params.l;
    let s = match sign {
        SeedSign::Plus => 1.0,
        SeedSign::Minus => -1.0,
    };
    let l0 = C64::new(n as f64 * nu(params), s * LN3 / l);
    let a = 4.0 * I / (3.0 * l * l0);
    let b = 16.0 / (9.0 * l * l * l0 * l0 * l0) - 4.0 * I / (9.0 * l * l0 * l0);
    (l0, a, b)
}

/// Second-order small-alpha seed for the damped family.
pub fn asymptotic_seed(n: usize, params: &GraphParams, sign: SeedSign) -> C64 {
    let (l0, a, b) = asymptotic_coefficients(n, params, sign);
    let al = params.alpha;
    l0 + a * al + b * al * al
}

/// Large-n expansion of lambda_n^2. `reference` uses +4 pi ln3 n / L^2 in the
/// imaginary part; otherwise the sign that matches the computed roots
/// (base point 2 n pi / L - i ln3 / L) is used.
pub fn asymptotic_lambda_sq(n: usize, params: &GraphParams, reference: bool) -> C64 {
    let l = params.l;
    let nf = n as f64;
    let s = if reference { 1.0 } else { -1.0 };
    C64::new(
        4.0 * PI * PI * nf * nf / (l * l) - LN3 * LN3 / (l * l),
        8.0 * params.alpha / (3.0 * l) + s * 4.0 * PI * LN3 * nf / (l * l),
    )
}

/// d lambda_n / d alpha along the damped family.
pub fn lambda_alpha_derivative(lambda: C64, params: &GraphParams) -> C64 {
    let (a, l) = (params.alpha, params.l);
    4.0 * I * lambda / (3.0 * l * lambda * lambda + 2.0 * a * l * lambda - a * a * l + 4.0 * I * a)
}

fn classify(lambda: C64, params: &GraphParams) -> (Family, Option<usize>) {
    let t = (I * lambda * params.l).exp();
    if (t - 1.0).norm() < 1e-8 && lambda.im.abs() < 1e-8 {
        let k = (lambda.re / nu(params)).round();
        if k >= 1.0 && (lambda.re - k * nu(params)).abs() < 1e-8 {
            return (Family::Embedded, Some(k as usize));
        }
    }
    if lambda.im > 1e-12 {
        (Family::Damped, None)
    } else {
        (Family::ResonanceCandidate, None)
    }
}

fn newton<F>(seed: C64, f: F, tol: impl Fn(C64) -> f64) -> Result<C64>
where
    F: Fn(C64) -> Result<(C64, C64)>,
{
    let mut lam = seed;
    let mut trace = vec![lam];
    let (mut val, mut der) = f(lam)?;
    for _ in 0..MAX_NEWTON {
        if val.norm() < tol(lam) {
            return Ok(lam);
        }
        if der.norm() == 0.0 || !der.is_finite() {
            break;
        }
        let mut step = val / der;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = lam - step;
            if cand.norm() > 1e-10 {
                if let Ok((v, d)) = f(cand) {
                    if v.is_finite() && v.norm() < val.norm() {
                        lam = cand;
                        val = v;
                        der = d;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // plain step, so that slow linear convergence at multiple roots proceeds
            lam -= val / der;
            let (v, d) = f(lam)?;
            val = v;
            der = d;
        }
        trace.push(lam);
        if !lam.is_finite() {
            break;
        }
    }
    if val.norm() < tol(lam) {
        return Ok(lam);
    }
    Err(Error::Divergence { iterations: MAX_NEWTON, last_residual: val.norm(), trace })
}

/// Newton iteration on d with the analytic derivative. Double roots are
/// polished with Newton on d'.
pub fn refine_root(seed: C64, params: &GraphParams) -> Result<SpectralPoint> {
    if seed.norm() == 0.0 {
        return Err(Error::Singularity("seed at lambda = 0".into()));
    }
    let f = |l: C64| Ok((eval_d(l, params)?, eval_d_prime(l, params)?));
    let mut lam = newton(seed, f, residual_tol)?;
    // polish a double root
    for _ in 0..10 {
        let dp = eval_d_prime(lam, params)?;
        let dpp = eval_d_second(lam, params)?;
        if dpp.norm() == 0.0 {
            break;
        }
        let step = dp / dpp;
        if step.norm() > 1e-4 || step.norm() < 1e-17 {
            break;
        }
        let cand = lam - step;
        if eval_d(cand, params)?.norm() <= eval_d(lam, params)?.norm() {
            lam = cand;
        } else {
            break;
        }
    }
    let (family, k) = classify(lam, params);
    let mut index = 0;
    if let Some(k) = k {
        lam = C64::new(k as f64 * nu(params), 0.0);
        index = k;
    }
    let residual = eval_d(lam, params)?.norm();
    Ok(SpectralPoint {
        lambda: lam,
        lambda_sq: lam * lam,
        family,
        index,
        residual,
        seed,
        multiplicity: zero_order(lam, params),
    })
}

/// Newton iteration on the entire factor (lambda + alpha) e^{i lambda L} - (3 lambda - alpha),
/// whose zeros are the damped family without the embedded roots.
pub fn refine_branch_root(seed: C64, params: &GraphParams) -> Result<C64> {
    let f = |l: C64| Ok((eval_branch(l, params), eval_branch_prime(l, params)));
    newton(seed, f, |l| 1e-13 * (1.0 + l.norm()))
}

/// Follows the n-th damped-family root from alpha = 0, where it equals
/// 2 n pi / L - i ln3 / L, to params.alpha by predictor-corrector
/// continuation in alpha.
pub fn track_branch(n: usize, params: &GraphParams) -> Result<C64> {
    if n == 0 {
        return Err(Error::InvalidParams("branch index must be at least 1".into()));
    }
    let target = params.alpha;
    let mut lam = C64::new(n as f64 * nu(params), -LN3 / params.l);
    if target == 0.0 {
        return Ok(lam);
    }
    let steps = ((target / 0.02).ceil() as usize).max(10);
    let da = target / steps as f64;
    let mut a = 0.0;
    for _ in 0..steps {
        let p0 = params.with_alpha(a);
        let pred = lam + lambda_alpha_derivative(lam, &p0) * da;
        a += da;
        lam = refine_branch_root(pred, &params.with_alpha(a))?;
    }
    Ok(lam)
}

/// Roots of d strictly inside the disk |lambda - alpha/2| < alpha/2 (the only
/// region of the upper half-plane that can host square-integrable modes).
pub fn disk_roots(params: &GraphParams) -> Vec<SpectralPoint> {
    let a = params.alpha;
    if a <= 0.0 {
        return Vec::new();
    }
    let c = C64::new(a / 2.0, 0.0);
    let r = a / 2.0;
    let mut seeds = vec![c + I * (0.3 * r)];
    for &rho in &[0.3, 0.6, 0.9] {
        for j in 0..8 {
            let th = PI * (j as f64 + 0.5) / 8.0;
            seeds.push(c + rho * r * C64::new(th.cos(), th.sin()));
        }
    }
    let mut found: Vec<SpectralPoint> = Vec::new();
    for s in seeds {
        let Ok(lb) = refine_branch_root(s, params) else { continue };
        if !((lb - c).norm() < r * (1.0 - 1e-9) && lb.im > 1e-10) {
            continue;
        }
        let Ok(mut pt) = refine_root(lb, params) else { continue };
        if (pt.lambda - lb).norm() > 1e-6 {
            continue;
        }
        pt.seed = s;
        if found.iter().all(|q| (q.lambda - pt.lambda).norm() > MERGE_TOL) {
            found.push(pt);
        }
    }
    found.sort_by(|x, y| x.lambda.re.partial_cmp(&y.lambda.re).unwrap());
    for (i, p) in found.iter_mut().enumerate() {
        p.index = i;
    }
    found
}

/// A seed that failed to converge, kept for reporting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedFailure {
    pub n: usize,
    pub sign: SeedSign,
    pub seed: C64,
    pub message: String,
}

/// Where each attempted seed ended up.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub n: usize,
    pub sign: SeedSign,
    pub seed: C64,
    pub converged_to: Option<C64>,
    pub family: Option<Family>,
    pub duplicate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub points: Vec<SpectralPoint>,
    pub outcomes: Vec<SeedOutcome>,
    pub failures: Vec<SeedFailure>,
}

fn sort_points(points: &mut [SpectralPoint]) {
    points.sort_by(|a, b| {
        (a.family, a.index)
            .cmp(&(b.family, b.index))
            .then(a.lambda.re.partial_cmp(&b.lambda.re).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Embedded eigenvalues, disk roots and the damped family seeded from the
/// asymptotics for n = 1..nmax, with seed outcomes recorded.
pub fn point_spectrum_run(nmax: usize, params: &GraphParams, branch: SeedBranch) -> Result<SpectrumRun> {
    if nmax == 0 {
        return Err(Error::InvalidParams("nmax must be at least 1".into()));
    }
    let mut points = embedded_eigenvalues(nmax, params);
    points.extend(disk_roots(params));

    let jobs: Vec<(usize, SeedSign)> = (1..=nmax)
        .flat_map(|n| branch.signs().iter().map(move |s| (n, *s)))
        .collect();
    let results: Vec<(usize, SeedSign, C64, Result<SpectralPoint>)> = jobs
        .par_iter()
        .map(|&(n, sign)| {
            let seed = asymptotic_seed(n, params, sign);
            let mut res = refine_root(seed, params);
            if res.is_err() && sign == SeedSign::Minus {
                res = refine_branch_root(seed, params).and_then(|l| {
                    let mut p = refine_root(l, params)?;
                    p.seed = seed;
                    Ok(p)
                });
            }
            (n, sign, seed, res)
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (n, sign, seed, res) in results {
        match res {
            Ok(mut p) => {
                let dup = points.iter().any(|q| (q.lambda - p.lambda).norm() < MERGE_TOL);
                if p.family == Family::Embedded {
                    log::debug!("seed n={n} {sign:?} converged to embedded root {}", p.lambda);
                }
                outcomes.push(SeedOutcome {
                    n,
                    sign,
                    seed,
                    converged_to: Some(p.lambda),
                    family: Some(p.family),
                    duplicate: dup,
                });
                if !dup {
                    if p.family != Family::Embedded {
                        p.index = n;
                    }
                    points.push(p);
                }
            }
            Err(e) => {
                if sign == SeedSign::Minus {
                    return Err(e);
                }
                outcomes.push(SeedOutcome { n, sign, seed, converged_to: None, family: None, duplicate: false });
                failures.push(SeedFailure { n, sign, seed, message: e.to_string() });
            }
        }
    }
    sort_points(&mut points);
    Ok(SpectrumRun { points, outcomes, failures })
}

/// Union of embedded eigenvalues and refined damped-family roots.
pub fn point_spectrum(nmax: usize, params: &GraphParams) -> Result<Vec<SpectralPoint>> {
    Ok(point_spectrum_run(nmax, params, SeedBranch::Both)?.points)
}

fn simpson_segment<F: Fn(f64) -> C64>(f: &F, a: f64, fa: C64, b: f64, fb: C64) -> (C64, f64, C64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    fa: C64,
    b: f64,
    fb: C64,
    m: f64,
    fm: C64,
    whole: C64,
    tol: f64,
    depth: usize,
) -> C64 {
    let (left, lm, flm) = simpson_segment(f, a, fa, m, fm);
    let (right, rm, frm) = simpson_segment(f, m, fm, b, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return delta;
    }
    if depth == 0 || delta.norm() < 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Winding number of d around the rectangle [re_min, re_max] x [im_min, im_max].
pub fn count_roots_rectangle(rect: [f64; 4], params: &GraphParams) -> Result<RootCertificate> {
    let [x0, x1, y0, y1] = rect;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidParams("degenerate rectangle".into()));
    }
    let corners = [C64::new(x0, y0), C64::new(x1, y0), C64::new(x1, y1), C64::new(x0, y1)];
    let min_abs = std::cell::Cell::new(f64::INFINITY);
    let mut total = C64::new(0.0, 0.0);
    for s in 0..4 {
        let (za, zb) = (corners[s], corners[(s + 1) % 4]);
        let dz = zb - za;
        let f = |t: f64| {
            if min_abs.get() < 1e-8 {
                return C64::new(f64::NAN, 0.0);
            }
            let z = za + dz * t;
            let d = eval_d(z, params).unwrap_or(C64::new(f64::NAN, 0.0));
            let dp = eval_d_prime(z, params).unwrap_or(C64::new(f64::NAN, 0.0));
            min_abs.set(min_abs.get().min(d.norm()));
            dp / d * dz
        };
        let pieces = 64;
        for p in 0..pieces {
            let a = p as f64 / pieces as f64;
            let b = (p + 1) as f64 / pieces as f64;
            let (fa, fb) = (f(a), f(b));
            let (whole, m, fm) = simpson_segment(&f, a, fa, b, fb);
            total += adaptive_simpson(&f, a, fa, b, fb, m, fm, whole, 1e-10, 40);
            if !total.is_finite() {
                return Err(Error::ContourTooClose { min_abs: min_abs.get() });
            }
        }
    }
    if min_abs.get() < 1e-8 || !total.is_finite() {
        return Err(Error::ContourTooClose { min_abs: min_abs.get() });
    }
    let w = total / (2.0 * PI * I);
    let value = w.re;
    if (value - value.round()).abs() > 1e-3 || w.im.abs() > 1e-3 {
        return Err(Error::Uncertified { value });
    }
    Ok(RootCertificate { rectangle: rect, winding_count: value.round() as i64, roots_found: 0 })
}

/// Rectangles covering Re lambda in (0, (nmax + 1/2) 2 pi / L]: a first cell
/// [eps, pi / L] followed by cells centred on each 2 n pi / L.
pub fn covering_rectangles(nmax: usize, params: &GraphParams) -> Vec<[f64; 4]> {
    let v = nu(params);
    let y0 = -2.0 * LN3 / params.l;
    let y1 = params.alpha / 2.0 + 0.1 * v;
    let mut out = vec![[1e-3 * v, 0.5 * v, y0, y1]];
    for n in 1..=nmax {
        out.push([(n as f64 - 0.5) * v, (n as f64 + 0.5) * v, y0, y1]);
    }
    out
}

/// Compares winding numbers with the multiplicity-weighted count of the
/// supplied roots inside each covering rectangle.
pub fn certify(points: &[SpectralPoint], nmax: usize, params: &GraphParams) -> Result<Vec<RootCertificate>> {
    covering_rectangles(nmax, params)
        .into_par_iter()
        .map(|rect| {
            let mut c = count_roots_rectangle(rect, params)?;
            c.roots_found = points
                .iter()
                .filter(|p| {
                    p.lambda.re > rect[0] && p.lambda.re < rect[1] && p.lambda.im > rect[2] && p.lambda.im < rect[3]
                })
                .map(|p| p.multiplicity as i64)
                .sum();
            Ok(c)
        })
        .collect()
}

/// Deviation of a computed root from the large-n expansion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AsymptoticDeviation {
    pub n: usize,
    pub lambda: C64,
    pub lambda_sq: C64,
    pub expansion_reference: C64,
    pub expansion_matching: C64,
    pub deviation_reference: f64,
    pub deviation_matching: f64,
}

pub fn asymptotic_deviation(n: usize, lambda: C64, params: &GraphParams) -> AsymptoticDeviation {
    let l2 = lambda * lambda;
    let ep = asymptotic_lambda_sq(n, params, true);
    let em = asymptotic_lambda_sq(n, params, false);
    AsymptoticDeviation {
        n,
        lambda,
        lambda_sq: l2,
        expansion_reference: ep,
        expansion_matching: em,
        deviation_reference: (l2 - ep).norm(),
        deviation_matching: (l2 - em).norm(),
    }
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn write_spectrum_csv<W: Write>(mut w: W, points: &[SpectralPoint], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "family,index,re_lambda,im_lambda,re_lambda_sq,im_lambda_sq,residual,re_seed,im_seed")?;
    for p in points {
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e},{:.16e},{:.16e}",
            p.family.tag(),
            p.index,
            p.lambda.re,
            p.lambda.im,
            p.lambda_sq.re,
            p.lambda_sq.im,
            p.residual,
            p.seed.re,
            p.seed.im
        )?;
    }
    Ok(())
}
