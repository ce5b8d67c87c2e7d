//! Finite-difference discretization of H on the truncated graph, used as an
//! independent reference. This module depends only on `graph`.
//!
//! Unknowns are the interior nodes of both edges plus one shared vertex
//! value. Interior rows carry the (-1, 2, -1)/h^2 stencil. The vertex row is
//! the flux balance over the half cells touching the vertex, which contains
//! the Kirchhoff condition with its i alpha u(0) term; dividing by the
//! vertex cell size makes A self-adjoint in the mass-weighted inner product
//! when alpha = 0. The unknowns are ordered (R1 reversed, vertex, R2 folded)
//! so that A is banded with two sub- and super-diagonals.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphFunction, GraphParams, GraphPoint, Grid, C64, I};

/// Dense storage of a banded matrix, one window of columns per row.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        // room for the fill-in produced by partial pivoting
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width] }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as i64 - i as i64 + self.kl as i64;
        if off < 0 || off >= self.width as i64 || j >= self.n {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.slot(i, j).map(|s| self.data[s]).unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    fn set(&mut self, i: usize, j: usize, v: C64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// beta I + gamma A
    pub fn shifted(&self, beta: C64, gamma: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..self.n {
            out.add(i, i, beta);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorization with partial pivoting.
    pub fn lu(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let umax = self.kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut mult = vec![C64::new(0.0, 0.0); n * kl.max(1)];
        let mut scale: f64 = 0.0;
        for v in &self.data {
            scale = scale.max(v.norm());
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * 1e-3 * scale.max(1e-300) {
                return Err(Error::LinearSolve(format!("zero pivot at row {k}")));
            }
            piv[k] = p;
            let cmax = (k + umax).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let m = self.get(i, k) / pivot;
                mult[k * kl.max(1) + (i - k - 1)] = m;
                if m != C64::new(0.0, 0.0) {
                    self.set(i, k, C64::new(0.0, 0.0));
                    for j in k + 1..=cmax {
                        let u = self.get(k, j);
                        if u != C64::new(0.0, 0.0) {
                            let s = self.slot(i, j).unwrap();
                            self.data[s] -= m * u;
                        }
                    }
                }
            }
        }
        Ok(BandLu { a: self, piv, mult })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
    mult: Vec<C64>,
}

impl BandLu {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.a.n;
        let kl = self.a.kl;
        let umax = self.a.kl + self.a.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                x[i] -= self.mult[k * kl.max(1) + (i - k - 1)] * xk;
            }
        }
        for i in (0..n).rev() {
            let hi = (i + umax).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.a.get(i, j) * x[j];
            }
            x[i] = s / self.a.get(i, i);
        }
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Dirichlet,
    AbsorbingLayer,
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub params: GraphParams,
    pub grid: Grid,
    pub dimension: usize,
    pub h1: f64,
    pub h2: f64,
    pub matrix: BandMatrix,
    /// Quadrature weight of each unknown.
    pub mass: Vec<f64>,
    pub vertex_index: usize,
    pub closure: Closure,
    /// Peak of the absorbing potential (0 for Dirichlet).
    pub layer_strength: f64,
}

/// Peak strength of the quartic layer for which the round-trip WKB
/// attenuation at wavenumber k = 2 pi / L is 1e-8 (reflection below 1e-4 with margin).
pub fn default_layer_strength(params: &GraphParams) -> f64 {
    let k = 2.0 * PI / params.l;
    let width = 0.25 * params.x_max;
    // exp(-W0 width / (5 k)) = 1e-8
    5.0 * k * (1e8f64).ln() / width
}

/// Quartic ramp occupying the last quarter of R1.
pub fn layer_profile(x: f64, params: &GraphParams, strength: f64) -> f64 {
    let start = 0.75 * params.x_max;
    if x <= start {
        0.0
    } else {
        strength * ((x - start) / (params.x_max - start)).powi(4)
    }
}

impl DiscreteOperator {
    pub fn r1_index(&self, j: usize) -> usize {
        self.grid.n1 - 1 - j
    }

    pub fn r2_index(&self, j: usize) -> usize {
        let (n1, m) = (self.grid.n1, self.grid.n2);
        if j <= m / 2 {
            n1 + 2 * (j - 1)
        } else {
            n1 + 2 * (m - j) - 1
        }
    }

    /// Index of the unknown at node j of an edge (vertex for endpoints).
    fn node_index(&self, edge: Edge, j: usize) -> Option<usize> {
        match edge {
            Edge::R1 if j == 0 => Some(self.vertex_index),
            Edge::R1 if j < self.grid.n1 => Some(self.r1_index(j)),
            Edge::R1 => None,
            Edge::R2 if j == 0 || j == self.grid.n2 => Some(self.vertex_index),
            Edge::R2 => Some(self.r2_index(j)),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.matvec(x)
    }

    /// Mass-weighted norm.
    pub fn norm(&self, x: &[C64]) -> f64 {
        x.iter().zip(&self.mass).map(|(v, m)| m * v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dot(&self, x: &[C64], y: &[C64]) -> C64 {
        x.iter().zip(y).zip(&self.mass).map(|((a, b), m)| a * b.conj() * *m).sum()
    }

    /// Samples of a graph function at the unknowns; the vertex value is the
    /// mean of the three endpoint samples.
    pub fn to_vector(&self, u: &GraphFunction) -> Result<Vec<C64>> {
        if u.grid != self.grid {
            return Err(Error::Shape("grid does not match operator".into()));
        }
        let mut x = vec![C64::new(0.0, 0.0); self.dimension];
        for j in 1..self.grid.n1 {
            x[self.r1_index(j)] = u.r1_values[j];
        }
        for j in 1..self.grid.n2 {
            x[self.r2_index(j)] = u.r2_values[j];
        }
        x[self.vertex_index] = (u.r1_values[0] + u.r2_values[0] + u.r2_values[self.grid.n2]) / 3.0;
        Ok(x)
    }

    pub fn to_graph_function(&self, x: &[C64]) -> GraphFunction {
        let g = self.grid;
        let mut f = GraphFunction::zeros(g);
        for j in 0..=g.n1 {
            if let Some(i) = self.node_index(Edge::R1, j) {
                f.r1_values[j] = x[i];
            }
        }
        for j in 0..=g.n2 {
            f.r2_values[j] = x[self.node_index(Edge::R2, j).unwrap()];
        }
        f
    }

    /// M A, Hermitian when alpha = 0 with Dirichlet closure.
    pub fn stiffness(&self) -> DMatrix<C64> {
        let mut d = self.matrix.to_dense();
        for i in 0..self.dimension {
            for j in 0..self.dimension {
                d[(i, j)] *= self.mass[i];
            }
        }
        d
    }
}

pub fn build_discrete_operator(params: &GraphParams, closure: Closure) -> Result<DiscreteOperator> {
    let strength = match closure {
        Closure::Dirichlet => 0.0,
        Closure::AbsorbingLayer => default_layer_strength(params),
    };
    build_discrete_operator_with_layer(params, closure, strength)
}

pub fn build_discrete_operator_with_layer(
    params: &GraphParams,
    closure: Closure,
    strength: f64,
) -> Result<DiscreteOperator> {
    params.validate()?;
    let grid = params.grid();
    if grid.n1 < 4 || grid.n2 < 4 {
        return Err(Error::InvalidParams("need at least 4 intervals per edge".into()));
    }
    let (h1, h2) = (grid.h1, grid.h2);
    if h2 > params.l / 16.0 {
        log::warn!("h2 = {h2} gives fewer than 8 points per wavelength of the first confined mode");
    }
    let dimension = grid.n1 + grid.n2 - 1;
    let mut op = DiscreteOperator {
        params: *params,
        grid,
        dimension,
        h1,
        h2,
        matrix: BandMatrix::zeros(dimension, 2, 2),
        mass: vec![0.0; dimension],
        vertex_index: grid.n1 - 1,
        closure,
        layer_strength: if closure == Closure::AbsorbingLayer { strength } else { 0.0 },
    };
    let v = op.vertex_index;
    let mv = h1 / 2.0 + h2;
    let c1 = C64::new(1.0 / (h1 * h1), 0.0);
    let c2 = C64::new(1.0 / (h2 * h2), 0.0);
    let mut a = BandMatrix::zeros(dimension, 2, 2);
    a.add(v, v, (I * params.alpha + 1.0 / h1 + 2.0 / h2) / mv);
    a.add(v, op.r1_index(1), C64::new(-1.0 / (h1 * mv), 0.0));
    a.add(v, op.r2_index(1), C64::new(-1.0 / (h2 * mv), 0.0));
    a.add(v, op.r2_index(grid.n2 - 1), C64::new(-1.0 / (h2 * mv), 0.0));
    op.mass[v] = mv;
    for j in 1..grid.n1 {
        let i = op.r1_index(j);
        let w = if closure == Closure::AbsorbingLayer {
            layer_profile(grid.x1(j), params, strength)
        } else {
            0.0
        };
        a.add(i, i, 2.0 * c1 - I * w);
        a.add(i, op.node_index(Edge::R1, j - 1).unwrap(), -c1);
        if let Some(k) = op.node_index(Edge::R1, j + 1) {
            a.add(i, k, -c1);
        }
        op.mass[i] = h1;
    }
    for j in 1..grid.n2 {
        let i = op.r2_index(j);
        a.add(i, i, 2.0 * c2);
        a.add(i, op.node_index(Edge::R2, j - 1).unwrap(), -c2);
        a.add(i, op.node_index(Edge::R2, j + 1).unwrap(), -c2);
        op.mass[i] = h2;
    }
    op.matrix = a;
    Ok(op)
}

/// Deterministic start vector for Krylov iterations.
fn start_vector(n: usize) -> Vec<C64> {
    let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            C64::new(a, b)
        })
        .collect()
}

fn normalize(op: &DiscreteOperator, x: &mut [C64]) -> f64 {
    let nr = op.norm(x);
    x.iter_mut().for_each(|v| *v /= nr);
    nr
}

fn eig_residual(op: &DiscreteOperator, mu: C64, x: &[C64]) -> f64 {
    let ax = op.apply(x);
    let r: Vec<C64> = ax.iter().zip(x).map(|(a, b)| a - mu * b).collect();
    op.norm(&r) / op.norm(x)
}

/// Inverse iteration at a fixed shift with Rayleigh-quotient updates.
fn refine_eigenpair(op: &DiscreteOperator, mu0: C64, x0: &[C64]) -> Result<(C64, Vec<C64>, f64)> {
    let mut mu = mu0;
    let mut x = x0.to_vec();
    normalize(op, &mut x);
    let mut res = eig_residual(op, mu, &x);
    for _ in 0..4 {
        if res < 1e-10 {
            break;
        }
        let lu = op.matrix.shifted(-mu, C64::new(1.0, 0.0)).lu()?;
        for _ in 0..3 {
            x = lu.solve(&x);
            normalize(op, &mut x);
        }
        let ax = op.apply(&x);
        mu = op.dot(&ax, &x) / op.dot(&x, &x);
        res = eig_residual(op, mu, &x);
    }
    Ok((mu, x, res))
}

/// Eigenpairs nearest `shift` by shift-invert Arnoldi followed by
/// inverse-iteration refinement of each Ritz pair.
pub fn oracle_eigenpairs(op: &DiscreteOperator, shift: C64, count: usize) -> Result<Vec<(C64, GraphFunction)>> {
    Ok(eigenpairs_raw(op, shift, count)?
        .into_iter()
        .map(|(mu, x, _)| (mu, op.to_graph_function(&x)))
        .collect())
}

/// As [`oracle_eigenpairs`], returning raw vectors and residuals.
pub fn eigenpairs_raw(op: &DiscreteOperator, shift: C64, count: usize) -> Result<Vec<(C64, Vec<C64>, f64)>> {
    let n = op.dimension;
    let count = count.max(1).min(n);
    let lu = op.matrix.shifted(-shift, C64::new(1.0, 0.0)).lu()?;
    let m = (2 * count + 20).min(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::from_element(m + 1, m, C64::new(0.0, 0.0));
    let mut v = start_vector(n);
    let nv = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= nv);
    basis.push(v);
    let mut dim = m;
    for k in 0..m {
        let mut w = lu.solve(&basis[k]);
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c: C64 = b.iter().zip(&w).map(|(p, q)| p.conj() * q).sum();
                h[(i, k)] += c;
                w.iter_mut().zip(b).for_each(|(a, p)| *a -= c * p);
            }
        }
        let nw = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        h[(k + 1, k)] = C64::new(nw, 0.0);
        if nw < 1e-14 {
            dim = k + 1;
            break;
        }
        w.iter_mut().for_each(|a| *a /= nw);
        basis.push(w);
    }
    let hm = h.view((0, 0), (dim, dim)).into_owned();
    let theta = hm
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Breakdown("Hessenberg eigenvalues unavailable".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|a, b| theta[*b].norm().partial_cmp(&theta[*a].norm()).unwrap());
    let mut out: Vec<(C64, Vec<C64>, f64)> = Vec::new();
    for &i in order.iter().take((count + 4).min(dim)) {
        let th = theta[i];
        if th.norm() == 0.0 {
            continue;
        }
        // eigenvector of the small matrix by inverse iteration
        let pert = th + C64::new(1e-10 * th.norm(), 0.0);
        let small = &hm - DMatrix::identity(dim, dim) * pert;
        let slu = small.lu();
        let mut y = nalgebra::DVector::from_element(dim, C64::new(1.0, 0.0));
        for _ in 0..3 {
            if let Some(s) = slu.solve(&y) {
                let ny = s.norm();
                y = s / C64::new(ny, 0.0);
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (k, b) in basis.iter().take(dim).enumerate() {
            x.iter_mut().zip(b).for_each(|(a, p)| *a += y[k] * p);
        }
        let mu0 = shift + 1.0 / th;
        let (mu, x, res) = refine_eigenpair(op, mu0, &x)?;
        if out.iter().all(|(q, _, _)| (q - mu).norm() > 1e-9 * (1.0 + mu.norm())) {
            out.push((mu, x, res));
        }
    }
    out.sort_by(|a, b| (a.0 - shift).norm().partial_cmp(&(b.0 - shift).norm()).unwrap());
    out.truncate(count);
    Ok(out)
}

/// Time trace of a Crank-Nicolson run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleTrace {
    pub times: Vec<f64>,
    /// Mass-weighted squared norms.
    pub norms_sq: Vec<f64>,
    pub vertex_values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub trace: OracleTrace,
    /// (t, u(t)) every `record_every` steps, always including the last.
    pub snapshots: Vec<(f64, GraphFunction)>,
}

/// Crank-Nicolson: (I - i dt/2 A) u^{n+1} = (I + i dt/2 A) u^n.
pub fn oracle_evolve(
    op: &DiscreteOperator,
    u0: &GraphFunction,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<OracleRun> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    let tau = I * (dt / 2.0);
    let lu = op.matrix.shifted(C64::new(1.0, 0.0), -tau).lu()?;
    let mut x = op.to_vector(u0)?;
    let mut trace = OracleTrace {
        times: vec![0.0],
        norms_sq: vec![op.norm(&x).powi(2)],
        vertex_values: vec![x[op.vertex_index]],
    };
    let every = record_every.max(1);
    let mut snapshots = vec![(0.0, op.to_graph_function(&x))];
    for s in 1..=steps {
        let ax = op.apply(&x);
        let rhs: Vec<C64> = x.iter().zip(&ax).map(|(a, b)| a + tau * b).collect();
        x = lu.solve(&rhs);
        let t = s as f64 * dt;
        trace.times.push(t);
        trace.norms_sq.push(op.norm(&x).powi(2));
        trace.vertex_values.push(x[op.vertex_index]);
        if s % every == 0 || s == steps {
            snapshots.push((t, op.to_graph_function(&x)));
        }
    }
    Ok(OracleRun { trace, snapshots })
}

/// max_n | ||u^n||^2 - ||u^0||^2 + 2 alpha int_0^{t_n} |u(v)|^2 | / ||u^0||^2,
/// with the time integral by the trapezoid rule.
pub fn energy_identity_check(trace: &OracleTrace, alpha: f64) -> f64 {
    let n0 = trace.norms_sq[0];
    let mut flux = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..trace.times.len() {
        let dt = trace.times[k] - trace.times[k - 1];
        flux += 0.5 * dt * (trace.vertex_values[k - 1].norm_sqr() + trace.vertex_values[k].norm_sqr());
        let r = (trace.norms_sq[k] - n0 + 2.0 * alpha * flux).abs() / n0;
        worst = worst.max(r);
    }
    worst
}

/// Smooth cutoff equal to 1 on |s| <= 1/2 and 0 on |s| >= 1.
pub fn bump(s: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let t = 2.0 * (1.0 - s.abs());
    let (a, b) = (psi(t), psi(1.0 - t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Weyl packet theta(x) = e^{i |lambda| x} chi(x / n - 1) / sqrt(n) on R1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeylPacket {
    pub lambda_abs: f64,
    pub n: usize,
}

impl WeylPacket {
    pub fn eval(&self, x: f64) -> C64 {
        let n = self.n as f64;
        (I * self.lambda_abs * x).exp() * (bump(x / n - 1.0) / n.sqrt())
    }

    pub fn sample(&self, op: &DiscreteOperator) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); op.dimension];
        for j in 1..op.grid.n1 {
            x[op.r1_index(j)] = self.eval(op.grid.x1(j));
        }
        x
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeylResidual {
    pub n: usize,
    pub residual: f64,
    pub packet_norm: f64,
}

/// ||(A - lambda^2) theta|| / ||theta|| for the sampled packet.
pub fn weyl_residual(op: &DiscreteOperator, lambda_abs: f64, n: usize) -> Result<WeylResidual> {
    let two_n = 2.0 * n as f64;
    if two_n >= op.params.x_max {
        return Err(Error::PacketTruncation { two_n, x_max: op.params.x_max });
    }
    let pk = WeylPacket { lambda_abs, n };
    let x = pk.sample(op);
    let ax = op.apply(&x);
    let l2 = lambda_abs * lambda_abs;
    let r: Vec<C64> = ax.iter().zip(&x).map(|(a, b)| a - l2 * b).collect();
    let nx = op.norm(&x);
    Ok(WeylResidual { n, residual: op.norm(&r) / nx, packet_norm: nx })
}

/// Solution of (A - z^2) u = delta_y with a discrete delta of mass one at
/// the node nearest y.
pub fn green_column(op: &DiscreteOperator, z_sq: C64, y: GraphPoint) -> Result<GraphFunction> {
    let (h, nmax) = match y.edge {
        Edge::R1 => (op.grid.h1, op.grid.n1),
        Edge::R2 => (op.grid.h2, op.grid.n2),
    };
    let j = (y.x / h).round() as usize;
    if j == 0 || j >= nmax {
        return Err(Error::InvalidParams("source must be an interior node".into()));
    }
    let idx = op.node_index(y.edge, j).unwrap();
    let mut b = vec![C64::new(0.0, 0.0); op.dimension];
    b[idx] = C64::new(1.0 / op.mass[idx], 0.0);
    let lu = op.matrix.shifted(-z_sq, C64::new(1.0, 0.0)).lu()?;
    Ok(op.to_graph_function(&lu.solve(&b)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A discrete eigenvalue converges to lambda^2 and its mode decays on R1.
    Confirmed,
    /// Seen only with the absorbing layer and stable when the layer is strengthened.
    LayerDependentResonance,
    Refuted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adjudication {
    pub root: C64,
    pub lambda_sq: C64,
    pub oracle_mu: C64,
    pub distance: f64,
    pub tolerance: f64,
    pub closure: Closure,
    pub h1: f64,
    pub h2: f64,
    pub layer_strength: f64,
    pub verdict: Verdict,
}

fn nearest(op: &DiscreteOperator, target: C64) -> Result<(C64, Vec<C64>)> {
    let pairs = eigenpairs_raw(op, target, 3)?;
    let (mu, x, _) = pairs
        .into_iter()
        .min_by(|a, b| (a.0 - target).norm().partial_cmp(&(b.0 - target).norm()).unwrap())
        .ok_or_else(|| Error::Breakdown("no eigenpair".into()))?;
    Ok((mu, x))
}

fn decays_on_r1(op: &DiscreteOperator, x: &[C64]) -> bool {
    let f = op.to_graph_function(x);
    let peak = f.r1_values.iter().chain(&f.r2_values).map(|v| v.norm()).fold(0.0, f64::max);
    let far = f
        .r1_values
        .iter()
        .enumerate()
        .filter(|(j, _)| op.grid.x1(*j) > 0.75 * op.params.x_max)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    far < 1e-3 * peak
}

/// Classifies a candidate root lambda by comparing lambda^2 with discrete
/// eigenvalues at two resolutions, first with Dirichlet closure and then,
/// if that fails, with the absorbing layer at two strengths.
pub fn adjudicate(lambda: C64, params: &GraphParams) -> Result<Adjudication> {
    let target = lambda * lambda;
    let fine = params.refined(2.0);
    let op = build_discrete_operator(params, Closure::Dirichlet)?;
    let opf = build_discrete_operator(&fine, Closure::Dirichlet)?;
    let (mu_h, _) = nearest(&op, target)?;
    let (mu_f, xf) = nearest(&opf, target)?;
    let tol = (3.0 * (mu_h - mu_f).norm()).max(1e-7 * (1.0 + target.norm()));
    let dist = (mu_f - target).norm();
    if dist <= tol && decays_on_r1(&opf, &xf) {
        return Ok(Adjudication {
            root: lambda,
            lambda_sq: target,
            oracle_mu: mu_f,
            distance: dist,
            tolerance: tol,
            closure: Closure::Dirichlet,
            h1: fine.h1,
            h2: fine.h2,
            layer_strength: 0.0,
            verdict: Verdict::Confirmed,
        });
    }
    let w0 = default_layer_strength(params);
    let la = build_discrete_operator_with_layer(params, Closure::AbsorbingLayer, w0)?;
    let laf = build_discrete_operator_with_layer(&fine, Closure::AbsorbingLayer, w0)?;
    let la2 = build_discrete_operator_with_layer(&fine, Closure::AbsorbingLayer, 2.0 * w0)?;
    let (m1, _) = nearest(&la, target)?;
    let (m2, _) = nearest(&laf, target)?;
    let (m3, _) = nearest(&la2, target)?;
    let ltol = (3.0 * (m1 - m2).norm()).max(1e-4 * (1.0 + target.norm()));
    let ldist = (m2 - target).norm();
    let verdict = if ldist <= ltol && (m2 - m3).norm() <= ltol {
        Verdict::LayerDependentResonance
    } else {
        Verdict::Refuted
    };
    Ok(Adjudication {
        root: lambda,
        lambda_sq: target,
        oracle_mu: m2,
        distance: ldist,
        tolerance: ltol,
        closure: Closure::AbsorbingLayer,
        h1: fine.h1,
        h2: fine.h2,
        layer_strength: w0,
        verdict,
    })
}
