//! Geometry of the tadpole graph, sampled functions and vertex conditions.
//!
//! The graph is a half-line R1 = [0, inf) glued at x = 0 to a loop R2 = [0, L]
//! whose two ends are identified with the same vertex.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Problem instance: loop length, damping constant, truncation and grid steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub x_max: f64,
    pub h1: f64,
    pub h2: f64,
}

impl GraphParams {
    pub fn new(l: f64, alpha: f64, x_max: f64, h1: f64, h2: f64) -> Result<Self> {
        let p = Self { l, alpha, x_max, h1, h2 };
        p.validate()?;
        Ok(p)
    }

    /// x_max = 16 L and h1 = h2 = L/400.
    pub fn with_defaults(l: f64, alpha: f64) -> Result<Self> {
        Self::new(l, alpha, 16.0 * l, l / 400.0, l / 400.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.l.is_finite() && self.l > 0.0) {
            return bad("L must be positive");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be nonnegative");
        }
        if !(self.x_max.is_finite() && self.x_max >= 4.0 * self.l * (1.0 - 1e-12)) {
            return bad("x_max must be at least 4 L");
        }
        if !(self.h1.is_finite() && self.h1 > 0.0 && self.h2.is_finite() && self.h2 > 0.0) {
            return bad("h1 and h2 must be positive");
        }
        let n2 = (self.l / self.h2).round();
        if n2 < 2.0 || (n2 * self.h2 - self.l).abs() > 1e-9 * self.l {
            return bad("h2 must divide L");
        }
        if self.h1 > self.x_max / 2.0 {
            return bad("h1 too large for x_max");
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::from_params(self)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Same geometry with both grid steps divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self { h1: self.h1 / factor, h2: self.h2 / factor, ..*self }
    }
}

/// Effective sampling grid. Interval counts are even so that composite
/// Simpson applies; R2 always lands exactly on x = L.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
}

impl Grid {
    pub fn from_params(p: &GraphParams) -> Self {
        let mut n1 = (p.x_max / p.h1 - 1e-9).ceil().max(2.0) as usize;
        if n1 % 2 == 1 {
            n1 += 1;
        }
        let mut n2 = (p.l / p.h2).round().max(2.0) as usize;
        if n2 % 2 == 1 {
            n2 *= 2;
        }
        Self { n1, n2, h1: p.x_max / n1 as f64, h2: p.l / n2 as f64 }
    }

    pub fn x1(&self, j: usize) -> f64 {
        j as f64 * self.h1
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    R1,
    R2,
}

impl Edge {
    pub fn tag(&self) -> &'static str {
        match self {
            Edge::R1 => "r1",
            Edge::R2 => "r2",
        }
    }
}

/// A point on the graph given by its edge and coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub edge: Edge,
    pub x: f64,
}

impl GraphPoint {
    pub fn r1(x: f64) -> Self {
        Self { edge: Edge::R1, x }
    }
    pub fn r2(x: f64) -> Self {
        Self { edge: Edge::R2, x }
    }
}

/// Complex function sampled on the nodes of both edges.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction {
    pub grid: Grid,
    pub r1_values: Vec<C64>,
    pub r2_values: Vec<C64>,
}

impl GraphFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            r1_values: vec![C64::new(0.0, 0.0); grid.n1 + 1],
            r2_values: vec![C64::new(0.0, 0.0); grid.n2 + 1],
        }
    }

    pub fn from_values(grid: Grid, r1_values: Vec<C64>, r2_values: Vec<C64>) -> Result<Self> {
        if r1_values.len() != grid.n1 + 1 || r2_values.len() != grid.n2 + 1 {
            return Err(Error::Shape(format!(
                "expected {}+{} samples, got {}+{}",
                grid.n1 + 1,
                grid.n2 + 1,
                r1_values.len(),
                r2_values.len()
            )));
        }
        Ok(Self { grid, r1_values, r2_values })
    }

    /// Samples `f1` on R1 and `f2` on R2.
    pub fn sample(
        params: &GraphParams,
        f1: impl Fn(f64) -> C64,
        f2: impl Fn(f64) -> C64,
    ) -> Self {
        let grid = params.grid();
        Self {
            grid,
            r1_values: (0..=grid.n1).map(|j| f1(grid.x1(j))).collect(),
            r2_values: (0..=grid.n2).map(|j| f2(grid.x2(j))).collect(),
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid
            || self.r1_values.len() != other.r1_values.len()
            || self.r2_values.len() != other.r2_values.len()
        {
            return Err(Error::Shape("functions sampled on different grids".into()));
        }
        Ok(())
    }

    fn check_params(&self, params: &GraphParams) -> Result<()> {
        let g = params.grid();
        if g != self.grid || self.r1_values.len() != g.n1 + 1 || self.r2_values.len() != g.n2 + 1 {
            return Err(Error::Shape("function grid does not match parameters".into()));
        }
        Ok(())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            r1_values: self.r1_values.iter().map(|v| v * c).collect(),
            r2_values: self.r2_values.iter().map(|v| v * c).collect(),
        }
    }

    /// self + c * other
    pub fn axpy(&self, c: C64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            r1_values: self.r1_values.iter().zip(&other.r1_values).map(|(a, b)| a + c * b).collect(),
            r2_values: self.r2_values.iter().zip(&other.r2_values).map(|(a, b)| a + c * b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    /// L2 norm over the truncated graph (Simpson).
    pub fn norm(&self) -> f64 {
        let s1 = simpson_abs2(&self.r1_values, self.grid.h1);
        let s2 = simpson_abs2(&self.r2_values, self.grid.h2);
        (s1 + s2).max(0.0).sqrt()
    }

    pub fn r2_norm(&self) -> f64 {
        simpson_abs2(&self.r2_values, self.grid.h2).max(0.0).sqrt()
    }

    /// Keeps the R2 samples and zeroes R1.
    pub fn restrict_r2(&self) -> Self {
        let mut out = self.clone();
        out.r1_values.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        out
    }

    /// Writes `edge,x,re,im` rows with 17 significant digits. An optional
    /// comment line is emitted first, prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<()> {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "edge,x,re,im")?;
        for (j, v) in self.r1_values.iter().enumerate() {
            writeln!(w, "r1,{:.16e},{:.16e},{:.16e}", self.grid.x1(j), v.re, v.im)?;
        }
        for (j, v) in self.r2_values.iter().enumerate() {
            writeln!(w, "r2,{:.16e},{:.16e},{:.16e}", self.grid.x2(j), v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`GraphFunction::write_csv`]. Lines
    /// starting with `#` are skipped.
    pub fn read_csv<R: BufRead>(r: R, params: &GraphParams) -> Result<Self> {
        let grid = params.grid();
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if !header_seen {
                if t != "edge,x,re,im" {
                    return Err(Error::Parse(format!("unexpected header {t:?}")));
                }
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = t.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!("bad row {t:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            let v = C64::new(num(cols[2])?, num(cols[3])?);
            match cols[0] {
                "r1" => r1.push(v),
                "r2" => r2.push(v),
                e => return Err(Error::Parse(format!("unknown edge {e:?}"))),
            }
        }
        Self::from_values(grid, r1, r2)
    }
}

/// Residuals of the vertex conditions of a sampled function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexResidual {
    pub continuity_01: C64,
    pub continuity_0l: C64,
    pub kirchhoff: C64,
}

impl VertexResidual {
    pub fn max_abs(&self) -> f64 {
        self.continuity_01.norm().max(self.continuity_0l.norm()).max(self.kirchhoff.norm())
    }
}

/// Composite Simpson weights for `n` (even) intervals of width `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 0 && n >= 2);
    (0..=n)
        .map(|j| {
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Composite Simpson integral of samples on a uniform grid with an even
/// number of intervals.
pub fn simpson(values: &[C64], h: f64) -> C64 {
    let n = values.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut s = values[0] + values[n];
    for (j, v) in values.iter().enumerate().take(n).skip(1) {
        s += v * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

fn simpson_abs2(values: &[C64], h: f64) -> f64 {
    let n = values.len() - 1;
    let mut s = values[0].norm_sqr() + values[n].norm_sqr();
    for (j, v) in values.iter().enumerate().take(n).skip(1) {
        s += v.norm_sqr() * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn simpson_product(f: &[C64], g: &[C64], h: f64) -> C64 {
    let n = f.len() - 1;
    let mut s = f[0] * g[0].conj() + f[n] * g[n].conj();
    for j in 1..n {
        s += f[j] * g[j].conj() * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

/// Inner product over the truncated graph, conjugate-linear in `g`.
pub fn inner_product(f: &GraphFunction, g: &GraphFunction, params: &GraphParams) -> Result<C64> {
    f.check_same_grid(g)?;
    f.check_params(params)?;
    Ok(simpson_product(&f.r1_values, &g.r1_values, f.grid.h1)
        + simpson_product(&f.r2_values, &g.r2_values, f.grid.h2))
}

/// Inner product of the R2 restrictions only.
pub fn inner_product_r2(f: &GraphFunction, g: &GraphFunction) -> Result<C64> {
    f.check_same_grid(g)?;
    Ok(simpson_product(&f.r2_values, &g.r2_values, f.grid.h2))
}

/// Vertex continuity and Kirchhoff residuals with one-sided 3-point
/// derivative stencils.
pub fn vertex_residuals(u: &GraphFunction, params: &GraphParams) -> Result<VertexResidual> {
    let (a, b) = (&u.r1_values, &u.r2_values);
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::Shape("need at least 3 samples per edge".into()));
    }
    let (h1, h2) = (u.grid.h1, u.grid.h2);
    let n = b.len() - 1;
    let d1 = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h1);
    let d20 = (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * h2);
    let d2l = (3.0 * b[n] - 4.0 * b[n - 1] + b[n - 2]) / (2.0 * h2);
    Ok(VertexResidual {
        continuity_01: a[0] - b[0],
        continuity_0l: b[0] - b[n],
        kirchhoff: d1 + d20 - d2l - I * params.alpha * a[0],
    })
}

/// Integral of e^{c s} over [0, x], accurate for small |c x|.
pub fn exp_integral(c: C64, x: f64) -> C64 {
    let t = c * x;
    if t.norm() < 1e-3 {
        x * (1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0)
    } else {
        ((t).exp() - 1.0) / c
    }
}
