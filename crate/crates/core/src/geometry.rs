//! Curvature and flatness diagnostics for two-dimensional Hessian metrics.
//!
//! A potential `f(x, y)` with positive-definite Hessian defines the metric
//! `E dx² + 2F dxdy + G dy²` with `(E, F, G) = (f_xx, f_xy, f_yy)`. Its
//! Gaussian curvature depends only on derivatives of `f` up to order three.

use std::io::{self, Write};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, DerivativeTrees, DiffBundle, EvalError, Expr, ParseError};
use crate::numeric::{fd, interp::Bicubic, Axis};

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the field's domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("metric is not positive definite at ({x}, {y}): trace {trace}, det {det}")]
    NotPositiveDefinite { x: f64, y: f64, trace: f64, det: f64 },
    #[error("field is not radially symmetric: deviation {deviation} at ({x}, {y})")]
    NotRadiallySymmetric { x: f64, y: f64, deviation: f64 },
    #[error("metric is not flat: curvature {curvature} at ({x}, {y})")]
    NotFlat { x: f64, y: f64, curvature: f64 },
    #[error("curvature numerator forms disagree at ({x}, {y}): {det3} vs {bracket_form}")]
    NumeratorMismatch {
        x: f64,
        y: f64,
        det3: f64,
        bracket_form: f64,
    },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid {nx}x{ny} is too small for the stencil (need at least {min} per axis)")]
    GridTooSmall { nx: usize, ny: usize, min: usize },
    #[error("grid contains the origin")]
    OriginInGrid,
    #[error("metric triple vanishes at ({x}, {y})")]
    ZeroTriple { x: f64, y: f64 },
    #[error("monomial of degree {found} in a witness of degree {degree}")]
    MixedDegree { degree: u32, found: u32 },
    #[error("point ({x}, {y}) is outside the chart image")]
    OutsideChart { x: f64, y: f64 },
    #[error("Newton iteration did not converge at ({x}, {y}): last residual {residual}")]
    NewtonDivergence { x: f64, y: f64, residual: f64 },
    #[error("{0}")]
    Eval(EvalError),
    #[error("{0}")]
    Parse(ParseError),
}

impl From<EvalError> for GeometryError {
    fn from(e: EvalError) -> Self {
        GeometryError::Eval(e)
    }
}

impl From<ParseError> for GeometryError {
    fn from(e: ParseError) -> Self {
        GeometryError::Parse(e)
    }
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Axis-aligned rectangle `[x.0, x.1] × [y.0, y.1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Rect {
        Rect { x, y }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * (1.0 + self.x.1.abs().max(self.y.1.abs()));
        x >= self.x.0 - tol && x <= self.x.1 + tol && y >= self.y.0 - tol && y <= self.y.1 + tol
    }

    pub fn grid(&self, nx: usize, ny: usize) -> Grid {
        Grid {
            ax: Axis::spanning(self.x.0, self.x.1, nx),
            ay: Axis::spanning(self.y.0, self.y.1, ny),
        }
    }
}

/// Tensor-product grid; node `(i, j)` is `(ax.at(i), ay.at(j))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub ax: Axis,
    pub ay: Axis,
}

impl Grid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.ax.n * self.ay.n);
        for i in 0..self.ax.n {
            for j in 0..self.ay.n {
                pts.push((self.ax.at(i), self.ay.at(j)));
            }
        }
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    FiniteDifference,
}

/// A real function of two variables that answers derivative queries up to
/// third order.
pub trait ScalarField2D: Send + Sync {
    fn domain(&self) -> Rect;

    fn provenance(&self) -> Provenance;

    /// Derivatives at a point without checking the domain.
    fn bundle_at(&self, x: f64, y: f64) -> Result<DiffBundle>;

    fn bundle(&self, x: f64, y: f64) -> Result<DiffBundle> {
        if !self.domain().contains(x, y) {
            return Err(GeometryError::OutsideDomain { x, y });
        }
        self.bundle_at(x, y)
    }
}

/// Field backed by an expression and its exact symbolic derivatives.
#[derive(Clone, Debug)]
pub struct ClosedFormField {
    trees: DerivativeTrees,
    domain: Rect,
}

impl ClosedFormField {
    pub fn new(e: &Expr, domain: Rect) -> ClosedFormField {
        ClosedFormField {
            trees: DerivativeTrees::new(e),
            domain,
        }
    }

    pub fn parse(source: &str, domain: Rect) -> Result<ClosedFormField> {
        Ok(ClosedFormField::new(&expr::parse(source)?, domain))
    }

    pub fn expr(&self) -> &Expr {
        self.trees.source()
    }
}

impl ScalarField2D for ClosedFormField {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn bundle_at(&self, x: f64, y: f64) -> Result<DiffBundle> {
        Ok(self.trees.eval(x, y)?)
    }
}

/// Field sampled on a uniform grid. Derivatives come from fourth-order
/// finite differences (mixed third derivatives by nesting) and are interpolated
/// between nodes with bicubic patches.
#[derive(Clone, Debug)]
pub struct SampledField {
    tables: Vec<Bicubic>,
}

impl SampledField {
    /// `values[[i, j]]` is `f(ax.at(i), ay.at(j))`; both axes need 7 nodes.
    pub fn new(ax: Axis, ay: Axis, values: Array2<f64>) -> Result<SampledField> {
        if ax.n < 7 || ay.n < 7 {
            return Err(GeometryError::GridTooSmall {
                nx: ax.n,
                ny: ay.n,
                min: 7,
            });
        }
        let (hx, hy) = (ax.step, ay.step);
        let fx = fd::d1(&values, 0, hx);
        let fy = fd::d1(&values, 1, hy);
        let fxx = fd::d2(&values, 0, hx);
        let fxy = fd::d1(&fx, 1, hy);
        let fyy = fd::d2(&values, 1, hy);
        let fxxx = fd::d3(&values, 0, hx);
        let fxxy = fd::d1(&fxx, 1, hy);
        let fxyy = fd::d1(&fyy, 0, hx);
        let fyyy = fd::d3(&values, 1, hy);
        let tables = [values, fx, fy, fxx, fxy, fyy, fxxx, fxxy, fxyy, fyyy]
            .into_iter()
            .map(|t| Bicubic::new(ax, ay, t))
            .collect();
        Ok(SampledField { tables })
    }

    pub fn axes(&self) -> (Axis, Axis) {
        (self.tables[0].ax, self.tables[0].ay)
    }
}

impl ScalarField2D for SampledField {
    fn domain(&self) -> Rect {
        let (ax, ay) = self.axes();
        Rect::new((ax.start, ax.end()), (ay.start, ay.end()))
    }

    fn provenance(&self) -> Provenance {
        Provenance::FiniteDifference
    }

    fn bundle_at(&self, x: f64, y: f64) -> Result<DiffBundle> {
        let v: Vec<f64> = self.tables.iter().map(|t| t.eval(x, y).0).collect();
        Ok(DiffBundle {
            f: v[0],
            fx: v[1],
            fy: v[2],
            fxx: v[3],
            fxy: v[4],
            fyy: v[5],
            fxxx: v[6],
            fxxy: v[7],
            fxyy: v[8],
            fyyy: v[9],
        })
    }
}

/// A metric triple `(E, F, G)` as functions of `(x, y)`.
pub trait MetricField: Send + Sync {
    fn domain(&self) -> Rect;

    /// `[E, F, G]` at a point, without checking the domain.
    fn triple(&self, x: f64, y: f64) -> Result<[f64; 3]>;

    /// Exact first partials `[[E_x, E_y], [F_x, F_y], [G_x, G_y]]` if known.
    fn gradient(&self, _x: f64, _y: f64) -> Option<Result<[[f64; 2]; 3]>> {
        None
    }
}

/// The Hessian metric of a scalar field.
pub struct HessianMetric<'a>(pub &'a dyn ScalarField2D);

impl MetricField for HessianMetric<'_> {
    fn domain(&self) -> Rect {
        self.0.domain()
    }

    fn triple(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        let b = self.0.bundle_at(x, y)?;
        Ok([b.fxx, b.fxy, b.fyy])
    }

    fn gradient(&self, x: f64, y: f64) -> Option<Result<[[f64; 2]; 3]>> {
        Some(
            self.0
                .bundle_at(x, y)
                .map(|b| [[b.fxxx, b.fxxy], [b.fxxy, b.fxyy], [b.fxyy, b.fyyy]]),
        )
    }
}

type TripleFn = dyn Fn(f64, f64) -> [f64; 3] + Send + Sync;

/// Metric given by a closure.
pub struct FnMetric {
    domain: Rect,
    f: Box<TripleFn>,
}

impl FnMetric {
    pub fn new(domain: Rect, f: impl Fn(f64, f64) -> [f64; 3] + Send + Sync + 'static) -> FnMetric {
        FnMetric {
            domain,
            f: Box::new(f),
        }
    }
}

impl MetricField for FnMetric {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn triple(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        Ok((self.f)(x, y))
    }
}

/// Positive-definiteness test on a triple, scaled by `max(|E|,|F|,|G|)`.
pub fn check_pd(t: [f64; 3], x: f64, y: f64) -> Result<()> {
    let [e, f, g] = t;
    let s = e.abs().max(f.abs()).max(g.abs());
    let trace = e + g;
    let det = e * g - f * f;
    let ok = s > 0.0 && trace / s > 1e-12 && det / (s * s) > 1e-12;
    if ok && trace.is_finite() && det.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NotPositiveDefinite { x, y, trace, det })
    }
}

/// `{a, b} = a_x b_y − a_y b_x` from the two gradients.
pub fn bracket(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Poisson bracket of two fields at a point.
pub fn poisson_bracket(a: &dyn ScalarField2D, b: &dyn ScalarField2D, p: (f64, f64)) -> Result<f64> {
    let ba = a.bundle(p.0, p.1)?;
    let bb = b.bundle(p.0, p.1)?;
    Ok(bracket([ba.fx, ba.fy], [bb.fx, bb.fy]))
}

/// The 3×3 determinant with rows `(f_xx, f_xxx, f_xxy)`, `(f_xy, f_xxy,
/// f_xyy)`, `(f_yy, f_xyy, f_yyy)`, expanded along the first row.
pub fn det3(b: &DiffBundle) -> f64 {
    b.fxx * (b.fxxy * b.fyyy - b.fxyy * b.fxyy) - b.fxxx * (b.fxy * b.fyyy - b.fxyy * b.fyy)
        + b.fxxy * (b.fxy * b.fxyy - b.fxxy * b.fyy)
}

/// `f_xx{f_xy, f_yy} + f_xy{f_yy, f_xx} + f_yy{f_xx, f_xy}`.
pub fn bracket_numerator(b: &DiffBundle) -> f64 {
    let gxx = [b.fxxx, b.fxxy];
    let gxy = [b.fxxy, b.fxyy];
    let gyy = [b.fxyy, b.fyyy];
    b.fxx * bracket(gxy, gyy) + b.fxy * bracket(gyy, gxx) + b.fyy * bracket(gxx, gxy)
}

/// `−det₃ / (4 (EG − F²)²)` without positivity or consistency checks.
pub fn curvature_raw(b: &DiffBundle) -> f64 {
    let det2 = b.fxx * b.fyy - b.fxy * b.fxy;
    -det3(b) / (4.0 * det2 * det2)
}

/// Gaussian curvature of the Hessian metric of `f` at `p`.
pub fn hessian_curvature(f: &dyn ScalarField2D, p: (f64, f64)) -> Result<f64> {
    let b = f.bundle(p.0, p.1)?;
    curvature_of_bundle(&b, p)
}

pub(crate) fn curvature_of_bundle(b: &DiffBundle, p: (f64, f64)) -> Result<f64> {
    check_pd([b.fxx, b.fxy, b.fyy], p.0, p.1)?;
    let d3 = det3(b);
    let pb = bracket_numerator(b);
    let scale = b.fxx.abs() * (b.fxxy * b.fyyy).abs().max(b.fxyy * b.fxyy)
        + b.fxy.abs() * (b.fxxx * b.fyyy).abs().max((b.fxxy * b.fxyy).abs())
        + b.fyy.abs() * (b.fxxx * b.fxyy).abs().max(b.fxxy * b.fxxy);
    if (d3 - pb).abs() > 1e-9 * scale.max(d3.abs()) + f64::MIN_POSITIVE {
        return Err(GeometryError::NumeratorMismatch {
            x: p.0,
            y: p.1,
            det3: d3,
            bracket_form: pb,
        });
    }
    Ok(curvature_raw(b))
}

/// Unnormalised flatness residual: the determinant `det₃`.
pub fn flatness_residual(f: &dyn ScalarField2D, p: (f64, f64)) -> Result<f64> {
    Ok(det3(&f.bundle(p.0, p.1)?))
}

const C1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const C2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Finite-difference partials of a triple: first, pure second and mixed.
struct TripleJet {
    t: [f64; 3],
    dx: [f64; 3],
    dy: [f64; 3],
    dxx: [f64; 3],
    dyy: [f64; 3],
    dxy: [f64; 3],
}

fn triple_jet(m: &dyn MetricField, x: f64, y: f64, h: f64) -> Result<TripleJet> {
    let mut samples = [[[0.0; 3]; 5]; 5];
    for (a, row) in samples.iter_mut().enumerate() {
        for (b, s) in row.iter_mut().enumerate() {
            *s = m.triple(x + (a as f64 - 2.0) * h, y + (b as f64 - 2.0) * h)?;
        }
    }
    let mut jet = TripleJet {
        t: samples[2][2],
        dx: [0.0; 3],
        dy: [0.0; 3],
        dxx: [0.0; 3],
        dyy: [0.0; 3],
        dxy: [0.0; 3],
    };
    for c in 0..3 {
        for k in 0..5 {
            jet.dx[c] += C1[k] * samples[k][2][c];
            jet.dy[c] += C1[k] * samples[2][k][c];
            jet.dxx[c] += C2[k] * samples[k][2][c];
            jet.dyy[c] += C2[k] * samples[2][k][c];
            for l in 0..5 {
                jet.dxy[c] += C1[k] * C1[l] * samples[k][l][c];
            }
        }
        jet.dx[c] /= 12.0 * h;
        jet.dy[c] /= 12.0 * h;
        jet.dxx[c] /= 12.0 * h * h;
        jet.dyy[c] /= 12.0 * h * h;
        jet.dxy[c] /= 144.0 * h * h;
    }
    Ok(jet)
}

/// First partials `[[E_x, E_y], [F_x, F_y], [G_x, G_y]]`: exact when the
/// metric provides them, otherwise fourth-order central differences of step `h`.
pub fn metric_gradient(m: &dyn MetricField, x: f64, y: f64, h: f64) -> Result<[[f64; 2]; 3]> {
    if let Some(g) = m.gradient(x, y) {
        return g;
    }
    let mut out = [[0.0; 2]; 3];
    for (k, c) in C1.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let off = (k as f64 - 2.0) * h;
        let tx = m.triple(x + off, y)?;
        let ty = m.triple(x, y + off)?;
        for i in 0..3 {
            out[i][0] += c * tx[i];
            out[i][1] += c * ty[i];
        }
    }
    for row in out.iter_mut() {
        row[0] /= 12.0 * h;
        row[1] /= 12.0 * h;
    }
    Ok(out)
}

fn det3x3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian curvature of `E dx² + 2F dxdy + G dy²` by the Brioschi formula,
/// with derivatives of the triple taken by finite differences of step `h`.
pub fn brioschi_oracle_with_step(m: &dyn MetricField, p: (f64, f64), h: f64) -> Result<f64> {
    if !m.domain().contains(p.0, p.1) {
        return Err(GeometryError::OutsideDomain { x: p.0, y: p.1 });
    }
    let j = triple_jet(m, p.0, p.1, h)?;
    check_pd(j.t, p.0, p.1)?;
    let [e, f, g] = j.t;
    let (ex, ey) = (j.dx[0], j.dy[0]);
    let (fx, fy) = (j.dx[1], j.dy[1]);
    let (gx, gy) = (j.dx[2], j.dy[2]);
    let a = [
        [
            -0.5 * j.dyy[0] + j.dxy[1] - 0.5 * j.dxx[2],
            0.5 * ex,
            fx - 0.5 * ey,
        ],
        [fy - 0.5 * gx, e, f],
        [0.5 * gy, f, g],
    ];
    let b = [[0.0, 0.5 * ey, 0.5 * gx], [0.5 * ey, e, f], [0.5 * gx, f, g]];
    let w = e * g - f * f;
    Ok((det3x3(a) - det3x3(b)) / (w * w))
}

/// [`brioschi_oracle_with_step`] with `h = 1e-4`.
pub fn brioschi_oracle(m: &dyn MetricField, p: (f64, f64)) -> Result<f64> {
    brioschi_oracle_with_step(m, p, 1e-4)
}

/// Homogeneous polynomial `P(a, b, c) = Σ coeff · a^i b^j c^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub terms: Vec<(f64, [u32; 3])>,
    pub degree: u32,
    pub tol: f64,
}

impl ConeWitness {
    pub fn new(terms: Vec<(f64, [u32; 3])>, tol: f64) -> Result<ConeWitness> {
        let degree = terms.first().map(|(_, m)| m.iter().sum()).unwrap_or(0);
        for (_, m) in &terms {
            let found: u32 = m.iter().sum();
            if found != degree {
                return Err(GeometryError::MixedDegree { degree, found });
            }
        }
        Ok(ConeWitness { terms, degree, tol })
    }

    /// `a² − 4ac + 4b²`.
    pub fn half_plane_quadric() -> ConeWitness {
        ConeWitness::new(
            vec![(1.0, [2, 0, 0]), (-4.0, [1, 0, 1]), (4.0, [0, 2, 0])],
            1e-12,
        )
        .expect("homogeneous")
    }

    pub fn eval(&self, t: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(c, m)| c * t[0].powi(m[0] as i32) * t[1].powi(m[1] as i32) * t[2].powi(m[2] as i32))
            .sum()
    }

    /// Parses `coeff:i,j,k;coeff:i,j,k;...`.
    pub fn parse(text: &str, tol: f64) -> std::result::Result<ConeWitness, String> {
        let mut terms = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, m) = part
                .split_once(':')
                .ok_or_else(|| format!("term `{part}` is not of the form coeff:i,j,k"))?;
            let c: f64 = c.trim().parse().map_err(|_| format!("bad coefficient `{c}`"))?;
            let e: Vec<u32> = m
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| format!("bad exponent `{v}`")))
                .collect::<std::result::Result<_, _>>()?;
            if e.len() != 3 {
                return Err(format!("term `{part}` needs three exponents"));
            }
            terms.push((c, [e[0], e[1], e[2]]));
        }
        if terms.is_empty() {
            return Err("witness has no terms".into());
        }
        ConeWitness::new(terms, tol).map_err(|e| e.to_string())
    }
}

/// Scale-invariant residual `max |P(E,F,G)| / max(|E|,|F|,|G|)^deg`.
pub fn cone_identity_check(m: &dyn MetricField, w: &ConeWitness, points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(GeometryError::EmptyGrid);
    }
    let vals: Vec<f64> = points
        .par_iter()
        .map(|&(x, y)| {
            let t = m.triple(x, y)?;
            let s = t[0].abs().max(t[1].abs()).max(t[2].abs());
            if s == 0.0 {
                return Err(GeometryError::ZeroTriple { x, y });
            }
            Ok(w.eval(t).abs() / s.powi(w.degree as i32))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `max ‖∂ₓN × ∂ᵧN‖` over the grid nodes for the unit triple
/// `N = (E,F,G)/‖(E,F,G)‖`. Partials use fourth-order central differences
/// at each node with a step of `1e-3` times the grid extent.
pub fn normalized_rank_test(m: &dyn MetricField, grid: &Grid) -> Result<f64> {
    let extent = (grid.ax.end() - grid.ax.start)
        .abs()
        .max((grid.ay.end() - grid.ay.start).abs());
    let h = 1e-3 * extent;
    let unit = |x: f64, y: f64| -> Result<[f64; 3]> {
        let t = m.triple(x, y)?;
        let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        if n == 0.0 {
            return Err(GeometryError::ZeroTriple { x, y });
        }
        Ok([t[0] / n, t[1] / n, t[2] / n])
    };
    let cross: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&(x, y)| {
            let mut u = [0.0; 3];
            let mut v = [0.0; 3];
            for (k, c) in C1.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                let off = (k as f64 - 2.0) * h;
                let nx = unit(x + off, y)?;
                let ny = unit(x, y + off)?;
                for i in 0..3 {
                    u[i] += c * nx[i] / (12.0 * h);
                    v[i] += c * ny[i] / (12.0 * h);
                }
            }
            let c = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            Ok((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(cross.into_iter().fold(0.0, f64::max))
}

/// `max |(2−d)H + x H_x + y H_y|` over points and entries, divided by the
/// largest Hessian entry seen.
pub fn euler_homogeneity_residual(f: &dyn ScalarField2D, d: f64, points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(GeometryError::EmptyGrid);
    }
    if points.iter().any(|&(x, y)| x == 0.0 && y == 0.0) {
        return Err(GeometryError::OriginInGrid);
    }
    let per: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&(x, y)| {
            let b = f.bundle(x, y)?;
            let h = [b.fxx, b.fxy, b.fyy];
            let hx = [b.fxxx, b.fxxy, b.fxyy];
            let hy = [b.fxxy, b.fxyy, b.fyyy];
            let mut r = 0.0f64;
            let mut s = 0.0f64;
            for c in 0..3 {
                r = r.max(((2.0 - d) * h[c] + x * hx[c] + y * hy[c]).abs());
                s = s.max(h[c].abs());
            }
            Ok((r, s))
        })
        .collect::<Result<_>>()?;
    let r = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let s = per.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(if s > 0.0 { r / s } else { r })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialFit {
    pub c: f64,
    pub residual: f64,
}

/// Fits `f − f(0) − ∇f(0)·(x, y) ≈ C (x² + y²)` on the disk of the given
/// radius, sampled on an `n × n` grid (made odd so the centre is a node).
///
/// Checks radial symmetry, positive definiteness everywhere including the
/// centre, and flatness (`|K| ≤ flat_tol`) before fitting.
pub fn radial_flat_fit(f: &dyn ScalarField2D, radius: f64, n: usize, flat_tol: f64) -> Result<RadialFit> {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let grid = Rect::new((-radius, radius), (-radius, radius)).grid(n, n);
    let pts: Vec<(f64, f64)> = grid
        .points()
        .into_iter()
        .map(|(x, y)| (snap(x), snap(y)))
        .filter(|&(x, y)| x * x + y * y <= radius * radius * (1.0 + 1e-12))
        .collect();
    let bundles: Vec<DiffBundle> = pts
        .par_iter()
        .map(|&(x, y)| f.bundle(x, y))
        .collect::<Result<_>>()?;
    let fmax = bundles.iter().map(|b| b.f.abs()).fold(0.0, f64::max);
    for (&(x, y), b) in pts.iter().zip(&bundles) {
        let rot = f.bundle(-y, x)?.f;
        let deviation = (b.f - rot).abs();
        if deviation > 1e-9 * (1.0 + fmax) {
            return Err(GeometryError::NotRadiallySymmetric { x, y, deviation });
        }
    }
    for (&(x, y), b) in pts.iter().zip(&bundles) {
        check_pd([b.fxx, b.fxy, b.fyy], x, y)?;
    }
    for (&(x, y), b) in pts.iter().zip(&bundles) {
        let k = curvature_of_bundle(b, (x, y))?;
        if k.abs() > flat_tol {
            return Err(GeometryError::NotFlat { x, y, curvature: k });
        }
    }
    let c0 = f.bundle(0.0, 0.0)?;
    let gauged: Vec<(f64, f64)> = pts
        .iter()
        .zip(&bundles)
        .map(|(&(x, y), b)| (x * x + y * y, b.f - c0.f - c0.fx * x - c0.fy * y))
        .collect();
    let num: f64 = gauged.iter().map(|(r2, g)| r2 * g).sum();
    let den: f64 = gauged.iter().map(|(r2, _)| r2 * r2).sum();
    let c = num / den;
    let residual = gauged
        .iter()
        .map(|(r2, g)| (g - c * r2).abs())
        .fold(0.0, f64::max);
    Ok(RadialFit { c, residual })
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-14 {
        0.0
    } else {
        v
    }
}

/// Pulls the metric back through `(s, t) ↦ (x, y)`. `map` returns the image
/// point and the Jacobian `[[x_s, x_t], [y_s, y_t]]`; the result is
/// `[g_ss, g_st, g_tt]`.
pub fn pullback_metric(
    m: &dyn MetricField,
    map: &dyn Fn(f64, f64) -> ((f64, f64), [[f64; 2]; 2]),
    s: f64,
    t: f64,
) -> Result<[f64; 3]> {
    let ((x, y), j) = map(s, t);
    let [e, f, g] = m.triple(x, y)?;
    let q = |a: [f64; 2], b: [f64; 2]| e * a[0] * b[0] + f * (a[0] * b[1] + a[1] * b[0]) + g * a[1] * b[1];
    let cs = [j[0][0], j[1][0]];
    let ct = [j[0][1], j[1][1]];
    Ok([q(cs, cs), q(cs, ct), q(ct, ct)])
}

/// One row of a grid sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSample {
    pub x: f64,
    pub y: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub k: f64,
    pub residual: f64,
    pub trace: f64,
    pub det: f64,
}

/// Summary of a sweep over a point set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub curvature_max: f64,
    pub curvature_argmax: (f64, f64),
    pub flatness_max: f64,
    pub pd_min_trace: f64,
    pub pd_min_det: f64,
    pub positive_definite: bool,
    pub points: usize,
}

/// Evaluates metric, curvature and flatness residual at every point.
/// Curvature is reported even where positivity fails; see
/// [`SweepSummary::positive_definite`].
pub fn sweep(f: &dyn ScalarField2D, points: &[(f64, f64)]) -> Result<Vec<GridSample>> {
    if points.is_empty() {
        return Err(GeometryError::EmptyGrid);
    }
    points
        .par_iter()
        .map(|&(x, y)| {
            let b = f.bundle(x, y)?;
            Ok(GridSample {
                x,
                y,
                e: b.fxx,
                f: b.fxy,
                g: b.fyy,
                k: curvature_raw(&b),
                residual: det3(&b),
                trace: b.fxx + b.fyy,
                det: b.fxx * b.fyy - b.fxy * b.fxy,
            })
        })
        .collect()
}

pub fn summarize(rows: &[GridSample]) -> SweepSummary {
    let mut s = SweepSummary {
        curvature_max: 0.0,
        curvature_argmax: (f64::NAN, f64::NAN),
        flatness_max: 0.0,
        pd_min_trace: f64::INFINITY,
        pd_min_det: f64::INFINITY,
        positive_definite: true,
        points: rows.len(),
    };
    for r in rows {
        if !(r.k.abs() <= s.curvature_max) {
            s.curvature_max = r.k.abs();
            s.curvature_argmax = (r.x, r.y);
        }
        s.flatness_max = s.flatness_max.max(r.residual.abs());
        s.pd_min_trace = s.pd_min_trace.min(r.trace);
        s.pd_min_det = s.pd_min_det.min(r.det);
        if check_pd([r.e, r.f, r.g], r.x, r.y).is_err() {
            s.positive_definite = false;
        }
    }
    s
}

/// CSV with header `x,y,E,F,G,K,residual`.
pub fn write_grid_csv(mut w: impl Write, rows: &[GridSample]) -> io::Result<()> {
    writeln!(w, "x,y,E,F,G,K,residual")?;
    for r in rows {
        writeln!(
            w,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.x, r.y, r.e, r.f, r.g, r.k, r.residual
        )?;
    }
    Ok(())
}

/// Sampling region of a catalog fixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    Rect { x: (f64, f64), y: (f64, f64) },
    Annulus { inner: f64, outer: f64 },
    Disk { radius: f64 },
}

impl Region {
    pub fn bounding_rect(&self) -> Rect {
        match *self {
            Region::Rect { x, y } => Rect::new(x, y),
            Region::Annulus { outer: r, .. } | Region::Disk { radius: r } => Rect::new((-r, r), (-r, r)),
        }
    }

    /// Nodes of an `n × n` grid over the bounding box that lie in the region.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let pts = self.bounding_rect().grid(n, n).points();
        let tol = 1e-12;
        match *self {
            Region::Rect { .. } => pts,
            Region::Annulus { inner, outer } => pts
                .into_iter()
                .filter(|&(x, y)| {
                    let r = x.hypot(y);
                    r >= inner * (1.0 - tol) && r <= outer * (1.0 + tol)
                })
                .collect(),
            Region::Disk { radius } => pts
                .into_iter()
                .filter(|&(x, y)| x.hypot(y) <= radius * (1.0 + tol))
                .collect(),
        }
    }
}

/// A named potential with the checks that apply to it.
#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub potential: &'static str,
    pub region: Region,
    pub flat: bool,
    /// Cone witness terms, if one is known.
    pub witness: Option<&'static [(f64, [u32; 3])]>,
    pub homogeneity_degree: Option<f64>,
    pub radial: bool,
    /// Point with a known curvature value.
    pub probe: Option<((f64, f64), f64)>,
}

const HALF_PLANE_WITNESS: &[(f64, [u32; 3])] = &[(1.0, [2, 0, 0]), (-4.0, [1, 0, 1]), (4.0, [0, 2, 0])];

static CATALOG: [Fixture; 5] = [
    Fixture {
        name: "example-4.2",
        potential: "x^2/(2*y) + y*log(y)/4",
        region: Region::Rect {
            x: (-1.0, 1.0),
            y: (0.5, 2.0),
        },
        flat: true,
        witness: Some(HALF_PLANE_WITNESS),
        homogeneity_degree: None,
        radial: false,
        probe: Some(((1.0, 1.0), 0.0)),
    },
    Fixture {
        name: "homogeneous-r4",
        potential: "(x^2 + y^2)^2",
        region: Region::Annulus {
            inner: 0.5,
            outer: 1.0,
        },
        flat: true,
        witness: None,
        homogeneity_degree: Some(4.0),
        radial: false,
        probe: None,
    },
    Fixture {
        name: "separable-exp",
        potential: "exp(x) + exp(y)",
        region: Region::Rect {
            x: (-1.0, 1.0),
            y: (-1.0, 1.0),
        },
        flat: true,
        witness: None,
        homogeneity_degree: None,
        radial: false,
        probe: None,
    },
    Fixture {
        name: "radial-Cr2",
        potential: "3*(x^2 + y^2)",
        region: Region::Disk { radius: 1.0 },
        flat: true,
        witness: None,
        homogeneity_degree: Some(2.0),
        radial: true,
        probe: None,
    },
    Fixture {
        name: "nonflat-x2y2",
        potential: "x^2 + y^2 + x^2*y^2",
        region: Region::Rect {
            x: (0.25, 0.75),
            y: (0.25, 0.75),
        },
        flat: false,
        witness: Some(HALF_PLANE_WITNESS),
        homogeneity_degree: None,
        radial: false,
        probe: Some(((0.5, 0.5), 16.0 / 110.25)),
    },
];

pub fn catalog() -> &'static [Fixture] {
    &CATALOG
}

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    CATALOG.iter().find(|f| f.name == name)
}

impl Fixture {
    pub fn field(&self) -> ClosedFormField {
        ClosedFormField::parse(self.potential, self.region.bounding_rect()).expect("catalog potentials parse")
    }
}

/// Outcome of running every applicable check on a fixture.
#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub potential: String,
    pub expected_flat: bool,
    pub sweep: SweepSummary,
    pub probe_curvature: Option<f64>,
    pub probe_brioschi: Option<f64>,
    pub cone_residual: Option<f64>,
    pub rank_residual: Option<f64>,
    pub euler_residual: Option<f64>,
    pub radial_fit: Option<RadialFit>,
    pub checks: Vec<(String, bool)>,
    pub passed: bool,
}

/// Runs the fixture's checks on an `n × n` sample of its region.
pub fn verify_fixture(fx: &Fixture, n: usize) -> Result<FixtureReport> {
    let field = fx.field();
    let pts = fx.region.sample(n);
    let rows = sweep(&field, &pts)?;
    let summary = summarize(&rows);
    let metric = HessianMetric(&field);
    let mut checks = Vec::new();
    let mut report = FixtureReport {
        name: fx.name.to_string(),
        potential: fx.potential.to_string(),
        expected_flat: fx.flat,
        sweep: summary,
        probe_curvature: None,
        probe_brioschi: None,
        cone_residual: None,
        rank_residual: None,
        euler_residual: None,
        radial_fit: None,
        checks: Vec::new(),
        passed: false,
    };
    checks.push(("positive definite".to_string(), summary.positive_definite));
    if fx.flat {
        checks.push(("max |K| < 1e-8".to_string(), summary.curvature_max < 1e-8));
    } else {
        checks.push(("max |K| > 1e-3".to_string(), summary.curvature_max > 1e-3));
    }
    if let Some((p, k_expected)) = fx.probe {
        let k = hessian_curvature(&field, p)?;
        let kb = brioschi_oracle(&metric, p)?;
        let tol = if k_expected == 0.0 { 1e-6 } else { 1e-6 * k_expected.abs() };
        checks.push((format!("K{p:?} = {k_expected:?}"), (k - k_expected).abs() <= tol));
        checks.push(("Brioschi agrees".to_string(), (kb - k).abs() <= tol));
        report.probe_curvature = Some(k);
        report.probe_brioschi = Some(kb);
    }
    if let Some(terms) = fx.witness {
        let w = ConeWitness::new(terms.to_vec(), 1e-12)?;
        let r = cone_identity_check(&metric, &w, &pts)?;
        if fx.flat {
            checks.push(("cone identity < 1e-12".to_string(), r < 1e-12));
        } else {
            checks.push(("cone identity fails (> 1e-2)".to_string(), r > 1e-2));
        }
        report.cone_residual = Some(r);
        let rank = normalized_rank_test(&metric, &fx.region.bounding_rect().grid(41, 41))?;
        if fx.flat {
            checks.push(("normalized rank < 1e-6".to_string(), rank < 1e-6));
        } else {
            checks.push(("normalized rank > 1e-3".to_string(), rank > 1e-3));
        }
        report.rank_residual = Some(rank);
    }
    if let Some(d) = fx.homogeneity_degree {
        let pts_no_origin: Vec<_> = pts.iter().copied().filter(|&(x, y)| x != 0.0 || y != 0.0).collect();
        let r = euler_homogeneity_residual(&field, d, &pts_no_origin)?;
        checks.push(("Euler residual < 1e-10".to_string(), r < 1e-10));
        report.euler_residual = Some(r);
    }
    if fx.radial {
        if let Region::Disk { radius } = fx.region {
            let fit = radial_flat_fit(&field, radius, n, 1e-8)?;
            checks.push(("radial fit residual < 1e-12".to_string(), fit.residual < 1e-12));
            report.radial_fit = Some(fit);
        }
    }
    report.passed = checks.iter().all(|c| c.1);
    report.checks = checks;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(src: &str, x: (f64, f64), y: (f64, f64)) -> ClosedFormField {
        ClosedFormField::parse(src, Rect::new(x, y)).unwrap()
    }

    fn example42() -> ClosedFormField {
        field("x^2/(2*y) + y*log(y)/4", (-1.0, 1.0), (0.5, 2.0))
    }

    fn nonflat() -> ClosedFormField {
        field("x^2 + y^2 + x^2*y^2", (-2.0, 2.0), (-2.0, 2.0))
    }

    #[test]
    fn bracket_examples() {
        let fx = field("x", (-3.0, 3.0), (-3.0, 3.0));
        let fy = field("y", (-3.0, 3.0), (-3.0, 3.0));
        assert_eq!(poisson_bracket(&fx, &fy, (0.3, -1.2)).unwrap(), 1.0);
        assert_eq!(poisson_bracket(&fx, &fx, (0.3, -1.2)).unwrap(), 0.0);
        let a = field("x^2", (-3.0, 3.0), (-3.0, 3.0));
        let b = field("y^2", (-3.0, 3.0), (-3.0, 3.0));
        assert_eq!(poisson_bracket(&a, &b, (1.0, 2.0)).unwrap(), 8.0);
        assert!(matches!(
            poisson_bracket(&a, &b, (5.0, 0.0)),
            Err(GeometryError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn curvature_examples() {
        let q = field("(x^2 + y^2)/2", (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(hessian_curvature(&q, (0.2, 0.4)).unwrap(), 0.0);
        assert!(hessian_curvature(&example42(), (1.0, 1.0)).unwrap().abs() < 1e-15);
        let k = hessian_curvature(&nonflat(), (0.5, 0.5)).unwrap();
        assert!((k - 16.0 / 110.25).abs() < 1e-15);
        assert_eq!(flatness_residual(&nonflat(), (0.5, 0.5)).unwrap(), -16.0);
        let sep = field("exp(x) + exp(y)", (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(flatness_residual(&sep, (0.3, -0.7)).unwrap(), 0.0);
    }

    #[test]
    fn not_positive_definite_is_reported() {
        let f = field("x^2 - y^2", (-1.0, 1.0), (-1.0, 1.0));
        match hessian_curvature(&f, (0.0, 0.0)) {
            Err(GeometryError::NotPositiveDefinite { trace, det, .. }) => {
                assert_eq!(trace, 0.0);
                assert_eq!(det, -4.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn brioschi_examples() {
        let r = Rect::new((0.5, 2.0), (-1.0, 1.0));
        let euclid = FnMetric::new(r, |_, _| [1.0, 0.0, 1.0]);
        assert_eq!(brioschi_oracle(&euclid, (1.0, 0.0)).unwrap(), 0.0);
        let polar = FnMetric::new(r, |x, _| [1.0, 0.0, x * x]);
        assert!(brioschi_oracle(&polar, (1.3, 0.2)).unwrap().abs() < 1e-7);
        let f = nonflat();
        let kb = brioschi_oracle(&HessianMetric(&f), (0.5, 0.5)).unwrap();
        assert!((kb - 16.0 / 110.25).abs() < 1e-6 * 16.0 / 110.25);
        // round sphere of radius 1 in geodesic polar form
        let sphere = FnMetric::new(r, |x, _| [1.0, 0.0, x.sin().powi(2)]);
        assert!((brioschi_oracle(&sphere, (1.0, 0.0)).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn example42_flatness_and_cone() {
        let f = example42();
        let pts = Rect::new((-1.0, 1.0), (0.5, 2.0)).grid(41, 41).points();
        let worst = pts
            .iter()
            .map(|&p| flatness_residual(&f, p).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9);
        let m = HessianMetric(&f);
        let r = cone_identity_check(&m, &ConeWitness::half_plane_quadric(), &pts).unwrap();
        assert!(r < 1e-12, "{r}");
        let b = expr::eval_bundle(f.expr(), (1.0, 1.0)).unwrap();
        assert_eq!((b.fxx, b.fxy, b.fyy), (1.0, -1.0, 1.25));
    }

    #[test]
    fn cone_examples() {
        let r = Rect::new((-1.0, 1.0), (-1.0, 1.0));
        let m = FnMetric::new(r, |_, _| [1.0, 0.0, 1.0]);
        let w = ConeWitness::new(vec![(1.0, [1, 0, 0]), (-1.0, [0, 0, 1])], 1e-12).unwrap();
        assert_eq!(cone_identity_check(&m, &w, &r.grid(5, 5).points()).unwrap(), 0.0);
        let f = nonflat();
        let pts = Rect::new((0.25, 0.75), (0.25, 0.75)).grid(11, 11).points();
        let r = cone_identity_check(&HessianMetric(&f), &ConeWitness::half_plane_quadric(), &pts).unwrap();
        assert!(r > 1e-2);
        assert!(matches!(
            cone_identity_check(&m, &w, &[]),
            Err(GeometryError::EmptyGrid)
        ));
        assert!(matches!(
            ConeWitness::new(vec![(1.0, [1, 0, 0]), (1.0, [1, 1, 0])], 0.0),
            Err(GeometryError::MixedDegree { degree: 1, found: 2 })
        ));
        let parsed = ConeWitness::parse("1:2,0,0; -4:1,0,1; 4:0,2,0", 1e-12).unwrap();
        assert_eq!(parsed, ConeWitness::half_plane_quadric());
    }

    #[test]
    fn rank_test_examples() {
        let f = example42();
        let grid = Rect::new((-1.0, 1.0), (0.5, 2.0)).grid(41, 41);
        let r = normalized_rank_test(&HessianMetric(&f), &grid).unwrap();
        assert!(r < 1e-6, "{r}");
        let c = FnMetric::new(Rect::new((0.0, 1.0), (0.0, 1.0)), |_, _| [2.0, 0.0, 2.0]);
        assert_eq!(
            normalized_rank_test(&c, &Rect::new((0.0, 1.0), (0.0, 1.0)).grid(9, 9)).unwrap(),
            0.0
        );
        let g = nonflat();
        let r = normalized_rank_test(&HessianMetric(&g), &Rect::new((0.25, 0.75), (0.25, 0.75)).grid(41, 41))
            .unwrap();
        assert!(r > 1e-3, "{r}");
        
    }

    #[test]
    fn euler_examples() {
        let ring = Region::Annulus {
            inner: 0.5,
            outer: 1.0,
        }
        .sample(41);
        let r4 = field("(x^2 + y^2)^2", (-1.0, 1.0), (-1.0, 1.0));
        assert!(euler_homogeneity_residual(&r4, 4.0, &ring).unwrap() < 1e-10);
        let q = field("5*(x^2 + y^2)", (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(euler_homogeneity_residual(&q, 2.0, &ring).unwrap(), 0.0);
        assert!(euler_homogeneity_residual(&nonflat(), 2.0, &ring).unwrap() > 0.1);
        assert!(matches!(
            euler_homogeneity_residual(&q, 2.0, &[(0.0, 0.0)]),
            Err(GeometryError::OriginInGrid)
        ));
    }

    #[test]
    fn radial_examples() {
        let f = field("3*(x^2 + y^2)", (-1.0, 1.0), (-1.0, 1.0));
        let fit = radial_flat_fit(&f, 1.0, 41, 1e-8).unwrap();
        assert!((fit.c - 3.0).abs() < 1e-12 && fit.residual < 1e-12);
        let shifted = field("3*(x^2 + y^2) + 2*x - y + 7", (-1.0, 1.0), (-1.0, 1.0));
        // the affine jet is removed, but the symmetry test sees the linear terms
        assert!(matches!(
            radial_flat_fit(&shifted, 1.0, 41, 1e-8),
            Err(GeometryError::NotRadiallySymmetric { .. })
        ));
        let r4 = field("(x^2 + y^2)^2", (-1.0, 1.0), (-1.0, 1.0));
        match radial_flat_fit(&r4, 1.0, 41, 1e-8) {
            Err(GeometryError::NotPositiveDefinite { x, y, .. }) => assert_eq!((x, y), (0.0, 0.0)),
            other => panic!("{other:?}"),
        }
        let bumped = field("3*(x^2 + y^2) + 0.01*(x^2 + y^2)^2", (-1.0, 1.0), (-1.0, 1.0));
        assert!(matches!(
            radial_flat_fit(&bumped, 1.0, 41, 1e-8),
            Err(GeometryError::NotFlat { .. })
        ));
        let tilted = field("x^2 + 2*y^2", (-1.0, 1.0), (-1.0, 1.0));
        assert!(matches!(
            radial_flat_fit(&tilted, 1.0, 41, 1e-8),
            Err(GeometryError::NotRadiallySymmetric { .. })
        ));
    }

    #[test]
    fn polar_pullback_of_example42() {
        let f = example42();
        let m = HessianMetric(&f);
        let map = |r: f64, th: f64| ((r * r * th, r * r), [[2.0 * r * th, r * r], [2.0 * r, 0.0]]);
        for &(r, th) in &[(1.0, 0.3), (0.8, -0.5), (1.2, 0.1)] {
            let g = pullback_metric(&m, &map, r, th).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-12);
            assert!(g[1].abs() < 1e-12);
            assert!((g[2] - r * r).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_field_matches_closed_form() {
        let f = nonflat();
        let ax = Axis::spanning(0.0, 1.0, 81);
        let ay = Axis::spanning(0.0, 1.0, 81);
        let vals = Array2::from_shape_fn((81, 81), |(i, j)| f.bundle(ax.at(i), ay.at(j)).unwrap().f);
        let s = SampledField::new(ax, ay, vals).unwrap();
        let k = hessian_curvature(&s, (0.5, 0.5)).unwrap();
        assert!((k - 16.0 / 110.25).abs() < 1e-6, "{k}");
        assert_eq!(s.provenance(), Provenance::FiniteDifference);
    }

    #[test]
    fn catalog_fixtures_pass() {
        for fx in catalog() {
            let rep = verify_fixture(fx, 41).unwrap();
            assert!(rep.passed, "{}: {:?}", fx.name, rep.checks);
        }
        assert!(fixture("nope").is_none());
    }

    #[test]
    fn grid_csv_header() {
        let f = nonflat();
        let rows = sweep(&f, &[(0.5, 0.5)]).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,E,F,G,K,residual\n0.5,0.5,2.5,1.0,2.5,"));
    }

    fn poly_source(c: &[f64]) -> String {
        // a PD-dominant quadratic plus random cubic and quartic terms
        format!(
            "3*x^2 + 3*y^2 + ({})*x*y + ({})*x^3 + ({})*x^2*y + ({})*x*y^2 + ({})*y^3 + ({})*x^4 + ({})*x^2*y^2 + ({})*y^4",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        )
    }

    proptest! {
        #[test]
        fn bracket_antisymmetry(a in -3.0..3.0f64, b in -3.0..3.0f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
            let fa = field(&format!("sin({a}*x) + x*y^2"), (-1.0, 1.0), (-1.0, 1.0));
            let fb = field(&format!("exp({b}*y) - x^3"), (-1.0, 1.0), (-1.0, 1.0));
            let ab = poisson_bracket(&fa, &fb, (x, y)).unwrap();
            let ba = poisson_bracket(&fb, &fa, (x, y)).unwrap();
            prop_assert_eq!(ab, -ba);
        }

        #[test]
        fn numerator_forms_agree(c in proptest::collection::vec(-1.0..1.0f64, 8), x in -0.3..0.3f64, y in -0.3..0.3f64) {
            let f = field(&poly_source(&c), (-1.0, 1.0), (-1.0, 1.0));
            let b = f.bundle(x, y).unwrap();
            let d = det3(&b);
            let p = bracket_numerator(&b);
            let scale = d.abs().max(1e-300);
            prop_assert!((d - p).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn brioschi_agrees(c in proptest::collection::vec(-1.0..1.0f64, 8), x in -0.3..0.3f64, y in -0.3..0.3f64) {
            let f = field(&poly_source(&c), (-1.0, 1.0), (-1.0, 1.0));
            let k = hessian_curvature(&f, (x, y)).unwrap();
            let kb = brioschi_oracle_with_step(&HessianMetric(&f), (x, y), 1e-4).unwrap();
            prop_assert!((k - kb).abs() < 1e-5, "{} vs {}", k, kb);
        }

        #[test]
        fn curvature_scales_inversely(c in proptest::collection::vec(-1.0..1.0f64, 8), s in 0.1..10.0f64, x in -0.3..0.3f64, y in -0.3..0.3f64) {
            let src = poly_source(&c);
            let f = field(&src, (-1.0, 1.0), (-1.0, 1.0));
            let g = field(&format!("{s}*({src})"), (-1.0, 1.0), (-1.0, 1.0));
            let k = hessian_curvature(&f, (x, y)).unwrap();
            let ks = hessian_curvature(&g, (x, y)).unwrap();
            prop_assert!((ks - k / s).abs() <= 1e-10 * (k / s).abs().max(1e-12));
        }

        #[test]
        fn flat_fixtures_have_zero_curvature(a in -1.0..1.0f64, b in -1.0..1.0f64) {
            for (src, p) in [
                ("x^2/(2*y) + y*log(y)/4", (a, 1.25 + 0.75 * b)),
                ("exp(x) + cosh(y)", (a, b)),
                ("(x^2 + y^2)^2", (0.5 + 0.25 * a, 0.5 + 0.25 * b)),
            ] {
                let f = field(src, (-1.0, 1.0), (-1.0, 2.0));
                prop_assert!(hessian_curvature(&f, p).unwrap().abs() < 1e-8);
            }
        }
    }
}
