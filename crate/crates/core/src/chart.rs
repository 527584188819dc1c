//! Hesse coordinates from a Klein–Gordon solution, chart inversion and
//! reconstruction of the potential.
//!
//! On a rectangle in `(t, θ)` the chart carries `y = μΨ` and `x`, obtained
//! by integrating `dx = −λ₁ y_{r₁} dr₁ − λ₂ y_{r₂} dr₂` with `r₁ = θ + t`,
//! `r₂ = θ − t`. The metric `E = φ(u)eᵛ, F = ueᵛ, G = (1−φ(u))eᵛ` is then a
//! Hessian metric in `(x, y)` and its potential follows by integrating the
//! Hessian twice along rays from a base point.

use std::io::{self, Write};

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    self, bracket, check_pd, curvature_raw, det3, metric_gradient, GeometryError, Grid, MetricField, Rect,
    SampledField, ScalarField2D,
};
use crate::numeric::{fd, interp::Bicubic, quad, Axis};
use crate::pipeline::{t_slice, KgField, PhaseTable, PipelineError, Profile, Sampled, WaveData};

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum ChartError {
    #[error("the 1-form dx is not closed: residual {residual} exceeds {tolerance} at (t, θ) = ({t}, {theta})")]
    NotClosed {
        residual: f64,
        tolerance: f64,
        t: f64,
        theta: f64,
    },
    #[error("chart Jacobian is singular at (t, θ) = ({t}, {theta}): det {det}")]
    SingularJacobian { t: f64, theta: f64, det: f64 },
    #[error("assembled metric is not positive definite at (t, θ) = ({t}, {theta})")]
    PositivityViolation { t: f64, theta: f64, trace: f64, det: f64 },
    #[error("chart t-range [{}, {}] is not covered by the wave data", t.0, t.1)]
    OutsideWaveGrid { t: (f64, f64) },
    #[error("x has not been recovered on this chart")]
    MissingX,
    #[error("the segment from the base point to ({}, {}) leaves the chart image near ({}, {})", ray.0, ray.1, at.0, at.1)]
    NotStarShaped { ray: (f64, f64), at: (f64, f64) },
    #[error("no rectangle around the base point fits inside the chart image")]
    NoRegion,
    #[error("{0}")]
    Geometry(GeometryError),
    #[error("{0}")]
    Pipeline(PipelineError),
}

impl From<GeometryError> for ChartError {
    fn from(e: GeometryError) -> Self {
        ChartError::Geometry(e)
    }
}

impl From<PipelineError> for ChartError {
    fn from(e: PipelineError) -> Self {
        ChartError::Pipeline(e)
    }
}

pub type Result<T> = std::result::Result<T, ChartError>;

/// `y = μΨ` and its partials on the chart grid.
#[derive(Clone, Debug)]
pub struct YField {
    pub y: Array2<f64>,
    pub y_t: Array2<f64>,
    pub y_th: Array2<f64>,
    pub y_tth: Array2<f64>,
    pub y_thth: Array2<f64>,
}

/// `y = μΨ`, `y_t = μ(Ψ_t − ΓΨ/2)`, `y_θ = μΨ_θ`.
pub fn recover_y(wd: &WaveData, kg: &KgField) -> Result<YField> {
    for t in [kg.t.start, kg.t.end()] {
        if !wd.contains(t) {
            return Err(ChartError::OutsideWaveGrid {
                t: (kg.t.start, kg.t.end()),
            });
        }
    }
    let mu = wd.mu_interp();
    let gamma = Sampled::new(wd.axis, wd.gamma.clone()).spline();
    let shape = kg.psi.raw_dim();
    let mut yf = YField {
        y: Array2::zeros(shape),
        y_t: Array2::zeros(shape),
        y_th: Array2::zeros(shape),
        y_tth: Array2::zeros(shape),
        y_thth: Array2::zeros(shape),
    };
    for i in 0..kg.t.n {
        let t = kg.t.at(i);
        let (m, g) = (mu.eval(t), gamma.eval(t));
        for j in 0..kg.theta.n {
            let p = kg.psi[[i, j]];
            yf.y[[i, j]] = m * p;
            yf.y_t[[i, j]] = m * (kg.psi_t[[i, j]] - 0.5 * g * p);
            yf.y_th[[i, j]] = m * kg.psi_th[[i, j]];
            yf.y_tth[[i, j]] = m * (kg.psi_tth[[i, j]] - 0.5 * g * kg.psi_th[[i, j]]);
            yf.y_thth[[i, j]] = m * kg.psi_thth[[i, j]];
        }
    }
    Ok(yf)
}

/// Rectangle and resolution of a chart in `(t, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ChartDomain {
    pub t: (f64, f64),
    pub theta: (f64, f64),
    pub nt: usize,
    pub ntheta: usize,
}

impl Default for ChartDomain {
    fn default() -> Self {
        ChartDomain {
            t: (0.2, 0.45),
            theta: (1.0, 1.4),
            nt: 129,
            ntheta: 129,
        }
    }
}

impl ChartDomain {
    pub fn axes(&self) -> (Axis, Axis) {
        (
            Axis::spanning(self.t.0, self.t.1, self.nt),
            Axis::spanning(self.theta.0, self.theta.1, self.ntheta),
        )
    }
}

/// Diagnostics from [`recover_x`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XRecovery {
    /// Interior closedness residual relative to the size of the terms.
    pub closedness: f64,
    /// Largest difference between the two integration orders.
    pub path_mismatch: f64,
    /// Scale used to judge `path_mismatch`.
    pub path_scale: f64,
}

/// A `(t, θ)` grid carrying `u, v, y, x` and the partials of `x` and `y`.
/// Arrays are indexed `[[i, j]]` at `(t.at(i), theta.at(j))`.
#[derive(Clone, Debug)]
pub struct ConformalChart {
    pub t: Axis,
    pub theta: Axis,
    pub u: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// `(p₁(u) + p₂(u))/2` along the t-axis.
    pub phase_mean: Vec<f64>,
    pub v: Array2<f64>,
    pub y: YField,
    pub y_r1: Array2<f64>,
    pub y_r2: Array2<f64>,
    pub x: Array2<f64>,
    pub x_t: Array2<f64>,
    pub x_th: Array2<f64>,
    pub x_tth: Array2<f64>,
    /// `det ∂(x,y)/∂(t,θ)`.
    pub jacobian: Array2<f64>,
    pub base: (usize, usize),
    pub recovery: Option<XRecovery>,
    profile: Profile,
    phase: PhaseTable,
    interp: Option<(Bicubic, Bicubic)>,
}

impl ConformalChart {
    /// Builds the chart from a Klein–Gordon field. `x` is filled in by
    /// [`recover_x`].
    pub fn new(p: &Profile, pt: &PhaseTable, wd: &WaveData, kg: &KgField) -> Result<ConformalChart> {
        let yf = recover_y(wd, kg)?;
        let (nt, nq) = (kg.t.n, kg.theta.n);
        let mut u = Vec::with_capacity(nt);
        let mut l1 = Vec::with_capacity(nt);
        let mut l2 = Vec::with_capacity(nt);
        let mut pm = Vec::with_capacity(nt);
        for i in 0..nt {
            let s = t_slice(p, pt, kg.t.at(i))?;
            u.push(s.u);
            l1.push(s.lambda1);
            l2.push(s.lambda2);
            pm.push(0.5 * (pt.p1_at(s.u) + pt.p2_at(s.u)));
        }
        let v = Array2::from_shape_fn((nt, nq), |(i, j)| kg.theta.at(j) - pm[i]);
        let y_r1 = Array2::from_shape_fn((nt, nq), |(i, j)| 0.5 * (yf.y_th[[i, j]] + yf.y_t[[i, j]]));
        let y_r2 = Array2::from_shape_fn((nt, nq), |(i, j)| 0.5 * (yf.y_th[[i, j]] - yf.y_t[[i, j]]));
        let x_t = Array2::from_shape_fn((nt, nq), |(i, j)| -l1[i] * y_r1[[i, j]] + l2[i] * y_r2[[i, j]]);
        let x_th = Array2::from_shape_fn((nt, nq), |(i, j)| -l1[i] * y_r1[[i, j]] - l2[i] * y_r2[[i, j]]);
        let x_tth = Array2::from_shape_fn((nt, nq), |(i, j)| {
            let d1 = 0.5 * (yf.y_thth[[i, j]] + yf.y_tth[[i, j]]);
            let d2 = 0.5 * (yf.y_thth[[i, j]] - yf.y_tth[[i, j]]);
            -l1[i] * d1 + l2[i] * d2
        });
        let jacobian =
            Array2::from_shape_fn((nt, nq), |(i, j)| x_t[[i, j]] * yf.y_th[[i, j]] - x_th[[i, j]] * yf.y_t[[i, j]]);
        Ok(ConformalChart {
            t: kg.t,
            theta: kg.theta,
            u,
            lambda1: l1,
            lambda2: l2,
            phase_mean: pm,
            v,
            y: yf,
            y_r1,
            y_r2,
            x: Array2::zeros((nt, nq)),
            x_t,
            x_th,
            x_tth,
            jacobian,
            base: (nt / 2, nq / 2),
            recovery: None,
            profile: p.clone(),
            phase: pt.clone(),
            interp: None,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn phase(&self) -> &PhaseTable {
        &self.phase
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.t.at(i), self.theta.at(j))
    }

    /// `(x, y)` at `(t, θ)` from the bicubic interpolants.
    pub fn forward(&self, t: f64, theta: f64) -> Result<(f64, f64)> {
        let (bx, by) = self.interp.as_ref().ok_or(ChartError::MissingX)?;
        Ok((bx.eval(t, theta).0, by.eval(t, theta).0))
    }

    /// `(u, v)` at a point of the `(t, θ)` rectangle.
    pub fn uv(&self, t: f64, theta: f64) -> (f64, f64) {
        let (u, _) = self.phase.u_of_t(t);
        (u, theta - 0.5 * (self.phase.p1_at(u) + self.phase.p2_at(u)))
    }

    /// Bounding box of the chart image in `(x, y)`.
    pub fn image_bounds(&self) -> Rect {
        let fold = |a: &Array2<f64>| {
            a.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
        };
        Rect::new(fold(&self.x), fold(&self.y.y))
    }
}

fn margin_max(a: &Array2<f64>, margin: usize) -> (f64, (usize, usize)) {
    let (n, m) = a.dim();
    let mut best = (0.0, (0, 0));
    for i in margin..n.saturating_sub(margin) {
        for j in margin..m.saturating_sub(margin) {
            let v = a[[i, j]].abs();
            if !(v <= best.0) {
                best = (v, (i, j));
            }
        }
    }
    best
}

/// Checks that `∂_{r₂}(λ₁ y_{r₁}) = ∂_{r₁}(λ₂ y_{r₂})` on interior nodes,
/// that the chart Jacobian is non-singular, and integrates `x` from the
/// base node (`x = 0` there) along θ then t. The opposite order is used as
/// a cross-check.
pub fn recover_x(c: &mut ConformalChart) -> Result<XRecovery> {
    let (nt, nq) = c.x.dim();
    let (ht, hq) = (c.t.step, c.theta.step);
    let a = Array2::from_shape_fn((nt, nq), |(i, j)| c.lambda1[i] * c.y_r1[[i, j]]);
    let b = Array2::from_shape_fn((nt, nq), |(i, j)| c.lambda2[i] * c.y_r2[[i, j]]);
    let (at, aq) = (fd::d1(&a, 0, ht), fd::d1(&a, 1, hq));
    let (bt, bq) = (fd::d1(&b, 0, ht), fd::d1(&b, 1, hq));
    let lhs_minus_rhs = Array2::from_shape_fn((nt, nq), |(i, j)| {
        0.5 * (aq[[i, j]] - at[[i, j]]) - 0.5 * (bq[[i, j]] + bt[[i, j]])
    });
    let terms = Array2::from_shape_fn((nt, nq), |(i, j)| {
        0.5 * (at[[i, j]].abs() + aq[[i, j]].abs() + bt[[i, j]].abs() + bq[[i, j]].abs())
    });
    let scale = margin_max(&terms, 2).0;
    let (res, (ri, rj)) = margin_max(&lhs_minus_rhs, 2);
    let closedness = if scale > 0.0 { res / scale } else { res };
    let tolerance = 1e-6;
    if closedness > tolerance {
        return Err(ChartError::NotClosed {
            residual: closedness,
            tolerance,
            t: c.t.at(ri),
            theta: c.theta.at(rj),
        });
    }
    let trivial = c.y.y.iter().all(|v| *v == 0.0);
    if !trivial {
        for i in 0..nt {
            for j in 0..nq {
                let size = (c.x_t[[i, j]] * c.y.y_th[[i, j]]).abs() + (c.x_th[[i, j]] * c.y.y_t[[i, j]]).abs();
                let det = c.jacobian[[i, j]];
                if !(det.abs() > 1e-10 * size) || size == 0.0 {
                    return Err(ChartError::SingularJacobian {
                        t: c.t.at(i),
                        theta: c.theta.at(j),
                        det,
                    });
                }
            }
        }
    }
    let (bi, bj) = c.base;
    // along θ through the base row, then along t
    let row = fd::cumulative_from(c.x_th.row(bi), hq, bj);
    let mut x1 = Array2::zeros((nt, nq));
    for j in 0..nq {
        let col = fd::cumulative_from(c.x_t.column(j), ht, bi);
        for i in 0..nt {
            x1[[i, j]] = row[j] + col[i];
        }
    }
    // along t through the base column, then along θ
    let col = fd::cumulative_from(c.x_t.column(bj), ht, bi);
    let mut x2 = Array2::zeros((nt, nq));
    for i in 0..nt {
        let r = fd::cumulative_from(c.x_th.row(i), hq, bj);
        for j in 0..nq {
            x2[[i, j]] = col[i] + r[j];
        }
    }
    let path_mismatch = x1
        .iter()
        .zip(x2.iter())
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let path_scale = c.x_t.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (c.t.end() - c.t.start)
        + c.x_th.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (c.theta.end() - c.theta.start);
    c.x = x1;
    let bx = Bicubic::with_derivatives(c.t, c.theta, c.x.clone(), c.x_t.clone(), c.x_th.clone(), c.x_tth.clone());
    let by = Bicubic::with_derivatives(
        c.t,
        c.theta,
        c.y.y.clone(),
        c.y.y_t.clone(),
        c.y.y_th.clone(),
        c.y.y_tth.clone(),
    );
    c.interp = Some((bx, by));
    let rec = XRecovery {
        closedness,
        path_mismatch,
        path_scale,
    };
    c.recovery = Some(rec);
    Ok(rec)
}

/// Per-node metric triple over the chart.
#[derive(Clone, Debug)]
pub struct MetricGrid {
    pub e: Array2<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
}

/// `E = φ(u)eᵛ`, `F = ueᵛ`, `G = (1−φ(u))eᵛ` at every node.
pub fn assemble_metric(c: &ConformalChart, p: &Profile) -> Result<MetricGrid> {
    let (nt, nq) = c.v.dim();
    let mut m = MetricGrid {
        e: Array2::zeros((nt, nq)),
        f: Array2::zeros((nt, nq)),
        g: Array2::zeros((nt, nq)),
    };
    for i in 0..nt {
        let u = c.u[i];
        let phi = p.phi(u)?;
        for j in 0..nq {
            let ev = c.v[[i, j]].exp();
            let t = [phi * ev, u * ev, (1.0 - phi) * ev];
            if check_pd(t, 0.0, 0.0).is_err() {
                return Err(ChartError::PositivityViolation {
                    t: c.t.at(i),
                    theta: c.theta.at(j),
                    trace: t[0] + t[2],
                    det: t[0] * t[2] - t[1] * t[1],
                });
            }
            m.e[[i, j]] = t[0];
            m.f[[i, j]] = t[1];
            m.g[[i, j]] = t[2];
        }
    }
    Ok(m)
}

/// Result of inverting the chart at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub t: f64,
    pub theta: f64,
    pub u: f64,
    pub v: f64,
    pub iterations: usize,
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 50;

/// Solves `(x, y)(t, θ) = query` by Newton's method on the bicubic
/// interpolants, seeded from the nearest node of a coarse scan.
pub fn invert_chart(c: &ConformalChart, query: (f64, f64)) -> Result<ChartPoint> {
    let (bx, by) = c.interp.as_ref().ok_or(ChartError::MissingX)?;
    let (qx, qy) = query;
    let outside = || ChartError::Geometry(GeometryError::OutsideChart { x: qx, y: qy });
    let bounds = c.image_bounds();
    let pad = 1e-2 * ((bounds.x.1 - bounds.x.0) + (bounds.y.1 - bounds.y.0));
    if qx < bounds.x.0 - pad || qx > bounds.x.1 + pad || qy < bounds.y.0 - pad || qy > bounds.y.1 + pad {
        return Err(outside());
    }
    let (nt, nq) = c.x.dim();
    let stride_t = (nt / 16).max(1);
    let stride_q = (nq / 16).max(1);
    let mut seeds: Vec<(f64, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < nt {
        let mut j = 0;
        while j < nq {
            let d = (c.x[[i, j]] - qx).hypot(c.y.y[[i, j]] - qy);
            seeds.push((d, i, j));
            j = if j + stride_q >= nq && j != nq - 1 { nq - 1 } else { j + stride_q };
        }
        i = if i + stride_t >= nt && i != nt - 1 { nt - 1 } else { i + stride_t };
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (t_lo, t_hi) = (c.t.start, c.t.end());
    let (q_lo, q_hi) = (c.theta.start, c.theta.end());
    let slack_t = 1e-9 * (t_hi - t_lo);
    let slack_q = 1e-9 * (q_hi - q_lo);
    let mut last_residual = f64::INFINITY;
    for &(_, si, sj) in seeds.iter().take(3) {
        let (mut t, mut q) = c.node(si, sj);
        let eval = |t: f64, q: f64| {
            let (x, xt, xq) = bx.eval(t, q);
            let (y, yt, yq) = by.eval(t, q);
            ((x - qx, y - qy), [[xt, xq], [yt, yq]])
        };
        let ((mut rx, mut ry), mut jac) = eval(t, q);
        let mut res = rx.hypot(ry);
        for it in 0..=NEWTON_MAX {
            if res <= NEWTON_TOL {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det != 0.0 && det.is_finite() {
                    let pt = t - (rx * jac[1][1] - jac[0][1] * ry) / det;
                    let pq = q - (jac[0][0] * ry - jac[1][0] * rx) / det;
                    let ((prx, pry), _) = eval(pt, pq);
                    if prx.hypot(pry) <= res {
                        t = pt;
                        q = pq;
                    }
                }
                if t < t_lo - slack_t || t > t_hi + slack_t || q < q_lo - slack_q || q > q_hi + slack_q {
                    return Err(outside());
                }
                let (u, v) = c.uv(t, q);
                return Ok(ChartPoint {
                    t,
                    theta: q,
                    u,
                    v,
                    iterations: it,
                });
            }
            if it == NEWTON_MAX {
                break;
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dt = (rx * jac[1][1] - jac[0][1] * ry) / det;
            let dq = (jac[0][0] * ry - jac[1][0] * rx) / det;
            let mut lam = 1.0;
            loop {
                let (nt_, nq_) = (t - lam * dt, q - lam * dq);
                let ((nrx, nry), njac) = eval(nt_, nq_);
                let nres = nrx.hypot(nry);
                if nres < res || lam < 1e-4 {
                    t = nt_;
                    q = nq_;
                    rx = nrx;
                    ry = nry;
                    jac = njac;
                    res = nres;
                    break;
                }
                lam *= 0.5;
            }
        }
        last_residual = last_residual.min(res);
    }
    if last_residual.is_finite() && last_residual < 1e-6 * (1.0 + pad) {
        Err(ChartError::Geometry(GeometryError::NewtonDivergence {
            x: qx,
            y: qy,
            residual: last_residual,
        }))
    } else {
        Err(outside())
    }
}

/// The assembled metric as a function of `(x, y)` through [`invert_chart`].
pub struct ChartMetric<'a> {
    pub chart: &'a ConformalChart,
}

impl MetricField for ChartMetric<'_> {
    fn domain(&self) -> Rect {
        self.chart.image_bounds()
    }

    fn triple(&self, x: f64, y: f64) -> geometry::Result<[f64; 3]> {
        let cp = invert_chart(self.chart, (x, y)).map_err(|e| match e {
            ChartError::Geometry(g) => g,
            _ => GeometryError::OutsideChart { x, y },
        })?;
        let phi = self.chart.profile.phi(cp.u).map_err(|_| GeometryError::OutsideChart { x, y })?;
        let ev = cp.v.exp();
        Ok([phi * ev, cp.u * ev, (1.0 - phi) * ev])
    }
}

/// Largest rectangle centred on `base` (found by shrinking the image's
/// bounding box) whose edges and interior samples all invert.
pub fn inscribed_rect(c: &ConformalChart, base: (f64, f64)) -> Result<Rect> {
    let b = c.image_bounds();
    let mut hx = (base.0 - b.x.0).min(b.x.1 - base.0);
    let mut hy = (base.1 - b.y.0).min(b.y.1 - base.1);
    for _ in 0..60 {
        let r = Rect::new((base.0 - hx, base.0 + hx), (base.1 - hy, base.1 + hy));
        let edge = 33;
        let mut pts = Vec::new();
        for k in 0..edge {
            let s = k as f64 / (edge - 1) as f64;
            let x = r.x.0 + s * (r.x.1 - r.x.0);
            let y = r.y.0 + s * (r.y.1 - r.y.0);
            pts.extend([(x, r.y.0), (x, r.y.1), (r.x.0, y), (r.x.1, y)]);
        }
        pts.extend(r.grid(9, 9).points());
        if pts.par_iter().all(|&p| invert_chart(c, p).is_ok()) {
            return Ok(r);
        }
        hx *= 0.9;
        hy *= 0.9;
    }
    Err(ChartError::NoRegion)
}

/// A potential sampled on a regular `(x, y)` grid around a base point, with
/// `f(base) = 0` and `∇f(base) = 0`.
#[derive(Clone, Debug)]
pub struct ReconstructedPotential {
    pub base: (f64, f64),
    pub grid: Grid,
    pub values: Array2<f64>,
    pub field: SampledField,
    pub gauge: &'static str,
}

/// `f(base + Δ) = ∫₀¹ (1−s) Δᵀ H(base + sΔ) Δ ds` at every node of an
/// `n × n` grid over `region`, which must be star-shaped about `base`
/// (checked by sampling every ray to the boundary nodes).
pub fn reconstruct_potential(
    m: &dyn MetricField,
    base: (f64, f64),
    region: Rect,
    n: usize,
) -> Result<ReconstructedPotential> {
    let grid = region.grid(n, n);
    let pts = grid.points();
    let boundary: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .enumerate()
        .filter(|(k, _)| {
            let (i, j) = (k / n, k % n);
            i == 0 || j == 0 || i == n - 1 || j == n - 1
        })
        .map(|(_, p)| p)
        .collect();
    boundary.par_iter().try_for_each(|&end| {
        for s in 1..=32 {
            let s = s as f64 / 32.0;
            let at = (base.0 + s * (end.0 - base.0), base.1 + s * (end.1 - base.1));
            if m.triple(at.0, at.1).is_err() {
                return Err(ChartError::NotStarShaped { ray: end, at });
            }
        }
        Ok(())
    })?;
    let values: Vec<f64> = pts
        .par_iter()
        .map(|&(x, y)| {
            let (dx, dy) = (x - base.0, y - base.1);
            if dx == 0.0 && dy == 0.0 {
                return Ok(0.0);
            }
            quad::integrate(
                |s| {
                    let [e, f, g] = m.triple(base.0 + s * dx, base.1 + s * dy)?;
                    Ok::<f64, GeometryError>((1.0 - s) * (e * dx * dx + 2.0 * f * dx * dy + g * dy * dy))
                },
                0.0,
                1.0,
                1e-10,
            )
            .map_err(ChartError::from)
        })
        .collect::<Result<_>>()?;
    let values = Array2::from_shape_vec((n, n), values).expect("grid shape");
    let field = SampledField::new(grid.ax, grid.ay, values.clone())?;
    Ok(ReconstructedPotential {
        base,
        grid,
        values,
        field,
        gauge: "f(base) = 0, grad f(base) = 0",
    })
}

/// Round-trip diagnostics on interior nodes (two-node margin).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundtripReport {
    /// `max |Hess f − (E,F,G)| / max |(E,F,G)|`.
    pub hessian_rel_err: f64,
    /// `max(|E_y − F_x|, |F_y − G_x|)` relative to the largest first partial.
    pub integrability_max: f64,
    /// Absolute integrability residual.
    pub integrability_abs: f64,
    pub flatness_max: f64,
    pub curvature_max: f64,
    pub pd_min_trace: f64,
    pub pd_min_det: f64,
    /// `min(min {E+G, F}², min ({E,F}² + {G,F}²))`.
    pub nondegeneracy_min: f64,
    pub nondegeneracy_sign_change: bool,
    pub nodes: usize,
}

/// Tolerances used to pass or fail a [`RoundtripReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct RoundtripTolerances {
    pub hessian: f64,
    pub integrability: f64,
    pub curvature: f64,
}

impl Default for RoundtripTolerances {
    fn default() -> Self {
        RoundtripTolerances {
            hessian: 1e-5,
            integrability: 1e-5,
            curvature: 1e-4,
        }
    }
}

impl RoundtripReport {
    pub fn passes(&self, tol: &RoundtripTolerances) -> bool {
        self.hessian_rel_err < tol.hessian
            && self.integrability_max < tol.integrability
            && self.curvature_max < tol.curvature
            && self.pd_min_trace > 0.0
            && self.pd_min_det > 0.0
    }
}

/// Compares the reconstructed potential with the metric it came from.
pub fn verify_roundtrip(rp: &ReconstructedPotential, m: &dyn MetricField) -> Result<RoundtripReport> {
    let (ax, ay) = (rp.grid.ax, rp.grid.ay);
    let margin = 2;
    let mut nodes = Vec::new();
    for i in margin..ax.n.saturating_sub(margin) {
        for j in margin..ay.n.saturating_sub(margin) {
            nodes.push((ax.at(i), ay.at(j)));
        }
    }
    let extent = (ax.end() - ax.start).abs().max((ay.end() - ay.start).abs());
    let h = 1e-3 * extent;
    struct Node {
        hess_err: f64,
        triple_size: f64,
        integ: f64,
        grad_size: f64,
        det3: f64,
        k: f64,
        trace: f64,
        det: f64,
        b1: f64,
        b2: f64,
    }
    let per: Vec<Node> = nodes
        .par_iter()
        .map(|&(x, y)| {
            let b = rp.field.bundle_at(x, y)?;
            let t = m.triple(x, y)?;
            let g = metric_gradient(m, x, y, h)?;
            let hess_err = (b.fxx - t[0]).abs().max((b.fxy - t[1]).abs()).max((b.fyy - t[2]).abs());
            let integ = (g[0][1] - g[1][0]).abs().max((g[1][1] - g[2][0]).abs());
            let grad_size = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            let trace_grad = [g[0][0] + g[2][0], g[0][1] + g[2][1]];
            let b1 = bracket(trace_grad, g[1]);
            let b2 = bracket(g[0], g[1]).powi(2) + bracket(g[2], g[1]).powi(2);
            Ok(Node {
                hess_err,
                triple_size: t.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                integ,
                grad_size,
                det3: det3(&b),
                k: curvature_raw(&b),
                trace: t[0] + t[2],
                det: t[0] * t[2] - t[1] * t[1],
                b1,
                b2,
            })
        })
        .collect::<std::result::Result<_, GeometryError>>()?;
    let max = |f: &dyn Fn(&Node) -> f64| per.iter().map(f).fold(0.0f64, f64::max);
    let min = |f: &dyn Fn(&Node) -> f64| per.iter().map(f).fold(f64::INFINITY, f64::min);
    let triple_scale = max(&|n| n.triple_size);
    let grad_scale = max(&|n| n.grad_size);
    let integrability_abs = max(&|n| n.integ);
    let b1_min = min(&|n| n.b1 * n.b1);
    let b2_min = min(&|n| n.b2);
    let b1_pos = per.iter().any(|n| n.b1 > 0.0);
    let b1_neg = per.iter().any(|n| n.b1 < 0.0);
    Ok(RoundtripReport {
        hessian_rel_err: max(&|n| n.hess_err) / triple_scale,
        integrability_max: if grad_scale > 0.0 {
            integrability_abs / grad_scale
        } else {
            integrability_abs
        },
        integrability_abs,
        flatness_max: max(&|n| n.det3.abs()),
        curvature_max: max(&|n| n.k.abs()),
        pd_min_trace: min(&|n| n.trace),
        pd_min_det: min(&|n| n.det),
        nondegeneracy_min: b1_min.min(b2_min),
        nondegeneracy_sign_change: b1_pos && b1_neg,
        nodes: per.len(),
    })
}

/// `t,theta,u,v,x,y,E,F,G`.
pub fn write_chart_csv(mut w: impl Write, c: &ConformalChart, m: &MetricGrid) -> io::Result<()> {
    writeln!(w, "t,theta,u,v,x,y,E,F,G")?;
    let (nt, nq) = c.x.dim();
    for i in 0..nt {
        for j in 0..nq {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                c.t.at(i),
                c.theta.at(j),
                c.u[i],
                c.v[[i, j]],
                c.x[[i, j]],
                c.y.y[[i, j]],
                m.e[[i, j]],
                m.f[[i, j]],
                m.g[[i, j]]
            )?;
        }
    }
    Ok(())
}

/// `x,y,f`.
pub fn write_potential_csv(mut w: impl Write, rp: &ReconstructedPotential) -> io::Result<()> {
    writeln!(w, "x,y,f")?;
    for i in 0..rp.grid.ax.n {
        for j in 0..rp.grid.ay.n {
            writeln!(
                w,
                "{:?},{:?},{:?}",
                rp.grid.ax.at(i),
                rp.grid.ay.at(j),
                rp.values[[i, j]]
            )?;
        }
    }
    Ok(())
}
