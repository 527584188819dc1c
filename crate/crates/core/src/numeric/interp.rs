//! Interpolants: natural cubic splines, cubic Hermite (with monotone
//! limiting) and bicubic Hermite patches on uniform grids.

use ndarray::Array2;

use super::{fd, Axis};

fn bracket(xs: &[f64], x: f64) -> usize {
    // index i with xs[i] <= x < xs[i+1], clamped to the end cells
    match xs.partition_point(|&v| v <= x) {
        0 => 0,
        k if k >= xs.len() => xs.len() - 2,
        k => k - 1,
    }
}

/// Natural cubic spline through `(xs[i], ys[i])`, `xs` strictly increasing.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> CubicSpline {
        let n = xs.len();
        assert!(n >= 3 && ys.len() == n);
        // tridiagonal system for second derivatives, m[0] = m[n-1] = 0
        let mut a = vec![0.0; n];
        let mut b = vec![1.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            r[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = r[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
        }
        CubicSpline { xs, ys, m }
    }

    pub fn from_axis(axis: Axis, ys: Vec<f64>) -> CubicSpline {
        CubicSpline::natural(axis.values(), ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = bracket(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Piecewise cubic Hermite interpolant with prescribed node slopes.
#[derive(Clone, Debug)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Hermite {
    /// `xs` must be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Hermite {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == ds.len());
        Hermite { xs, ys, ds }
    }

    /// Like [`Hermite::new`] but limits slopes (Fritsch–Carlson) wherever the
    /// supplied slopes would break monotonicity of strictly monotone data.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>, mut ds: Vec<f64>) -> Hermite {
        let n = xs.len();
        for i in 0..n - 1 {
            let delta = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if delta == 0.0 {
                ds[i] = 0.0;
                ds[i + 1] = 0.0;
                continue;
            }
            let alpha = ds[i] / delta;
            let beta = ds[i + 1] / delta;
            if alpha < 0.0 {
                ds[i] = 0.0;
            }
            if beta < 0.0 {
                ds[i + 1] = 0.0;
            }
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                ds[i] = tau * alpha * delta;
                ds[i + 1] = tau * beta * delta;
            }
        }
        Hermite { xs, ys, ds }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let i = bracket(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        let (d00, d10, d01, d11) = hermite_basis_deriv(s);
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.ds[i] * h, self.ds[i + 1] * h);
        (
            h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1,
            (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h,
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_slope(x).0
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

fn hermite_basis_deriv(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    (
        6.0 * s2 - 6.0 * s,
        3.0 * s2 - 4.0 * s + 1.0,
        -6.0 * s2 + 6.0 * s,
        3.0 * s2 - 2.0 * s,
    )
}

/// Bicubic Hermite interpolant on a uniform grid. Node derivatives come
/// from fourth-order finite differences, so the interpolant is C¹ and
/// fourth-order accurate for smooth data.
#[derive(Clone, Debug)]
pub struct Bicubic {
    pub ax: Axis,
    pub ay: Axis,
    f: Array2<f64>,
    fx: Array2<f64>,
    fy: Array2<f64>,
    fxy: Array2<f64>,
}

impl Bicubic {
    /// `values[[i, j]]` is the sample at `(ax.at(i), ay.at(j))`.
    pub fn new(ax: Axis, ay: Axis, values: Array2<f64>) -> Bicubic {
        assert_eq!(values.dim(), (ax.n, ay.n));
        let fx = fd::d1(&values, 0, ax.step);
        let fy = fd::d1(&values, 1, ay.step);
        let fxy = fd::d1(&fx, 1, ay.step);
        Bicubic {
            ax,
            ay,
            f: values,
            fx,
            fy,
            fxy,
        }
    }

    /// Uses the supplied node derivatives `f_x`, `f_y`, `f_xy` instead of
    /// differencing the values.
    pub fn with_derivatives(
        ax: Axis,
        ay: Axis,
        values: Array2<f64>,
        fx: Array2<f64>,
        fy: Array2<f64>,
        fxy: Array2<f64>,
    ) -> Bicubic {
        for a in [&values, &fx, &fy, &fxy] {
            assert_eq!(a.dim(), (ax.n, ay.n));
        }
        Bicubic {
            ax,
            ay,
            f: values,
            fx,
            fy,
            fxy,
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.f
    }

    /// Value and gradient `(f, f_x, f_y)`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (i, s) = self.ax.locate(x);
        let (j, t) = self.ay.locate(y);
        let (hx, hy) = (self.ax.step, self.ay.step);
        let bs = hermite_basis(s);
        let bt = hermite_basis(t);
        let ds = hermite_basis_deriv(s);
        let dt = hermite_basis_deriv(t);
        // basis for corner a in {0,1}: value weight and slope weight
        let pick = |b: (f64, f64, f64, f64), a: usize| if a == 0 { (b.0, b.1) } else { (b.2, b.3) };
        let (mut v, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let (ii, jj) = (i + a, j + b);
                let (p0s, p1s) = pick(bs, a);
                let (p0t, p1t) = pick(bt, b);
                let (q0s, q1s) = pick(ds, a);
                let (q0t, q1t) = pick(dt, b);
                let c0 = self.f[[ii, jj]];
                let c1 = hx * self.fx[[ii, jj]];
                let c2 = hy * self.fy[[ii, jj]];
                let c3 = hx * hy * self.fxy[[ii, jj]];
                v += c0 * p0s * p0t + c1 * p1s * p0t + c2 * p0s * p1t + c3 * p1s * p1t;
                vx += (c0 * q0s * p0t + c1 * q1s * p0t + c2 * q0s * p1t + c3 * q1s * p1t) / hx;
                vy += (c0 * p0s * q0t + c1 * p1s * q0t + c2 * p0s * q1t + c3 * p1s * q1t) / hy;
            }
        }
        (v, vx, vy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_nodes_and_smooth_data() {
        let xs: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::natural(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval(*x) - y).abs() < 1e-14);
        }
        assert!((s.eval(1.0123) - 1.0123f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn hermite_with_exact_slopes_is_fourth_order() {
        let err = |n: usize| {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let h = Hermite::new(
                xs.clone(),
                xs.iter().map(|x| x.exp()).collect(),
                xs.iter().map(|x| x.exp()).collect(),
            );
            (0..997)
                .map(|k| {
                    let x = k as f64 / 996.0;
                    (h.eval(x) - x.exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(11) / err(21) > 14.0);
    }

    #[test]
    fn monotone_limiter_keeps_monotonicity() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 0.01, 0.02, 5.0];
        let h = Hermite::monotone(xs, ys, vec![0.0, 3.0, 3.0, 0.0]);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..301 {
            let v = h.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn bicubic_accuracy_and_gradient() {
        let ax = Axis::spanning(0.0, 1.0, 41);
        let ay = Axis::spanning(-0.5, 0.5, 33);
        let f = |x: f64, y: f64| (x + 2.0 * y).sin() * (0.5 * x).exp();
        let vals = Array2::from_shape_fn((ax.n, ay.n), |(i, j)| f(ax.at(i), ay.at(j)));
        let b = Bicubic::new(ax, ay, vals);
        for &(x, y) in &[(0.123, 0.2), (0.77, -0.41), (0.5, 0.0)] {
            let (v, vx, vy) = b.eval(x, y);
            let h = 1e-6;
            assert!((v - f(x, y)).abs() < 1e-6);
            assert!((vx - (f(x + h, y) - f(x - h, y)) / (2.0 * h)).abs() < 1e-4);
            assert!((vy - (f(x, y + h) - f(x, y - h)) / (2.0 * h)).abs() < 1e-4);
        }
        let err = |n: usize| {
            let ax = Axis::spanning(0.0, 1.0, n);
            let ay = Axis::spanning(-0.5, 0.5, n);
            let vals = Array2::from_shape_fn((n, n), |(i, j)| f(ax.at(i), ay.at(j)));
            let b = Bicubic::new(ax, ay, vals);
            (0..50)
                .map(|k| {
                    let (x, y) = (0.013 + 0.0197 * k as f64, -0.49 + 0.0193 * k as f64);
                    (b.eval(x, y).0 - f(x, y)).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(21) / err(41) > 12.0);
        // node values reproduced exactly
        let (v, _, _) = b.eval(ax.at(7), ay.at(9));
        assert!((v - f(ax.at(7), ay.at(9))).abs() < 1e-15);
    }
}
