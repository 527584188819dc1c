//! Fourth-order finite-difference stencils on uniform grids.
//!
//! Central stencils are used in the interior; the two nodes nearest each end
//! use one-sided stencils of the same order.

use ndarray::{Array2, ArrayView1, Axis as NdAxis};

/// First derivative of uniformly sampled data. Requires at least 5 samples.
pub fn deriv1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "fourth-order first derivative needs 5 samples, got {n}");
    let c = 1.0 / (12.0 * h);
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * c;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
        + 3.0 * f[n - 5])
        * c;
    d
}

/// Second derivative of uniformly sampled data. Requires at least 6 samples.
pub fn deriv2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 6, "fourth-order second derivative needs 6 samples, got {n}");
    let c = 1.0 / (12.0 * h * h);
    let mut d = vec![0.0; n];
    d[0] = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4]
        - 10.0 * f[5])
        * c;
    d[1] = (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]) * c;
    for i in 2..n - 2 {
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) * c;
    }
    d[n - 2] = (10.0 * f[n - 1] - 15.0 * f[n - 2] - 4.0 * f[n - 3] + 14.0 * f[n - 4]
        - 6.0 * f[n - 5]
        + f[n - 6])
        * c;
    d[n - 1] = (45.0 * f[n - 1] - 154.0 * f[n - 2] + 214.0 * f[n - 3] - 156.0 * f[n - 4]
        + 61.0 * f[n - 5]
        - 10.0 * f[n - 6])
        * c;
    d
}

/// Weights of the order-`m` derivative at `x0` on the nodes `xs`
/// (Fornberg's recursion).
pub fn weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Third derivative of uniformly sampled data from seven-point stencils,
/// fourth-order accurate. Requires at least 7 samples.
pub fn deriv3(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 7, "fourth-order third derivative needs 7 samples, got {n}");
    let offsets: Vec<f64> = (0..7).map(|k| k as f64).collect();
    let h3 = h * h * h;
    let mut d = vec![0.0; n];
    for (i, di) in d.iter_mut().enumerate() {
        let start = i.saturating_sub(3).min(n - 7);
        let w = weights((i - start) as f64, &offsets, 3);
        *di = w.iter().zip(&f[start..start + 7]).map(|(w, v)| w * v).sum::<f64>() / h3;
    }
    d
}

fn along(a: &Array2<f64>, axis: usize, h: f64, op: fn(&[f64], f64) -> Vec<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(a.raw_dim());
    for (lane_in, mut lane_out) in a
        .lanes(NdAxis(axis))
        .into_iter()
        .zip(out.lanes_mut(NdAxis(axis)))
    {
        let v: Vec<f64> = lane_in.iter().copied().collect();
        let d = op(&v, h);
        for (o, x) in lane_out.iter_mut().zip(d) {
            *o = x;
        }
    }
    out
}

/// First derivative along `axis` (0 = rows index, 1 = column index).
pub fn d1(a: &Array2<f64>, axis: usize, h: f64) -> Array2<f64> {
    along(a, axis, h, deriv1)
}

/// Second derivative along `axis`.
pub fn d2(a: &Array2<f64>, axis: usize, h: f64) -> Array2<f64> {
    along(a, axis, h, deriv2)
}

/// Third derivative along `axis`.
pub fn d3(a: &Array2<f64>, axis: usize, h: f64) -> Array2<f64> {
    along(a, axis, h, deriv3)
}

/// Cumulative integral of uniformly sampled data starting from index
/// `origin` (where the integral is zero), fourth-order accurate.
pub fn cumulative_from(g: ArrayView1<'_, f64>, h: f64, origin: usize) -> Vec<f64> {
    let n = g.len();
    assert!(n >= 4, "fourth-order cumulative integration needs 4 samples");
    // integral over [x_i, x_{i+1}] from a cubic through four neighbouring samples
    let panel = |i: usize| -> f64 {
        if i == 0 {
            h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if i + 2 >= n {
            h / 24.0 * (9.0 * g[n - 1] + 19.0 * g[n - 2] - 5.0 * g[n - 3] + g[n - 4])
        } else {
            h / 24.0 * (-g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2])
        }
    };
    let mut out = vec![0.0; n];
    for i in origin..n - 1 {
        out[i + 1] = out[i] + panel(i);
    }
    for i in (0..origin).rev() {
        out[i] = out[i + 1] - panel(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn poly(x: f64) -> f64 {
        1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(3) - 0.7 * x.powi(4)
    }
    fn dpoly(x: f64) -> f64 {
        -2.0 + x + 9.0 * x * x - 2.8 * x.powi(3)
    }
    fn ddpoly(x: f64) -> f64 {
        1.0 + 18.0 * x - 8.4 * x * x
    }

    #[test]
    fn fornberg_weights_match_known_stencils() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = weights(0.0, &xs, 1);
        for (a, b) in w.iter().zip([1.0, -8.0, 0.0, 8.0, -1.0]) {
            assert!((a - b / 12.0).abs() < 1e-14);
        }
        let w = weights(0.0, &xs, 2);
        for (a, b) in w.iter().zip([-1.0, 16.0, -30.0, 16.0, -1.0]) {
            assert!((a - b / 12.0).abs() < 1e-14);
        }
        let xs = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let w = weights(0.0, &xs, 3);
        for (a, b) in w.iter().zip([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) {
            assert!((a - b / 8.0).abs() < 1e-13);
        }
    }

    #[test]
    fn third_derivative_exact_on_sextics_and_fourth_order() {
        let p = |x: f64| 1.0 + x - 2.0 * x.powi(3) + 0.5 * x.powi(5) - 0.25 * x.powi(6);
        let p3 = |x: f64| -12.0 + 30.0 * x * x - 30.0 * x.powi(3);
        let h = 0.1;
        let xs: Vec<f64> = (0..10).map(|i| -0.4 + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|&x| p(x)).collect();
        for (d, &x) in deriv3(&f, h).iter().zip(&xs) {
            assert!((d - p3(x)).abs() < 1e-8, "{d} vs {}", p3(x));
        }
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            deriv3(&f, h)
                .iter()
                .enumerate()
                .map(|(i, d)| (d + (i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(21) / err(41) > 12.0);
    }

    #[test]
    fn stencils_exact_on_quartics() {
        let h = 0.1;
        let xs: Vec<f64> = (0..9).map(|i| -0.3 + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|&x| poly(x)).collect();
        let d = deriv1(&f, h);
        let dd = deriv2(&f, h);
        for (i, &x) in xs.iter().enumerate() {
            assert!((d[i] - dpoly(x)).abs() < 1e-11, "d1 at {i}");
            assert!((dd[i] - ddpoly(x)).abs() < 1e-9, "d2 at {i}");
        }
    }

    #[test]
    fn fourth_order_convergence_on_sine() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * h).sin()).collect();
            deriv1(&f, h)
                .iter()
                .enumerate()
                .map(|(i, d)| (d - 3.0 * (3.0 * i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn cumulative_integral_of_cosine() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let g = Array1::from_iter((0..n).map(|i| (-1.0 + i as f64 * h).cos()));
            let origin = (n - 1) * 3 / 10;
            let x0 = -1.0 + origin as f64 * h;
            cumulative_from(g.view(), h, origin)
                .iter()
                .enumerate()
                .map(|(i, v)| (v - ((-1.0 + i as f64 * h).sin() - x0.sin())).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(51), err(101));
        assert!(fine < 1e-7, "{fine}");
        assert!(coarse / fine > 14.0, "ratio {}", coarse / fine);
    }
}
