//! Classical fourth-order Runge–Kutta.

/// One RK4 step of `y' = f(t, y)` for a fixed-size state.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut out = *a;
        for (o, v) in out.iter_mut().zip(b) {
            *o += s * v;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from `t0` to `t0 + h` with `substeps` equal RK4 steps.
pub fn rk4_span<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    h: f64,
    substeps: usize,
) -> [f64; N] {
    let dh = h / substeps as f64;
    let mut y = y0;
    for s in 0..substeps {
        y = rk4_step(f, t0 + s as f64 * dh, &y, dh);
    }
    y
}
