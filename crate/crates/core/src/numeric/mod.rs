//! Small numerical kernels shared by the geometry, pipeline and chart code.

pub mod fd;
pub mod interp;
pub mod ode;
pub mod quad;

/// Uniformly spaced axis `start + i * step`, `i in 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    /// `n` points spanning `[lo, hi]` inclusive.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Axis {
        assert!(n >= 2, "an axis needs at least two points");
        Axis {
            start: lo,
            step: (hi - lo) / (n - 1) as f64,
            n,
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.n - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    /// Cell index and local coordinate in `[0, 1]` for `x`. Points outside
    /// the axis map to the edge cell with a local coordinate outside `[0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let r = (x - self.start) / self.step;
        let i = (r.floor().max(0.0) as usize).min(self.n - 2);
        (i, r - i as f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.step >= 0.0 {
            (self.start, self.end())
        } else {
            (self.end(), self.start)
        };
        x >= lo - 1e-12 * self.step.abs() && x <= hi + 1e-12 * self.step.abs()
    }
}
