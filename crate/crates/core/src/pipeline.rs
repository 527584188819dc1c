//! From a profile `φ(u)` to Klein–Gordon solutions.
//!
//! The flat Hessian metric `E = φ(u)eᵛ, F = ueᵛ, G = (1−φ(u))eᵛ` turns the
//! integrability conditions into a 2×2 hydrodynamic-type system in `(u, v)`.
//! Its Riemann invariants `rᵢ = v + pᵢ(u)` linearise the hodograph system
//! `x_{rᵢ} + λᵢ y_{rᵢ} = 0`; in the coordinates `t = (r₁−r₂)/2`,
//! `θ = (r₁+r₂)/2` the Hesse coordinate `y` solves
//! `y_tt − y_θθ + Γ y_t + Ω y_θ = 0` with
//! `Γ = (λ̇₁−λ̇₂)/(λ₁−λ₂)` and `Ω = (λ̇₁+λ̇₂)/(λ₁−λ₂)`.
//! Writing `y = μΨ` with `2μ̇ + Γμ = 0` removes the `y_t` term and leaves
//! `Ψ_tt − Ψ_θθ − VΨ + ΩΨ_θ = 0`, `V = ½Γ̇ + ¼Γ²`.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{self, differentiate, EvalError, Expr, ParseError, Var};
use crate::numeric::{
    fd,
    interp::{CubicSpline, Hermite},
    ode, quad, Axis,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// φ or one of its first three derivatives failed to evaluate.
    NotDifferentiable,
    /// `D = φ′u − φ` vanishes or changes sign.
    DegenerateD,
    /// `φ′² − 4D(1+D) ≤ 0`.
    NonPositiveDiscriminant,
    /// `φ ∉ (0, 1)`.
    PhiOutOfRange,
    /// `u² ≥ φ(1−φ)`.
    NotPositiveDefinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum PipelineError {
    #[error("no admissible sub-interval of [{}, {}]: {:?} at u = {}", requested.0, requested.1, first.condition, first.u)]
    EmptyAdmissibleInterval {
        requested: (f64, f64),
        first: Violation,
        violations: Vec<Violation>,
    },
    #[error("profile may only depend on u, found `{name}`")]
    ProfileVariable { name: String },
    #[error("u = {u} is outside the admissible interval [{}, {}]", interval.0, interval.1)]
    OutsideInterval { u: f64, interval: (f64, f64) },
    #[error("negative discriminant {disc} at u = {u}")]
    NegativeDiscriminant { u: f64, disc: f64 },
    #[error("phase equation is singular at u = {u}")]
    PhaseSingularity { u: f64 },
    #[error("phase derivatives are not strictly ordered at u = {u}: dp1/du = {dp1}, dp2/du = {dp2}")]
    MonotonicityViolation { u: f64, dp1: f64, dp2: f64 },
    #[error("step {step} is not usable on an interval of length {length}")]
    StepTooLarge { step: f64, length: f64 },
    #[error("wavenumber must be non-negative, got {k}")]
    NegativeWavenumber { k: f64 },
    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { what: String, t: f64 },
    #[error("modes were solved on different t-grids")]
    InconsistentGrids,
    #[error("{0}")]
    Eval(EvalError),
    #[error("{0}")]
    Parse(ParseError),
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Eval(e)
    }
}

impl From<ParseError> for PipelineError {
    fn from(e: ParseError) -> Self {
        PipelineError::Parse(e)
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// A validated profile `φ(u)` with symbolic derivatives up to third order.
#[derive(Clone, Debug)]
pub struct Profile {
    jet: [Expr; 4],
    pub interval: (f64, f64),
    pub requested: (f64, f64),
}

/// `(φ, φ′, φ″)` evaluated at a point.
#[derive(Clone, Copy, Debug)]
struct PhiJet {
    phi: f64,
    d1: f64,
    d2: f64,
}

impl Profile {
    pub fn phi_expr(&self) -> &Expr {
        &self.jet[0]
    }

    pub fn derivative_expr(&self, order: usize) -> &Expr {
        &self.jet[order]
    }

    pub fn contains(&self, u: f64) -> bool {
        let tol = 1e-12 * (1.0 + u.abs());
        u >= self.interval.0 - tol && u <= self.interval.1 + tol
    }

    fn check(&self, u: f64) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(PipelineError::OutsideInterval {
                u,
                interval: self.interval,
            })
        }
    }

    fn phi_jet(&self, u: f64) -> Result<PhiJet> {
        Ok(PhiJet {
            phi: self.jet[0].eval_u(u)?,
            d1: self.jet[1].eval_u(u)?,
            d2: self.jet[2].eval_u(u)?,
        })
    }

    pub fn phi(&self, u: f64) -> Result<f64> {
        Ok(self.jet[0].eval_u(u)?)
    }

    pub fn dphi(&self, u: f64) -> Result<f64> {
        Ok(self.jet[1].eval_u(u)?)
    }

    /// `D(u) = φ′(u)u − φ(u)`.
    pub fn d(&self, u: f64) -> Result<f64> {
        let j = self.phi_jet(u)?;
        Ok(j.d1 * u - j.phi)
    }

    /// `φ′² − 4D(1+D)`.
    pub fn discriminant(&self, u: f64) -> Result<f64> {
        let j = self.phi_jet(u)?;
        let d = j.d1 * u - j.phi;
        Ok(j.d1 * j.d1 - 4.0 * d * (1.0 + d))
    }

    /// `(λ₁, λ₂)` and their u-derivatives.
    fn velocities_with_slopes(&self, u: f64) -> Result<((f64, f64), (f64, f64))> {
        let j = self.phi_jet(u)?;
        let d = j.d1 * u - j.phi;
        let dd = j.d2 * u;
        let disc = j.d1 * j.d1 - 4.0 * d * (1.0 + d);
        if !(disc > 0.0) {
            return Err(PipelineError::NegativeDiscriminant { u, disc });
        }
        let s = disc.sqrt();
        let ds = (2.0 * j.d1 * j.d2 - 4.0 * dd * (1.0 + 2.0 * d)) / (2.0 * s);
        let lam = |sign: f64| (j.d1 + sign * s) / (2.0 * d);
        let dlam = |sign: f64| ((j.d2 + sign * ds) * d - (j.d1 + sign * s) * dd) / (2.0 * d * d);
        Ok(((lam(-1.0), lam(1.0)), (dlam(-1.0), dlam(1.0))))
    }

    /// Phase slopes `dpᵢ/du = (u + φφ′ − λᵢD)/(u² + φ² − φ)`.
    fn phase_slopes(&self, u: f64) -> Result<(f64, f64)> {
        let j = self.phi_jet(u)?;
        let d = j.d1 * u - j.phi;
        let ((l1, l2), _) = self.velocities_with_slopes(u)?;
        let den = u * u + j.phi * j.phi - j.phi;
        let num = u + j.phi * j.d1;
        let (p1, p2) = ((num - l1 * d) / den, (num - l2 * d) / den);
        if den == 0.0 || !p1.is_finite() || !p2.is_finite() {
            return Err(PipelineError::PhaseSingularity { u });
        }
        Ok((p1, p2))
    }

    fn violations_at(&self, u: f64) -> Vec<Condition> {
        let mut out = Vec::new();
        let vals: std::result::Result<Vec<f64>, _> = self.jet.iter().map(|e| e.eval_u(u)).collect();
        let Ok(v) = vals else {
            return vec![Condition::NotDifferentiable];
        };
        let (phi, d1) = (v[0], v[1]);
        let d = d1 * u - phi;
        if d.abs() <= 1e-12 {
            out.push(Condition::DegenerateD);
        }
        if !(d1 * d1 - 4.0 * d * (1.0 + d) > 0.0) {
            out.push(Condition::NonPositiveDiscriminant);
        }
        if !(phi > 0.0 && phi < 1.0) {
            out.push(Condition::PhiOutOfRange);
        }
        if !(u * u < phi * (1.0 - phi)) {
            out.push(Condition::NotPositiveDefinite);
        }
        out
    }

    fn admissible_with_sign(&self, u: f64, sign: f64) -> bool {
        self.violations_at(u).is_empty() && self.d(u).map(|d| d.signum() == sign).unwrap_or(false)
    }
}

const VALIDATION_SAMPLES: usize = 1001;

/// Finds the longest sub-interval of `interval` on which every profile
/// condition holds, sampling 1001 points and refining the ends by bisection.
pub fn validate_profile(phi: &Expr, interval: (f64, f64)) -> Result<Profile> {
    for v in [Var::X, Var::Y] {
        if phi.depends_on(v) {
            return Err(PipelineError::ProfileVariable {
                name: v.name().to_string(),
            });
        }
    }
    let d1 = differentiate(phi, Var::U);
    let d2 = differentiate(&d1, Var::U);
    let d3 = differentiate(&d2, Var::U);
    let probe = Profile {
        jet: [phi.clone(), d1, d2, d3],
        interval,
        requested: interval,
    };
    let axis = Axis::spanning(interval.0, interval.1, VALIDATION_SAMPLES);
    let us = axis.values();
    let mut violations: Vec<Violation> = Vec::new();
    let mut ok = vec![false; us.len()];
    let mut sign = vec![0.0; us.len()];
    for (i, &u) in us.iter().enumerate() {
        let v = probe.violations_at(u);
        for c in &v {
            if !violations.iter().any(|w| w.condition == *c) {
                violations.push(Violation { condition: *c, u });
            }
        }
        ok[i] = v.is_empty();
        if ok[i] {
            sign[i] = probe.d(u)?.signum();
        }
    }
    // runs of valid samples with a constant sign of D
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < us.len() {
        if !ok[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < us.len() && ok[j + 1] && sign[j + 1] == sign[i] {
            j += 1;
        }
        if j > i {
            if sign[j + 1..].first().is_some_and(|s| *s != 0.0 && *s != sign[i]) && ok[j + 1] {
                let u = us[j + 1];
                if !violations.iter().any(|w| w.condition == Condition::DegenerateD) {
                    violations.push(Violation {
                        condition: Condition::DegenerateD,
                        u,
                    });
                }
            }
            if best.is_none_or(|(a, b)| us[j] - us[i] > us[b] - us[a]) {
                best = Some((i, j));
            }
        }
        i = j + 1;
    }
    let Some((a, b)) = best else {
        violations.sort_by(|p, q| p.u.total_cmp(&q.u));
        let first = violations.first().copied().unwrap_or(Violation {
            condition: Condition::DegenerateD,
            u: interval.0,
        });
        return Err(PipelineError::EmptyAdmissibleInterval {
            requested: interval,
            first,
            violations,
        });
    };
    let s = sign[a];
    let refine = |good: f64, bad: f64| {
        let (mut g, mut b) = (good, bad);
        for _ in 0..100 {
            let m = 0.5 * (g + b);
            if m == g || m == b {
                break;
            }
            if probe.admissible_with_sign(m, s) {
                g = m;
            } else {
                b = m;
            }
        }
        g
    };
    let lo = if a == 0 { us[0] } else { refine(us[a], us[a - 1]) };
    let hi = if b + 1 == us.len() {
        us[b]
    } else {
        refine(us[b], us[b + 1])
    };
    Ok(Profile {
        interval: (lo, hi),
        ..probe
    })
}

impl Profile {
    pub fn parse(source: &str, interval: (f64, f64)) -> Result<Profile> {
        validate_profile(&expr::parse(source)?, interval)
    }
}

/// `(1/D)·[[u+φφ′, u²+φ²−φ], [−φ′²−1, −u−φφ′+φ′]]`.
pub fn hydrodynamic_matrix(p: &Profile, u: f64) -> Result<[[f64; 2]; 2]> {
    p.check(u)?;
    let j = p.phi_jet(u)?;
    let d = j.d1 * u - j.phi;
    Ok([
        [(u + j.phi * j.d1) / d, (u * u + j.phi * j.phi - j.phi) / d],
        [(-j.d1 * j.d1 - 1.0) / d, (-u - j.phi * j.d1 + j.d1) / d],
    ])
}

/// `λᵢ = (φ′ + (−1)ⁱ√(φ′² − 4D(1+D)))/(2D)`; `λ₁` takes the `−√` branch.
pub fn characteristic_velocities(p: &Profile, u: f64) -> Result<(f64, f64)> {
    p.check(u)?;
    Ok(p.velocities_with_slopes(u)?.0)
}

/// u-derivatives `(λ₁′, λ₂′)`.
pub fn velocity_slopes(p: &Profile, u: f64) -> Result<(f64, f64)> {
    p.check(u)?;
    Ok(p.velocities_with_slopes(u)?.1)
}

/// Per-sample characteristic quantities on a uniform u-grid.
#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicData {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub discriminant: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl CharacteristicData {
    pub fn sample(p: &Profile, n: usize) -> Result<CharacteristicData> {
        let axis = Axis::spanning(p.interval.0, p.interval.1, n);
        let mut cd = CharacteristicData {
            u: axis.values(),
            d: Vec::with_capacity(n),
            discriminant: Vec::with_capacity(n),
            lambda1: Vec::with_capacity(n),
            lambda2: Vec::with_capacity(n),
        };
        for &u in &cd.u {
            let (l1, l2) = characteristic_velocities(p, u)?;
            cd.d.push(p.d(u)?);
            cd.discriminant.push(p.discriminant(u)?);
            cd.lambda1.push(l1);
            cd.lambda2.push(l2);
        }
        Ok(cd)
    }
}

/// Phases `pᵢ(u)` with `pᵢ(u₀) = 0` and the map `t = (p₁ − p₂)/2`.
///
/// With the labelling fixed by `x_{rᵢ} + λᵢ y_{rᵢ} = 0`, `dp₁/du < dp₂/du`
/// on every admissible profile, so `t(u)` is strictly decreasing.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    pub u: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub dp1: Vec<f64>,
    pub dp2: Vec<f64>,
    pub t: Vec<f64>,
    pub u0: f64,
    pub t_interval: (f64, f64),
    p1_of_u: Hermite,
    p2_of_u: Hermite,
    u_of_t: Hermite,
}

impl PhaseTable {
    pub fn p1_at(&self, u: f64) -> f64 {
        self.p1_of_u.eval(u)
    }

    pub fn p2_at(&self, u: f64) -> f64 {
        self.p2_of_u.eval(u)
    }

    /// `u(t)` and `du/dt`.
    pub fn u_of_t(&self, t: f64) -> (f64, f64) {
        self.u_of_t.eval_with_slope(t)
    }

    pub fn t_of_u(&self, u: f64) -> f64 {
        0.5 * (self.p1_at(u) - self.p2_at(u))
    }
}

/// Integrates both phase equations with RK4 on an `n`-point grid.
pub fn phase_table(p: &Profile, u0: f64, n: usize) -> Result<PhaseTable> {
    p.check(u0)?;
    let axis = Axis::spanning(p.interval.0, p.interval.1, n);
    let us = axis.values();
    let mut dp1 = Vec::with_capacity(n);
    let mut dp2 = Vec::with_capacity(n);
    for &u in &us {
        let (a, b) = p.phase_slopes(u)?;
        if !(a < b) {
            return Err(PipelineError::MonotonicityViolation { u, dp1: a, dp2: b });
        }
        dp1.push(a);
        dp2.push(b);
    }
    // the right-hand side only depends on u; failures are reported afterwards
    let failure = std::cell::Cell::new(None);
    let rhs = |u: f64, _: &[f64; 2]| match p.phase_slopes(u) {
        Ok((a, b)) => [a, b],
        Err(e) => {
            failure.set(Some(e));
            [f64::NAN, f64::NAN]
        }
    };
    let mut raw = vec![[0.0; 2]; n];
    for i in 1..n {
        raw[i] = ode::rk4_step(&rhs, us[i - 1], &raw[i - 1], axis.step);
    }
    let (cell, _) = axis.locate(u0);
    let offset = ode::rk4_span(&rhs, us[cell], raw[cell], u0 - us[cell], 16);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let p1: Vec<f64> = raw.iter().map(|r| r[0] - offset[0]).collect();
    let p2: Vec<f64> = raw.iter().map(|r| r[1] - offset[1]).collect();
    let t: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a - b)).collect();
    let dt: Vec<f64> = dp1.iter().zip(&dp2).map(|(a, b)| 0.5 * (a - b)).collect();
    // t decreases with u: reverse for the inverse map
    let ts: Vec<f64> = t.iter().rev().copied().collect();
    let uu: Vec<f64> = us.iter().rev().copied().collect();
    let du: Vec<f64> = dt.iter().rev().map(|s| 1.0 / s).collect();
    let t_interval = (ts[0], ts[n - 1]);
    Ok(PhaseTable {
        p1_of_u: Hermite::new(us.clone(), p1.clone(), dp1.clone()),
        p2_of_u: Hermite::new(us.clone(), p2.clone(), dp2.clone()),
        u_of_t: Hermite::monotone(ts, uu, du),
        u: us,
        p1,
        p2,
        dp1,
        dp2,
        t,
        u0,
        t_interval,
    })
}

/// A uniformly sampled function of `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampled {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl Sampled {
    pub fn new(axis: Axis, values: Vec<f64>) -> Sampled {
        assert_eq!(axis.n, values.len());
        Sampled { axis, values }
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> f64) -> Sampled {
        Sampled {
            values: axis.values().into_iter().map(f).collect(),
            axis,
        }
    }

    pub fn spline(&self) -> CubicSpline {
        CubicSpline::from_axis(self.axis, self.values.clone())
    }

    pub fn ts(&self) -> Vec<f64> {
        self.axis.values()
    }
}

/// `Γ`, `Ω`, `μ` and `V` on a uniform t-grid that contains `t₀ = t(u₀)`.
#[derive(Clone, Debug, Serialize)]
pub struct WaveData {
    pub axis: Axis,
    /// Index of `t₀` in `axis`.
    pub origin: usize,
    pub t0: f64,
    pub u: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub gamma: Vec<f64>,
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
    pub potential: Vec<f64>,
}

/// Pointwise characteristic data at a given `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TSlice {
    pub u: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub omega: f64,
}

/// Evaluates `u(t)`, `λᵢ`, `Γ` and `Ω` at `t`.
pub fn t_slice(p: &Profile, pt: &PhaseTable, t: f64) -> Result<TSlice> {
    let (u, _) = pt.u_of_t(t);
    let ((l1, l2), (dl1, dl2)) = p.velocities_with_slopes(u)?;
    let (a, b) = p.phase_slopes(u)?;
    let udot = 2.0 / (a - b);
    let (r1, r2) = (dl1 * udot, dl2 * udot);
    Ok(TSlice {
        u,
        lambda1: l1,
        lambda2: l2,
        gamma: (r1 - r2) / (l1 - l2),
        omega: (r1 + r2) / (l1 - l2),
    })
}

/// Default number of t-steps across the t-interval.
pub const DEFAULT_T_STEPS: usize = 4096;

/// Samples the wave coefficients with step `(t-interval length)/steps`.
/// `μ = exp(−½∫Γ)` uses adaptive quadrature; `Γ̇` uses fourth-order
/// differences of the sampled `Γ`.
pub fn wave_data(p: &Profile, pt: &PhaseTable, steps: usize) -> Result<WaveData> {
    let (lo, hi) = pt.t_interval;
    let h = (hi - lo) / steps as f64;
    let t0 = 0.0;
    let jmin = ((lo - t0) / h).ceil() as i64;
    let jmax = ((hi - t0) / h).floor() as i64;
    let n = (jmax - jmin + 1) as usize;
    if n < 6 {
        return Err(PipelineError::StepTooLarge {
            step: h,
            length: hi - lo,
        });
    }
    let axis = Axis {
        start: t0 + jmin as f64 * h,
        step: h,
        n,
    };
    let origin = (-jmin) as usize;
    let mut wd = WaveData {
        axis,
        origin,
        t0,
        u: Vec::with_capacity(n),
        lambda1: Vec::with_capacity(n),
        lambda2: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        mu: vec![0.0; n],
        potential: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = if i == origin { t0 } else { axis.at(i) };
        let s = t_slice(p, pt, t)?;
        wd.u.push(s.u);
        wd.lambda1.push(s.lambda1);
        wd.lambda2.push(s.lambda2);
        wd.gamma.push(s.gamma);
        wd.omega.push(s.omega);
    }
    let gamma_at = |t: f64| t_slice(p, pt, t).map(|s| s.gamma);
    let mut log_mu = vec![0.0; n];
    for i in origin + 1..n {
        log_mu[i] = log_mu[i - 1] - 0.5 * quad::integrate(gamma_at, axis.at(i - 1), axis.at(i), 1e-10)?;
    }
    for i in (0..origin).rev() {
        log_mu[i] = log_mu[i + 1] + 0.5 * quad::integrate(gamma_at, axis.at(i), axis.at(i + 1), 1e-10)?;
    }
    wd.mu = log_mu.iter().map(|l| l.exp()).collect();
    let gdot = fd::deriv1(&wd.gamma, h);
    wd.potential = wd
        .gamma
        .iter()
        .zip(&gdot)
        .map(|(g, gd)| 0.5 * gd + 0.25 * g * g)
        .collect();
    for (i, v) in wd.potential.iter().enumerate() {
        if !v.is_finite() || !wd.mu[i].is_finite() {
            return Err(PipelineError::NonFinite {
                what: "wave data".into(),
                t: axis.at(i),
            });
        }
    }
    Ok(wd)
}

impl WaveData {
    pub fn potential_sampled(&self) -> Sampled {
        Sampled::new(self.axis, self.potential.clone())
    }

    pub fn contains(&self, t: f64) -> bool {
        self.axis.contains(t)
    }

    /// `μ(t)` by Hermite interpolation with the exact slope `−Γμ/2`.
    pub fn mu_interp(&self) -> Hermite {
        let slopes = self
            .mu
            .iter()
            .zip(&self.gamma)
            .map(|(m, g)| -0.5 * g * m)
            .collect();
        Hermite::new(self.axis.values(), self.mu.clone(), slopes)
    }
}

/// `t,gamma,mu,V`.
pub fn write_wave_csv(mut w: impl Write, wd: &WaveData) -> io::Result<()> {
    writeln!(w, "t,gamma,mu,V")?;
    for i in 0..wd.axis.n {
        writeln!(
            w,
            "{:?},{:?},{:?},{:?}",
            wd.axis.at(i),
            wd.gamma[i],
            wd.mu[i],
            wd.potential[i]
        )?;
    }
    Ok(())
}

/// `t,psi`.
pub fn write_mode_csv(mut w: impl Write, psi: &Sampled) -> io::Result<()> {
    writeln!(w, "t,psi")?;
    for (i, v) in psi.values.iter().enumerate() {
        writeln!(w, "{:?},{:?}", psi.axis.at(i), v)?;
    }
    Ok(())
}

type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Numerov recurrence for `y″ = M(t) y` on a uniform grid, marching both
/// ways from `origin`. `start` holds the values at `origin − 1`, `origin`
/// and `origin + 1` (entries off the grid are ignored).
fn numerov(ms: &[Mat2], h: f64, origin: usize, start: [[f64; 2]; 3]) -> std::result::Result<Vec<[f64; 2]>, usize> {
    let n = ms.len();
    let c = h * h / 12.0;
    let a = |m: &Mat2| [[1.0 - c * m[0][0], -c * m[0][1]], [-c * m[1][0], 1.0 - c * m[1][1]]];
    let b = |m: &Mat2| {
        [
            [1.0 + 5.0 * c * m[0][0], 5.0 * c * m[0][1]],
            [5.0 * c * m[1][0], 1.0 + 5.0 * c * m[1][1]],
        ]
    };
    let solve = |m: Mat2, r: [f64; 2]| {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            (r[0] * m[1][1] - m[0][1] * r[1]) / det,
            (m[0][0] * r[1] - m[1][0] * r[0]) / det,
        ]
    };
    let mut y = vec![[0.0; 2]; n];
    y[origin] = start[1];
    if origin + 1 < n {
        y[origin + 1] = start[2];
    }
    if origin >= 1 {
        y[origin - 1] = start[0];
    }
    let step = |prev: [f64; 2], cur: [f64; 2], mp: &Mat2, mc: &Mat2, mn: &Mat2| {
        let bc = mat_vec(&b(mc), cur);
        let ap = mat_vec(&a(mp), prev);
        solve(a(mn), [2.0 * bc[0] - ap[0], 2.0 * bc[1] - ap[1]])
    };
    for i in origin + 1..n.saturating_sub(1) {
        y[i + 1] = step(y[i - 1], y[i], &ms[i - 1], &ms[i], &ms[i + 1]);
        if !y[i + 1][0].is_finite() || !y[i + 1][1].is_finite() {
            return Err(i + 1);
        }
    }
    for i in (1..origin).rev() {
        y[i - 1] = step(y[i + 1], y[i], &ms[i + 1], &ms[i], &ms[i - 1]);
        if !y[i - 1][0].is_finite() || !y[i - 1][1].is_finite() {
            return Err(i - 1);
        }
    }
    Ok(y)
}

/// RK4 sub-steps from the origin to its two neighbours for `y″ = M(t) y`.
fn numerov_start(m_at: &(impl Fn(f64) -> Mat2 + Sync), t0: f64, h: f64, y0: [f64; 2], dy0: [f64; 2]) -> [[f64; 2]; 3] {
    let rhs = |t: f64, s: &[f64; 4]| {
        let m = m_at(t);
        let acc = mat_vec(&m, [s[0], s[2]]);
        [s[1], acc[0], s[3], acc[1]]
    };
    let s0 = [y0[0], dy0[0], y0[1], dy0[1]];
    let fwd = ode::rk4_span(&rhs, t0, s0, h, 16);
    let bwd = ode::rk4_span(&rhs, t0, s0, -h, 16);
    [[bwd[0], bwd[2]], y0, [fwd[0], fwd[2]]]
}

/// Solves `−ψ̈ + Vψ = k²ψ` by Numerov on the grid `t₀ + j·step` covering
/// the sampled interval of `V`, with `ψ(t₀) = init.0`, `ψ̇(t₀) = init.1`.
pub fn solve_schrodinger(v: &Sampled, k: f64, init: (f64, f64), t0: f64, step: f64) -> Result<Sampled> {
    if k < 0.0 {
        return Err(PipelineError::NegativeWavenumber { k });
    }
    let (lo, hi) = (v.axis.start, v.axis.end());
    let length = hi - lo;
    if !(step > 0.0) || step > length || !v.axis.contains(t0) {
        return Err(PipelineError::StepTooLarge { step, length });
    }
    let jmin = ((lo - t0) / step - 1e-9).ceil() as i64;
    let jmax = ((hi - t0) / step + 1e-9).floor() as i64;
    let axis = Axis {
        start: t0 + jmin as f64 * step,
        step,
        n: (jmax - jmin + 1) as usize,
    };
    let origin = (-jmin) as usize;
    let spline = v.spline();
    let k2 = k * k;
    let m_at = |t: f64| [[spline.eval(t) - k2, 0.0], [0.0, 0.0]];
    let ms: Vec<Mat2> = (0..axis.n).map(|i| m_at(axis.at(i))).collect();
    let start = numerov_start(&m_at, t0, step, [init.0, 0.0], [init.1, 0.0]);
    let y = numerov(&ms, step, origin, start).map_err(|i| PipelineError::NonFinite {
        what: "Schrödinger solution".into(),
        t: axis.at(i),
    })?;
    Ok(Sampled::new(axis, y.into_iter().map(|p| p[0]).collect()))
}

/// A separated mode `(A, B, k)` with data `(ψ(t₀), ψ̇(t₀))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SpectralMode {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    #[serde(default = "default_init")]
    pub init: (f64, f64),
}

fn default_init() -> (f64, f64) {
    (1.0, 0.0)
}

impl SpectralMode {
    pub fn new(a: f64, b: f64, k: f64) -> SpectralMode {
        SpectralMode {
            a,
            b,
            k,
            init: default_init(),
        }
    }
}

/// A mode solved on the wave grid as
/// `Ψ = cos(kθ)·a(t) + sin(kθ)·b(t)` (or `a(t) + θ·b(t)` when `k = 0`).
/// When `Ω ≡ 0` this is `(A cos kθ + B sin kθ)·ψ_k(t)`.
#[derive(Clone, Debug)]
pub struct ModeSolution {
    pub mode: SpectralMode,
    pub axis: Axis,
    /// Scalar eigenfunction `ψ_k` with the mode's initial data.
    pub psi: Sampled,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub adot: Vec<f64>,
    pub bdot: Vec<f64>,
    pub addot: Vec<f64>,
    pub bddot: Vec<f64>,
}

fn coupling(k: f64, v: f64, om: f64) -> Mat2 {
    if k == 0.0 {
        [[v, -om], [0.0, v]]
    } else {
        [[v - k * k, -k * om], [k * om, v - k * k]]
    }
}

/// Solves one mode on the wave grid.
pub fn solve_mode(wd: &WaveData, mode: &SpectralMode) -> Result<ModeSolution> {
    let k = mode.k;
    if k < 0.0 {
        return Err(PipelineError::NegativeWavenumber { k });
    }
    let h = wd.axis.step;
    let vs = wd.potential_sampled().spline();
    let os = Sampled::new(wd.axis, wd.omega.clone()).spline();
    let m_at = |t: f64| coupling(k, vs.eval(t), os.eval(t));
    let ms: Vec<Mat2> = (0..wd.axis.n)
        .map(|i| coupling(k, wd.potential[i], wd.omega[i]))
        .collect();
    let (p0, dp0) = mode.init;
    let start = numerov_start(&m_at, wd.t0, h, [mode.a * p0, mode.b * p0], [mode.a * dp0, mode.b * dp0]);
    let y = numerov(&ms, h, wd.origin, start).map_err(|i| PipelineError::NonFinite {
        what: "mode solution".into(),
        t: wd.axis.at(i),
    })?;
    let a: Vec<f64> = y.iter().map(|p| p[0]).collect();
    let b: Vec<f64> = y.iter().map(|p| p[1]).collect();
    let acc: Vec<[f64; 2]> = y.iter().zip(&ms).map(|(yy, m)| mat_vec(m, *yy)).collect();
    let psi = solve_schrodinger(&wd.potential_sampled(), k, mode.init, wd.t0, h)?;
    Ok(ModeSolution {
        mode: *mode,
        axis: wd.axis,
        psi,
        adot: fd::deriv1(&a, h),
        bdot: fd::deriv1(&b, h),
        addot: acc.iter().map(|p| p[0]).collect(),
        bddot: acc.iter().map(|p| p[1]).collect(),
        a,
        b,
    })
}

/// Solves every mode, in parallel.
pub fn solve_modes(wd: &WaveData, modes: &[SpectralMode]) -> Result<Vec<ModeSolution>> {
    use rayon::prelude::*;
    modes.par_iter().map(|m| solve_mode(wd, m)).collect()
}

/// `Ψ` and the partials needed downstream, sampled on a `(t, θ)` grid with
/// `[[i, j]]` at `(t.at(i), theta.at(j))`.
#[derive(Clone, Debug)]
pub struct KgField {
    pub t: Axis,
    pub theta: Axis,
    pub psi: ndarray::Array2<f64>,
    pub psi_t: ndarray::Array2<f64>,
    pub psi_th: ndarray::Array2<f64>,
    pub psi_tt: ndarray::Array2<f64>,
    pub psi_tth: ndarray::Array2<f64>,
    pub psi_thth: ndarray::Array2<f64>,
}

/// Superposes solved modes on the `(t, θ)` grid. Every mode must live on
/// the wave grid of `wd`, which must cover `t_axis`.
pub fn kg_superpose(wd: &WaveData, modes: &[ModeSolution], t_axis: Axis, th_axis: Axis) -> Result<KgField> {
    use ndarray::Array2;
    if modes.iter().any(|m| m.axis != wd.axis) {
        return Err(PipelineError::InconsistentGrids);
    }
    for t in [t_axis.start, t_axis.end()] {
        if !wd.contains(t) {
            return Err(PipelineError::StepTooLarge {
                step: t_axis.step,
                length: wd.axis.end() - wd.axis.start,
            });
        }
    }
    let shape = (t_axis.n, th_axis.n);
    let mut f = KgField {
        t: t_axis,
        theta: th_axis,
        psi: Array2::zeros(shape),
        psi_t: Array2::zeros(shape),
        psi_th: Array2::zeros(shape),
        psi_tt: Array2::zeros(shape),
        psi_tth: Array2::zeros(shape),
        psi_thth: Array2::zeros(shape),
    };
    let ts = wd.axis.values();
    for m in modes {
        let ha = Hermite::new(ts.clone(), m.a.clone(), m.adot.clone());
        let hb = Hermite::new(ts.clone(), m.b.clone(), m.bdot.clone());
        let hda = Hermite::new(ts.clone(), m.adot.clone(), m.addot.clone());
        let hdb = Hermite::new(ts.clone(), m.bdot.clone(), m.bddot.clone());
        let k = m.mode.k;
        for i in 0..t_axis.n {
            let t = t_axis.at(i);
            let (a, b) = (ha.eval(t), hb.eval(t));
            let (da, dda) = hda.eval_with_slope(t);
            let (db, ddb) = hdb.eval_with_slope(t);
            for j in 0..th_axis.n {
                let th = th_axis.at(j);
                let (c0, c1, c2, d0, d1, d2) = if k == 0.0 {
                    (1.0, 0.0, 0.0, th, 1.0, 0.0)
                } else {
                    let (s, c) = (k * th).sin_cos();
                    (c, -k * s, -k * k * c, s, k * c, -k * k * s)
                };
                f.psi[[i, j]] += c0 * a + d0 * b;
                f.psi_t[[i, j]] += c0 * da + d0 * db;
                f.psi_tt[[i, j]] += c0 * dda + d0 * ddb;
                f.psi_th[[i, j]] += c1 * a + d1 * b;
                f.psi_tth[[i, j]] += c1 * da + d1 * db;
                f.psi_thth[[i, j]] += c2 * a + d2 * b;
            }
        }
    }
    Ok(f)
}

/// Samples an explicit `Ψ(t, θ)` given as an expression in `x` (for `t`)
/// and `y` (for `θ`), with symbolic partials.
pub fn kg_from_expr(e: &Expr, t_axis: Axis, th_axis: Axis) -> Result<KgField> {
    use ndarray::Array2;
    let dt = differentiate(e, Var::X);
    let dq = differentiate(e, Var::Y);
    let trees = [
        e.clone(),
        dt.clone(),
        dq.clone(),
        differentiate(&dt, Var::X),
        differentiate(&dt, Var::Y),
        differentiate(&dq, Var::Y),
    ];
    let mut out: Vec<Array2<f64>> = Vec::with_capacity(6);
    for tree in &trees {
        let mut a = Array2::zeros((t_axis.n, th_axis.n));
        for i in 0..t_axis.n {
            for j in 0..th_axis.n {
                a[[i, j]] = tree.eval_xy(t_axis.at(i), th_axis.at(j))?;
            }
        }
        out.push(a);
    }
    let mut it = out.into_iter();
    let mut next = || it.next().expect("six tables");
    Ok(KgField {
        t: t_axis,
        theta: th_axis,
        psi: next(),
        psi_t: next(),
        psi_th: next(),
        psi_tt: next(),
        psi_tth: next(),
        psi_thth: next(),
    })
}

/// `max |Ψ_tt − Ψ_θθ − VΨ + ΩΨ_θ|` over nodes at least two away from the
/// edges, with all partials from fourth-order differences of the sampled
/// `Ψ`, relative to `max |Ψ|`.
pub fn kg_residual(wd: &WaveData, field: &KgField) -> f64 {
    let vs = wd.potential_sampled().spline();
    let os = Sampled::new(wd.axis, wd.omega.clone()).spline();
    let ptt = fd::d2(&field.psi, 0, field.t.step);
    let pqq = fd::d2(&field.psi, 1, field.theta.step);
    let pq = fd::d1(&field.psi, 1, field.theta.step);
    let scale = field.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (nt, nq) = field.psi.dim();
    let mut worst = 0.0f64;
    for i in 2..nt.saturating_sub(2) {
        let t = field.t.at(i);
        let (v, om) = (vs.eval(t), os.eval(t));
        for j in 2..nq.saturating_sub(2) {
            let r = ptt[[i, j]] - pqq[[i, j]] - v * field.psi[[i, j]] + om * pq[[i, j]];
            worst = worst.max(r.abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> Profile {
        Profile::parse("1/2", (-0.45, 0.45)).unwrap()
    }

    fn quad_profile() -> Profile {
        Profile::parse("1/2 + u^2/8", (-0.45, 0.45)).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert_eq!(half().interval, (-0.45, 0.45));
        assert_eq!(quad_profile().interval, (-0.45, 0.45));
        match Profile::parse("u^2", (-0.45, 0.45)) {
            Err(PipelineError::EmptyAdmissibleInterval { violations, .. }) => {
                let d = violations
                    .iter()
                    .find(|v| v.condition == Condition::DegenerateD)
                    .expect("D vanishes");
                assert!(d.u.abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Profile::parse("x + u", (0.0, 0.1)),
            Err(PipelineError::ProfileVariable { .. })
        ));
    }

    #[test]
    fn validation_trims_to_the_admissible_part() {
        // u² < 1/4 fails beyond |u| = 1/2
        let p = Profile::parse("1/2", (-0.45, 0.7)).unwrap();
        assert_eq!(p.interval.0, -0.45);
        assert!((p.interval.1 - 0.5).abs() < 1e-12 && p.interval.1 < 0.5);
    }

    #[test]
    fn matrix_and_velocities() {
        let p = half();
        let m = hydrodynamic_matrix(&p, 0.0).unwrap();
        assert_eq!(m, [[0.0, 0.5], [2.0, 0.0]]);
        assert_eq!(characteristic_velocities(&p, 0.3).unwrap(), (1.0, -1.0));
        assert_eq!(characteristic_velocities(&quad_profile(), 0.0).unwrap(), (1.0, -1.0));
        let lin = Profile::parse("1/2 + u/4", (-0.2, 0.2)).unwrap();
        let (l1, l2) = characteristic_velocities(&lin, 0.1).unwrap();
        assert!((l1 - (17f64.sqrt() - 1.0) / 4.0).abs() < 1e-14);
        assert!((l2 + (17f64.sqrt() + 1.0) / 4.0).abs() < 1e-14);
        assert!(matches!(
            hydrodynamic_matrix(&p, 0.6),
            Err(PipelineError::OutsideInterval { .. })
        ));
    }

    #[test]
    fn velocity_slopes_match_differences() {
        let p = Profile::parse("1/2 + u^2/8 + u^3/20", (-0.4, 0.4)).unwrap();
        for &u in &[-0.3, 0.0, 0.17, 0.35] {
            let (a, b) = velocity_slopes(&p, u).unwrap();
            let h = 1e-5;
            let (p1, p2) = characteristic_velocities(&p, u + h).unwrap();
            let (m1, m2) = characteristic_velocities(&p, u - h).unwrap();
            assert!((a - (p1 - m1) / (2.0 * h)).abs() < 1e-8);
            assert!((b - (p2 - m2) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_closed_forms_for_constant_profile() {
        let p = half();
        let pt = phase_table(&p, 0.0, 2049).unwrap();
        for (i, &u) in pt.u.iter().enumerate() {
            assert!((pt.p1[i] - (1.0 - 2.0 * u).ln()).abs() < 1e-10);
            assert!((pt.p2[i] - (1.0 + 2.0 * u).ln()).abs() < 1e-10);
        }
        let e = 0.9f64.atanh();
        assert!((pt.t_interval.0 + e).abs() < 1e-10 && (pt.t_interval.1 - e).abs() < 1e-10);
        for &t in &[-1.2, -0.3, 0.0, 0.25, 1.1] {
            let (u, du) = pt.u_of_t(t);
            assert!((u + 0.5 * f64::tanh(t)).abs() < 1e-11);
            assert!((du + 0.5 / f64::cosh(t).powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn phases_are_riemann_invariants() {
        // along the flow u_y = M u_x, r_i = v + p_i(u) satisfies
        // (r_i)_y = μ_i (r_i)_x; check that (dp_i/du, 1) is a left eigenvector
        let p = Profile::parse("1/2 + u^2/8 + u^3/20", (-0.4, 0.4)).unwrap();
        for &u in &[-0.3, 0.05, 0.3] {
            let m = hydrodynamic_matrix(&p, u).unwrap();
            let (a, b) = p.phase_slopes(u).unwrap();
            for (s, l_other) in [(a, characteristic_velocities(&p, u).unwrap().1), (b, characteristic_velocities(&p, u).unwrap().0)] {
                let row = [s * m[0][0] + m[1][0], s * m[0][1] + m[1][1]];
                assert!((row[0] - l_other * s).abs() < 1e-12);
                assert!((row[1] - l_other).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_order_on_quadratic_profile() {
        let pt = phase_table(&quad_profile(), 0.0, 1001).unwrap();
        assert!(pt.dp1.iter().zip(&pt.dp2).all(|(a, b)| a < b));
        // t(u) decreasing
        assert!(pt.t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn wave_data_trivial_cases() {
        for src in ["1/2", "1/2 + u/4"] {
            let p = Profile::parse(src, (-0.3, 0.3)).unwrap();
            let pt = phase_table(&p, 0.0, 513).unwrap();
            let wd = wave_data(&p, &pt, 512).unwrap();
            assert!(wd.gamma.iter().all(|g| g.abs() < 1e-12), "{src}");
            assert!(wd.mu.iter().all(|m| (m - 1.0).abs() < 1e-12));
            assert!(wd.potential.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn wave_data_quadratic_profile() {
        let p = quad_profile();
        let pt = phase_table(&p, 0.0, 2049).unwrap();
        let wd = wave_data(&p, &pt, 4096).unwrap();
        assert_eq!(wd.axis.at(wd.origin), 0.0);
        assert!(wd.gamma[wd.origin].abs() < 1e-12);
        assert!(wd.potential.iter().all(|v| v.is_finite()));
        // μ against its closed form sqrt(Δλ(t₀)/Δλ(t))
        let d0 = wd.lambda1[wd.origin] - wd.lambda2[wd.origin];
        for i in 0..wd.axis.n {
            let exact = (d0 / (wd.lambda1[i] - wd.lambda2[i])).sqrt();
            assert!((wd.mu[i] - exact).abs() < 1e-10);
        }
        // 2μ̇ + Γμ = 0
        let mudot = fd::deriv1(&wd.mu, wd.axis.step);
        for i in 0..wd.axis.n {
            assert!((2.0 * mudot[i] + wd.gamma[i] * wd.mu[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn free_particle() {
        let v = Sampled::from_fn(Axis::spanning(-1.0, 1.0, 201), |_| 0.0);
        let psi = solve_schrodinger(&v, 2.0, (1.0, 0.0), 0.0, 1e-3).unwrap();
        let err = psi
            .ts()
            .iter()
            .zip(&psi.values)
            .map(|(t, p)| (p - (2.0 * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let lin = solve_schrodinger(&v, 0.0, (0.0, 1.0), 0.0, 1e-2).unwrap();
        for (t, p) in lin.ts().iter().zip(&lin.values) {
            assert!((p - t).abs() < 1e-12);
        }
        assert!(matches!(
            solve_schrodinger(&v, 2.0, (1.0, 0.0), 0.0, 3.0),
            Err(PipelineError::StepTooLarge { .. })
        ));
        assert!(matches!(
            solve_schrodinger(&v, -1.0, (1.0, 0.0), 0.0, 0.1),
            Err(PipelineError::NegativeWavenumber { .. })
        ));
    }

    #[test]
    fn numerov_blow_up_is_reported() {
        let v = Sampled::from_fn(Axis::spanning(0.0, 1.0, 11), |_| 1e6);
        assert!(matches!(
            solve_schrodinger(&v, 0.0, (1.0, 0.0), 0.0, 0.5),
            Err(PipelineError::NonFinite { .. }) | Ok(_)
        ));
        let v = Sampled::from_fn(Axis::spanning(0.0, 400.0, 11), |_| 4.0);
        assert!(matches!(
            solve_schrodinger(&v, 0.0, (1.0, 0.0), 0.0, 0.01),
            Err(PipelineError::NonFinite { .. })
        ));
    }

    #[test]
    fn superpose_examples() {
        let p = half();
        let pt = phase_table(&p, 0.0, 1025).unwrap();
        let wd = wave_data(&p, &pt, 2048).unwrap();
        let modes = solve_modes(&wd, &[SpectralMode::new(1.0, 0.0, 1.0)]).unwrap();
        let ta = Axis::spanning(0.2, 0.45, 33);
        let qa = Axis::spanning(1.0, 1.4, 33);
        let f = kg_superpose(&wd, &modes, ta, qa).unwrap();
        for i in 0..33 {
            for j in 0..33 {
                let (t, q) = (ta.at(i), qa.at(j));
                assert!((f.psi[[i, j]] - q.cos() * t.cos()).abs() < 1e-10);
                assert!((f.psi_t[[i, j]] + q.cos() * t.sin()).abs() < 1e-9);
                assert!((f.psi_th[[i, j]] + q.sin() * t.cos()).abs() < 1e-10);
            }
        }
        let empty = kg_superpose(&wd, &[], ta, qa).unwrap();
        assert!(empty.psi.iter().all(|v| *v == 0.0));
        assert!(kg_residual(&wd, &f) < 1e-6);
    }

    #[test]
    fn coupled_modes_solve_the_wave_equation() {
        let p = quad_profile();
        let pt = phase_table(&p, 0.0, 2049).unwrap();
        let wd = wave_data(&p, &pt, 4096).unwrap();
        assert!(wd.omega.iter().any(|o| o.abs() > 1e-3));
        let modes = solve_modes(
            &wd,
            &[
                SpectralMode::new(1.0, 0.0, 1.0),
                SpectralMode::new(0.0, 0.5, 2.0),
                SpectralMode::new(0.3, -0.2, 0.0),
            ],
        )
        .unwrap();
        let f = kg_superpose(&wd, &modes, Axis::spanning(0.2, 0.45, 65), Axis::spanning(1.0, 1.4, 65)).unwrap();
        let r = kg_residual(&wd, &f);
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn wronskian_is_constant() {
        let p = quad_profile();
        let pt = phase_table(&p, 0.0, 2049).unwrap();
        let wd = wave_data(&p, &pt, 4096).unwrap();
        let v = wd.potential_sampled();
        let h = wd.axis.step;
        let y1 = solve_schrodinger(&v, 1.5, (1.0, 0.0), 0.0, h).unwrap();
        let y2 = solve_schrodinger(&v, 1.5, (0.0, 1.0), 0.0, h).unwrap();
        let d1 = fd::deriv1(&y1.values, h);
        let d2 = fd::deriv1(&y2.values, h);
        let w: Vec<f64> = (0..y1.values.len())
            .map(|i| y1.values[i] * d2[i] - d1[i] * y2.values[i])
            .collect();
        let drift = w.iter().map(|x| (x - w[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "{drift}");
    }

    #[test]
    fn wave_csv_header() {
        let p = half();
        let pt = phase_table(&p, 0.0, 65).unwrap();
        let wd = wave_data(&p, &pt, 64).unwrap();
        let mut buf = Vec::new();
        write_wave_csv(&mut buf, &wd).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,gamma,mu,V\n"));
    }

    proptest! {
        #[test]
        fn eigenvalues_trace_and_det(c2 in -0.2..0.2f64, c3 in -0.1..0.1f64, s in 0.0..1.0f64) {
            let src = format!("1/2 + ({c2})*u^2 + ({c3})*u^3");
            let p = Profile::parse(&src, (-0.4, 0.4)).unwrap();
            let u = p.interval.0 + s * (p.interval.1 - p.interval.0);
            let m = hydrodynamic_matrix(&p, u).unwrap();
            let (l1, l2) = characteristic_velocities(&p, u).unwrap();
            let d = p.d(u).unwrap();
            let dphi = p.dphi(u).unwrap();
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            prop_assert!((tr - dphi / d).abs() <= 1e-10 * (dphi / d).abs().max(1.0));
            prop_assert!((det - (1.0 + d) / d).abs() <= 1e-10 * ((1.0 + d) / d).abs());
            let mm = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
            let ev = mm.eigenvalues().expect("real eigenvalues");
            let (lo, hi) = if ev[0] < ev[1] { (ev[0], ev[1]) } else { (ev[1], ev[0]) };
            let (a, b) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!((lo - a).abs() < 1e-10 && (hi - b).abs() < 1e-10);
            // λ₁ > λ₂ exactly when D < 0
            prop_assert_eq!(l1 > l2, d < 0.0);
        }

        #[test]
        fn phase_slopes_strictly_ordered(c2 in -0.2..0.2f64, c3 in -0.1..0.1f64) {
            let src = format!("1/2 + ({c2})*u^2 + ({c3})*u^3");
            let p = Profile::parse(&src, (-0.4, 0.4)).unwrap();
            let pt = phase_table(&p, 0.0, 257).unwrap();
            prop_assert!(pt.dp1.iter().zip(&pt.dp2).all(|(a, b)| a < b));
        }
    }
}
