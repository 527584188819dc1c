//! Command-line driver: flag and config-file parsing, the five subcommands,
//! and artifact output.
//!
//! Exit codes: 0 pass, 1 validated rejection (the payload in `error.json`
//! names the failed check), 2 malformed input or numerical failure.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::{
    self, assemble_metric, inscribed_rect, reconstruct_potential, recover_x, verify_roundtrip, ChartMetric,
    ConformalChart, RoundtripReport, RoundtripTolerances,
};
use crate::expr;
use crate::geometry::{
    self, catalog, cone_identity_check, fixture, normalized_rank_test, radial_flat_fit, summarize, sweep,
    verify_fixture, ClosedFormField, ConeWitness, HessianMetric, MetricField, Rect,
};
use crate::numeric::Axis;
use crate::pipeline::{
    kg_from_expr, kg_superpose, phase_table, solve_modes, wave_data, write_mode_csv, write_wave_csv, Profile,
    SpectralMode, DEFAULT_T_STEPS,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "hesseflat", version, about = "Flat Hessian metrics: diagnostics and generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature and flatness of a potential over a grid.
    Check(RunConfig),
    /// Cone identity and normalized rank test for a potential.
    Cone(RunConfig),
    /// Profile → Klein–Gordon modes → chart → reconstructed potential.
    Pipeline(RunConfig),
    /// Rebuilds a potential from its Hessian by double integration.
    Reconstruct(RunConfig),
    /// Runs a named catalog fixture, or all of them.
    Catalog(RunConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Cone(_) => "cone",
            Command::Pipeline(_) => "pipeline",
            Command::Reconstruct(_) => "reconstruct",
            Command::Catalog(_) => "catalog",
        }
    }

    fn config(&self) -> &RunConfig {
        match self {
            Command::Check(c)
            | Command::Cone(c)
            | Command::Pipeline(c)
            | Command::Reconstruct(c)
            | Command::Catalog(c) => c,
        }
    }
}

/// Run settings. Every field may also come from a JSON file given with
/// `--config`, using the same names with underscores; flags win.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Potential f(x, y), e.g. "x^2/(2*y) + y*log(y)/4".
    #[arg(long)]
    pub potential: Option<String>,
    /// Catalog fixture name (see `catalog` with no name).
    #[arg(long)]
    pub catalog: Option<String>,
    /// Profile φ(u).
    #[arg(long)]
    pub profile: Option<String>,
    /// Modes "A,B,k[,psi0,dpsi0];...".
    #[arg(long)]
    pub modes: Option<String>,
    /// Requested u-interval "a,b".
    #[arg(long, allow_hyphen_values = true)]
    pub urange: Option<String>,
    /// Phase base point u₀.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<f64>,
    /// Grid size "NxM" (check, cone) or "NTxNTH" (pipeline chart).
    #[arg(long)]
    pub grid: Option<String>,
    /// Reconstruction grid size per axis.
    #[arg(long)]
    pub recon_grid: Option<usize>,
    /// Number of t-steps for the wave data.
    #[arg(long)]
    pub t_steps: Option<usize>,
    /// Pass tolerance: max |K| (check, pipeline, reconstruct) or cone residual.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xrange: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub yrange: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub trange: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub thetarange: Option<String>,
    /// Base point "x,y" for reconstruction.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    /// Cone witness "c:i,j,k;..." for the monomial c·E^i F^j G^k.
    #[arg(long, allow_hyphen_values = true)]
    pub witness: Option<String>,
    /// Disk radius for the radial uniqueness fit (check).
    #[arg(long)]
    pub radial: Option<f64>,
    /// Adds eps·x to F before reconstruction (negative control).
    #[arg(long, allow_hyphen_values = true)]
    pub perturb_f: Option<f64>,
    /// Replaces the mode superposition by Ψ(t, theta) given as an expression.
    #[arg(long)]
    pub psi: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with default settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Fixture name for `catalog`.
    #[arg(value_name = "NAME")]
    #[serde(skip)]
    pub name: Option<String>,
}

impl RunConfig {
    /// Fills unset fields from `file`.
    pub fn merged(mut self, file: RunConfig) -> RunConfig {
        macro_rules! fill {
            ($($f:ident),*) => { $( if self.$f.is_none() { self.$f = file.$f; } )* };
        }
        fill!(
            potential, catalog, profile, modes, urange, u0, grid, recon_grid, t_steps, tol, xrange, yrange,
            trange, thetarange, base, witness, radial, perturb_f, psi, out
        );
        self
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("hesseflat-out"))
    }
}

fn config_error(message: impl Into<String>) -> Error {
    Error::Config {
        message: message.into(),
    }
}

fn parse_pair(what: &str, s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(config_error(format!("--{what}: expected \"a,b\", got \"{s}\"")));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| config_error(format!("--{what}: bad number \"{}\"", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| config_error(format!("--{what}: bad number \"{}\"", parts[1])))?;
    if !a.is_finite() || !b.is_finite() {
        return Err(config_error(format!("--{what}: values must be finite")));
    }
    Ok((a, b))
}

fn parse_range(what: &str, s: &str) -> Result<(f64, f64)> {
    let (a, b) = parse_pair(what, s)?;
    if !(a < b) {
        return Err(config_error(format!("--{what}: need a < b, got {a},{b}")));
    }
    Ok((a, b))
}

/// `"N"` or `"NxM"`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || config_error(format!("--grid: expected \"N\" or \"NxM\", got \"{s}\""));
    let mut it = s.split(['x', 'X']);
    let n: usize = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let m: usize = match it.next() {
        Some(m) => m.trim().parse().map_err(|_| bad())?,
        None => n,
    };
    if it.next().is_some() || n < 7 || m < 7 || n > 4001 || m > 4001 {
        return Err(config_error(format!("--grid: sizes must be between 7 and 4001, got \"{s}\"")));
    }
    Ok((n, m))
}

/// `"A,B,k[,psi0,dpsi0];..."`.
pub fn parse_modes(s: &str) -> Result<Vec<SpectralMode>> {
    let mut modes = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<f64> = part
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| config_error(format!("--modes: bad mode \"{part}\"")))?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(config_error(format!("--modes: non-finite value in \"{part}\"")));
        }
        let mut m = match nums.len() {
            3 | 5 => SpectralMode::new(nums[0], nums[1], nums[2]),
            _ => return Err(config_error(format!("--modes: expected 3 or 5 numbers in \"{part}\""))),
        };
        if nums.len() == 5 {
            m.init = (nums[3], nums[4]);
        }
        modes.push(m);
    }
    Ok(modes)
}

/// Rewrites an expression in `t` and `theta` to the parser's `x` and `y`.
pub fn parse_t_theta(src: &str) -> Result<expr::Expr> {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            match &src[i..end] {
                "t" => out.push('x'),
                "theta" => out.push('y'),
                id @ ("x" | "y" | "u") => {
                    return Err(config_error(format!("--psi: use t and theta, found `{id}`")));
                }
                id => out.push_str(id),
            }
        } else {
            out.push(c);
        }
    }
    Ok(expr::parse(&out)?)
}

/// Metric with `F` replaced by `F + eps·x`.
struct PerturbedF<'a> {
    inner: &'a dyn MetricField,
    eps: f64,
}

impl MetricField for PerturbedF<'_> {
    fn domain(&self) -> Rect {
        self.inner.domain()
    }

    fn triple(&self, x: f64, y: f64) -> geometry::Result<[f64; 3]> {
        let [e, f, g] = self.inner.triple(x, y)?;
        Ok([e, f + self.eps * x, g])
    }
}

/// Result of a subcommand: the report to write and the checks that failed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub failed: Vec<String>,
}

impl Outcome {
    fn new(report: Value, checks: &[(String, bool)]) -> Outcome {
        Outcome {
            report,
            failed: checks.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect(),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| config_error(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// The potential named by `--potential` or `--catalog`, and its domain.
fn potential(cfg: &RunConfig) -> Result<(ClosedFormField, Rect, Option<&'static geometry::Fixture>)> {
    let fx = match (&cfg.potential, &cfg.catalog) {
        (Some(_), Some(_)) => return Err(config_error("give either --potential or --catalog, not both")),
        (None, None) => return Err(config_error("a potential is required (--potential or --catalog)")),
        (Some(_), None) => None,
        (None, Some(name)) => Some(lookup(name)?),
    };
    let default = fx.map(|f| f.region.bounding_rect());
    let x = match (&cfg.xrange, default) {
        (Some(s), _) => parse_range("xrange", s)?,
        (None, Some(r)) => r.x,
        (None, None) => return Err(config_error("--xrange is required with --potential")),
    };
    let y = match (&cfg.yrange, default) {
        (Some(s), _) => parse_range("yrange", s)?,
        (None, Some(r)) => r.y,
        (None, None) => return Err(config_error("--yrange is required with --potential")),
    };
    let rect = Rect::new(x, y);
    let src = cfg.potential.as_deref().or(fx.map(|f| f.potential)).unwrap_or_default();
    Ok((ClosedFormField::new(&expr::parse(src)?, rect), rect, fx))
}

fn lookup(name: &str) -> Result<&'static geometry::Fixture> {
    fixture(name).ok_or_else(|| {
        let names: Vec<&str> = catalog().iter().map(|f| f.name).collect();
        config_error(format!("unknown fixture `{name}`; available: {}", names.join(", ")))
    })
}

pub fn cmd_check(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (field, rect, fx) = potential(cfg)?;
    let (nx, ny) = parse_grid(cfg.grid.as_deref().unwrap_or("101x101"))?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let pts = match fx {
        Some(f) if cfg.xrange.is_none() && cfg.yrange.is_none() => f.region.sample(nx),
        _ => rect.grid(nx, ny).points(),
    };
    let rows = sweep(&field, &pts)?;
    let s = summarize(&rows);
    let mut w = create(out, "grid.csv")?;
    geometry::write_grid_csv(&mut w, &rows)?;
    w.flush()?;
    let mut checks = vec![
        (format!("curvature_max < {tol:e}"), s.curvature_max < tol),
        ("positive definite".to_string(), s.positive_definite),
    ];
    let mut report = json!({
        "command": "check",
        "potential": field.expr().to_string(),
        "points": s.points,
        "curvature_max": s.curvature_max,
        "curvature_argmax": s.curvature_argmax,
        "flatness_max": s.flatness_max,
        "pd_min_trace": s.pd_min_trace,
        "pd_min_det": s.pd_min_det,
        "positive_definite": s.positive_definite,
    });
    if let Some(((px, py), expected)) = fx.and_then(|f| f.probe) {
        let k = geometry::hessian_curvature(&field, (px, py))?;
        report["probe"] = json!({"point": (px, py), "curvature": k, "expected": expected});
    }
    if let Some(radius) = cfg.radial {
        let fit = radial_flat_fit(&field, radius, nx, tol)?;
        report["radial_fit"] = json!(fit);
        checks.push(("radial fit residual < 1e-12".to_string(), fit.residual < 1e-12));
    }
    report["passed"] = json!(checks.iter().all(|c| c.1));
    Ok(Outcome::new(report, &checks))
}

pub fn cmd_cone(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let (field, rect, _) = potential(cfg)?;
    let (nx, ny) = parse_grid(cfg.grid.as_deref().unwrap_or("41x41"))?;
    let tol = cfg.tol.unwrap_or(1e-12);
    let witness = match &cfg.witness {
        Some(s) => ConeWitness::parse(s, tol).map_err(config_error)?,
        None => ConeWitness::half_plane_quadric(),
    };
    let metric = HessianMetric(&field);
    let grid = rect.grid(nx, ny);
    let cone = cone_identity_check(&metric, &witness, &grid.points())?;
    let rank = normalized_rank_test(&metric, &grid)?;
    let checks = vec![(format!("cone residual < {tol:e}"), cone < tol)];
    let report = json!({
        "command": "cone",
        "potential": field.expr().to_string(),
        "witness_degree": witness.degree,
        "cone_residual": cone,
        "rank_residual": rank,
        "passed": checks.iter().all(|c| c.1),
    });
    Ok(Outcome::new(report, &checks))
}

fn roundtrip_checks(rep: &RoundtripReport, tol: &RoundtripTolerances) -> Vec<(String, bool)> {
    vec![
        (
            format!("hessian_rel_err < {:e}", tol.hessian),
            rep.hessian_rel_err < tol.hessian,
        ),
        (
            format!("integrability_max < {:e}", tol.integrability),
            rep.integrability_max < tol.integrability,
        ),
        (
            format!("curvature_max < {:e}", tol.curvature),
            rep.curvature_max < tol.curvature,
        ),
        ("pd_min_trace > 0".to_string(), rep.pd_min_trace > 0.0),
        ("pd_min_det > 0".to_string(), rep.pd_min_det > 0.0),
    ]
}

pub fn cmd_pipeline(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let src = cfg.profile.as_deref().ok_or_else(|| config_error("--profile is required"))?;
    let urange = parse_range("urange", cfg.urange.as_deref().unwrap_or("-0.45,0.45"))?;
    let trange = parse_range("trange", cfg.trange.as_deref().unwrap_or("0.2,0.45"))?;
    let qrange = parse_range("thetarange", cfg.thetarange.as_deref().unwrap_or("1.0,1.4"))?;
    let (nt, nq) = parse_grid(cfg.grid.as_deref().unwrap_or("129x129"))?;
    let modes = parse_modes(cfg.modes.as_deref().unwrap_or(""))?;
    let psi = cfg.psi.as_deref().map(parse_t_theta).transpose()?;
    if modes.is_empty() && psi.is_none() {
        return Err(config_error("--modes must list at least one mode"));
    }
    let recon_n = cfg.recon_grid.unwrap_or(41);
    if !(7..=1001).contains(&recon_n) {
        return Err(config_error("--recon-grid must be between 7 and 1001"));
    }
    let tol = RoundtripTolerances {
        curvature: cfg.tol.unwrap_or(1e-4),
        ..Default::default()
    };

    let profile = Profile::parse(src, urange)?;
    let phase = phase_table(&profile, cfg.u0.unwrap_or(0.0), 2049)?;
    let wd = wave_data(&profile, &phase, cfg.t_steps.unwrap_or(DEFAULT_T_STEPS))?;
    let mut w = create(out, "wave.csv")?;
    write_wave_csv(&mut w, &wd)?;
    w.flush()?;
    let t_axis = Axis::spanning(trange.0, trange.1, nt);
    let q_axis = Axis::spanning(qrange.0, qrange.1, nq);
    let kg = match &psi {
        Some(e) => kg_from_expr(e, t_axis, q_axis)?,
        None => {
            let sols = solve_modes(&wd, &modes)?;
            for (i, s) in sols.iter().enumerate() {
                let mut w = create(out, &format!("mode_{i}.csv"))?;
                write_mode_csv(&mut w, &s.psi)?;
                w.flush()?;
            }
            kg_superpose(&wd, &sols, t_axis, q_axis)?
        }
    };
    let mut c = ConformalChart::new(&profile, &phase, &wd, &kg)?;
    let recovery = recover_x(&mut c)?;
    let grid_metric = assemble_metric(&c, &profile)?;
    let mut w = create(out, "chart.csv")?;
    chart::write_chart_csv(&mut w, &c, &grid_metric)?;
    w.flush()?;

    let base = (c.x[[c.base.0, c.base.1]], c.y.y[[c.base.0, c.base.1]]);
    let region = inscribed_rect(&c, base)?;
    let cm = ChartMetric { chart: &c };
    let perturbed = cfg.perturb_f.map(|eps| PerturbedF { inner: &cm, eps });
    let m: &dyn MetricField = match &perturbed {
        Some(p) => p,
        None => &cm,
    };
    let rp = reconstruct_potential(m, base, region, recon_n)?;
    let mut w = create(out, "potential.csv")?;
    chart::write_potential_csv(&mut w, &rp)?;
    w.flush()?;
    let rep = verify_roundtrip(&rp, m)?;
    let checks = roundtrip_checks(&rep, &tol);
    let report = json!({
        "command": "pipeline",
        "profile": profile.phi_expr().to_string(),
        "admissible_interval": profile.interval,
        "t_interval": phase.t_interval,
        "modes": modes,
        "chart": {
            "t": trange, "theta": qrange, "nt": nt, "ntheta": nq,
            "closedness": recovery.closedness,
            "path_mismatch": recovery.path_mismatch,
            "path_scale": recovery.path_scale,
        },
        "base": base,
        "region": {"x": region.x, "y": region.y},
        "gauge": rp.gauge,
        "perturb_f": cfg.perturb_f,
        "hessian_rel_err": rep.hessian_rel_err,
        "integrability_max": rep.integrability_max,
        "flatness_max": rep.flatness_max,
        "curvature_max": rep.curvature_max,
        "pd_min_trace": rep.pd_min_trace,
        "pd_min_det": rep.pd_min_det,
        "nondegeneracy_min": rep.nondegeneracy_min,
        "nondegeneracy_sign_change": rep.nondegeneracy_sign_change,
        "passed": checks.iter().all(|c| c.1),
    });
    Ok(Outcome::new(report, &checks))
}

pub fn cmd_reconstruct(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (field, rect, _) = potential(cfg)?;
    let n = cfg.recon_grid.unwrap_or(41);
    if !(7..=1001).contains(&n) {
        return Err(config_error("--recon-grid must be between 7 and 1001"));
    }
    let base = match &cfg.base {
        Some(s) => parse_pair("base", s)?,
        None => (0.5 * (rect.x.0 + rect.x.1), 0.5 * (rect.y.0 + rect.y.1)),
    };
    if !rect.contains(base.0, base.1) {
        return Err(config_error("--base must lie inside the domain"));
    }
    let tol = RoundtripTolerances {
        curvature: cfg.tol.unwrap_or(1e-4),
        ..Default::default()
    };
    let hm = HessianMetric(&field);
    let perturbed = cfg.perturb_f.map(|eps| PerturbedF { inner: &hm, eps });
    let m: &dyn MetricField = match &perturbed {
        Some(p) => p,
        None => &hm,
    };
    let rp = reconstruct_potential(m, base, rect, n)?;
    let mut w = create(out, "potential.csv")?;
    chart::write_potential_csv(&mut w, &rp)?;
    w.flush()?;
    let rep = verify_roundtrip(&rp, m)?;
    let checks = roundtrip_checks(&rep, &tol);
    let report = json!({
        "command": "reconstruct",
        "potential": field.expr().to_string(),
        "base": base,
        "region": {"x": rect.x, "y": rect.y},
        "gauge": rp.gauge,
        "perturb_f": cfg.perturb_f,
        "hessian_rel_err": rep.hessian_rel_err,
        "integrability_max": rep.integrability_max,
        "flatness_max": rep.flatness_max,
        "curvature_max": rep.curvature_max,
        "pd_min_trace": rep.pd_min_trace,
        "pd_min_det": rep.pd_min_det,
        "nondegeneracy_min": rep.nondegeneracy_min,
        "nondegeneracy_sign_change": rep.nondegeneracy_sign_change,
        "passed": checks.iter().all(|c| c.1),
    });
    Ok(Outcome::new(report, &checks))
}

pub fn cmd_catalog(cfg: &RunConfig, _out: &Path) -> Result<Outcome> {
    let name = cfg.name.as_deref().or(cfg.catalog.as_deref());
    let fixtures: Vec<&geometry::Fixture> = match name {
        Some(n) => vec![lookup(n)?],
        None => catalog().iter().collect(),
    };
    let n = parse_grid(cfg.grid.as_deref().unwrap_or("101"))?.0;
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    println!("{:<16} {:>12} {:>12} {:>8}", "fixture", "max |K|", "flatness", "result");
    for fx in fixtures {
        let r = verify_fixture(fx, n)?;
        println!(
            "{:<16} {:>12.3e} {:>12.3e} {:>8}",
            r.name,
            r.sweep.curvature_max,
            r.sweep.flatness_max,
            if r.passed { "pass" } else { "FAIL" }
        );
        for (c, ok) in &r.checks {
            checks.push((format!("{}: {c}", r.name), *ok));
        }
        reports.push(r);
    }
    let report = json!({
        "command": "catalog",
        "fixtures": reports,
        "passed": checks.iter().all(|c| c.1),
    });
    Ok(Outcome::new(report, &checks))
}

/// Resolves the config file, runs the subcommand, writes `report.json`
/// (or `error.json`) and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let flags = cli.command.config().clone();
    let cfg = match &flags.config {
        Some(path) => match load_config(path) {
            Ok(file) => flags.merged(file),
            Err(e) => return report_error(&flags.out_dir(), &e),
        },
        None => flags,
    };
    let out = cfg.out_dir();
    if let Err(e) = fs::create_dir_all(&out) {
        return report_error(&out, &Error::from(e));
    }
    let result = match cli.command {
        Command::Check(_) => cmd_check(&cfg, &out),
        Command::Cone(_) => cmd_cone(&cfg, &out),
        Command::Pipeline(_) => cmd_pipeline(&cfg, &out),
        Command::Reconstruct(_) => cmd_reconstruct(&cfg, &out),
        Command::Catalog(_) => cmd_catalog(&cfg, &out),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return report_error(&out, &e),
    };
    let _ = fs::remove_file(out.join("error.json"));
    if let Err(e) = write_json(&out, "report.json", &outcome.report) {
        return report_error(&out, &e);
    }
    if outcome.failed.is_empty() {
        println!("{name}: pass ({})", out.join("report.json").display());
        0
    } else {
        report_error(
            &out,
            &Error::Verification {
                failed: outcome.failed,
            },
        )
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn report_error(out: &Path, e: &Error) -> i32 {
    eprintln!("error: {e}");
    let payload = e.payload();
    if fs::create_dir_all(out).is_ok() {
        let _ = write_json(out, "error.json", &payload);
    }
    e.exit_code()
}

/// Parses `args` (including the program name) and runs. Argument errors
/// exit with 2, `--help` and `--version` with 0.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                crate::EXIT_FAILURE
            } else {
                0
            }
        }
    }
}
