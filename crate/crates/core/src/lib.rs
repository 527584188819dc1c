//! Flat Hessian metrics in two dimensions: curvature diagnostics for a
//! potential `f`, and generation of flat Hessian potentials from a
//! Klein–Gordon solution through a hydrodynamic-type system.

pub mod chart;
pub mod cli;
pub mod expr;
pub mod geometry;
pub mod numeric;
pub mod pipeline;

use serde::Serialize;
use thiserror::Error;

/// Any error surfaced by the library, tagged with the module it came from.
#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "module", content = "error", rename_all = "lowercase")]
pub enum Error {
    #[error("{0}")]
    Expr(expr::ParseError),
    #[error("{0}")]
    Geometry(geometry::GeometryError),
    #[error("{0}")]
    Pipeline(pipeline::PipelineError),
    #[error("{0}")]
    Chart(chart::ChartError),
    #[error("{message}")]
    Config { message: String },
    #[error("{message}")]
    Io { message: String },
    /// The run completed but its report did not meet the tolerances.
    #[error("verification failed: {}", failed.join(", "))]
    Verification { failed: Vec<String> },
}

/// Exit status for a validated rejection of the input.
pub const EXIT_REJECTED: i32 = 1;
/// Exit status for malformed input or a numerical failure.
pub const EXIT_FAILURE: i32 = 2;

impl Error {
    pub fn exit_code(&self) -> i32 {
        use chart::ChartError as C;
        use geometry::GeometryError as G;
        use pipeline::PipelineError as P;
        fn geometry(e: &G) -> i32 {
            match e {
                G::NotPositiveDefinite { .. }
                | G::NotRadiallySymmetric { .. }
                | G::NotFlat { .. }
                | G::ZeroTriple { .. }
                | G::OriginInGrid => EXIT_REJECTED,
                _ => EXIT_FAILURE,
            }
        }
        fn pipeline(e: &P) -> i32 {
            match e {
                P::EmptyAdmissibleInterval { .. }
                | P::MonotonicityViolation { .. }
                | P::NegativeDiscriminant { .. }
                | P::OutsideInterval { .. } => EXIT_REJECTED,
                _ => EXIT_FAILURE,
            }
        }
        match self {
            Error::Geometry(e) => geometry(e),
            Error::Pipeline(e) => pipeline(e),
            Error::Chart(e) => match e {
                C::NotClosed { .. }
                | C::SingularJacobian { .. }
                | C::PositivityViolation { .. }
                | C::NotStarShaped { .. }
                | C::NoRegion => EXIT_REJECTED,
                C::Geometry(g) => geometry(g),
                C::Pipeline(p) => pipeline(p),
                C::OutsideWaveGrid { .. } | C::MissingX => EXIT_FAILURE,
            },
            Error::Verification { .. } => EXIT_REJECTED,
            Error::Expr(_) | Error::Config { .. } | Error::Io { .. } => EXIT_FAILURE,
        }
    }

    /// Machine-readable form: the serialized error plus its message and
    /// exit code.
    pub fn payload(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Some(obj) = v.as_object_mut() {
            obj.insert("message".into(), self.to_string().into());
            obj.insert("exit_code".into(), self.exit_code().into());
        }
        v
    }
}

impl From<expr::ParseError> for Error {
    fn from(e: expr::ParseError) -> Self {
        Error::Expr(e)
    }
}

impl From<geometry::GeometryError> for Error {
    fn from(e: geometry::GeometryError) -> Self {
        Error::Geometry(e)
    }
}

impl From<pipeline::PipelineError> for Error {
    fn from(e: pipeline::PipelineError) -> Self {
        Error::Pipeline(e)
    }
}

impl From<chart::ChartError> for Error {
    fn from(e: chart::ChartError) -> Self {
        Error::Chart(e)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io { message: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
