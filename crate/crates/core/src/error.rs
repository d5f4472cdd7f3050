use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// The shading point lies (numerically) in the plane of the disk, so the
    /// subtended solid angle is zero.
    #[error("shading point lies in the disk plane (relative distance {0:e})")]
    DegenerateGeometry(f64),

    #[error("invalid light: {0}")]
    InvalidLight(&'static str),

    #[error("direction does not reach the disk plane")]
    RayParallelToPlane,

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    /// Carlson duplication did not converge within the iteration cap.
    #[error("elliptic integral iteration did not converge")]
    EllipticNoConvergence,

    /// Root finding exhausted its iteration budget; `best` is the midpoint of
    /// the final bracket.
    #[error("root finding did not converge after {iterations} iterations (best {best})")]
    NoConvergence { best: f64, iterations: u32 },

    #[error("spherical triangle is degenerate (area {0:e})")]
    DegenerateTriangle(f64),

    #[error("adaptive quadrature hit maximum depth (estimate {estimate}, error bound {error:e})")]
    MaxDepth { estimate: f64, error: f64 },

    #[error("table format: {0}")]
    TableFormat(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
