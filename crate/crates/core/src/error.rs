use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParameters(String),

    #[error("element {element} is inverted or degenerate (det J = {det:e})")]
    DegenerateGeometry { element: usize, det: f64 },

    #[error("Dirichlet boundary description does not match edge endpoints: {0}")]
    DirichletMismatch(String),

    #[error("edge {0} has not been classified")]
    UnclassifiedEdge(usize),

    #[error("unsupported quadrature request: {0}")]
    UnsupportedQuadrature(String),

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("singular Jacobian in inverse map derivatives (det J = {0:e})")]
    SingularJacobian(f64),

    #[error("coefficient vector has length {got}, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("point ({0}, {1}) is not contained in the mesh")]
    PointOutsideMesh(f64, f64),

    #[error("invalid problem setup: {0}")]
    InvalidProblem(String),

    #[error("conjugate gradients did not converge: {report}")]
    NotConverged { report: SolveReport },

    #[error("negative curvature p^T A p = {curvature:e} at iteration {iteration}; penalty parameters too small?")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("sparse Cholesky factorization failed (non-positive pivot); loss of coercivity")]
    NotPositiveDefinite,

    #[error("extrapolation denominator vanishes ({denominator:e}); sequence already converged or not geometric")]
    DegenerateExtrapolation { denominator: f64 },

    #[error("error series needs at least 3 levels, got {0}")]
    TooFewLevels(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Configuration problems are reported differently from numerical failures
    /// by the command-line runner.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
