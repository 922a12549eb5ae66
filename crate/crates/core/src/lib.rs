//! Interior-penalty discontinuous Galerkin solver for the linear plate
//! folding model on isoparametric triangular meshes of the unit square.
//!
//! The pipeline is [`mesh`] → [`spaces`] → [`assembly`] → [`solver`] →
//! [`analysis`]; [`experiment`] drives it from declarative configs.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod experiment;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod spaces;
pub mod tensor;

pub use analysis::{ConvergenceRow, LevelNorm};
pub use assembly::{Penalty, PenaltyLength, ProblemSpec, SparseSystem};
pub use error::{Error, Result};
pub use experiment::{BcCase, ExperimentConfig, Load, RunSummary};
pub use mesh::{DirichletSpec, EdgeClass, InterfaceKind, InterfaceSpec, Mesh};
pub use solver::{Method, SolveReport, SolverOptions};
pub use spaces::Space;
pub use tensor::Vec2;

/// Caps the worker threads used by assembly, matrix products and the
/// sparse factorization. Must be called before any parallel work starts.
pub fn set_thread_limit(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    faer::set_global_parallelism(if threads == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(threads)
    });
    Ok(())
}
