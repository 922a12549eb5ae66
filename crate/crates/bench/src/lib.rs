//! Benchmark fixtures shared by the criterion targets.

use foldplate_core::experiment::preset;
use foldplate_core::{Mesh, ProblemSpec, Result};

/// Clamped mesh and problem of a `table1-*` preset at the given level.
pub fn fixture(name: &str, level: usize) -> Result<(Mesh, ProblemSpec)> {
    let cfg = preset(name)?;
    Ok((cfg.mesh(level)?, cfg.problem()))
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_builds() {
        let (mesh, spec) = super::fixture("table1-pwquad", 1).unwrap();
        assert_eq!(mesh.n_elements(), 128);
        assert_eq!(spec.degree, 2);
    }
}
