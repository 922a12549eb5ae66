//! dG norms, bending energy densities and extrapolated convergence tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{default_rules, edge_quadrature, volume_quadrature, Penalty, Tabulation};
use crate::error::{Error, Result};
use crate::mesh::EdgeClass;
use crate::spaces::{combine, FieldValue, Space};
use crate::tensor::Vec2;

/// Exact field supplying value, gradient and Hessian at a physical point.
pub type ExactField<'a> = &'a (dyn Fn(Vec2) -> FieldValue + Sync);

fn check_len(space: &Space<'_>, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != space.n_dofs() {
        return Err(Error::SizeMismatch {
            expected: space.n_dofs(),
            got: coeffs.len(),
        });
    }
    Ok(())
}

fn sub(a: FieldValue, b: Option<FieldValue>) -> FieldValue {
    let Some(b) = b else { return a };
    FieldValue {
        value: a.value - b.value,
        grad: [a.grad[0] - b.grad[0], a.grad[1] - b.grad[1]],
        hess: [
            [a.hess[0][0] - b.hess[0][0], a.hess[0][1] - b.hess[0][1]],
            [a.hess[1][0] - b.hess[1][0], a.hess[1][1] - b.hess[1][1]],
        ],
    }
}

fn hess_sq(h: &[[f64; 2]; 2]) -> f64 {
    h.iter().flatten().map(|x| x * x).sum()
}

/// `‖v_h - u‖_dG` for an optional smooth `u` (`None` gives `‖v_h‖_dG`).
///
/// Boundary jumps are taken on DIRICHLET edges only and mean the trace of
/// `v_h - u`; a smooth `u` has no interior jumps. Element and edge
/// contributions are summed in index order.
pub fn dg_error(
    space: &Space<'_>,
    coeffs: &[f64],
    exact: Option<ExactField<'_>>,
    penalty: &Penalty,
) -> Result<f64> {
    check_len(space, coeffs)?;
    let mesh = space.mesh;
    let (tri, er) = default_rules(space.degree())?;
    let tab = Tabulation::new(space, tri, er);

    let volume: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let vq = volume_quadrature(space, &tab, t)?;
            let local = &coeffs[space.dofs.range(t)];
            Ok((0..vq.weights.len())
                .map(|q| {
                    let u = exact.map(|f| f(vq.points[q]));
                    vq.weights[q] * hess_sq(&sub(combine(&vq.shapes[q], local), u).hess)
                })
                .sum())
        })
        .collect::<Result<_>>()?;

    let edges: Vec<f64> = (0..mesh.edges().len())
        .into_par_iter()
        .map(|e| {
            let edge = &mesh.edges()[e];
            let gradient = match edge.class {
                EdgeClass::Interior | EdgeClass::Dirichlet => true,
                EdgeClass::Interface => false,
                EdgeClass::Free => return Ok(0.0),
                EdgeClass::Unclassified => return Err(Error::UnclassifiedEdge(e)),
            };
            let eq = edge_quadrature(space, &tab, e)?;
            let h = penalty.edge_h(mesh, edge);
            let plus = &coeffs[space.dofs.range(edge.plus.element)];
            let mut sum = 0.0;
            for q in 0..eq.weights.len() {
                let vp = combine(&eq.plus[q], plus);
                let jump = match (&eq.minus, edge.minus) {
                    (Some(m), Some(side)) => {
                        let minus = &coeffs[space.dofs.range(side.element)];
                        sub(vp, Some(combine(&m[q], minus)))
                    }
                    _ => sub(vp, exact.map(|f| f(eq.points[q]))),
                };
                let mut c = penalty.gamma0 / h.powi(3) * jump.value * jump.value;
                if gradient {
                    c += penalty.gamma1 / h * (jump.grad[0].powi(2) + jump.grad[1].powi(2));
                }
                sum += eq.weights[q] * c;
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;

    let total: f64 = volume.iter().sum::<f64>() + edges.iter().sum::<f64>();
    Ok(total.sqrt())
}

/// `‖v_h‖_dG` with homogeneous boundary convention.
pub fn dg_norm(space: &Space<'_>, coeffs: &[f64], penalty: &Penalty) -> Result<f64> {
    dg_error(space, coeffs, None, penalty)
}

/// Area-normalized bending energy `(1/2) ∫_T |D²u_h|² / |T|` per element.
pub fn energy_density(space: &Space<'_>, coeffs: &[f64]) -> Result<Vec<f64>> {
    check_len(space, coeffs)?;
    let (tri, er) = default_rules(space.degree())?;
    let tab = Tabulation::new(space, tri, er);
    (0..space.mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let vq = volume_quadrature(space, &tab, t)?;
            let local = &coeffs[space.dofs.range(t)];
            let (mut energy, mut area) = (0.0, 0.0);
            for q in 0..vq.weights.len() {
                energy += vq.weights[q] * hess_sq(&combine(&vq.shapes[q], local).hess);
                area += vq.weights[q];
            }
            Ok(0.5 * energy / area)
        })
        .collect()
}

/// Aitken's Δ² limit of three consecutive terms.
pub fn extrapolate(s0: f64, s1: f64, s2: f64) -> Result<f64> {
    let denominator = s2 - 2.0 * s1 + s0;
    if denominator.abs() <= 1e-14 * s2.abs() || denominator == 0.0 {
        return Err(Error::DegenerateExtrapolation { denominator });
    }
    Ok((s2 * s0 - s1 * s1) / denominator)
}

/// Per-level input to [`error_series`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelNorm {
    pub level: usize,
    pub n_dofs: usize,
    pub h_max: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n_dofs: usize,
    pub h_max: f64,
    pub s: f64,
    /// Extrapolation from levels `j-2, j-1, j`; `None` for the first two
    /// levels or a degenerate triple.
    pub s_tilde: Option<f64>,
    pub err: f64,
    /// `log2(err_{j-1} / err_j)`; `None` on the first level or when an
    /// error vanishes.
    pub rate: Option<f64>,
}

/// Error estimates `err_j = sqrt|s̃² - s_j²|` with `s̃` extrapolated from the
/// three finest levels.
pub fn error_series(levels: &[LevelNorm]) -> Result<Vec<ConvergenceRow>> {
    let n = levels.len();
    if n < 3 {
        return Err(Error::TooFewLevels(n));
    }
    let s: Vec<f64> = levels.iter().map(|l| l.norm).collect();
    let limit = extrapolate(s[n - 3], s[n - 2], s[n - 1])?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n);
    for (j, l) in levels.iter().enumerate() {
        let err = (limit * limit - l.norm * l.norm).abs().sqrt();
        let rate = rows
            .last()
            .filter(|prev| prev.err > 0.0 && err > 0.0)
            .map(|prev| (prev.err / err).log2());
        let s_tilde = if j >= 2 {
            extrapolate(s[j - 2], s[j - 1], s[j]).ok()
        } else {
            None
        };
        rows.push(ConvergenceRow {
            level: l.level,
            n_dofs: l.n_dofs,
            h_max: l.h_max,
            s: l.norm,
            s_tilde,
            err,
            rate,
        });
    }
    Ok(rows)
}

/// `log2(e_{j-1} / e_j)` for consecutive entries.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{dg_gram_matrix, PenaltyLength};
    use crate::mesh::{DirichletSpec, InterfaceKind, InterfaceSpec, Mesh};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn clamped(spec: InterfaceSpec) -> Mesh {
        Mesh::structured(4, spec, 2)
            .unwrap()
            .classify_edges(&DirichletSpec::all())
            .unwrap()
    }

    #[test]
    fn constant_on_two_triangles() {
        let mesh = Mesh::two_triangles(2)
            .unwrap()
            .classify_edges(&DirichletSpec::all())
            .unwrap();
        let space = Space::new(&mesh).unwrap();
        let one = vec![1.0; space.n_dofs()];
        let norm = dg_norm(&space, &one, &Penalty::default().with_length(PenaltyLength::EdgeLength)).unwrap();
        assert!((norm - 40f64.sqrt()).abs() <= 1e-12, "{norm}");
        assert_eq!(dg_norm(&space, &vec![0.0; space.n_dofs()], &Penalty::default()).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_energy_density_is_one() {
        let mesh = clamped(InterfaceSpec::NONE);
        let space = Space::new(&mesh).unwrap();
        let v = space.interpolate(|p| 0.5 * (p.x * p.x + p.y * p.y));
        for d in energy_density(&space, &v).unwrap() {
            assert!((d - 1.0).abs() <= 1e-12, "{d}");
        }
        let zero = energy_density(&space, &vec![0.0; space.n_dofs()]).unwrap();
        assert!(zero.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn norm_matches_gram_matrix() {
        let mesh = clamped(InterfaceSpec::new(InterfaceKind::Sine, 2));
        let space = Space::new(&mesh).unwrap();
        let penalty = Penalty::new(10.0, 7.0);
        let gram = dg_gram_matrix(&mesh, &penalty).unwrap();
        let v: Vec<f64> = (0..space.n_dofs()).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let direct = dg_norm(&space, &v, &penalty).unwrap();
        let quad: f64 = gram.mul(&v).iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((direct - quad.sqrt()).abs() <= 1e-10 * direct);
    }

    #[test]
    fn norm_is_definite_with_clamped_subdomains() {
        for spec in [InterfaceSpec::NONE, InterfaceSpec::new(InterfaceKind::Quadratic, 2)] {
            let mesh = clamped(spec);
            let gram = dg_gram_matrix(&mesh, &Penalty::default()).unwrap();
            let d = gram.to_dense();
            let ev = SymmetricEigen::new(DMatrix::from_fn(gram.n, gram.n, |i, j| d[i][j])).eigenvalues;
            assert!(ev.min() > 0.0, "{spec:?}: {}", ev.min());
        }
    }

    #[test]
    fn exact_field_error_vanishes_for_interpolated_quadratic() {
        let mesh = clamped(InterfaceSpec::NONE);
        let space = Space::new(&mesh).unwrap();
        let f = |p: Vec2| p.x * p.x - p.x * p.y;
        let exact = |p: Vec2| FieldValue {
            value: f(p),
            grad: [2.0 * p.x - p.y, -p.x],
            hess: [[2.0, -1.0], [-1.0, 0.0]],
        };
        let v = space.interpolate(f);
        let err = dg_error(&space, &v, Some(&exact), &Penalty::default()).unwrap();
        assert!(err <= 1e-11, "{err}");
    }

    #[test]
    fn aitken_examples() {
        assert!((extrapolate(3.0, 2.25, 2.0625).unwrap() - 2.0).abs() <= 1e-15);
        assert!((extrapolate(8.0, 6.5, 5.75).unwrap() - 5.0).abs() <= 1e-13);
        assert!(matches!(
            extrapolate(1.0, 2.0, 3.0),
            Err(Error::DegenerateExtrapolation { .. })
        ));
    }

    #[test]
    fn synthetic_series_reproduces_rate() {
        let (s, c) = (3.0_f64, 2.0_f64);
        let levels: Vec<LevelNorm> = (0..6)
            .map(|j| LevelNorm {
                level: j,
                n_dofs: 192 << (2 * j),
                h_max: 0.25 / (1 << j) as f64,
                norm: (s * s - c * 4f64.powi(-(j as i32))).sqrt(),
            })
            .collect();
        let rows = error_series(&levels).unwrap();
        assert!(rows[0].rate.is_none() && rows[0].s_tilde.is_none());
        for r in &rows[1..] {
            assert!((r.rate.unwrap() - 1.0).abs() <= 0.02, "{:?}", r);
        }
    }

    #[test]
    fn identical_norms_cannot_be_extrapolated() {
        let levels: Vec<LevelNorm> = (0..3)
            .map(|j| LevelNorm {
                level: j,
                n_dofs: 1,
                h_max: 1.0,
                norm: 2.0,
            })
            .collect();
        assert!(error_series(&levels).is_err());
        assert!(matches!(error_series(&levels[..2]), Err(Error::TooFewLevels(2))));
    }
}
