//! Symmetric interior-penalty system for the folding plate.
//!
//! Conventions: on an edge with normal `η` pointing from `T+` into `T-`,
//! `[v] = v+ - v-` and `{v} = (v+ + v-)/2`; on a boundary edge `η` is the
//! outward normal and `[v] = {v} = v`. With these conventions the bilinear
//! form reads
//!
//! ```text
//! a_h(u, v) = Σ_T (D²u, D²v)_T
//!           - <{∂_η∇u}, [∇v]> - <{∂_η∇v}, [∇u]>     (S not on the fold)
//!           + <{∂_ηΔu}, [v]>  + <{∂_ηΔv}, [u]>       (all S)
//!           + γ1 h⁻¹ <[∇u], [∇v]>                    (S not on the fold)
//!           + γ0 h⁻³ <[u], [v]>                      (all S)
//! ```
//!
//! summed over interior, fold and Dirichlet edges; free edges contribute
//! nothing. Clamped data `(g, Φ)` enters only through the right-hand side.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::RefShape;
use crate::error::{Error, Result};
use crate::mesh::{Edge, EdgeClass, Mesh};
use crate::quadrature::{edge_rule, physical_edge_data, triangle_rule, EdgeRule, TriangleRule};
use crate::sparse::{BlockPattern, CsrMatrix};
use crate::spaces::{physical_shapes_tabulated, PhysicalShape, Space};
use crate::tensor::{frobenius, Vec2};

pub type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConstraint {
    pub point: Vec2,
    pub value: f64,
}

/// Length `h_S` entering the edge penalties `γ0 h_S⁻³` and `γ1 h_S⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyLength {
    /// Smallest `2 |T|^{1/2}` of the neighboring elements.
    #[default]
    ElementSize,
    /// Arclength of the edge.
    EdgeLength,
}

impl fmt::Display for PenaltyLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyLength::ElementSize => "element_size",
            PenaltyLength::EdgeLength => "edge_length",
        })
    }
}

impl FromStr for PenaltyLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "element_size" => Ok(PenaltyLength::ElementSize),
            "edge_length" => Ok(PenaltyLength::EdgeLength),
            _ => Err(Error::Config(format!(
                "unknown penalty length '{s}' (element_size, edge_length)"
            ))),
        }
    }
}

/// Penalty parameters shared by the bilinear form and the dG norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub gamma0: f64,
    pub gamma1: f64,
    pub length: PenaltyLength,
}

impl Default for Penalty {
    fn default() -> Self {
        Self::new(10.0, 10.0)
    }
}

impl Penalty {
    pub fn new(gamma0: f64, gamma1: f64) -> Self {
        Self {
            gamma0,
            gamma1,
            length: PenaltyLength::default(),
        }
    }

    pub fn with_length(mut self, length: PenaltyLength) -> Self {
        self.length = length;
        self
    }

    pub fn edge_h(&self, mesh: &Mesh, edge: &Edge) -> f64 {
        match self.length {
            PenaltyLength::ElementSize => mesh.edge_element_size(edge),
            PenaltyLength::EdgeLength => edge.length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma0 > 0.0 && self.gamma1 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "penalties must be positive, got γ0 = {}, γ1 = {}",
                self.gamma0, self.gamma1
            )))
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub degree: usize,
    pub penalty: Penalty,
    /// Body force `f`; `None` means `f = 0`.
    pub load: Option<ScalarFn>,
    /// Clamped value `g` on Dirichlet edges; `None` means `g = 0`.
    pub dirichlet_value: Option<ScalarFn>,
    /// Clamped gradient `Φ` on Dirichlet edges; `None` means `Φ = 0`.
    pub dirichlet_gradient: Option<VectorFn>,
    pub point_constraint: Option<PointConstraint>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("degree", &self.degree)
            .field("penalty", &self.penalty)
            .field("load", &self.load.is_some())
            .field("dirichlet_value", &self.dirichlet_value.is_some())
            .field("dirichlet_gradient", &self.dirichlet_gradient.is_some())
            .field("point_constraint", &self.point_constraint)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            penalty: Penalty::default(),
            load: None,
            dirichlet_value: None,
            dirichlet_gradient: None,
            point_constraint: None,
        }
    }

    pub fn with_penalties(mut self, gamma0: f64, gamma1: f64) -> Self {
        self.penalty.gamma0 = gamma0;
        self.penalty.gamma1 = gamma1;
        self
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_load(mut self, f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        self.load = Some(Arc::new(f));
        self
    }

    pub fn with_dirichlet_value(mut self, g: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet_value = Some(Arc::new(g));
        self
    }

    pub fn with_dirichlet_gradient(
        mut self,
        phi: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        self.dirichlet_gradient = Some(Arc::new(phi));
        self
    }

    pub fn with_point_constraint(mut self, point: Vec2, value: f64) -> Self {
        self.point_constraint = Some(PointConstraint { point, value });
        self
    }

    fn validate(&self, mesh: &Mesh) -> Result<()> {
        self.penalty.validate()?;
        if self.degree != mesh.geometry_degree() {
            return Err(Error::InvalidProblem(format!(
                "polynomial degree {} differs from geometry degree {}",
                self.degree,
                mesh.geometry_degree()
            )));
        }
        if let Some(c) = &self.point_constraint {
            let p = c.point;
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(Error::InvalidProblem(format!(
                    "constraint point ({}, {}) outside the closed unit square",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

/// Default quadrature: triangle rule exact to degree `2k + 2`, edge rule with `k + 3` points.
pub fn default_rules(degree: usize) -> Result<(TriangleRule, EdgeRule)> {
    Ok((triangle_rule(2 * degree + 2)?, edge_rule(degree + 3)?))
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Local dofs per element; the matrix is block sparse with this block size.
    pub block_size: usize,
    /// Largest diagonal entry before any point constraint was added.
    pub base_max_diagonal: f64,
    pub constraints: Vec<PointConstraint>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.matrix.n
    }
}

/// Reference shapes tabulated at triangle and edge quadrature points.
pub(crate) struct Tabulation {
    pub tri_rule: TriangleRule,
    pub edge_rule: EdgeRule,
    pub volume: Vec<Vec<RefShape>>,
    /// `edge[local_edge][forward as usize][q]`.
    pub edge: [[Vec<Vec<RefShape>>; 2]; 3],
}

impl Tabulation {
    pub fn new(space: &Space<'_>, tri_rule: TriangleRule, edge_rule: EdgeRule) -> Self {
        let basis = &space.basis;
        let volume = tri_rule.points.iter().map(|&p| basis.eval(p)).collect();
        let edge = std::array::from_fn(|e| {
            std::array::from_fn(|forward| {
                edge_rule
                    .points
                    .iter()
                    .map(|&[t]| {
                        let s = if forward == 1 { t } else { 1.0 - t };
                        basis.eval(crate::basis::ref_edge_point(e, s))
                    })
                    .collect()
            })
        });
        Self {
            tri_rule,
            edge_rule,
            volume,
            edge,
        }
    }
}

/// Physical shapes, weights and points at the volume quadrature of one element.
pub(crate) struct VolumeQuadrature {
    pub weights: Vec<f64>,
    pub points: Vec<Vec2>,
    pub shapes: Vec<Vec<PhysicalShape>>,
}

pub(crate) fn volume_quadrature(
    space: &Space<'_>,
    tab: &Tabulation,
    element: usize,
) -> Result<VolumeQuadrature> {
    let n = tab.tri_rule.len();
    let mut vq = VolumeQuadrature {
        weights: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        shapes: Vec::with_capacity(n),
    };
    for (q, (xi, w)) in tab.tri_rule.iter().enumerate() {
        let (map, shapes) = physical_shapes_tabulated(space.mesh, element, xi, &tab.volume[q])?;
        vq.weights.push(w * map.det());
        vq.points.push(map.point);
        vq.shapes.push(shapes);
    }
    Ok(vq)
}

/// Traces of both neighbors at matched edge quadrature points.
pub(crate) struct EdgeQuadrature {
    pub weights: Vec<f64>,
    pub points: Vec<Vec2>,
    /// Unit normal from `plus` into `minus` (outward on the boundary).
    pub normals: Vec<Vec2>,
    pub plus: Vec<Vec<PhysicalShape>>,
    pub minus: Option<Vec<Vec<PhysicalShape>>>,
}

pub(crate) fn edge_quadrature(
    space: &Space<'_>,
    tab: &Tabulation,
    edge_index: usize,
) -> Result<EdgeQuadrature> {
    let mesh = space.mesh;
    let edge = &mesh.edges()[edge_index];
    let data = physical_edge_data(mesh, edge.plus.element, edge.plus.local_edge, &tab.edge_rule)?;
    let trace = |side: crate::mesh::EdgeSide| -> Result<Vec<Vec<PhysicalShape>>> {
        let el = &mesh.elements()[side.element];
        let forward = el.vertices[side.local_edge] == edge.vertices[0];
        let table = &tab.edge[side.local_edge][forward as usize];
        tab.edge_rule
            .points
            .iter()
            .enumerate()
            .map(|(q, &[t])| {
                let xi = mesh.edge_ref_point(edge, side, t);
                physical_shapes_tabulated(mesh, side.element, xi, &table[q]).map(|(_, s)| s)
            })
            .collect()
    };
    Ok(EdgeQuadrature {
        plus: trace(edge.plus)?,
        minus: edge.minus.map(trace).transpose()?,
        weights: data.weights,
        points: data.points,
        normals: data.normals,
    })
}

/// Per-quadrature-point jump/average data of the local (plus ++ minus) basis.
struct EdgeTerms {
    jump: Vec<f64>,
    jump_grad: Vec<[f64; 2]>,
    avg_normal_hess: Vec<[f64; 2]>,
    avg_normal_lap: Vec<f64>,
}

fn edge_terms(eq: &EdgeQuadrature, q: usize) -> EdgeTerms {
    let n = eq.normals[q];
    let plus = &eq.plus[q];
    let minus = eq.minus.as_ref().map(|m| &m[q]);
    let half = if minus.is_some() { 0.5 } else { 1.0 };
    let m = plus.len() + minus.map_or(0, |m| m.len());
    let mut t = EdgeTerms {
        jump: Vec::with_capacity(m),
        jump_grad: Vec::with_capacity(m),
        avg_normal_hess: Vec::with_capacity(m),
        avg_normal_lap: Vec::with_capacity(m),
    };
    let sides = std::iter::once((plus, 1.0)).chain(minus.map(|s| (s, -1.0)));
    for (shapes, sign) in sides {
        for s in shapes {
            t.jump.push(sign * s.value);
            t.jump_grad.push([sign * s.grad[0], sign * s.grad[1]]);
            let nh = s.normal_hess(n);
            t.avg_normal_hess.push([half * nh[0], half * nh[1]]);
            t.avg_normal_lap.push(half * s.normal_laplacian(n));
        }
    }
    t
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

struct LocalEdge {
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    size: usize,
}

fn assemble_edge(
    space: &Space<'_>,
    tab: &Tabulation,
    spec: &ProblemSpec,
    edge_index: usize,
    consistency: bool,
) -> Result<Option<LocalEdge>> {
    let edge = &space.mesh.edges()[edge_index];
    let (gradient_terms, dirichlet) = match edge.class {
        EdgeClass::Interior => (true, false),
        EdgeClass::Interface => (false, false),
        EdgeClass::Dirichlet => (true, true),
        EdgeClass::Free => return Ok(None),
        EdgeClass::Unclassified => return Err(Error::UnclassifiedEdge(edge_index)),
    };
    let eq = edge_quadrature(space, tab, edge_index)?;
    let nb = space.dofs.n_local;
    let size = if eq.minus.is_some() { 2 * nb } else { nb };
    let h = spec.penalty.edge_h(space.mesh, edge);
    let (p0, p1) = (spec.penalty.gamma0 / h.powi(3), spec.penalty.gamma1 / h);
    let mut matrix = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for q in 0..eq.weights.len() {
        let w = eq.weights[q];
        let t = edge_terms(&eq, q);
        for i in 0..size {
            for j in 0..size {
                let mut a = p0 * t.jump[i] * t.jump[j];
                if consistency {
                    a += t.avg_normal_lap[j] * t.jump[i] + t.avg_normal_lap[i] * t.jump[j];
                }
                if gradient_terms {
                    a += p1 * dot(t.jump_grad[i], t.jump_grad[j]);
                    if consistency {
                        a -= dot(t.avg_normal_hess[j], t.jump_grad[i])
                            + dot(t.avg_normal_hess[i], t.jump_grad[j]);
                    }
                }
                matrix[i * size + j] += w * a;
            }
        }
        if dirichlet && consistency {
            let x = eq.points[q];
            let g = spec.dirichlet_value.as_ref().map_or(0.0, |g| g(x));
            let phi = spec
                .dirichlet_gradient
                .as_ref()
                .map_or([0.0, 0.0], |p| {
                    let v = p(x);
                    [v.x, v.y]
                });
            if g != 0.0 || phi != [0.0, 0.0] {
                for i in 0..size {
                    rhs[i] += w
                        * (-dot(t.avg_normal_hess[i], phi)
                            + t.avg_normal_lap[i] * g
                            + p1 * dot(phi, t.jump_grad[i])
                            + p0 * g * t.jump[i]);
                }
            }
        }
    }
    Ok(Some(LocalEdge { matrix, rhs, size }))
}

fn assemble_element(
    space: &Space<'_>,
    tab: &Tabulation,
    spec: &ProblemSpec,
    element: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nb = space.dofs.n_local;
    let vq = volume_quadrature(space, tab, element)?;
    let mut k = vec![0.0; nb * nb];
    let mut f = vec![0.0; nb];
    for q in 0..vq.weights.len() {
        let w = vq.weights[q];
        let shapes = &vq.shapes[q];
        for i in 0..nb {
            for j in i..nb {
                k[i * nb + j] += w * frobenius(&shapes[i].hess, &shapes[j].hess);
            }
        }
        if let Some(load) = &spec.load {
            let fx = load(vq.points[q]);
            for i in 0..nb {
                f[i] += w * fx * shapes[i].value;
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            k[i * nb + j] = k[j * nb + i];
        }
    }
    Ok((k, f))
}

pub(crate) fn block_pattern(mesh: &Mesh, block: usize) -> BlockPattern {
    let mut neighbors = vec![Vec::new(); mesh.n_elements()];
    for edge in mesh.edges() {
        if let Some(minus) = edge.minus {
            neighbors[edge.plus.element].push(minus.element);
            neighbors[minus.element].push(edge.plus.element);
        }
    }
    BlockPattern::new(block, neighbors)
}

/// Assembles `a_h` and `ℓ_h`. Local contributions are computed in
/// parallel and summed in element/edge index order, so the result is
/// bit-identical for any thread count.
pub fn assemble(mesh: &Mesh, spec: &ProblemSpec) -> Result<SparseSystem> {
    assemble_forms(mesh, spec, true)
}

/// Gram matrix of the dG inner product, `‖v‖²_dG = vᵀ M v`: the bilinear
/// form without its consistency terms.
pub fn dg_gram_matrix(mesh: &Mesh, penalty: &Penalty) -> Result<CsrMatrix> {
    let spec = ProblemSpec::new(mesh.geometry_degree()).with_penalty(*penalty);
    Ok(assemble_forms(mesh, &spec, false)?.matrix)
}

fn assemble_forms(mesh: &Mesh, spec: &ProblemSpec, consistency: bool) -> Result<SparseSystem> {
    spec.validate(mesh)?;
    if let Some(i) = mesh
        .edges()
        .iter()
        .position(|e| e.class == EdgeClass::Unclassified)
    {
        return Err(Error::UnclassifiedEdge(i));
    }
    let space = Space::new(mesh)?;
    let (tri, edge) = default_rules(space.degree())?;
    let tab = Tabulation::new(&space, tri, edge);
    let nb = space.dofs.n_local;
    let pattern = block_pattern(mesh, nb);
    let mut matrix = pattern.empty_matrix();
    let mut rhs = vec![0.0; space.n_dofs()];

    let element_parts: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| assemble_element(&space, &tab, spec, t))
        .collect::<Result<_>>()?;
    for (t, (k, f)) in element_parts.into_iter().enumerate() {
        pattern.add_block(&mut matrix, t, t, &k, nb, (0, 0));
        for (r, v) in rhs[space.dofs.range(t)].iter_mut().zip(f) {
            *r += v;
        }
    }

    let edge_parts: Vec<Option<LocalEdge>> = (0..mesh.edges().len())
        .into_par_iter()
        .map(|e| assemble_edge(&space, &tab, spec, e, consistency))
        .collect::<Result<_>>()?;
    for (e, part) in edge_parts.into_iter().enumerate() {
        let Some(local) = part else { continue };
        let edge = &mesh.edges()[e];
        let mut elems = vec![edge.plus.element];
        if let Some(m) = edge.minus {
            elems.push(m.element);
        }
        for (a, &ta) in elems.iter().enumerate() {
            for (b, &tb) in elems.iter().enumerate() {
                pattern.add_block(&mut matrix, ta, tb, &local.matrix, local.size, (a * nb, b * nb));
            }
            for (r, v) in rhs[space.dofs.range(ta)]
                .iter_mut()
                .zip(&local.rhs[a * nb..(a + 1) * nb])
            {
                *r += v;
            }
        }
    }

    let base_max_diagonal = matrix.diagonal().into_iter().fold(0.0, f64::max);
    let mut system = SparseSystem {
        matrix,
        rhs,
        block_size: nb,
        base_max_diagonal,
        constraints: Vec::new(),
    };
    if let (true, Some(c)) = (consistency, spec.point_constraint) {
        system = apply_point_constraint(system, &space, c.point, c.value)?;
    }
    Ok(system)
}

/// Relative weight of the point-constraint penalty against the largest
/// unconstrained diagonal entry.
pub const POINT_PENALTY_SCALE: f64 = 1e8;

/// Enforces `u_h(x0) = value` in the first element containing `x0` by the
/// symmetric penalty `β φ(x0) φ(x0)^T`, `β = 1e8 · max diag`. Re-applying an
/// identical constraint is a no-op; a conflicting value at the same point
/// is an error.
pub fn apply_point_constraint(
    mut system: SparseSystem,
    space: &Space<'_>,
    x0: Vec2,
    value: f64,
) -> Result<SparseSystem> {
    if let Some(existing) = system.constraints.iter().find(|c| c.point == x0) {
        if existing.value == value {
            return Ok(system);
        }
        return Err(Error::InvalidProblem(format!(
            "conflicting constraints at ({}, {}): {} vs {}",
            x0.x, x0.y, existing.value, value
        )));
    }
    let (element, xi) = space.mesh.locate(x0)?;
    let phi = space.basis.values(xi);
    let beta = POINT_PENALTY_SCALE * system.base_max_diagonal;
    let nb = space.dofs.n_local;
    let mut local = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            local[i * nb + j] = beta * phi[i] * phi[j];
        }
    }
    let pattern = block_pattern(space.mesh, nb);
    pattern.add_block(&mut system.matrix, element, element, &local, nb, (0, 0));
    for (r, p) in system.rhs[space.dofs.range(element)].iter_mut().zip(&phi) {
        *r += beta * value * p;
    }
    system.constraints.push(PointConstraint { point: x0, value });
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{DirichletSpec, InterfaceKind, InterfaceSpec};
    use crate::solver::solve_direct;
    use crate::spaces::evaluate_field;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn eigenvalues(m: &CsrMatrix) -> Vec<f64> {
        let d = m.to_dense();
        let dm = DMatrix::from_fn(m.n, m.n, |i, j| d[i][j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn clamped(n: usize, spec: InterfaceSpec) -> Mesh {
        Mesh::structured(n, spec, 2)
            .unwrap()
            .classify_edges(&DirichletSpec::all())
            .unwrap()
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let sys = assemble(&clamped(4, InterfaceSpec::NONE), &ProblemSpec::new(2)).unwrap();
        assert!(sys.rhs.iter().all(|&b| b == 0.0));
        assert_eq!(sys.n(), 192);
    }

    #[test]
    fn two_triangles_spd() {
        let mesh = Mesh::two_triangles(2)
            .unwrap()
            .classify_edges(&DirichletSpec::all())
            .unwrap();
        let sys = assemble(&mesh, &ProblemSpec::new(2)).unwrap();
        assert_eq!(sys.n(), 12);
        assert!(sys.matrix.symmetry_defect() <= 1e-12);
        assert!(eigenvalues(&sys.matrix)[0] > 0.0);
    }

    #[test]
    fn unclassified_boundary_is_rejected() {
        let mesh = Mesh::structured(4, InterfaceSpec::NONE, 2).unwrap();
        assert!(matches!(
            assemble(&mesh, &ProblemSpec::new(2)),
            Err(Error::UnclassifiedEdge(_))
        ));
    }

    #[test]
    fn degree_must_match_geometry() {
        let mesh = clamped(4, InterfaceSpec::NONE);
        assert!(matches!(
            assemble(&mesh, &ProblemSpec::new(3)),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn free_plate_has_rigid_kernel() {
        let mesh = Mesh::structured(4, InterfaceSpec::NONE, 2)
            .unwrap()
            .classify_edges(&DirichletSpec::none())
            .unwrap();
        let sys = assemble(&mesh, &ProblemSpec::new(2)).unwrap();
        let ev = eigenvalues(&sys.matrix);
        let max = ev.last().unwrap().abs();
        let kernel = ev.iter().filter(|v| v.abs() <= 1e-9 * max).count();
        assert_eq!(kernel, 3, "smallest: {:?}", &ev[..5]);
        assert!(ev[3] > 0.0);
    }

    #[test]
    fn rigid_motions_are_annihilated() {
        let mesh = Mesh::structured(4, InterfaceSpec::new(InterfaceKind::Sine, 2), 2)
            .unwrap()
            .classify_edges(&DirichletSpec::none())
            .unwrap();
        let space = Space::new(&mesh).unwrap();
        let sys = assemble(&mesh, &ProblemSpec::new(2)).unwrap();
        let v = space.interpolate(|p| 1.0 - 2.0 * p.x + 0.5 * p.y);
        let av = sys.matrix.mul(&v);
        let worst = av.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(worst <= 1e-8 * sys.matrix.max_abs(), "{worst}");
    }

    #[test]
    fn interface_blocks_ignore_gradient_penalty() {
        let mesh = clamped(4, InterfaceSpec::new(InterfaceKind::Quadratic, 2));
        let a = assemble(&mesh, &ProblemSpec::new(2).with_penalties(10.0, 10.0)).unwrap();
        let b = assemble(&mesh, &ProblemSpec::new(2).with_penalties(10.0, 3.0)).unwrap();
        let nb = a.block_size;
        let block_changed = |p: usize, m: usize| {
            (0..nb).any(|i| (0..nb).any(|j| a.matrix.get(p * nb + i, m * nb + j) != b.matrix.get(p * nb + i, m * nb + j)))
        };
        for edge in mesh.edges() {
            let Some(minus) = edge.minus else { continue };
            let changed = block_changed(edge.plus.element, minus.element);
            assert_eq!(changed, edge.class == EdgeClass::Interior, "{:?}", edge.class);
        }
    }

    #[test]
    fn coercive_on_coarse_meshes() {
        let specs = [
            InterfaceSpec::NONE,
            InterfaceSpec::new(InterfaceKind::StraightX05, 2),
            InterfaceSpec::new(InterfaceKind::Sine, 1),
            InterfaceSpec::new(InterfaceKind::Sine, 2),
        ];
        for spec in specs {
            let sys = assemble(&clamped(4, spec), &ProblemSpec::new(2)).unwrap();
            assert!(sys.matrix.symmetry_defect() <= 1e-12);
            assert!(eigenvalues(&sys.matrix)[0] > 0.0, "{spec:?}");
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let mesh = clamped(4, InterfaceSpec::new(InterfaceKind::Sine, 2));
        let spec = ProblemSpec::new(2).with_load(|p| 100.0 + p.x);
        let a = assemble(&mesh, &spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| assemble(&mesh, &spec).unwrap());
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn point_constraint_pins_value() {
        let mesh = clamped(4, InterfaceSpec::new(InterfaceKind::Quadratic, 2));
        let space = Space::new(&mesh).unwrap();
        let x0 = Vec2::new(0.3, 0.5);
        let spec = ProblemSpec::new(2)
            .with_load(|_| 100.0)
            .with_point_constraint(x0, 0.3);
        let sys = assemble(&mesh, &spec).unwrap();
        let (u, _) = solve_direct(&sys.matrix, &sys.rhs).unwrap();
        let (t, xi) = mesh.locate(x0).unwrap();
        let val = evaluate_field(&space, &u, t, xi).unwrap().value;
        assert!((val - 0.3).abs() <= 1e-6, "{val}");

        let again = apply_point_constraint(sys.clone(), &space, x0, 0.3).unwrap();
        assert_eq!(again.matrix, sys.matrix);
        assert!(matches!(
            apply_point_constraint(sys, &space, x0, 0.2),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn constraint_outside_square_is_rejected() {
        let mesh = clamped(4, InterfaceSpec::NONE);
        let spec = ProblemSpec::new(2).with_point_constraint(Vec2::new(1.5, 0.5), 0.0);
        assert!(matches!(assemble(&mesh, &spec), Err(Error::InvalidProblem(_))));
    }
}
