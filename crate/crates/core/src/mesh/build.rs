use std::collections::{BTreeSet, HashMap};

use super::{sorted_pair, InterfaceSpec, Mesh, Topology};
use crate::error::{Error, Result};
use crate::tensor::Vec2;

impl Mesh {
    /// `n x n` grid on the unit square, each cell split by its lower-left to
    /// upper-right diagonal. With a fold, the vertex column nearest the mean
    /// position of the curve is moved horizontally onto it.
    pub fn structured(n: usize, interface: InterfaceSpec, geometry_degree: usize) -> Result<Mesh> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidMeshParameters(format!(
                "grid subdivisions must be even and at least 2, got {n}"
            )));
        }
        if !(1..=2).contains(&interface.fit_order) {
            return Err(Error::InvalidMeshParameters(format!(
                "fit order must be 1 or 2, got {}",
                interface.fit_order
            )));
        }
        Self::grid(n, interface, geometry_degree)
    }

    /// The unit square split into two triangles by its diagonal.
    pub fn two_triangles(geometry_degree: usize) -> Result<Mesh> {
        Self::grid(1, InterfaceSpec::NONE, geometry_degree)
    }

    fn grid(n: usize, interface: InterfaceSpec, geometry_degree: usize) -> Result<Mesh> {
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let fold_column = interface
            .mean_x()
            .map(|m| ((m * n as f64).round() as usize).clamp(1, n - 1));

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let y = j as f64 * h;
                let x = match (fold_column, interface.curve_x(y)) {
                    (Some(c), Some(cx)) if c == i => cx,
                    _ => i as f64 * h,
                };
                vertices.push(Vec2::new(x, y));
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let interface_edges: BTreeSet<(usize, usize)> = match fold_column {
            Some(c) => (0..n).map(|j| sorted_pair(id(c, j), id(c, j + 1))).collect(),
            None => BTreeSet::new(),
        };
        let topology = Topology {
            vertices,
            triangles,
            interface_edges,
        };
        Mesh::from_topology(topology, interface, geometry_degree, 0, n)
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints. New fold vertices are projected horizontally onto the
    /// curve; all other new vertices are chord midpoints. A stored Dirichlet
    /// description is re-applied to the refined mesh.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let old = &self.topology;
        let mut vertices = old.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut interface_edges = BTreeSet::new();
        let mut triangles = Vec::with_capacity(4 * old.triangles.len());

        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec2>| -> usize {
            let key = sorted_pair(a, b);
            *midpoint.entry(key).or_insert_with(|| {
                let m = 0.5 * (vertices[a] + vertices[b]);
                let p = if old.interface_edges.contains(&key) {
                    Vec2::new(self.interface.curve_x(m.y).expect("fold present"), m.y)
                } else {
                    m
                };
                vertices.push(p);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &old.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        for &(a, b) in &old.interface_edges {
            let m = midpoint[&(a, b)];
            interface_edges.insert(sorted_pair(a, m));
            interface_edges.insert(sorted_pair(m, b));
        }
        let topology = Topology {
            vertices,
            triangles,
            interface_edges,
        };
        let mesh = Mesh::from_topology(
            topology,
            self.interface,
            self.geometry_degree(),
            self.level + 1,
            self.base_n,
        )?;
        match &self.dirichlet {
            Some(spec) => mesh.classify_edges(spec),
            None => Ok(mesh),
        }
    }

    /// Level-0 mesh followed by `levels` refinements.
    pub fn refined(
        n: usize,
        interface: InterfaceSpec,
        geometry_degree: usize,
        levels: usize,
    ) -> Result<Mesh> {
        let mut mesh = Mesh::structured(n, interface, geometry_degree)?;
        for _ in 0..levels {
            mesh = mesh.refine_uniform()?;
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::dim_polynomials;
    use crate::mesh::{EdgeClass, InterfaceKind};

    fn sine(m: u8) -> InterfaceSpec {
        InterfaceSpec::new(InterfaceKind::Sine, m)
    }

    #[test]
    fn base_mesh_counts() {
        let mesh = Mesh::structured(4, InterfaceSpec::NONE, 2).unwrap();
        assert_eq!(mesh.n_elements(), 32);
        assert_eq!(mesh.n_elements() * dim_polynomials(2), 192);
        assert!(mesh.elements().iter().all(|e| !e.curved));
        let boundary = mesh.edges().iter().filter(|e| e.is_boundary()).count();
        assert_eq!(boundary, 16);
    }

    #[test]
    fn two_triangle_square() {
        let mesh = Mesh::two_triangles(2).unwrap();
        assert_eq!(mesh.n_elements(), 2);
        assert_eq!(mesh.edges().len(), 5);
        assert!((mesh.h_max() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_or_tiny_grids() {
        assert!(Mesh::structured(3, InterfaceSpec::NONE, 2).is_err());
        assert!(Mesh::structured(0, InterfaceSpec::NONE, 2).is_err());
    }

    #[test]
    fn straight_fold_moves_nothing() {
        let plain = Mesh::structured(4, InterfaceSpec::NONE, 2).unwrap();
        let fold = Mesh::structured(4, InterfaceSpec::new(InterfaceKind::StraightX05, 2), 2).unwrap();
        for (a, b) in plain.vertices().iter().zip(fold.vertices()) {
            assert_eq!(a, b);
        }
        let chain = fold.interface_chain().unwrap();
        assert_eq!(chain.len(), 4);
        for &e in &chain {
            for &v in &fold.edges()[e].vertices {
                assert_eq!(fold.vertices()[v].x, 0.5);
            }
        }
        assert!(fold.elements().iter().all(|e| !e.curved));
    }

    #[test]
    fn sine_nodes_lie_on_curve() {
        let spec = sine(2);
        let mesh = Mesh::structured(4, spec, 2).unwrap();
        let chain = mesh.interface_chain().unwrap();
        assert_eq!(chain.len(), 4);
        for &e in &chain {
            let edge = &mesh.edges()[e];
            let ids = edge.vertices.iter().chain(&edge.nodes);
            for &id in ids {
                let p = mesh.nodes()[id];
                assert!((p.x - spec.curve_x(p.y).unwrap()).abs() <= 1e-14);
            }
        }
        assert!(mesh.elements().iter().any(|e| e.curved));
        // Curved elements are exactly those touching the fold.
        for (t, el) in mesh.elements().iter().enumerate() {
            let touches = el
                .edges
                .iter()
                .any(|&e| mesh.edges()[e].class == EdgeClass::Interface);
            assert_eq!(el.curved, touches, "element {t}");
        }
    }

    #[test]
    fn fold_orientation_points_into_right_subdomain() {
        let mesh = Mesh::structured(4, InterfaceSpec::new(InterfaceKind::Quadratic, 2), 2).unwrap();
        for edge in mesh.edges().iter().filter(|e| e.class == EdgeClass::Interface) {
            let plus = &mesh.elements()[edge.plus.element];
            let minus = &mesh.elements()[edge.minus.unwrap().element];
            assert_eq!(plus.subdomain, 0);
            assert_eq!(minus.subdomain, 1);
        }
    }

    #[test]
    fn refinement_quadruples() {
        let mesh = Mesh::structured(4, sine(2), 2).unwrap();
        let fine = mesh.refine_uniform().unwrap();
        assert_eq!(fine.n_elements(), 128);
        assert_eq!(fine.level(), 1);
        assert_eq!(fine.refine_uniform().unwrap().n_elements() * 6, 3072);
        assert_eq!(fine.interface_chain().unwrap().len(), 8);
    }

    #[test]
    fn shape_regularity_bounded_across_levels() {
        for spec in [InterfaceSpec::NONE, sine(1), sine(2), InterfaceSpec::new(InterfaceKind::Quadratic, 2)] {
            let mut mesh = Mesh::structured(4, spec, 2).unwrap();
            for _ in 0..6 {
                assert!(mesh.shape_regularity() <= 10.0, "{:?}: {}", spec, mesh.shape_regularity());
                mesh = mesh.refine_uniform().unwrap();
            }
        }
    }

    #[test]
    fn h_max_halves() {
        let mut mesh = Mesh::structured(4, sine(2), 2).unwrap();
        for _ in 0..4 {
            let fine = mesh.refine_uniform().unwrap();
            let ratio = mesh.h_max() / fine.h_max();
            assert!((1.9..=2.1).contains(&ratio), "ratio {ratio}");
            mesh = fine;
        }
    }
}
