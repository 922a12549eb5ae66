//! Curved triangulations of the unit square with an optional fitted fold.
//!
//! Elements are images of the reference triangle under a degree-`k` map
//! defined by Lagrange geometry nodes. Only elements touching the fold carry
//! curved edges; everything else is affine.

mod boundary;
mod build;
mod interface;
mod map;

pub use boundary::{BoundarySegment, DirichletSpec, Side};
pub use interface::{InterfaceKind, InterfaceSpec};
pub use map::MapDerivatives;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::basis::{dim_polynomials, ref_edge_point, LagrangeBasis};
use crate::error::{Error, Result};
use crate::quadrature::{edge_rule, physical_edge_data, triangle_rule};
use crate::tensor::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeClass {
    Interior,
    Interface,
    Dirichlet,
    Free,
    /// Boundary edge that has not been through [`Mesh::classify_edges`].
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub element: usize,
    pub local_edge: usize,
}

/// A mesh edge. `vertices` follow the local orientation of the `plus`
/// element, so the unit normal points from `plus` into `minus` (outward on
/// the boundary, from the left subdomain into the right one on the fold).
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub plus: EdgeSide,
    pub minus: Option<EdgeSide>,
    pub class: EdgeClass,
    /// Arclength `h_S`.
    pub length: f64,
    /// Interior geometry nodes ordered from `vertices[0]` to `vertices[1]`.
    pub nodes: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Whether the edge enters the discrete bilinear form at all.
    pub fn is_active(&self) -> bool {
        !matches!(self.class, EdgeClass::Free | EdgeClass::Unclassified)
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    /// Counter-clockwise vertex indices.
    pub vertices: [usize; 3],
    /// Geometry node indices in reference-node order.
    pub nodes: Vec<usize>,
    /// Edge index of each local edge `v_e -> v_{e+1}`.
    pub edges: [usize; 3],
    pub curved: bool,
    /// 0 left of the fold (or everywhere without a fold), 1 right of it.
    pub subdomain: usize,
}

/// Plain connectivity from which a [`Mesh`] is assembled.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    /// Sorted vertex pairs lying on the fitted fold.
    pub interface_edges: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    topology: Topology,
    nodes: Vec<Vec2>,
    elements: Vec<Element>,
    edges: Vec<Edge>,
    interface: InterfaceSpec,
    dirichlet: Option<DirichletSpec>,
    level: usize,
    base_n: usize,
    geometry_basis: LagrangeBasis,
}

pub(crate) fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub(crate) fn from_topology(
        topology: Topology,
        interface: InterfaceSpec,
        geometry_degree: usize,
        level: usize,
        base_n: usize,
    ) -> Result<Mesh> {
        let geometry_basis = LagrangeBasis::new(geometry_degree)?;
        let k = geometry_degree;

        // Edges, in order of first appearance.
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut elements: Vec<Element> = Vec::with_capacity(topology.triangles.len());
        for (t, tri) in topology.triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (e, slot) in local.iter_mut().enumerate() {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                let side = EdgeSide {
                    element: t,
                    local_edge: e,
                };
                let key = sorted_pair(a, b);
                *slot = match edge_index.get(&key) {
                    Some(&idx) => {
                        let edge = &mut edges[idx];
                        if edge.minus.is_some() {
                            return Err(Error::InvalidMeshParameters(format!(
                                "edge ({a}, {b}) shared by more than two elements"
                            )));
                        }
                        edge.minus = Some(side);
                        idx
                    }
                    None => {
                        let idx = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            plus: side,
                            minus: None,
                            class: EdgeClass::Unclassified,
                            length: 0.0,
                            nodes: Vec::new(),
                        });
                        edge_index.insert(key, idx);
                        idx
                    }
                };
            }
            elements.push(Element {
                vertices: *tri,
                nodes: Vec::new(),
                edges: local,
                curved: false,
                subdomain: 0,
            });
        }

        for edge in edges.iter_mut() {
            let key = sorted_pair(edge.vertices[0], edge.vertices[1]);
            let on_fold = topology.interface_edges.contains(&key);
            edge.class = match (edge.minus.is_some(), on_fold) {
                (true, true) => EdgeClass::Interface,
                (true, false) => EdgeClass::Interior,
                (false, false) => EdgeClass::Unclassified,
                (false, true) => {
                    return Err(Error::InvalidMeshParameters(
                        "fold edge lies on the boundary".into(),
                    ))
                }
            };
        }

        label_subdomains(&mut elements, &edges, &topology.vertices, !interface.is_none())?;

        // Orient fold edges from the left subdomain into the right one.
        for edge in edges.iter_mut() {
            if edge.class != EdgeClass::Interface {
                continue;
            }
            let minus = edge.minus.expect("interface edges are interior");
            let (sp, sm) = (
                elements[edge.plus.element].subdomain,
                elements[minus.element].subdomain,
            );
            if sp == sm {
                return Err(Error::InvalidMeshParameters(
                    "fold does not separate the domain".into(),
                ));
            }
            if sp == 1 {
                edge.minus = Some(edge.plus);
                edge.plus = minus;
                edge.vertices.swap(0, 1);
            }
        }

        // Geometry nodes: vertices, then edge nodes, then face nodes.
        let mut nodes: Vec<Vec2> = topology.vertices.clone();
        for edge in edges.iter_mut() {
            let a = topology.vertices[edge.vertices[0]];
            let b = topology.vertices[edge.vertices[1]];
            let curved = edge.class == EdgeClass::Interface && interface.nodes_on_curve();
            for i in 1..k {
                let t = i as f64 / k as f64;
                let p = if curved {
                    let y = a.y + t * (b.y - a.y);
                    Vec2::new(interface.curve_x(y).expect("fold present"), y)
                } else {
                    a + t * (b - a)
                };
                edge.nodes.push(nodes.len());
                nodes.push(p);
            }
        }
        for el in elements.iter_mut() {
            let mut ids: Vec<usize> = el.vertices.to_vec();
            let mut curved = false;
            for e in 0..3 {
                let edge = &edges[el.edges[e]];
                let forward = edge.vertices[0] == el.vertices[e];
                let mut edge_nodes = edge.nodes.clone();
                if !forward {
                    edge_nodes.reverse();
                }
                let a = nodes[el.vertices[e]];
                let b = nodes[el.vertices[(e + 1) % 3]];
                for (i, &id) in edge_nodes.iter().enumerate() {
                    let chord = a + ((i + 1) as f64 / k as f64) * (b - a);
                    if (nodes[id] - chord).norm() > 1e-14 * (b - a).norm() {
                        curved = true;
                    }
                }
                ids.extend(edge_nodes);
            }
            if k == 3 {
                // Centroid node that reproduces quadratic maps exactly.
                let edge_sum: Vec2 = ids[3..9].iter().map(|&i| nodes[i]).sum();
                let vertex_sum: Vec2 = ids[0..3].iter().map(|&i| nodes[i]).sum();
                ids.push(nodes.len());
                nodes.push(edge_sum / 4.0 - vertex_sum / 6.0);
            }
            debug_assert_eq!(ids.len(), dim_polynomials(k));
            el.nodes = ids;
            el.curved = curved;
        }

        let mut mesh = Mesh {
            topology,
            nodes,
            elements,
            edges,
            interface,
            dirichlet: None,
            level,
            base_n,
            geometry_basis,
        };
        mesh.check_orientation()?;
        let rule = edge_rule(k + 3)?;
        for i in 0..mesh.edges.len() {
            let plus = mesh.edges[i].plus;
            let data = physical_edge_data(&mesh, plus.element, plus.local_edge, &rule)?;
            mesh.edges[i].length = data.weights.iter().sum();
        }
        Ok(mesh)
    }

    fn check_orientation(&self) -> Result<()> {
        let k = self.geometry_degree();
        let rule = triangle_rule(2 * k + 2)?;
        for t in 0..self.elements.len() {
            let extra = self.geometry_basis.nodes().iter().copied();
            for xi in rule.points.iter().copied().chain(extra) {
                self.map_derivatives(t, xi)?;
            }
        }
        Ok(())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    pub fn geometry_degree(&self) -> usize {
        self.geometry_basis.degree()
    }

    pub fn geometry_basis(&self) -> &LagrangeBasis {
        &self.geometry_basis
    }

    pub fn interface(&self) -> InterfaceSpec {
        self.interface
    }

    pub fn dirichlet(&self) -> Option<&DirichletSpec> {
        self.dirichlet.as_ref()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.topology.vertices
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_nodes(&self, element: usize) -> impl Iterator<Item = Vec2> + '_ {
        self.elements[element].nodes.iter().map(|&i| self.nodes[i])
    }

    /// Reference coordinates on `side`'s element of the edge point with
    /// parameter `t` measured from `edge.vertices[0]`.
    pub fn edge_ref_point(&self, edge: &Edge, side: EdgeSide, t: f64) -> [f64; 2] {
        let el = &self.elements[side.element];
        let forward = el.vertices[side.local_edge] == edge.vertices[0];
        ref_edge_point(side.local_edge, if forward { t } else { 1.0 - t })
    }

    /// Largest diameter of the straight triangles spanned by the vertices.
    pub fn h_max(&self) -> f64 {
        self.elements
            .iter()
            .map(|el| {
                let p = el.vertices.map(|v| self.topology.vertices[v]);
                (0..3)
                    .map(|i| (p[(i + 1) % 3] - p[i]).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest circumradius-to-inradius ratio over the straight triangles.
    pub fn shape_regularity(&self) -> f64 {
        self.elements
            .iter()
            .map(|el| {
                let p = el.vertices.map(|v| self.topology.vertices[v]);
                let a = (p[1] - p[0]).norm();
                let b = (p[2] - p[1]).norm();
                let c = (p[0] - p[2]).norm();
                let area = 0.5 * (p[1] - p[0]).perp(&(p[2] - p[0])).abs();
                let circum = a * b * c / (4.0 * area);
                let inr = 2.0 * area / (a + b + c);
                circum / inr
            })
            .fold(0.0, f64::max)
    }

    /// Fold edges ordered bottom to top. Errors if they do not form a single
    /// y-monotone chain from `y = 0` to `y = 1`.
    pub fn interface_chain(&self) -> Result<Vec<usize>> {
        let mut chain: Vec<usize> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.class == EdgeClass::Interface)
            .map(|(i, _)| i)
            .collect();
        if chain.is_empty() {
            return Ok(chain);
        }
        let y = |v: usize| self.topology.vertices[v].y;
        let low = |e: &Edge| y(e.vertices[0]).min(y(e.vertices[1]));
        chain.sort_by(|&a, &b| low(&self.edges[a]).total_cmp(&low(&self.edges[b])));
        let bottom_top = |e: &Edge| {
            let [a, b] = e.vertices;
            if y(a) < y(b) {
                (a, b)
            } else {
                (b, a)
            }
        };
        let (first, _) = bottom_top(&self.edges[chain[0]]);
        let (_, last) = bottom_top(&self.edges[*chain.last().unwrap()]);
        if y(first).abs() > 1e-14 || (y(last) - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidMeshParameters(
                "fold chain does not connect y = 0 to y = 1".into(),
            ));
        }
        for w in chain.windows(2) {
            let (_, top) = bottom_top(&self.edges[w[0]]);
            let (bottom, _) = bottom_top(&self.edges[w[1]]);
            if top != bottom {
                return Err(Error::InvalidMeshParameters("fold chain is broken".into()));
            }
        }
        Ok(chain)
    }

    /// Whether any element of the given subdomain touches a Dirichlet edge.
    pub fn subdomain_has_dirichlet_edge(&self, subdomain: usize) -> bool {
        self.edges.iter().any(|e| {
            e.class == EdgeClass::Dirichlet && self.elements[e.plus.element].subdomain == subdomain
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.elements.iter().map(|e| e.subdomain + 1).max().unwrap_or(0)
    }

    /// Straight-triangle area of an element.
    pub fn straight_area(&self, element: usize) -> f64 {
        let p = self.elements[element]
            .vertices
            .map(|v| self.topology.vertices[v]);
        0.5 * (p[1] - p[0]).perp(&(p[2] - p[0]))
    }

    /// `2 |T|^{1/2}` of the straight triangle; equals the diameter of the
    /// right isosceles cells of the structured grid.
    pub fn element_size(&self, element: usize) -> f64 {
        2.0 * self.straight_area(element).sqrt()
    }

    /// Smallest [`Mesh::element_size`] among the elements sharing `edge`.
    pub fn edge_element_size(&self, edge: &Edge) -> f64 {
        let plus = self.element_size(edge.plus.element);
        edge.minus
            .map_or(plus, |m| plus.min(self.element_size(m.element)))
    }
}

/// Flood fill across all non-fold interior edges. The component holding the
/// leftmost element is subdomain 0.
fn label_subdomains(
    elements: &mut [Element],
    edges: &[Edge],
    vertices: &[Vec2],
    has_fold: bool,
) -> Result<()> {
    let n = elements.len();
    let mut label = vec![usize::MAX; n];
    let mut components = 0;
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([seed]);
        label[seed] = components;
        while let Some(t) = queue.pop_front() {
            for &ei in &elements[t].edges {
                let edge = &edges[ei];
                if edge.class == EdgeClass::Interface {
                    continue;
                }
                if let Some(minus) = edge.minus {
                    let other = if minus.element == t {
                        edge.plus.element
                    } else {
                        minus.element
                    };
                    if label[other] == usize::MAX {
                        label[other] = components;
                        queue.push_back(other);
                    }
                }
            }
        }
        components += 1;
    }
    let expected = if has_fold { 2 } else { 1 };
    if components != expected {
        return Err(Error::InvalidMeshParameters(format!(
            "fold splits the mesh into {components} parts, expected {expected}"
        )));
    }
    if components == 2 {
        let centroid_x = |t: usize| -> f64 {
            elements[t].vertices.iter().map(|&v| vertices[v].x).sum::<f64>() / 3.0
        };
        let leftmost = (0..n)
            .min_by(|&a, &b| centroid_x(a).total_cmp(&centroid_x(b)))
            .expect("non-empty mesh");
        let left_label = label[leftmost];
        for l in label.iter_mut() {
            *l = usize::from(*l != left_label);
        }
    }
    for (el, l) in elements.iter_mut().zip(label) {
        el.subdomain = l;
    }
    Ok(())
}
