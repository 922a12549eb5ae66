use serde::{Deserialize, Serialize};

use super::{EdgeClass, Mesh};
use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `y = 0`, parametrized by `x`.
    Bottom,
    /// `x = 1`, parametrized by `y`.
    Right,
    /// `y = 1`, parametrized by `x`.
    Top,
    /// `x = 0`, parametrized by `y`.
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    fn contains(self, x: f64, y: f64) -> bool {
        match self {
            Side::Bottom => y.abs() <= TOL,
            Side::Top => (y - 1.0).abs() <= TOL,
            Side::Left => x.abs() <= TOL,
            Side::Right => (x - 1.0).abs() <= TOL,
        }
    }

    fn param(self, x: f64, y: f64) -> f64 {
        match self {
            Side::Bottom | Side::Top => x,
            Side::Left | Side::Right => y,
        }
    }
}

/// Closed axis-aligned piece `{from <= s <= to}` of one side of the square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub side: Side,
    pub from: f64,
    pub to: f64,
}

/// Union of boundary segments on which clamped data is imposed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub segments: Vec<BoundarySegment>,
}

impl DirichletSpec {
    pub fn all() -> Self {
        Self::sides(&Side::ALL)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn sides(sides: &[Side]) -> Self {
        Self {
            segments: sides
                .iter()
                .map(|&side| BoundarySegment {
                    side,
                    from: 0.0,
                    to: 1.0,
                })
                .collect(),
        }
    }

    /// `{x >= x0} ∩ ∂Ω`.
    pub fn x_at_least(x0: f64) -> Self {
        let mut segments = vec![
            BoundarySegment {
                side: Side::Bottom,
                from: x0,
                to: 1.0,
            },
            BoundarySegment {
                side: Side::Right,
                from: 0.0,
                to: 1.0,
            },
            BoundarySegment {
                side: Side::Top,
                from: x0,
                to: 1.0,
            },
        ];
        if x0 <= 0.0 {
            segments.push(BoundarySegment {
                side: Side::Left,
                from: 0.0,
                to: 1.0,
            });
        }
        Self { segments }
    }

    /// Whether a boundary point lies on one of the segments.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.segments.iter().any(|s| {
            let p = s.side.param(x, y);
            s.side.contains(x, y) && p >= s.from - TOL && p <= s.to + TOL
        })
    }
}

impl Mesh {
    /// Tags boundary edges DIRICHLET or FREE. Segments must start and end at
    /// edge endpoints; an edge only partially covered is an error.
    pub fn classify_edges(mut self, spec: &DirichletSpec) -> Result<Mesh> {
        for i in 0..self.edges.len() {
            if !self.edges[i].is_boundary() {
                continue;
            }
            let [a, b] = self.edges[i].vertices.map(|v| self.topology.vertices[v]);
            let side = Side::ALL
                .into_iter()
                .find(|s| s.contains(a.x, a.y) && s.contains(b.x, b.y))
                .ok_or_else(|| {
                    Error::InvalidMeshParameters(format!("boundary edge {i} is not on a side"))
                })?;
            let (p0, p1) = {
                let (p, q) = (side.param(a.x, a.y), side.param(b.x, b.y));
                (p.min(q), p.max(q))
            };
            let mut covered = false;
            for seg in spec.segments.iter().filter(|s| s.side == side) {
                let overlap = p1.min(seg.to) - p0.max(seg.from);
                if overlap <= TOL {
                    continue;
                }
                if p0 >= seg.from - TOL && p1 <= seg.to + TOL {
                    covered = true;
                } else {
                    return Err(Error::DirichletMismatch(format!(
                        "segment {seg:?} cuts boundary edge [{p0}, {p1}] on {side:?}"
                    )));
                }
            }
            self.edges[i].class = if covered {
                EdgeClass::Dirichlet
            } else {
                EdgeClass::Free
            };
        }
        for s in 0..self.n_subdomains() {
            if !self.subdomain_has_dirichlet_edge(s) {
                log::warn!("subdomain {s} has no Dirichlet edge; the dG norm is only a seminorm there");
            }
        }
        self.dirichlet = Some(spec.clone());
        Ok(self)
    }

    pub fn count_class(&self, class: EdgeClass) -> usize {
        self.edges.iter().filter(|e| e.class == class).count()
    }
}
