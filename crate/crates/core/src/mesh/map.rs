use super::Mesh;
use crate::error::{Error, Result};
use crate::tensor::{Mat2, Tensor3, Tensor4, Vec2, ZERO3, ZERO4};

/// Derivatives of an element map `ψ_T` at one reference point.
///
/// `jacobian[(p, a)] = ∂ψ_p/∂ξ_a`, `second[p][a][b] = ∂²ψ_p/∂ξ_a∂ξ_b`, and
/// likewise for `third`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDerivatives {
    pub point: Vec2,
    pub jacobian: Mat2,
    pub second: Tensor3,
    pub third: Tensor4,
    pub affine: bool,
}

impl MapDerivatives {
    pub fn det(&self) -> f64 {
        self.jacobian.determinant()
    }
}

impl Mesh {
    /// Evaluates `ψ_T` and its derivatives up to order three. Affine elements
    /// use the vertex map only and report exactly vanishing higher derivatives.
    pub fn map_derivatives(&self, element: usize, xi: [f64; 2]) -> Result<MapDerivatives> {
        debug_assert!(
            xi[0] >= -1e-12 && xi[1] >= -1e-12 && xi[0] + xi[1] <= 1.0 + 1e-12,
            "reference point {xi:?} outside the reference triangle"
        );
        let d = self.eval_map(element, xi);
        let det = d.det();
        if !(det > 0.0) {
            return Err(Error::DegenerateGeometry { element, det });
        }
        Ok(d)
    }

    /// Map derivatives without range or orientation checks; the polynomial
    /// map is evaluated as is outside the reference triangle.
    fn eval_map(&self, element: usize, xi: [f64; 2]) -> MapDerivatives {
        let el = &self.elements[element];
        if el.curved {
            let shapes = self.geometry_basis.eval(xi);
            let mut point = Vec2::zeros();
            let mut jacobian = Mat2::zeros();
            let mut second = ZERO3;
            let mut third = ZERO4;
            for (s, &id) in shapes.iter().zip(&el.nodes) {
                let x = self.nodes[id];
                point += s.value * x;
                for p in 0..2 {
                    for a in 0..2 {
                        jacobian[(p, a)] += x[p] * s.grad[a];
                        for b in 0..2 {
                            second[p][a][b] += x[p] * s.hess[a][b];
                            for c in 0..2 {
                                third[p][a][b][c] += x[p] * s.third[a][b][c];
                            }
                        }
                    }
                }
            }
            MapDerivatives {
                point,
                jacobian,
                second,
                third,
                affine: false,
            }
        } else {
            let [a, b, c] = el.vertices.map(|v| self.topology.vertices[v]);
            let jacobian = Mat2::from_columns(&[b - a, c - a]);
            MapDerivatives {
                point: a + jacobian * Vec2::new(xi[0], xi[1]),
                jacobian,
                second: ZERO3,
                third: ZERO4,
                affine: true,
            }
        }
    }

    /// Physical position of a reference point.
    pub fn map_point(&self, element: usize, xi: [f64; 2]) -> Vec2 {
        let el = &self.elements[element];
        if el.curved {
            self.geometry_basis
                .values(xi)
                .iter()
                .zip(&el.nodes)
                .map(|(v, &id)| *v * self.nodes[id])
                .sum()
        } else {
            let [a, b, c] = el.vertices.map(|v| self.topology.vertices[v]);
            a + xi[0] * (b - a) + xi[1] * (c - a)
        }
    }

    /// Newton inversion of `ψ_T`. Returns `None` when the iteration does not
    /// converge inside a slightly enlarged reference triangle.
    pub fn inverse_map(&self, element: usize, x: Vec2) -> Option<[f64; 2]> {
        let mut xi = [1.0 / 3.0, 1.0 / 3.0];
        for _ in 0..50 {
            let d = self.eval_map(element, xi);
            let r = d.point - x;
            let step = d.jacobian.try_inverse()? * r;
            xi = [xi[0] - step.x, xi[1] - step.y];
            if !xi.iter().all(|v| v.is_finite()) || xi[0] < -1.0 || xi[1] < -1.0 || xi[0] + xi[1] > 2.0 {
                return None;
            }
            if step.norm() < 1e-15 {
                break;
            }
        }
        let residual = (self.eval_map(element, xi).point - x).norm();
        (residual < 1e-11).then_some(xi)
    }

    /// Locates a physical point: the first element (by index) whose reference
    /// preimage lies in the closed reference triangle.
    pub fn locate(&self, x: Vec2) -> Result<(usize, [f64; 2])> {
        const TOL: f64 = 1e-10;
        for t in 0..self.elements.len() {
            let p = self.elements[t].vertices.map(|v| self.topology.vertices[v]);
            let (lo, hi) = p.iter().fold(
                (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)),
                |(lo, hi), q| (lo.inf(q), hi.sup(q)),
            );
            // Curved edges bulge at most a fraction of the element size.
            let pad = 0.25 * (hi - lo).max();
            if x.x < lo.x - pad || x.x > hi.x + pad || x.y < lo.y - pad || x.y > hi.y + pad {
                continue;
            }
            if let Some(xi) = self.inverse_map(t, x) {
                if xi[0] >= -TOL && xi[1] >= -TOL && xi[0] + xi[1] <= 1.0 + TOL {
                    return Ok((t, clamp_ref(xi)));
                }
            }
        }
        Err(Error::PointOutsideMesh(x.x, x.y))
    }
}

fn clamp_ref(xi: [f64; 2]) -> [f64; 2] {
    let x = xi[0].max(0.0);
    let y = xi[1].max(0.0);
    let s = x + y;
    if s > 1.0 {
        [x / s, y / s]
    } else {
        [x, y]
    }
}
