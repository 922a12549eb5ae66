//! Discontinuous isoparametric spaces `V_h^k`: `v|_T = v̂ ∘ ψ_T^{-1}` with
//! `v̂` a degree-`k` Lagrange polynomial, and chain-rule transport of
//! derivatives up to order three.

use crate::basis::{dim_polynomials, LagrangeBasis, RefShape};
use crate::error::{Error, Result};
use crate::mesh::{MapDerivatives, Mesh};
use crate::tensor::{Mat2, Tensor3, Tensor4, Vec2, ZERO3, ZERO4};

/// Derivatives of `ψ_T^{-1}` at the image point.
///
/// `jacobian[(a, i)] = ∂ξ_a/∂x_i`, `second[a][i][j]`, `third[a][i][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMapDerivatives {
    pub jacobian: Mat2,
    pub second: Tensor3,
    pub third: Tensor4,
    pub affine: bool,
}

/// Differentiates `ψ ∘ ψ^{-1} = id` once, twice and three times; every order
/// is a solve against `J` with a right-hand side built from lower orders.
pub fn inverse_map_derivatives(map: &MapDerivatives) -> Result<InverseMapDerivatives> {
    let det = map.det();
    let g1 = map
        .jacobian
        .try_inverse()
        .filter(|_| det.abs() > 0.0 && det.is_finite())
        .ok_or(Error::SingularJacobian(det))?;
    if map.affine {
        return Ok(InverseMapDerivatives {
            jacobian: g1,
            second: ZERO3,
            third: ZERO4,
            affine: true,
        });
    }
    let d2 = &map.second;
    let d3 = &map.third;

    // G^a_ij = -G^a_p ψ^p_bc G^b_i G^c_j
    let mut g2 = ZERO3;
    for i in 0..2 {
        for j in 0..2 {
            let mut rhs = [0.0; 2];
            for (p, r) in rhs.iter_mut().enumerate() {
                for b in 0..2 {
                    for c in 0..2 {
                        *r += d2[p][b][c] * g1[(b, i)] * g1[(c, j)];
                    }
                }
            }
            for a in 0..2 {
                g2[a][i][j] = -(g1[(a, 0)] * rhs[0] + g1[(a, 1)] * rhs[1]);
            }
        }
    }

    // G^a_ijk = -G^a_p [ψ^p_bcd G^b_i G^c_j G^d_k
    //                    + ψ^p_bc (G^b_ij G^c_k + G^b_ik G^c_j + G^b_i G^c_jk)]
    let mut g3 = ZERO4;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut rhs = [0.0; 2];
                for (p, r) in rhs.iter_mut().enumerate() {
                    for b in 0..2 {
                        for c in 0..2 {
                            for d in 0..2 {
                                *r += d3[p][b][c][d] * g1[(b, i)] * g1[(c, j)] * g1[(d, k)];
                            }
                            *r += d2[p][b][c]
                                * (g2[b][i][j] * g1[(c, k)]
                                    + g2[b][i][k] * g1[(c, j)]
                                    + g1[(b, i)] * g2[c][j][k]);
                        }
                    }
                }
                for a in 0..2 {
                    g3[a][i][j][k] = -(g1[(a, 0)] * rhs[0] + g1[(a, 1)] * rhs[1]);
                }
            }
        }
    }
    Ok(InverseMapDerivatives {
        jacobian: g1,
        second: g2,
        third: g3,
        affine: false,
    })
}

/// Physical derivatives of one basis function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhysicalShape {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub third: Tensor3,
}

impl PhysicalShape {
    /// `∂_η ∇v = D²v η`.
    pub fn normal_hess(&self, n: Vec2) -> [f64; 2] {
        [
            self.hess[0][0] * n.x + self.hess[0][1] * n.y,
            self.hess[1][0] * n.x + self.hess[1][1] * n.y,
        ]
    }

    /// `∂_η Δv = Σ_i ∂_iik v η_k`.
    pub fn normal_laplacian(&self, n: Vec2) -> f64 {
        let t = &self.third;
        (t[0][0][0] + t[1][1][0]) * n.x + (t[0][0][1] + t[1][1][1]) * n.y
    }

    pub fn normal_derivative(&self, n: Vec2) -> f64 {
        self.grad[0] * n.x + self.grad[1] * n.y
    }
}

/// Faà di Bruno transport of reference derivatives to the physical element.
pub fn transport(r: &RefShape, inv: &InverseMapDerivatives) -> PhysicalShape {
    let g1 = &inv.jacobian;
    let mut s = PhysicalShape {
        value: r.value,
        ..Default::default()
    };
    for i in 0..2 {
        s.grad[i] = r.grad[0] * g1[(0, i)] + r.grad[1] * g1[(1, i)];
    }
    for i in 0..2 {
        for j in 0..2 {
            let mut h = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    h += r.hess[a][b] * g1[(a, i)] * g1[(b, j)];
                }
            }
            if !inv.affine {
                for a in 0..2 {
                    h += r.grad[a] * inv.second[a][i][j];
                }
            }
            s.hess[i][j] = h;
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut t = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            t += r.third[a][b][c] * g1[(a, i)] * g1[(b, j)] * g1[(c, k)];
                        }
                    }
                }
                if !inv.affine {
                    let g2 = &inv.second;
                    for a in 0..2 {
                        for b in 0..2 {
                            t += r.hess[a][b]
                                * (g2[a][i][j] * g1[(b, k)]
                                    + g2[a][i][k] * g1[(b, j)]
                                    + g2[a][j][k] * g1[(b, i)]);
                        }
                        t += r.grad[a] * inv.third[a][i][j][k];
                    }
                }
                s.third[i][j][k] = t;
            }
        }
    }
    s
}

/// Physical shapes of all basis functions at `xi` on `element`, plus the map
/// derivatives used to compute them.
pub fn physical_shapes(
    mesh: &Mesh,
    element: usize,
    xi: [f64; 2],
    basis: &LagrangeBasis,
) -> Result<(MapDerivatives, Vec<PhysicalShape>)> {
    let map = mesh.map_derivatives(element, xi)?;
    let inv = inverse_map_derivatives(&map)?;
    let shapes = basis.eval(xi).iter().map(|r| transport(r, &inv)).collect();
    Ok((map, shapes))
}

/// Same as [`physical_shapes`] with pre-tabulated reference shapes.
pub fn physical_shapes_tabulated(
    mesh: &Mesh,
    element: usize,
    xi: [f64; 2],
    reference: &[RefShape],
) -> Result<(MapDerivatives, Vec<PhysicalShape>)> {
    let map = mesh.map_derivatives(element, xi)?;
    let inv = inverse_map_derivatives(&map)?;
    Ok((map, reference.iter().map(|r| transport(r, &inv)).collect()))
}

/// Fully discontinuous dof layout: element `t` owns
/// `t * n_local .. (t + 1) * n_local`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_local: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        Self {
            n_elements: mesh.n_elements(),
            n_local: dim_polynomials(degree),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_elements * self.n_local
    }

    pub fn offset(&self, element: usize) -> usize {
        element * self.n_local
    }

    pub fn range(&self, element: usize) -> std::ops::Range<usize> {
        self.offset(element)..self.offset(element + 1)
    }
}

/// Discrete function on a mesh: coefficients in the nodal basis of `V_h^k`.
#[derive(Debug, Clone)]
pub struct Space<'m> {
    pub mesh: &'m Mesh,
    pub basis: LagrangeBasis,
    pub dofs: DofMap,
}

impl<'m> Space<'m> {
    /// Isoparametric space: the polynomial degree equals the mesh's geometry degree.
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        let degree = mesh.geometry_degree();
        Ok(Self {
            mesh,
            basis: LagrangeBasis::new(degree)?,
            dofs: DofMap::new(mesh, degree),
        })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Induced Lagrange interpolant `Î(v ∘ ψ_T) ∘ ψ_T^{-1}`: nodal values
    /// at the element's geometry nodes.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.n_elements() {
            let off = self.dofs.offset(t);
            for (i, x) in self.mesh.element_nodes(t).enumerate() {
                coeffs[off + i] = f(x);
            }
        }
        coeffs
    }
}

/// Value, gradient and Hessian of a discrete field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

pub fn evaluate_field(
    space: &Space<'_>,
    coeffs: &[f64],
    element: usize,
    xi: [f64; 2],
) -> Result<FieldValue> {
    if coeffs.len() != space.n_dofs() {
        return Err(Error::SizeMismatch {
            expected: space.n_dofs(),
            got: coeffs.len(),
        });
    }
    let (_, shapes) = physical_shapes(space.mesh, element, xi, &space.basis)?;
    let local = &coeffs[space.dofs.range(element)];
    Ok(combine(&shapes, local))
}

pub(crate) fn combine(shapes: &[PhysicalShape], local: &[f64]) -> FieldValue {
    let mut out = FieldValue::default();
    for (s, &c) in shapes.iter().zip(local) {
        out.value += c * s.value;
        for i in 0..2 {
            out.grad[i] += c * s.grad[i];
            for j in 0..2 {
                out.hess[i][j] += c * s.hess[i][j];
            }
        }
    }
    out
}
