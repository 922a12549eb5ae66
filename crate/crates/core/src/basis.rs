//! Lagrange nodal bases on the reference triangle `{x >= 0, y >= 0, x + y <= 1}`.
//!
//! Node ordering: the three vertices `(0,0)`, `(1,0)`, `(0,1)`, then the
//! interior nodes of local edges 0 (`v0 -> v1`), 1 (`v1 -> v2`) and 2
//! (`v2 -> v0`) in the direction of the edge, then interior face nodes.
//! The same ordering is used for geometry nodes, which makes an element's
//! geometry nodes the images of the reference nodes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Outward unit normals of the reference edges, indexed by local edge.
pub const REF_NORMALS: [[f64; 2]; 3] = [
    [0.0, -1.0],
    [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    [-1.0, 0.0],
];

/// Point on local reference edge `edge` at parameter `t in [0, 1]`.
pub fn ref_edge_point(edge: usize, t: f64) -> [f64; 2] {
    let a = REF_VERTICES[edge];
    let b = REF_VERTICES[(edge + 1) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Unnormalized tangent `v_{e+1} - v_e` of a reference edge.
pub fn ref_edge_tangent(edge: usize) -> [f64; 2] {
    let a = REF_VERTICES[edge];
    let b = REF_VERTICES[(edge + 1) % 3];
    [b[0] - a[0], b[1] - a[1]]
}

pub fn dim_polynomials(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Reference derivatives of one basis function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RefShape {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub third: Tensor3,
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(usize, usize)>,
    /// `coeffs[i * n + m]`: coefficient of monomial `m` in basis function `i`.
    coeffs: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let nodes = lagrange_nodes(degree);
        let exponents: Vec<(usize, usize)> = (0..=degree)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let n = nodes.len();
        debug_assert_eq!(n, exponents.len());

        // Vandermonde V[j][m] = monomial m at node j; basis coefficients are
        // the columns of V^{-1}.
        let vander = DMatrix::from_fn(n, n, |j, m| {
            let (a, b) = exponents[m];
            nodes[j][0].powi(a as i32) * nodes[j][1].powi(b as i32)
        });
        let inv = vander
            .try_inverse()
            .ok_or(Error::UnsupportedDegree(degree))?;
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for m in 0..n {
                coeffs[i * n + m] = inv[(m, i)];
            }
        }
        Ok(Self {
            degree,
            nodes,
            exponents,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Values and reference derivatives up to order three of every basis
    /// function at `xi`.
    pub fn eval(&self, xi: [f64; 2]) -> Vec<RefShape> {
        let n = self.len();
        let monos: Vec<RefShape> = self
            .exponents
            .iter()
            .map(|&(a, b)| monomial_shape(a, b, xi))
            .collect();
        (0..n)
            .map(|i| {
                let mut s = RefShape::default();
                for (m, mono) in monos.iter().enumerate() {
                    let c = self.coeffs[i * n + m];
                    if c == 0.0 {
                        continue;
                    }
                    s.value += c * mono.value;
                    for p in 0..2 {
                        s.grad[p] += c * mono.grad[p];
                        for q in 0..2 {
                            s.hess[p][q] += c * mono.hess[p][q];
                            for r in 0..2 {
                                s.third[p][q][r] += c * mono.third[p][q][r];
                            }
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Values only; cheaper than [`eval`](Self::eval) when no derivatives are needed.
    pub fn values(&self, xi: [f64; 2]) -> Vec<f64> {
        let n = self.len();
        let monos: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| xi[0].powi(a as i32) * xi[1].powi(b as i32))
            .collect();
        (0..n)
            .map(|i| (0..n).map(|m| self.coeffs[i * n + m] * monos[m]).sum())
            .collect()
    }
}

fn lagrange_nodes(degree: usize) -> Vec<[f64; 2]> {
    let mut nodes: Vec<[f64; 2]> = REF_VERTICES.to_vec();
    for e in 0..3 {
        for i in 1..degree {
            nodes.push(ref_edge_point(e, i as f64 / degree as f64));
        }
    }
    if degree == 3 {
        nodes.push([1.0 / 3.0, 1.0 / 3.0]);
    }
    nodes
}

/// `d^p/dx^p x^a = a!/(a-p)! x^(a-p)`.
fn falling_pow(x: f64, a: usize, p: usize) -> f64 {
    if p > a {
        return 0.0;
    }
    let factor: usize = ((a - p + 1)..=a).product();
    factor as f64 * x.powi((a - p) as i32)
}

fn monomial_shape(a: usize, b: usize, xi: [f64; 2]) -> RefShape {
    let d = |p: usize, q: usize| falling_pow(xi[0], a, p) * falling_pow(xi[1], b, q);
    let mut s = RefShape {
        value: d(0, 0),
        grad: [d(1, 0), d(0, 1)],
        ..Default::default()
    };
    for p in 0..2 {
        for q in 0..2 {
            let nx = (p == 0) as usize + (q == 0) as usize;
            s.hess[p][q] = d(nx, 2 - nx);
            for r in 0..2 {
                let nx = (p == 0) as usize + (q == 0) as usize + (r == 0) as usize;
                s.third[p][q][r] = d(nx, 3 - nx);
            }
        }
    }
    s
}
