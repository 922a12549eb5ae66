//! Small fixed-size tensors used by the geometry and chain-rule code.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Tensor3 = [[[f64; 2]; 2]; 2];
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

pub const ZERO3: Tensor3 = [[[0.0; 2]; 2]; 2];
pub const ZERO4: Tensor4 = [[[[0.0; 2]; 2]; 2]; 2];

pub fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

/// Frobenius product `A : B` of two 2x2 arrays.
pub fn frobenius(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn max_abs3(t: &Tensor3) -> f64 {
    t.iter()
        .flatten()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}
