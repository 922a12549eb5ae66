//! Quadrature on the reference triangle and reference edge, and transported
//! edge data (arclength weights, unit normals) on physical elements.

use crate::basis::{ref_edge_point, ref_edge_tangent, REF_NORMALS};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::tensor::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

pub type TriangleRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; D], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn([f64; D]) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Fully symmetric rule with positive weights and interior points, exact
/// for polynomials of degree at least `min_degree` (1..=10). Weights sum to
/// the reference area 1/2.
pub fn triangle_rule(min_degree: usize) -> Result<TriangleRule> {
    let (exact_degree, table) = match min_degree {
        1 => (1, DEGREE_1),
        2 => (2, DEGREE_2),
        3 | 4 => (4, DEGREE_4),
        5 => (5, DEGREE_5),
        6 => (6, DEGREE_6),
        7 | 8 => (8, DEGREE_8),
        9 => (9, DEGREE_9),
        10 => (10, DEGREE_10),
        d => {
            return Err(Error::UnsupportedQuadrature(format!(
                "triangle rule of degree {d} (supported: 1..=10)"
            )))
        }
    };
    Ok(TriangleRule {
        points: table.iter().map(|r| [r[0], r[1]]).collect(),
        weights: table.iter().map(|r| r[2]).collect(),
        exact_degree,
    })
}

/// Gauss-Legendre rule with `n_points` nodes on `[0, 1]`.
pub fn edge_rule(n_points: usize) -> Result<EdgeRule> {
    if !(1..=10).contains(&n_points) {
        return Err(Error::UnsupportedQuadrature(format!(
            "edge rule with {n_points} points (supported: 1..=10)"
        )));
    }
    let n = n_points;
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push([0.5 * (1.0 - x)]);
        weights.push(0.5 * w);
    }
    Ok(EdgeRule {
        points,
        weights,
        exact_degree: 2 * n - 1,
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Edge quadrature transported to a physical element.
#[derive(Debug, Clone)]
pub struct PhysicalEdgeData {
    /// Edge parameters `t in [0, 1]` measured from the element's local
    /// start vertex of the edge.
    pub params: Vec<f64>,
    pub ref_points: Vec<[f64; 2]>,
    pub points: Vec<Vec2>,
    /// Rule weight times the arclength factor `|Dψ_T τ̂|`.
    pub weights: Vec<f64>,
    /// Unit outward normals `det(J) J^{-T} η̂ / |det(J) J^{-T} η̂|`.
    pub normals: Vec<Vec2>,
}

pub fn physical_edge_data(
    mesh: &Mesh,
    element: usize,
    local_edge: usize,
    rule: &EdgeRule,
) -> Result<PhysicalEdgeData> {
    let tangent = ref_edge_tangent(local_edge);
    let tangent = Vec2::new(tangent[0], tangent[1]);
    let ref_normal = Vec2::new(REF_NORMALS[local_edge][0], REF_NORMALS[local_edge][1]);
    let n = rule.len();
    let mut data = PhysicalEdgeData {
        params: Vec::with_capacity(n),
        ref_points: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
    };
    for ([t], w) in rule.iter() {
        let xi = ref_edge_point(local_edge, t);
        let d = mesh.map_derivatives(element, xi)?;
        let det = d.det();
        let cof = d
            .jacobian
            .try_inverse()
            .ok_or(Error::DegenerateGeometry { element, det })?
            .transpose()
            * det;
        let normal = cof * ref_normal;
        data.params.push(t);
        data.ref_points.push(xi);
        data.points.push(d.point);
        data.weights.push(w * (d.jacobian * tangent).norm());
        data.normals.push(normal / normal.norm());
    }
    Ok(data)
}

const DEGREE_1: &[[f64; 3]] = &[
    [3.33333333333333315e-01, 3.33333333333333315e-01, 5.00000000000000000e-01],
];

const DEGREE_2: &[[f64; 3]] = &[
    [1.66666666666666685e-01, 1.66666666666666685e-01, 1.66666666666666657e-01],
    [1.66666666666666685e-01, 6.66666666666666630e-01, 1.66666666666666657e-01],
    [6.66666666666666630e-01, 1.66666666666666685e-01, 1.66666666666666657e-01],
];

const DEGREE_4: &[[f64; 3]] = &[
    [4.45948490915964890e-01, 4.45948490915964890e-01, 1.11690794839005597e-01],
    [4.45948490915964890e-01, 1.08103018168070220e-01, 1.11690794839005597e-01],
    [1.08103018168070220e-01, 4.45948490915964890e-01, 1.11690794839005597e-01],
    [9.15762135097710067e-02, 9.15762135097710067e-02, 5.49758718276610533e-02],
    [9.15762135097710067e-02, 8.16847572980457959e-01, 5.49758718276610533e-02],
    [8.16847572980457959e-01, 9.15762135097710067e-02, 5.49758718276610533e-02],
];

const DEGREE_5: &[[f64; 3]] = &[
    [3.33333333333333315e-01, 3.33333333333333315e-01, 1.12500000000025510e-01],
    [1.01286507323456648e-01, 1.01286507323456648e-01, 6.29695902724140694e-02],
    [1.01286507323456648e-01, 7.97426985353086648e-01, 6.29695902724140694e-02],
    [7.97426985353086648e-01, 1.01286507323456648e-01, 6.29695902724140694e-02],
    [4.70142064105119495e-01, 4.70142064105119495e-01, 6.61970763942441032e-02],
    [4.70142064105119495e-01, 5.97158717897610103e-02, 6.61970763942441032e-02],
    [5.97158717897610103e-02, 4.70142064105119495e-01, 6.61970763942441032e-02],
];

const DEGREE_6: &[[f64; 3]] = &[
    [2.49286745170913149e-01, 2.49286745170913149e-01, 5.83931378631877690e-02],
    [2.49286745170913149e-01, 5.01426509658173702e-01, 5.83931378631877690e-02],
    [5.01426509658173702e-01, 2.49286745170913149e-01, 5.83931378631877690e-02],
    [6.30890144915029344e-02, 6.30890144915029344e-02, 2.54224531851034059e-02],
    [6.30890144915029344e-02, 8.73821971016994103e-01, 2.54224531851034059e-02],
    [8.73821971016994103e-01, 6.30890144915029344e-02, 2.54224531851034059e-02],
    [3.10352451033783283e-01, 6.36502499121398335e-01, 4.14255378091877291e-02],
    [6.36502499121398335e-01, 3.10352451033783283e-01, 4.14255378091877291e-02],
    [3.10352451033783283e-01, 5.31450498448183817e-02, 4.14255378091877291e-02],
    [5.31450498448183817e-02, 3.10352451033783283e-01, 4.14255378091877291e-02],
    [6.36502499121398335e-01, 5.31450498448183817e-02, 4.14255378091877291e-02],
    [5.31450498448183817e-02, 6.36502499121398335e-01, 4.14255378091877291e-02],
];

const DEGREE_8: &[[f64; 3]] = &[
    [3.33333333333333315e-01, 3.33333333333333315e-01, 7.21578038389011356e-02],
    [1.70569307751758131e-01, 1.70569307751758131e-01, 5.16086852673651175e-02],
    [1.70569307751758131e-01, 6.58861384496483682e-01, 5.16086852673651175e-02],
    [6.58861384496483682e-01, 1.70569307751758131e-01, 5.16086852673651175e-02],
    [5.05472283170240663e-02, 5.05472283170240663e-02, 1.62292488115940887e-02],
    [5.05472283170240663e-02, 8.98905543365951853e-01, 1.62292488115940887e-02],
    [8.98905543365951853e-01, 5.05472283170240663e-02, 1.62292488115940887e-02],
    [4.59292588292733284e-01, 4.59292588292733284e-01, 4.75458171336458485e-02],
    [4.59292588292733284e-01, 8.14148234145334326e-02, 4.75458171336458485e-02],
    [8.14148234145334326e-02, 4.59292588292733284e-01, 4.75458171336458485e-02],
    [7.28492392955464418e-01, 8.39477740994834694e-03, 1.36151570872139385e-02],
    [8.39477740994834694e-03, 7.28492392955464418e-01, 1.36151570872139385e-02],
    [7.28492392955464418e-01, 2.63112829634587209e-01, 1.36151570872139385e-02],
    [2.63112829634587209e-01, 7.28492392955464418e-01, 1.36151570872139385e-02],
    [8.39477740994834694e-03, 2.63112829634587209e-01, 1.36151570872139385e-02],
    [2.63112829634587209e-01, 8.39477740994834694e-03, 1.36151570872139385e-02],
];

const DEGREE_9: &[[f64; 3]] = &[
    [3.33333333333333315e-01, 3.33333333333333315e-01, 4.85678981413190589e-02],
    [4.47295133944432474e-02, 4.47295133944432474e-02, 1.27888378293455098e-02],
    [4.47295133944432474e-02, 9.10540973211113491e-01, 1.27888378293455098e-02],
    [9.10540973211113491e-01, 4.47295133944432474e-02, 1.27888378293455098e-02],
    [4.37089591492842378e-01, 4.37089591492842378e-01, 3.89137705023709576e-02],
    [4.37089591492842378e-01, 1.25820817014315245e-01, 3.89137705023709576e-02],
    [1.25820817014315245e-01, 4.37089591492842378e-01, 3.89137705023709576e-02],
    [4.89682519198688271e-01, 4.89682519198688271e-01, 1.56673501136193050e-02],
    [4.89682519198688271e-01, 2.06349616026234584e-02, 1.56673501136193050e-02],
    [2.06349616026234584e-02, 4.89682519198688271e-01, 1.56673501136193050e-02],
    [1.88203535619026946e-01, 1.88203535619026946e-01, 3.98238694635931895e-02],
    [1.88203535619026946e-01, 6.23592928761946164e-01, 3.98238694635931895e-02],
    [6.23592928761946164e-01, 1.88203535619026946e-01, 3.98238694635931895e-02],
    [2.21962989160757490e-01, 3.68384120547441893e-02, 2.16417696886490110e-02],
    [3.68384120547441893e-02, 2.21962989160757490e-01, 2.16417696886490110e-02],
    [2.21962989160757490e-01, 7.41198598784498341e-01, 2.16417696886490110e-02],
    [7.41198598784498341e-01, 2.21962989160757490e-01, 2.16417696886490110e-02],
    [3.68384120547441893e-02, 7.41198598784498341e-01, 2.16417696886490110e-02],
    [7.41198598784498341e-01, 3.68384120547441893e-02, 2.16417696886490110e-02],
];

const DEGREE_10: &[[f64; 3]] = &[
    [3.33333333333333315e-01, 3.33333333333333315e-01, 4.16098684931143770e-02],
    [2.85035002884653325e-02, 2.85035002884653325e-02, 5.47564417015039898e-03],
    [2.85035002884653325e-02, 9.42992999423069356e-01, 5.47564417015039898e-03],
    [9.42992999423069356e-01, 2.85035002884653325e-02, 5.47564417015039898e-03],
    [1.62913117873651508e-01, 1.62913117873651508e-01, 2.63259747340482408e-02],
    [1.62913117873651508e-01, 6.74173764252697039e-01, 2.63259747340482408e-02],
    [6.74173764252697039e-01, 1.62913117873651508e-01, 2.63259747340482408e-02],
    [1.46811505394111336e-01, 5.16492619328007607e-01, 2.81386398554862235e-02],
    [5.16492619328007607e-01, 1.46811505394111336e-01, 2.81386398554862235e-02],
    [1.46811505394111336e-01, 3.36695875277881029e-01, 2.81386398554862235e-02],
    [3.36695875277881029e-01, 1.46811505394111336e-01, 2.81386398554862235e-02],
    [5.16492619328007607e-01, 3.36695875277881029e-01, 2.81386398554862235e-02],
    [3.36695875277881029e-01, 5.16492619328007607e-01, 2.81386398554862235e-02],
    [3.36856986804851821e-02, 8.13011246149887290e-01, 1.46614320477760560e-02],
    [8.13011246149887290e-01, 3.36856986804851821e-02, 1.46614320477760560e-02],
    [3.36856986804851821e-02, 1.53303055169627500e-01, 1.46614320477760560e-02],
    [1.53303055169627500e-01, 3.36856986804851821e-02, 1.46614320477760560e-02],
    [8.13011246149887290e-01, 1.53303055169627500e-01, 1.46614320477760560e-02],
    [1.53303055169627500e-01, 8.13011246149887290e-01, 1.46614320477760560e-02],
    [6.07329778500758310e-01, 3.63362616994618692e-01, 1.76974738957859992e-02],
    [3.63362616994618692e-01, 6.07329778500758310e-01, 1.76974738957859992e-02],
    [6.07329778500758310e-01, 2.93076045046229972e-02, 1.76974738957859992e-02],
    [2.93076045046229972e-02, 6.07329778500758310e-01, 1.76974738957859992e-02],
    [3.63362616994618692e-01, 2.93076045046229972e-02, 1.76974738957859992e-02],
    [2.93076045046229972e-02, 3.63362616994618692e-01, 1.76974738957859992e-02],
];
