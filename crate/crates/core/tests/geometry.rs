//! Geometry, quadrature and chain-rule oracles on curved meshes.

use foldplate_core::basis::LagrangeBasis;
use foldplate_core::mesh::{EdgeClass, InterfaceKind, InterfaceSpec, Mesh};
use foldplate_core::quadrature::{edge_rule, physical_edge_data, triangle_rule};
use foldplate_core::spaces::physical_shapes;
use foldplate_core::tensor::Vec2;

fn fold(kind: InterfaceKind, m: u8) -> InterfaceSpec {
    InterfaceSpec::new(kind, m)
}

fn all_folds() -> Vec<InterfaceSpec> {
    vec![
        InterfaceSpec::NONE,
        fold(InterfaceKind::StraightX05, 2),
        fold(InterfaceKind::Quadratic, 2),
        fold(InterfaceKind::Sine, 1),
        fold(InterfaceKind::Sine, 2),
    ]
}

fn curved_elements(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.n_elements())
        .filter(|&t| mesh.elements()[t].curved)
        .collect()
}

const SAMPLES: [[f64; 2]; 3] = [[0.2, 0.3], [0.55, 0.1], [0.15, 0.7]];

#[test]
fn map_jacobian_matches_central_differences() {
    let h = 1e-6;
    for m in [1, 2] {
        let mesh = Mesh::structured(4, fold(InterfaceKind::Sine, m), 2).unwrap();
        let mesh3 = Mesh::structured(4, fold(InterfaceKind::Sine, m), 3).unwrap();
        for mesh in [&mesh, &mesh3] {
            let curved = curved_elements(mesh);
            assert!(!curved.is_empty() || m == 1);
            for &t in &curved {
                for xi in SAMPLES {
                    let d = mesh.map_derivatives(t, xi).unwrap();
                    for a in 0..2 {
                        let mut p = xi;
                        let mut q = xi;
                        p[a] += h;
                        q[a] -= h;
                        let fd = (mesh.map_point(t, p) - mesh.map_point(t, q)) / (2.0 * h);
                        let col = d.jacobian.column(a);
                        let rel = (fd - col).norm() / col.norm();
                        assert!(rel < 1e-7, "element {t} xi {xi:?}: {rel}");
                    }
                    // Second and third derivatives from differences of the lower ones.
                    for a in 0..2 {
                        let mut p = xi;
                        let mut q = xi;
                        p[a] += 1e-5;
                        q[a] -= 1e-5;
                        let dp = mesh.map_derivatives(t, p).unwrap();
                        let dq = mesh.map_derivatives(t, q).unwrap();
                        for c in 0..2 {
                            for b in 0..2 {
                                let fd = (dp.jacobian[(c, b)] - dq.jacobian[(c, b)]) / 2e-5;
                                assert!((fd - d.second[c][b][a]).abs() < 1e-7);
                                for e in 0..2 {
                                    let fd = (dp.second[c][b][e] - dq.second[c][b][e]) / 2e-5;
                                    assert!((fd - d.third[c][b][e][a]).abs() < 1e-7);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Fourth-order central difference of `f` along `dir`.
fn fd4<T>(f: &dyn Fn(Vec2) -> T, x: Vec2, dir: Vec2, get: &dyn Fn(&T) -> f64) -> f64 {
    let h = dir.norm();
    let v = |s: f64| get(&f(x + dir * s));
    (8.0 * (v(1.0) - v(-1.0)) - (v(2.0) - v(-2.0))) / (12.0 * h)
}

#[test]
fn chain_rule_matches_physical_finite_differences() {
    for degree in [2, 3] {
        let mesh = Mesh::structured(4, fold(InterfaceKind::Quadratic, 2), degree).unwrap();
        let basis = LagrangeBasis::new(degree).unwrap();
        let e = [Vec2::new(1e-3, 0.0), Vec2::new(0.0, 1e-3)];
        for t in curved_elements(&mesh) {
            // Shapes at a physical point through the inverse map.
            let at = |x: Vec2| {
                let xi = mesh.inverse_map(t, x).expect("inverse map converges");
                physical_shapes(&mesh, t, xi, &basis).unwrap().1
            };
            for xi in SAMPLES {
                let (map, shapes) = physical_shapes(&mesh, t, xi, &basis).unwrap();
                let x = map.point;
                for (n, s) in shapes.iter().enumerate() {
                    let scale1 = s.grad.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                    let scale2 = s.hess.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
                    let scale3 = s.third.iter().flatten().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
                    for k in 0..2 {
                        let g = fd4(&at, x, e[k], &|v| v[n].value);
                        assert!((g - s.grad[k]).abs() / scale1 < 1e-5, "D1 k={degree} t={t} n={n}");
                        for i in 0..2 {
                            let fd = fd4(&at, x, e[k], &|v| v[n].grad[i]);
                            let rel = (fd - s.hess[i][k]).abs() / scale2;
                            assert!(rel < 1e-5, "D2 k={degree} t={t} n={n}: {rel}");
                            for j in 0..2 {
                                let fd = fd4(&at, x, e[k], &|v| v[n].hess[i][j]);
                                let rel = (fd - s.third[i][j][k]).abs() / scale3;
                                assert!(rel < 1e-5, "D3 k={degree} t={t} n={n}: {rel}");
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn physical_derivatives_are_symmetric() {
    let mesh = Mesh::structured(4, fold(InterfaceKind::Sine, 2), 2).unwrap();
    let basis = LagrangeBasis::new(2).unwrap();
    for t in curved_elements(&mesh) {
        for xi in SAMPLES {
            for s in physical_shapes(&mesh, t, xi, &basis).unwrap().1 {
                assert!((s.hess[0][1] - s.hess[1][0]).abs() <= 1e-13 * s.hess[0][1].abs().max(1.0));
                let d = &s.third;
                let scale = d.iter().flatten().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
                for (a, b, c) in [(0, 0, 1), (0, 1, 1)] {
                    let perms = [d[a][b][c], d[a][c][b], d[b][a][c], d[b][c][a], d[c][a][b], d[c][b][a]];
                    for p in perms {
                        assert!((p - perms[0]).abs() <= 1e-12 * scale);
                    }
                }
            }
        }
    }
}

#[test]
fn shared_edges_are_conforming_with_antiparallel_normals() {
    let rule = edge_rule(5).unwrap();
    for spec in all_folds() {
        let mesh = Mesh::refined(4, spec, 2, 1).unwrap();
        for edge in mesh.edges() {
            let Some(minus) = edge.minus else { continue };
            let dp = physical_edge_data(&mesh, edge.plus.element, edge.plus.local_edge, &rule).unwrap();
            let dm = physical_edge_data(&mesh, minus.element, minus.local_edge, &rule).unwrap();
            for ([t], _) in rule.iter() {
                let xp = mesh.map_point(edge.plus.element, mesh.edge_ref_point(edge, edge.plus, t));
                let xm = mesh.map_point(minus.element, mesh.edge_ref_point(edge, minus, t));
                assert!((xp - xm).norm() <= 1e-13, "{:?}: {}", spec, (xp - xm).norm());
            }
            for (q, x) in dp.points.iter().enumerate() {
                let r = (0..dm.points.len())
                    .min_by(|&a, &b| (dm.points[a] - x).norm().total_cmp(&(dm.points[b] - x).norm()))
                    .unwrap();
                assert!((dm.points[r] - x).norm() <= 1e-13);
                assert!((dp.normals[q].norm() - 1.0).abs() <= 1e-14);
                assert!((dp.normals[q] + dm.normals[r]).norm() <= 1e-12);
                assert!((dp.weights[q] - dm.weights[r]).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn boundary_weights_sum_to_perimeter() {
    let rule = edge_rule(5).unwrap();
    for spec in all_folds() {
        for level in 0..3 {
            let mesh = Mesh::refined(4, spec, 2, level).unwrap();
            let perimeter: f64 = mesh
                .edges()
                .iter()
                .filter(|e| e.is_boundary())
                .map(|e| {
                    physical_edge_data(&mesh, e.plus.element, e.plus.local_edge, &rule)
                        .unwrap()
                        .weights
                        .iter()
                        .sum::<f64>()
                })
                .sum();
            assert!((perimeter - 4.0).abs() <= 1e-12, "{spec:?} level {level}: {perimeter}");
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0) + step(f, m, b, fm, frm, fb, right, tol / 2.0)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol)
}

#[test]
fn quadratic_interface_arclength_matches_adaptive_oracle() {
    let spec = fold(InterfaceKind::Quadratic, 2);
    let mesh = Mesh::structured(4, spec, 2).unwrap();
    // The integrand sqrt(1 + x'(y)^2) is not polynomial; the largest rule
    // resolves it to well below the tolerance.
    let rule = edge_rule(10).unwrap();
    let chain = mesh.interface_chain().unwrap();
    assert_eq!(chain.len(), 4);
    let mut total = 0.0;
    for &e in &chain {
        let edge = &mesh.edges()[e];
        let ys = edge.vertices.map(|v| mesh.vertices()[v].y);
        let (y0, y1) = (ys[0].min(ys[1]), ys[0].max(ys[1]));
        let oracle = adaptive_simpson(
            &|y| (1.0 + spec.curve_dx_dy(y).unwrap().powi(2)).sqrt(),
            y0,
            y1,
            1e-14,
        );
        let data = physical_edge_data(&mesh, edge.plus.element, edge.plus.local_edge, &rule).unwrap();
        let length: f64 = data.weights.iter().sum();
        assert!(((length - oracle) / oracle).abs() <= 1e-10, "{length} vs {oracle}");
        assert!(((edge.length - oracle) / oracle).abs() <= 1e-6);
        total += length;
    }
    let whole = adaptive_simpson(&|y| (1.0 + spec.curve_dx_dy(y).unwrap().powi(2)).sqrt(), 0.0, 1.0, 1e-14);
    assert!((total - whole).abs() <= 1e-10);
}

#[test]
fn divergence_theorem_holds_per_element() {
    // F = (x², xy), div F = 3x.
    let tri = triangle_rule(10).unwrap();
    let rule = edge_rule(8).unwrap();
    for spec in all_folds() {
        let mesh = Mesh::refined(4, spec, 2, 1).unwrap();
        for t in 0..mesh.n_elements() {
            let volume: f64 = tri
                .iter()
                .map(|(xi, w)| {
                    let d = mesh.map_derivatives(t, xi).unwrap();
                    w * d.det() * 3.0 * d.point.x
                })
                .sum();
            let boundary: f64 = (0..3)
                .map(|e| {
                    let data = physical_edge_data(&mesh, t, e, &rule).unwrap();
                    (0..data.points.len())
                        .map(|q| {
                            let x = data.points[q];
                            let n = data.normals[q];
                            data.weights[q] * (x.x * x.x * n.x + x.x * x.y * n.y)
                        })
                        .sum::<f64>()
                })
                .sum();
            let rel = (volume - boundary).abs() / volume.abs();
            assert!(rel <= 1e-10, "{spec:?} element {t}: {rel}");
        }
    }
}

#[test]
fn jacobians_positive_at_quadrature_points() {
    let tri = triangle_rule(6).unwrap();
    for spec in all_folds() {
        for degree in [2, 3] {
            let mesh = Mesh::refined(4, spec, degree, 2).unwrap();
            for t in 0..mesh.n_elements() {
                for (xi, _) in tri.iter() {
                    assert!(mesh.map_derivatives(t, xi).unwrap().det() > 0.0);
                }
            }
        }
    }
}

fn hausdorff_to_curve(mesh: &Mesh, spec: InterfaceSpec) -> f64 {
    let chain: Vec<[Vec2; 2]> = mesh
        .interface_chain()
        .unwrap()
        .into_iter()
        .map(|e| mesh.edges()[e].vertices.map(|v| mesh.vertices()[v]))
        .collect();
    let seg_dist = |p: Vec2, [a, b]: [Vec2; 2]| {
        let s = ((p - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
        (p - (a + s * (b - a))).norm()
    };
    let n = 4000;
    let curve: Vec<Vec2> = (0..=n)
        .map(|i| {
            let y = i as f64 / n as f64;
            Vec2::new(spec.curve_x(y).unwrap(), y)
        })
        .collect();
    let curve_to_chain = curve
        .iter()
        .map(|&p| chain.iter().map(|&s| seg_dist(p, s)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let chain_to_curve = chain
        .iter()
        .flat_map(|&[a, b]| (0..=16).map(move |i| a + (b - a) * (i as f64 / 16.0)))
        .map(|p| {
            curve
                .windows(2)
                .map(|w| seg_dist(p, [w[0], w[1]]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    curve_to_chain.max(chain_to_curve)
}

#[test]
fn piecewise_linear_fold_converges_quadratically() {
    let spec = fold(InterfaceKind::Sine, 1);
    let mut mesh = Mesh::structured(4, spec, 2).unwrap();
    let mut dist = Vec::new();
    for level in 0..4 {
        if level > 0 {
            mesh = mesh.refine_uniform().unwrap();
        }
        for &e in &mesh.interface_chain().unwrap() {
            for v in mesh.edges()[e].vertices {
                let p = mesh.vertices()[v];
                assert!((p.x - spec.curve_x(p.y).unwrap()).abs() <= 1e-14);
            }
        }
        dist.push(hausdorff_to_curve(&mesh, spec));
    }
    for w in dist.windows(2).skip(1) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "distances {dist:?}");
    }
}

#[test]
fn fitted_sine_nodes_lie_on_curve() {
    let spec = fold(InterfaceKind::Sine, 2);
    let mesh = Mesh::refined(4, spec, 2, 2).unwrap();
    for &e in &mesh.interface_chain().unwrap() {
        let edge = &mesh.edges()[e];
        for &n in &edge.nodes {
            let p = mesh.nodes()[n];
            assert!((p.x - spec.curve_x(p.y).unwrap()).abs() <= 1e-14);
        }
    }
    let classified = mesh.classify_edges(&foldplate_core::mesh::DirichletSpec::all()).unwrap();
    assert_eq!(classified.count_class(EdgeClass::Interface), 16);
}
