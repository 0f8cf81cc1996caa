use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_core::polytope::{face_poset_paths, polygon_ft, Polytope2D};

/// Clips a CCW polygon to the half-plane left of the directed line `a → b`.
fn clip(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area_centroid(poly: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let c = p[0] * q[1] - q[0] * p[1];
        a += c;
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    if a.abs() < 1e-300 {
        return (0.0, [0.0, 0.0]);
    }
    (a / 2.0, [cx / (3.0 * a), cy / (3.0 * a)])
}

/// Tensor-grid midpoint rule on `n × n` cells over the triangle's bounding
/// box. Interior cells (exact inside test on all four corners) use the cell
/// midpoint; cells cut by an edge use their exactly clipped area at the
/// clipped centroid, removing the staircase error of a hard inside test.
fn triangle_quadrature(v: [[f64; 2]; 3], k: [f64; 2], n: usize) -> Complex<f64> {
    let (x0, x1) = (v.iter().map(|p| p[0]).fold(f64::MAX, f64::min), v.iter().map(|p| p[0]).fold(f64::MIN, f64::max));
    let (y0, y1) = (v.iter().map(|p| p[1]).fold(f64::MAX, f64::min), v.iter().map(|p| p[1]).fold(f64::MIN, f64::max));
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let edge = |a: [f64; 2], b: [f64; 2], p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let inside = |p: [f64; 2]| edge(v[0], v[1], p) >= 0.0 && edge(v[1], v[2], p) >= 0.0 && edge(v[2], v[0], p) >= 0.0;
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (cx0, cy0) = (x0 + i as f64 * hx, y0 + j as f64 * hy);
            let cell = [[cx0, cy0], [cx0 + hx, cy0], [cx0 + hx, cy0 + hy], [cx0, cy0 + hy]];
            let (w, c) = if cell.iter().all(|&p| inside(p)) {
                (hx * hy, [cx0 + 0.5 * hx, cy0 + 0.5 * hy])
            } else {
                let mut poly = cell.to_vec();
                for e in 0..3 {
                    poly = clip(&poly, v[e], v[(e + 1) % 3]);
                    if poly.is_empty() {
                        break;
                    }
                }
                if poly.len() < 3 {
                    continue;
                }
                area_centroid(&poly)
            };
            acc += Complex::from_polar(w, -(k[0] * c[0] + k[1] * c[1]));
        }
    }
    acc
}

fn random_triangle(rng: &mut ChaCha8Rng) -> [[f64; 2]; 3] {
    loop {
        let mut v = [[0.0f64; 2]; 3];
        for p in v.iter_mut() {
            *p = [rng.random(), rng.random()];
        }
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
        if area.abs() > 0.05 {
            if area < 0.0 {
                v.swap(1, 2);
            }
            return v;
        }
    }
}

#[test]
fn triangles_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..6 {
        let v = random_triangle(&mut rng);
        let tri = Polytope2D::new(v.to_vec()).unwrap();
        let r: f64 = rng.random_range(0.0..40.0);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let k = [r * a.cos(), r * a.sin()];
        let exact = polygon_ft(&tri, k);
        let quad = triangle_quadrature(v, k, 400);
        assert!((exact - quad).norm() < 1e-4, "k={k:?}: {exact} vs {quad}");
    }
}

fn convex_quad() -> impl Strategy<Value = Vec<[f64; 2]>> {
    // four points on a circle at increasing angles form a convex CCW quad
    (0.0f64..1.5, 0.3f64..1.5, 0.3f64..1.5, 0.3f64..1.5, 0.5f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(
        |(a0, d1, d2, d3, r, cx, cy)| {
            let angles = [a0, a0 + d1, a0 + d1 + d2, a0 + d1 + d2 + d3];
            angles.iter().map(|t| [cx + r * t.cos(), cy + r * t.sin()]).collect()
        },
    )
}

fn wave() -> impl Strategy<Value = [f64; 2]> {
    (-60.0f64..60.0, -60.0f64..60.0).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_multiplies_by_phase(v in convex_quad(), k in wave(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let p = Polytope2D::new(v).unwrap();
        let q = p.translate([s, t]).unwrap();
        let expect = polygon_ft(&p, k) * Complex::from_polar(1.0, -(k[0] * s + k[1] * t));
        prop_assert!((polygon_ft(&q, k) - expect).norm() < 1e-10);
    }

    #[test]
    fn conjugate_symmetry(v in convex_quad(), k in wave()) {
        let p = Polytope2D::new(v).unwrap();
        prop_assert!((polygon_ft(&p, [-k[0], -k[1]]) - polygon_ft(&p, k).conj()).norm() < 1e-12);
    }

    #[test]
    fn additive_over_triangulation(v in convex_quad(), k in wave()) {
        let quad = Polytope2D::new(v.clone()).unwrap();
        let t1 = Polytope2D::new(vec![v[0], v[1], v[2]]).unwrap();
        let t2 = Polytope2D::new(vec![v[0], v[2], v[3]]).unwrap();
        let sum = polygon_ft(&t1, k) + polygon_ft(&t2, k);
        prop_assert!((polygon_ft(&quad, k) - sum).norm() < 1e-10);
    }

    #[test]
    fn path_sum_is_transform(v in convex_quad(), k in wave()) {
        let p = Polytope2D::new(v).unwrap();
        let total: Complex<f64> = face_poset_paths(&p, k).iter().map(|x| x.contribution).sum();
        prop_assert!((total - polygon_ft(&p, k)).norm() < 1e-12);
    }

    #[test]
    fn weights_are_homogeneous(v in convex_quad(), k in wave()) {
        prop_assume!(k[0].hypot(k[1]) > 1.0);
        let p = Polytope2D::new(v).unwrap();
        let a = face_poset_paths(&p, k);
        let b = face_poset_paths(&p, [10.0 * k[0], 10.0 * k[1]]);
        prop_assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            prop_assert_eq!(&pa.faces, &pb.faces);
            let steps = (pa.faces.len() - 1) as i32;
            let expect = pa.weight * 10f64.powi(-steps);
            prop_assert!((pb.weight - expect).norm() <= 1e-9 * expect.norm().max(1e-300));
        }
    }
}
