//! Fourier transforms of polytope indicators, `1̃_P(k) = ∫_P e^{−ik·x} dx`,
//! by recursive reduction to lower-dimensional faces.
//!
//! For a face `F` and the projection `Proj_F(k)` of `k` onto its direction
//! space: if the projection vanishes, `1̃_F(k) = vol(F)·e^{−ik·x₀}` for any
//! `x₀ ∈ F`; otherwise
//! `1̃_F(k) = i Σ_G (Proj_F(k)·N_F(G))/‖Proj_F(k)‖² · 1̃_G(k)` over the facets
//! `G` of `F` with outward unit normals `N_F(G)` inside `F`'s hull. The
//! recursion is generic over [`Face`]; [`Face2D`] executes it for polygons.

use std::fmt;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::numeric::stats::loglog_slope;
use crate::numeric::Real;

/// A projection below `VANISHING_REL·‖k‖` counts as zero.
pub const VANISHING_REL: f64 = 1e-9;

/// Projections within this factor above the vanishing threshold are flagged.
pub const NEAR_THRESHOLD_FACTOR: f64 = 1e3;

/// Magnitudes below this make a probe direction degenerate.
pub const PROBE_FLOOR: f64 = 1e-14;

/// A face of a polytope in `R^d`, as the recursion needs it.
pub trait Face<T: Real>: Sized {
    /// Dimension of the face's affine hull.
    fn dim(&self) -> usize;
    /// `dim`-dimensional volume (1 for a vertex).
    fn measure(&self) -> T;
    /// A point of the face used as the constant-phase anchor `x₀`.
    fn anchor(&self) -> Vec<T>;
    /// Orthogonal projection of `k` onto the face's direction space.
    fn project(&self, k: &[T]) -> Vec<T>;
    /// Facets with their outward unit normals (lying in this face's hull).
    fn facets(&self) -> Vec<(Self, Vec<T>)>;
    /// Stable identifier used in path listings.
    fn id(&self) -> FaceId;
}

/// Identifies a face of a polygon by its vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceId {
    Polygon,
    /// Edge from vertex `i` to vertex `i + 1` (cyclically).
    Edge(usize),
    Vertex(usize),
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceId::Polygon => write!(f, "P"),
            FaceId::Edge(i) => write!(f, "E{i}"),
            FaceId::Vertex(i) => write!(f, "V{i}"),
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn phase<T: Real>(k: &[T], x: &[T]) -> Complex<T> {
    Complex::from_polar(T::one(), -dot(k, x))
}

/// Outcome of the vanishing test for one projection.
fn classify<T: Real>(proj_norm: T, k_norm: T) -> (bool, bool) {
    let thresh = T::lit(VANISHING_REL) * k_norm;
    let vanishes = proj_norm < thresh || k_norm == T::zero();
    let near = k_norm > T::zero()
        && proj_norm < thresh * T::lit(NEAR_THRESHOLD_FACTOR)
        && proj_norm > thresh / T::lit(NEAR_THRESHOLD_FACTOR);
    (vanishes, near)
}

/// Transform of any face by the recursion, plus whether any projection on
/// the way fell near the vanishing threshold.
pub fn face_ft<T: Real, F: Face<T>>(face: &F, k: &[T]) -> (Complex<T>, bool) {
    let k_norm = dot(k, k).sqrt();
    let proj = face.project(k);
    let p2 = dot(&proj, &proj);
    let (vanishes, mut near) = classify(p2.sqrt(), k_norm);
    if vanishes || face.dim() == 0 {
        return (phase(k, &face.anchor()) * face.measure(), near);
    }
    let i = Complex::new(T::zero(), T::one());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (g, normal) in face.facets() {
        let w = dot(&proj, &normal) / p2;
        let (sub, sub_near) = face_ft(&g, k);
        near |= sub_near;
        acc += i * sub * w;
    }
    (acc, near)
}

/// One root-to-terminal path of the face recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePath<T> {
    /// Faces visited, of strictly decreasing dimension.
    pub faces: Vec<FaceId>,
    pub dims: Vec<usize>,
    /// Product of the factors `i (Proj·N)/‖Proj‖²` along the path.
    pub weight: Complex<T>,
    /// Anchor of the terminal face.
    pub phase_point: Vec<T>,
    /// `weight · vol(terminal) · e^{−ik·x₀}`.
    pub contribution: Complex<T>,
    /// Some projection on the path was within [`NEAR_THRESHOLD_FACTOR`] of
    /// the vanishing threshold.
    pub near_threshold: bool,
}

/// Every path of the recursion for `face` at `k`; contributions sum to
/// [`face_ft`].
pub fn face_paths<T: Real, F: Face<T>>(face: &F, k: &[T]) -> Vec<FacePath<T>> {
    let mut out = Vec::new();
    let root = FacePath {
        faces: vec![],
        dims: vec![],
        weight: Complex::new(T::one(), T::zero()),
        phase_point: vec![],
        contribution: Complex::new(T::zero(), T::zero()),
        near_threshold: false,
    };
    walk(face, k, root, &mut out);
    out
}

fn walk<T: Real, F: Face<T>>(face: &F, k: &[T], mut path: FacePath<T>, out: &mut Vec<FacePath<T>>) {
    path.faces.push(face.id());
    path.dims.push(face.dim());
    let k_norm = dot(k, k).sqrt();
    let proj = face.project(k);
    let p2 = dot(&proj, &proj);
    let (vanishes, near) = classify(p2.sqrt(), k_norm);
    path.near_threshold |= near;
    if vanishes || face.dim() == 0 {
        let x0 = face.anchor();
        path.contribution = path.weight * phase(k, &x0) * face.measure();
        path.phase_point = x0;
        out.push(path);
        return;
    }
    let i = Complex::new(T::zero(), T::one());
    for (g, normal) in face.facets() {
        let mut next = path.clone();
        next.weight = path.weight * i * (dot(&proj, &normal) / p2);
        walk(&g, k, next, out);
    }
}

/// Counterclockwise simple polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope2D<T> {
    vertices: Vec<[T; 2]>,
    normals: Vec<[T; 2]>,
    lengths: Vec<T>,
    area: T,
}

fn cross<T: Real>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect<T: Real>(p1: [T; 2], p2: [T; 2], q1: [T; 2], q2: [T; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    let on = |a: [T; 2], b: [T; 2], p: [T; 2]| {
        p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    (d1 == z && on(q1, q2, p1))
        || (d2 == z && on(q1, q2, p2))
        || (d3 == z && on(p1, p2, q1))
        || (d4 == z && on(p1, p2, q2))
}

impl<T: Real> Polytope2D<T> {
    /// Validates and derives edge data. Rejects fewer than 3 vertices,
    /// repeated consecutive vertices, zero or negative (clockwise) area and
    /// self-intersections.
    pub fn new(vertices: Vec<[T; 2]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return invalid(format!("a polygon needs at least 3 vertices, got {n}"));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("non-finite vertex");
        }
        let area = T::lit(0.5)
            * (0..n)
                .map(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    a[0] * b[1] - b[0] * a[1]
                })
                .sum::<T>();
        let scale = vertices
            .iter()
            .flatten()
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::one());
        if area.abs() <= T::epsilon() * T::lit(16.0) * scale * scale {
            return invalid("degenerate polygon with zero area");
        }
        if area < T::zero() {
            return invalid("vertices must be in counterclockwise order");
        }
        let mut lengths = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = e[0].hypot(e[1]);
            if len == T::zero() {
                return invalid(format!("vertex {i} repeats the next vertex"));
            }
            lengths.push(len);
            normals.push([e[1] / len, -e[0] / len]);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return invalid(format!("edges {i} and {j} intersect"));
                }
            }
        }
        let p = Self {
            vertices,
            normals,
            lengths,
            area,
        };
        let c = p.centroid();
        for i in 0..n {
            let m = p.edge_midpoint(i);
            let out = (m[0] - c[0]) * p.normals[i][0] + (m[1] - c[1]) * p.normals[i][1];
            if out <= T::zero() {
                return invalid(format!("normal of edge {i} does not point outward"));
            }
        }
        Ok(p)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// Regular `n`-gon of circumradius `r` centred at the origin.
    pub fn regular(n: usize, r: T) -> Result<Self> {
        let verts = (0..n)
            .map(|i| {
                let a = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        Self::new(verts)
    }

    /// Parses `x,y` lines (blank lines and a leading `x,y` header skipped).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut verts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.eq_ignore_ascii_case("x,y")) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Format(format!("line {}: bad number `{s}`", n + 1)))
            };
            if parts.len() != 2 {
                return Err(Error::Format(format!("line {}: expected `x,y`", n + 1)));
            }
            verts.push([parse(parts[0])?, parse(parts[1])?]);
        }
        Self::new(verts)
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> T {
        self.area
    }

    /// Vertex average; interior for convex polygons, used for orientation
    /// checks only when the polygon is star-shaped about it.
    pub fn centroid(&self) -> [T; 2] {
        let n = T::from_usize_lossy(self.len());
        let s = self
            .vertices
            .iter()
            .fold([T::zero(), T::zero()], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }

    /// Edge `i` as `(start, end)`.
    pub fn edge(&self, i: usize) -> ([T; 2], [T; 2]) {
        (self.vertices[i], self.vertices[(i + 1) % self.len()])
    }

    pub fn edge_normal(&self, i: usize) -> [T; 2] {
        self.normals[i]
    }

    pub fn edge_length(&self, i: usize) -> T {
        self.lengths[i]
    }

    pub fn edge_midpoint(&self, i: usize) -> [T; 2] {
        let (a, b) = self.edge(i);
        let h = T::lit(0.5);
        [h * (a[0] + b[0]), h * (a[1] + b[1])]
    }

    pub fn translate(&self, v: [T; 2]) -> Result<Self> {
        Self::new(self.vertices.iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect())
    }

    /// Whether `x` lies in the closed polygon (winding number).
    pub fn contains(&self, x: [T; 2]) -> bool {
        let mut winding = 0i32;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let c = cross(a, b, x);
            if a[1] <= x[1] {
                if b[1] > x[1] && c > T::zero() {
                    winding += 1;
                }
            } else if b[1] <= x[1] && c < T::zero() {
                winding -= 1;
            }
        }
        winding != 0
    }
}

/// Faces of a polygon: the polygon itself, its edges and its vertices.
#[derive(Debug, Clone)]
pub enum Face2D<'a, T> {
    Polygon(&'a Polytope2D<T>),
    Segment { polygon: &'a Polytope2D<T>, edge: usize },
    Vertex { polygon: &'a Polytope2D<T>, index: usize },
}

impl<T: Real> Face<T> for Face2D<'_, T> {
    fn dim(&self) -> usize {
        match self {
            Face2D::Polygon(_) => 2,
            Face2D::Segment { .. } => 1,
            Face2D::Vertex { .. } => 0,
        }
    }

    fn measure(&self) -> T {
        match self {
            Face2D::Polygon(p) => p.area(),
            Face2D::Segment { polygon, edge } => polygon.edge_length(*edge),
            Face2D::Vertex { .. } => T::one(),
        }
    }

    fn anchor(&self) -> Vec<T> {
        match self {
            Face2D::Polygon(p) => p.centroid().to_vec(),
            Face2D::Segment { polygon, edge } => polygon.edge_midpoint(*edge).to_vec(),
            Face2D::Vertex { polygon, index } => polygon.vertices()[*index].to_vec(),
        }
    }

    fn project(&self, k: &[T]) -> Vec<T> {
        match self {
            Face2D::Polygon(_) => k.to_vec(),
            Face2D::Segment { polygon, edge } => {
                let (a, b) = polygon.edge(*edge);
                let len = polygon.edge_length(*edge);
                let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                let s = k[0] * u[0] + k[1] * u[1];
                vec![s * u[0], s * u[1]]
            }
            Face2D::Vertex { .. } => vec![T::zero(), T::zero()],
        }
    }

    fn facets(&self) -> Vec<(Self, Vec<T>)> {
        match *self {
            Face2D::Polygon(p) => (0..p.len())
                .map(|i| (Face2D::Segment { polygon: p, edge: i }, p.edge_normal(i).to_vec()))
                .collect(),
            Face2D::Segment { polygon, edge } => {
                let (a, b) = polygon.edge(edge);
                let len = polygon.edge_length(edge);
                let u = vec![(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                let back = u.iter().map(|&v| -v).collect();
                let end = (edge + 1) % polygon.len();
                vec![
                    (Face2D::Vertex { polygon, index: edge }, back),
                    (Face2D::Vertex { polygon, index: end }, u),
                ]
            }
            Face2D::Vertex { .. } => vec![],
        }
    }

    fn id(&self) -> FaceId {
        match self {
            Face2D::Polygon(_) => FaceId::Polygon,
            Face2D::Segment { edge, .. } => FaceId::Edge(*edge),
            Face2D::Vertex { index, .. } => FaceId::Vertex(*index),
        }
    }
}

/// `∫_P e^{−ik·x} dx`.
pub fn polygon_ft<T: Real>(p: &Polytope2D<T>, k: [T; 2]) -> Complex<T> {
    face_ft(&Face2D::Polygon(p), &k).0
}

/// [`polygon_ft`] plus a flag set when some projection sat within
/// [`NEAR_THRESHOLD_FACTOR`] of the vanishing threshold.
pub fn polygon_ft_flagged<T: Real>(p: &Polytope2D<T>, k: [T; 2]) -> (Complex<T>, bool) {
    face_ft(&Face2D::Polygon(p), &k)
}

/// All recursion paths of the polygon at `k`.
pub fn face_poset_paths<T: Real>(p: &Polytope2D<T>, k: [T; 2]) -> Vec<FacePath<T>> {
    face_paths(&Face2D::Polygon(p), &k)
}

/// Log-log slope of `|1̃_P(κ·u)|` over the magnitudes `ks` (spanning at
/// least 1.5 decades) along the unit direction `u`.
pub fn decay_exponent_probe<T: Real>(p: &Polytope2D<T>, direction: [T; 2], ks: &[T]) -> Result<T> {
    let norm = direction[0].hypot(direction[1]);
    if (norm - T::one()).abs() > T::lit(1e-9) {
        return invalid("probe direction must be a unit vector");
    }
    let lo = ks.iter().copied().fold(T::infinity(), T::min);
    let hi = ks.iter().copied().fold(T::zero(), T::max);
    if !(lo > T::zero()) || hi / lo < T::lit(10f64.powf(1.5)) {
        return invalid("probe magnitudes must be positive and span 1.5 decades");
    }
    let mags: Vec<T> = ks
        .iter()
        .map(|&s| polygon_ft(p, [s * direction[0], s * direction[1]]).norm())
        .collect();
    if mags.iter().all(|&m| m < T::lit(PROBE_FLOOR)) {
        return Err(Error::DegenerateDirection(
            "transform vanishes along the probe direction".into(),
        ));
    }
    loglog_slope(ks, &mags, T::lit(PROBE_FLOOR))
}
