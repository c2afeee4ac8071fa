use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{KirigamiPattern, SubstrateShape};
use crate::error::{domain, Error, Result};

/// Symmetric 2×2 metric expressed in a face's edge basis
/// (e₁ = v₁ − v₀, e₂ = v₂ − v₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Metric2 {
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a11: s * self.a11, a12: s * self.a12, a22: s * self.a22 }
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det > 0.0 && self.a11 > 0.0 {
            Some(Self { a11: self.a22 / det, a12: -self.a12 / det, a22: self.a11 / det })
        } else {
            None
        }
    }

    /// Area of the triangle spanned by the basis under this metric.
    pub fn triangle_area(&self) -> f64 {
        0.5 * self.det().max(0.0).sqrt()
    }

    pub fn from_edges(e1: [f64; 3], e2: [f64; 3]) -> Self {
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        Self { a11: dot(e1, e1), a12: dot(e1, e2), a22: dot(e2, e2) }
    }
}

/// Interior edge shared by two faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hinge {
    /// Edge endpoints, ordered as they appear in `faces[0]`.
    pub edge: [usize; 2],
    pub faces: [usize; 2],
    /// Vertex opposite the edge in each face.
    pub opposite: [usize; 2],
}

/// Triangulated mid-surface. The planar configuration stored in `vertices`
/// is the bonded (stretched) state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub hinges: Vec<Hinge>,
    pub face_covered: Vec<bool>,
    pub rest_metric_substrate: Vec<Metric2>,
    /// Present only on covered faces.
    pub rest_metric_face: Vec<Option<Metric2>>,
    pub prestretch: f64,
}

impl TriMesh {
    /// Builds a mesh from raw connectivity; rest metrics start at λ = 1.
    pub fn from_faces(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>, face_covered: Vec<bool>) -> Result<Self> {
        if face_covered.len() != faces.len() {
            return domain("face_covered must have one flag per face");
        }
        if let Some(f) = faces.iter().position(|f| f.iter().any(|&v| v >= vertices.len())) {
            return Err(Error::Geometry(format!("face {f} references a missing vertex")));
        }
        let hinges = build_hinges(&faces)?;
        let mut mesh = Self {
            vertices,
            faces,
            hinges,
            face_covered,
            rest_metric_substrate: Vec::new(),
            rest_metric_face: Vec::new(),
            prestretch: 1.0,
        };
        let planar = mesh.planar_metrics();
        if let Some(f) = planar.iter().position(|m| !(m.det() > 0.0)) {
            return Err(Error::Geometry(format!("face {f} is degenerate")));
        }
        mesh.rest_metric_face = planar
            .iter()
            .zip(&mesh.face_covered)
            .map(|(m, &c)| c.then_some(*m))
            .collect();
        mesh.rest_metric_substrate = planar;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_vectors(&self, f: usize) -> ([f64; 3], [f64; 3]) {
        let [i, j, k] = self.faces[f];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        (sub(p1, p0), sub(p2, p0))
    }

    /// Metric of each face in the stored (planar) configuration.
    pub fn planar_metrics(&self) -> Vec<Metric2> {
        (0..self.faces.len())
            .map(|f| {
                let (e1, e2) = self.edge_vectors(f);
                Metric2::from_edges(e1, e2)
            })
            .collect()
    }

    pub fn face_areas(&self) -> Vec<f64> {
        self.planar_metrics().iter().map(Metric2::triangle_area).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Area fraction of faces flagged as covered.
    pub fn covered_fraction(&self) -> f64 {
        let areas = self.face_areas();
        let covered: f64 = areas.iter().zip(&self.face_covered).filter(|(_, &c)| c).map(|(a, _)| a).sum();
        covered / areas.iter().sum::<f64>()
    }

    /// Smallest interior angle over all faces (degrees).
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for f in &self.faces {
            for k in 0..3 {
                let p = self.vertices[f[k]];
                let a = sub(self.vertices[f[(k + 1) % 3]], p);
                let b = sub(self.vertices[f[(k + 2) % 3]], p);
                let cos = dot(a, b) / (dot(a, a) * dot(b, b)).sqrt();
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.num_edges() as i64 + self.faces.len() as i64
    }

    /// Vertex closest to the centroid of the vertex cloud (lowest index on ties).
    pub fn center_vertex(&self) -> usize {
        let n = self.vertices.len() as f64;
        let c = self.vertices.iter().fold([0.0; 3], |acc, v| add(acc, v.map(|x| x / n)));
        nearest(&self.vertices, [c[0], c[1]], |_| true).unwrap_or(0)
    }

    /// Vertex closest to `target` (in the plane) among those accepted by `keep`.
    pub fn nearest_vertex(&self, target: [f64; 2], keep: impl Fn(usize) -> bool) -> Option<usize> {
        nearest(&self.vertices, target, keep)
    }

    /// Extremal covered vertices along +x, +y, −x, −y (the arm tips of a
    /// cross). Falls back to all vertices when nothing is covered.
    pub fn arm_tips(&self) -> [usize; 4] {
        let mut on_covered = vec![false; self.vertices.len()];
        for (f, &c) in self.faces.iter().zip(&self.face_covered) {
            if c {
                for &v in f {
                    on_covered[v] = true;
                }
            }
        }
        let any_covered = on_covered.iter().any(|&c| c);
        let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        dirs.map(|d: [f64; 2]| {
            let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize);
            for (i, v) in self.vertices.iter().enumerate() {
                if any_covered && !on_covered[i] {
                    continue;
                }
                let along = v[0] * d[0] + v[1] * d[1];
                let across = -(v[0] * d[1] - v[1] * d[0]).abs();
                let key = (round_key(along), across, i);
                if key.0 > best.0 || (key.0 == best.0 && key.1 > best.1) {
                    best = key;
                }
            }
            best.2
        })
    }
}

fn round_key(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn nearest(vertices: &[[f64; 3]], target: [f64; 2], keep: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in vertices.iter().enumerate() {
        if !keep(i) {
            continue;
        }
        let d = (v[0] - target[0]).powi(2) + (v[1] - target[1]).powi(2);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn build_hinges(faces: &[[usize; 3]]) -> Result<Vec<Hinge>> {
    let mut edges: HashMap<(usize, usize), Vec<(usize, usize, [usize; 2])>> = HashMap::new();
    for (f, tri) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((f, c, [a, b]));
        }
    }
    let mut keys: Vec<_> = edges.keys().copied().collect();
    keys.sort_unstable();
    let mut hinges = Vec::new();
    for key in keys {
        let adj = &edges[&key];
        match adj.len() {
            1 => {}
            2 => {
                let (f0, o0, dir0) = adj[0];
                let (f1, o1, dir1) = adj[1];
                if dir0 == dir1 {
                    return Err(Error::Geometry(format!(
                        "faces {f0} and {f1} have inconsistent orientation"
                    )));
                }
                hinges.push(Hinge { edge: dir0, faces: [f0, f1], opposite: [o0, o1] });
            }
            n => {
                return Err(Error::Geometry(format!(
                    "edge {key:?} is shared by {n} faces (non-manifold)"
                )))
            }
        }
    }
    Ok(hinges)
}

/// Triangulates the substrate footprint with edges of about
/// `target_edge_length` and flags faces whose centroid lies in the pattern.
///
/// Squares use a four-triangles-per-cell grid with one vertex per cell
/// center; circles use concentric rings with 8k vertices on ring k. Both
/// are invariant under reflection about the coordinate axes and diagonals.
pub fn generate_mesh(pattern: &KirigamiPattern, substrate: &SubstrateShape, target_edge_length: f64) -> Result<TriMesh> {
    pattern.validate()?;
    substrate.validate()?;
    if !(target_edge_length > 0.0 && target_edge_length.is_finite()) {
        return domain(format!("edge length must be positive, got {target_edge_length}"));
    }
    if let Some(feature) = pattern.feature_size() {
        if target_edge_length > feature / 4.0 {
            return Err(Error::Resolution { edge_length: target_edge_length, max_edge_length: feature / 4.0 });
        }
    }
    let (vertices, faces) = match *substrate {
        SubstrateShape::Square { side } => square_grid(side, target_edge_length),
        SubstrateShape::Circle { radius } => polar_rings(radius, target_edge_length),
    };
    let polygons = pattern.polygons();
    let covered = faces
        .iter()
        .map(|f| {
            let c = [0usize, 1].map(|k| f.iter().map(|&v| vertices[v][k]).sum::<f64>() / 3.0);
            polygons.iter().any(|p| super::geometry::contains(p, c))
        })
        .collect();
    TriMesh::from_faces(vertices, faces, covered)
}

fn square_grid(side: f64, h: f64) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let mut n = (side / h).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let step = side / n as f64;
    let half = 0.5 * side;
    let coord = |i: usize| -half + step * i as f64;
    let corner = |i: usize, j: usize| j * (n + 1) + i;
    let center_base = (n + 1) * (n + 1);
    let center = |i: usize, j: usize| center_base + j * n + i;

    let mut vertices = Vec::with_capacity(center_base + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([coord(i), coord(j), 0.0]);
        }
    }
    for j in 0..n {
        for i in 0..n {
            vertices.push([-half + step * (i as f64 + 0.5), -half + step * (j as f64 + 0.5), 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
            let c = center(i, j);
            faces.push([v00, v10, c]);
            faces.push([v10, v11, c]);
            faces.push([v11, v01, c]);
            faces.push([v01, v00, c]);
        }
    }
    (vertices, faces)
}

fn polar_rings(radius: f64, h: f64) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let rings = (radius / h).ceil().max(1.0) as usize;
    let dr = radius / rings as f64;
    let mut vertices = vec![[0.0, 0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        let count = 8 * k;
        for j in 0..count {
            let t = std::f64::consts::TAU * j as f64 / count as f64;
            let r = dr * k as f64;
            vertices.push([r * t.cos(), r * t.sin(), 0.0]);
        }
    }
    let mut faces = Vec::new();
    for j in 0..8 {
        faces.push([0, 1 + j, 1 + (j + 1) % 8]);
    }
    for k in 1..rings {
        let (n_in, n_out) = (8 * k, 8 * (k + 1));
        let (s_in, s_out) = (ring_start[k], ring_start[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < n_in || j < n_out {
            // advance along whichever ring has the smaller next angle
            let next_in = (i + 1) as f64 / n_in as f64;
            let next_out = (j + 1) as f64 / n_out as f64;
            if j < n_out && (i >= n_in || next_out <= next_in) {
                faces.push([s_in + i % n_in, s_out + j, s_out + (j + 1) % n_out]);
                j += 1;
            } else {
                faces.push([s_in + i, s_out + j % n_out, s_in + (i + 1) % n_in]);
                i += 1;
            }
        }
    }
    (vertices, faces)
}

/// Assigns the layer rest metrics for pre-stretch `lambda`: the substrate is
/// at rest at 1/λ of its planar size everywhere, and the face sheets are at
/// rest in the planar state on covered faces.
pub fn assign_rest_metrics(mesh: &TriMesh, lambda: f64) -> Result<TriMesh> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return domain(format!("prestretch must be >= 1, got {lambda}"));
    }
    let planar = mesh.planar_metrics();
    let scale = 1.0 / (lambda * lambda);
    let mut out = mesh.clone();
    out.rest_metric_substrate = planar.iter().map(|m| m.scaled(scale)).collect();
    out.rest_metric_face = planar
        .iter()
        .zip(&mesh.face_covered)
        .map(|(m, &c)| c.then_some(*m))
        .collect();
    out.prestretch = lambda;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross_mesh(h: f64) -> TriMesh {
        let cross = KirigamiPattern::cross(60.0, 20.0).unwrap();
        generate_mesh(&cross, &SubstrateShape::Square { side: 60.0 }, h).unwrap()
    }

    #[test]
    fn bare_square_structure() {
        let m = generate_mesh(&KirigamiPattern::empty(), &SubstrateShape::Square { side: 10.0 }, 5.0).unwrap();
        assert!(m.faces.len() >= 8);
        assert!(m.face_covered.iter().all(|&c| !c));
        assert!(m.rest_metric_face.iter().all(Option::is_none));
    }

    #[test]
    fn mesh_quality_and_topology() {
        for m in [
            cross_mesh(2.5),
            generate_mesh(&KirigamiPattern::empty(), &SubstrateShape::Circle { radius: 25.0 }, 2.0).unwrap(),
        ] {
            assert!(m.min_angle_degrees() > 15.0, "{}", m.min_angle_degrees());
            assert_eq!(m.euler_characteristic(), 1);
            let mut sorted: Vec<_> = m.vertices.iter().map(|v| (v[0].to_bits(), v[1].to_bits())).collect();
            sorted.sort_unstable();
            let before = sorted.len();
            sorted.dedup();
            assert_eq!(before, sorted.len(), "duplicate vertices");
            assert!(m.rest_metric_substrate.iter().all(|r| r.det() > 0.0 && r.a11 > 0.0));
        }
    }

    #[test]
    fn covered_fraction_tracks_exact_coverage() {
        let m = cross_mesh(2.5);
        let exact = 2000.0 / 3600.0;
        assert!((m.covered_fraction() - exact).abs() < 0.02 * exact);
        // an arm width that does not align with the grid
        let cross = KirigamiPattern::cross(60.0, 17.0).unwrap();
        let sub = SubstrateShape::Square { side: 60.0 };
        let m = generate_mesh(&cross, &sub, 2.0).unwrap();
        let exact = super::super::coverage_fraction(&cross, &sub).unwrap();
        assert!((m.covered_fraction() - exact).abs() < 0.02 * exact, "{} vs {exact}", m.covered_fraction());
    }

    #[test]
    fn meshes_are_mirror_symmetric() {
        let circle = generate_mesh(&KirigamiPattern::empty(), &SubstrateShape::Circle { radius: 10.0 }, 1.3).unwrap();
        for m in [cross_mesh(3.0), circle] {
            let reflections: [fn([f64; 3]) -> [f64; 3]; 3] =
                [|v| [-v[0], v[1], v[2]], |v| [v[0], -v[1], v[2]], |v| [v[1], v[0], v[2]]];
            for r in reflections {
                for v in &m.vertices {
                    let w = r(*v);
                    let found = m.vertices.iter().any(|u| (0..3).all(|k| (u[k] - w[k]).abs() < 1e-9));
                    assert!(found, "no mirror image for {v:?}");
                }
            }
        }
    }

    #[test]
    fn coarse_mesh_cannot_resolve_arms() {
        let cross = KirigamiPattern::cross(60.0, 20.0).unwrap();
        assert!(matches!(
            generate_mesh(&cross, &SubstrateShape::Square { side: 60.0 }, 6.0),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn hinges_reference_two_faces() {
        let m = cross_mesh(5.0);
        for h in &m.hinges {
            for (k, &f) in h.faces.iter().enumerate() {
                let tri = m.faces[f];
                assert!(tri.contains(&h.edge[0]) && tri.contains(&h.edge[1]) && tri.contains(&h.opposite[k]));
            }
        }
        // interior edges = E − boundary edges
        let n = 12; // 60 / 5
        assert_eq!(m.hinges.len(), m.num_edges() - 4 * n);
    }

    #[test]
    fn rest_metrics() {
        let m = cross_mesh(5.0);
        let same = assign_rest_metrics(&m, 1.0).unwrap();
        assert_eq!(same, m);
        let planar = m.planar_metrics();
        let two = assign_rest_metrics(&m, 2.0).unwrap();
        for (r, p) in two.rest_metric_substrate.iter().zip(&planar) {
            // edge lengths halve
            assert!((r.a11.sqrt() - 0.5 * p.a11.sqrt()).abs() < 1e-12);
            assert!((r.triangle_area() - 0.25 * p.triangle_area()).abs() < 1e-12);
        }
        for (f, r) in two.rest_metric_face.iter().enumerate() {
            assert_eq!(r.is_some(), m.face_covered[f]);
            if let Some(r) = r {
                assert_eq!(*r, planar[f]);
            }
        }
        let again = assign_rest_metrics(&two, 1.0).unwrap();
        assert_eq!(again.rest_metric_substrate, planar);
        assert!(assign_rest_metrics(&m, 0.9).is_err());
    }

    #[test]
    fn arm_tips_are_on_the_axes() {
        let m = cross_mesh(2.5);
        let tips = m.arm_tips();
        let expected = [[30.0, 0.0], [0.0, 30.0], [-30.0, 0.0], [0.0, -30.0]];
        for (t, e) in tips.iter().zip(expected) {
            let v = m.vertices[*t];
            assert!((v[0] - e[0]).abs() < 1e-9 && (v[1] - e[1]).abs() < 1e-9, "{v:?}");
        }
        assert_eq!(m.vertices[m.center_vertex()], [0.0, 0.0, 0.0]);
    }
}
