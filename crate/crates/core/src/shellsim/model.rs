//! Discrete-shell energy of the trilayer mid-surface.
//!
//! Membrane: every face carries the substrate layer at its pre-stretched rest
//! metric and, when covered, the two face sheets at their planar rest metric.
//! Each layer stores an incompressible plane-stress Mooney–Rivlin energy
//! W(tr C, det C) integrated over rest area × thickness.
//!
//! Bending: every face gets a shape operator from the dihedral angles θ of
//! its interior edges, S_f = Σ θ_e·|e|/(2A_f)·n_e n_eᵀ (n_e the in-plane edge
//! normal in the flat reference). Each vertex averages the operators of its
//! faces by area and stores A_v·D_v/2·((tr S)² − 2(1−ν)·det S), A_v one third
//! of the adjacent area.
//!
//! Averaging lets ridge and valley folds cancel, so a grid-scale checkerboard
//! of folds would cost nothing. Each hinge therefore also stores
//! w·D·|e|²/(A₁ + A₂)·(θ_e − c_e : S̄_e)², where c_e is the linear response of
//! θ_e to a quadratic height field and S̄_e the mean shape operator of the
//! interior vertices among the four hinge vertices. The term vanishes for
//! every quadratic field wherever those operators are exact.
//!
//! S is linear in θ, so the whole bending energy is ½·θᵀGθ with a constant
//! sparse symmetric coupling G between hinges.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laminate::{covered_trilayer_stiffness, membrane_stiffness, plate_bending_stiffness, LayerSpec, TrilayerSpec};
use crate::materials::MooneyRivlin;
use crate::pattern::{Metric2, TriMesh};

pub type Vec3 = [f64; 3];

/// Weight w of the hourglass term.
const HOURGLASS_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone)]
pub(crate) struct MembraneElement {
    pub face: usize,
    pub verts: [usize; 3],
    pub rest_inv: Metric2,
    pub rest_det: f64,
    pub volume: f64,
    pub material: MooneyRivlin,
}

#[derive(Debug, Clone)]
pub(crate) struct HingeElement {
    /// Edge endpoints a, b followed by the opposite vertices c (face 0) and d (face 1).
    pub verts: [usize; 4],
}

/// Energy split of a configuration (µJ).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub membrane: f64,
    pub bending: f64,
    /// Potential of applied loads, −f·x.
    pub external: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.membrane + self.bending + self.external
    }
}

/// Discretized trilayer ready for energy evaluation.
#[derive(Debug, Clone)]
pub struct ShellModel {
    pub mesh: TriMesh,
    pub substrate: LayerSpec,
    pub face: LayerSpec,
    pub poisson: f64,
    /// Bending stiffness D at each vertex, area-weighted over its faces (µJ).
    pub vertex_bending_stiffness: Vec<f64>,
    /// Constrained degrees of freedom (3·vertex + axis).
    pub pinned: Vec<usize>,
    pub center: usize,
    pub tips: [usize; 4],
    /// Substrate membrane stiffness Cₛ (mN/mm).
    pub membrane_stiffness: f64,
    /// In-plane size L used for tolerances and H/L (mm).
    pub length_scale: f64,
    /// Lumped (one third of adjacent planar face area) vertex areas (mm²).
    pub vertex_areas: Vec<f64>,
    pub(crate) membrane: Vec<MembraneElement>,
    pub(crate) hinges: Vec<HingeElement>,
    /// Rows of the hinge coupling G as (hinge, value), sorted by hinge.
    pub(crate) coupling: Vec<Vec<(usize, f64)>>,
    /// Per vertex and then per hinge, a list of (hinge, r_e) such that the
    /// stencil energy is ½·|Σ θ_e r_e|².
    pub(crate) stencils: Vec<Vec<(usize, [f64; 3])>>,
}

impl ShellModel {
    /// Builds the model from a mesh whose rest metrics are already assigned.
    /// `length_scale` is the in-plane size used to normalize heights.
    pub fn new(mesh: TriMesh, substrate: LayerSpec, face: LayerSpec, poisson: f64, length_scale: f64) -> Result<Self> {
        // validates layers and ν
        TrilayerSpec::new(substrate, face, mesh.prestretch, 0.0, poisson)?;
        if !(length_scale > 0.0) {
            return domain(format!("length scale must be positive, got {length_scale}"));
        }
        let c_s = membrane_stiffness(&substrate, poisson)?;
        let d_bare = plate_bending_stiffness(&substrate, poisson)?;
        let d_covered = covered_trilayer_stiffness(&TrilayerSpec::new(substrate, face, mesh.prestretch, 1.0, poisson)?)?;

        let mut membrane = Vec::with_capacity(2 * mesh.faces.len());
        for (f, verts) in mesh.faces.iter().enumerate() {
            let layers = [
                Some((mesh.rest_metric_substrate[f], substrate)),
                mesh.rest_metric_face[f].map(|m| (m, LayerSpec { thickness: 2.0 * face.thickness, ..face })),
            ];
            for (metric, layer) in layers.into_iter().flatten() {
                let rest_inv = metric
                    .inverse()
                    .ok_or_else(|| Error::Geometry(format!("rest metric of face {f} is not positive definite")))?;
                membrane.push(MembraneElement {
                    face: f,
                    verts: *verts,
                    rest_inv,
                    rest_det: metric.det(),
                    volume: metric.triangle_area() * layer.thickness,
                    material: layer.material,
                });
            }
        }

        let areas = mesh.face_areas();
        let face_d: Vec<f64> = mesh.face_covered.iter().map(|&c| if c { d_covered } else { d_bare }).collect();
        let hinges: Vec<HingeElement> =
            mesh.hinges.iter().map(|h| HingeElement { verts: [h.edge[0], h.edge[1], h.opposite[0], h.opposite[1]] }).collect();
        let (stencils, vertex_bending_stiffness) = bending_stencils(&mesh, &areas, &face_d, poisson);
        let coupling = coupling_of(&stencils, mesh.hinges.len());

        let mut vertex_areas = vec![0.0; mesh.vertices.len()];
        for (f, tri) in mesh.faces.iter().enumerate() {
            for &v in tri {
                vertex_areas[v] += areas[f] / 3.0;
            }
        }

        let center = mesh.center_vertex();
        let tips = mesh.arm_tips();
        let pinned = gauge_dofs(&mesh, center);

        Ok(Self {
            mesh,
            substrate,
            face,
            poisson,
            vertex_bending_stiffness,
            pinned,
            center,
            tips,
            membrane_stiffness: c_s,
            length_scale,
            vertex_areas,
            membrane,
            hinges,
            coupling,
            stencils,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.vertices.len()
    }

    pub fn num_dofs(&self) -> usize {
        3 * self.num_vertices()
    }

    /// Planar (bonded) configuration.
    pub fn planar_positions(&self) -> Vec<Vec3> {
        self.mesh.vertices.clone()
    }

    /// Scale of the convergence tolerance, Cₛ·L (mN).
    pub fn force_scale(&self) -> f64 {
        self.membrane_stiffness * self.length_scale
    }

    /// Multiplies the bending stiffness everywhere by `factor`.
    pub fn scale_bending(&mut self, factor: f64) {
        self.coupling.iter_mut().flatten().for_each(|(_, g)| *g *= factor);
        let root = factor.max(0.0).sqrt();
        self.stencils.iter_mut().flatten().for_each(|(_, r)| *r = r.map(|v| v * root));
        self.vertex_bending_stiffness.iter_mut().for_each(|d| *d *= factor);
    }

    /// Dihedral angle of every hinge.
    pub fn hinge_angles(&self, x: &[Vec3]) -> Vec<f64> {
        self.hinges.iter().map(|h| dihedral(x, h.verts).0).collect()
    }

    /// Gθ, the bending energy's derivative with respect to each hinge angle.
    pub(crate) fn bending_moments(&self, theta: &[f64]) -> Vec<f64> {
        self.coupling.iter().map(|row| row.iter().map(|&(e, g)| g * theta[e]).sum()).collect()
    }

    /// Membrane energy of all layers (µJ).
    pub fn membrane_energy(&self, x: &[Vec3]) -> Result<f64> {
        let mut e = Kahan::default();
        for el in &self.membrane {
            e.add(membrane_element(el, x, None)?);
        }
        Ok(e.sum)
    }

    /// Bending energy ½·θᵀGθ (µJ).
    pub fn bending_energy(&self, x: &[Vec3]) -> f64 {
        let theta = self.hinge_angles(x);
        let moments = self.bending_moments(&theta);
        let mut e = Kahan::default();
        for (t, m) in theta.iter().zip(&moments) {
            e.add(0.5 * t * m);
        }
        e.sum
    }

    /// Energy and its gradient (mN) with respect to every coordinate. The
    /// gradient is not projected; see [`Self::project`].
    pub fn energy_and_gradient(&self, x: &[Vec3], grad: &mut [Vec3]) -> Result<EnergyBreakdown> {
        assert_eq!(grad.len(), x.len());
        grad.fill([0.0; 3]);
        let (mut membrane, mut bending) = (Kahan::default(), Kahan::default());
        for el in &self.membrane {
            membrane.add(membrane_element(el, x, Some(grad))?);
        }
        let angles: Vec<(f64, [Vec3; 4])> = self.hinges.iter().map(|h| hinge_angle_gradient(x, h.verts)).collect();
        let theta: Vec<f64> = angles.iter().map(|a| a.0).collect();
        let moments = self.bending_moments(&theta);
        for ((h, (t, dt)), m) in self.hinges.iter().zip(&angles).zip(&moments) {
            bending.add(0.5 * t * m);
            for (&v, dv) in h.verts.iter().zip(dt) {
                axpy(&mut grad[v], *m, *dv);
            }
        }
        Ok(EnergyBreakdown { membrane: membrane.sum, bending: bending.sum, external: 0.0 })
    }

    /// Total elastic energy and projected gradient (zero on pinned dofs).
    pub fn total_energy_and_gradient(&self, x: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let mut g = vec![[0.0; 3]; x.len()];
        let e = self.energy_and_gradient(x, &mut g)?;
        self.project(&mut g);
        Ok((e.total(), g))
    }

    /// Zeroes the pinned components of a per-vertex vector.
    pub fn project(&self, g: &mut [Vec3]) {
        for &dof in &self.pinned {
            g[dof / 3][dof % 3] = 0.0;
        }
    }

    /// Uniform transverse pressure `pressure` (kPa) lumped to the vertices.
    pub fn pressure_load(&self, pressure: f64) -> Vec<Vec3> {
        self.vertex_areas.iter().map(|a| [0.0, 0.0, pressure * a]).collect()
    }
}

/// Center fully pinned, plus the nearest vertices on the +x and +y axes:
/// the +x one pinned in y and z, the +y one in z. This removes the six rigid
/// motions while leaving the buckled shape free when the tangent plane at the
/// center is horizontal.
fn gauge_dofs(mesh: &TriMesh, center: usize) -> Vec<usize> {
    let c = mesh.vertices[center];
    let on_axis = |axis: usize| {
        let other = 1 - axis;
        mesh.nearest_vertex([c[0], c[1]], |i| {
            let v = mesh.vertices[i];
            i != center && v[axis] > c[axis] && (v[other] - c[other]).abs() < 1e-9
        })
        .or_else(|| mesh.nearest_vertex([c[0], c[1]], |i| i != center && mesh.vertices[i][axis] > c[axis]))
    };
    let mut dofs = vec![3 * center, 3 * center + 1, 3 * center + 2];
    if let Some(vx) = on_axis(0) {
        dofs.extend([3 * vx + 1, 3 * vx + 2]);
    }
    if let Some(vy) = on_axis(1) {
        dofs.push(3 * vy + 2);
    }
    dofs.sort_unstable();
    dofs.dedup();
    dofs
}

/// Compensated running sum.
#[derive(Default)]
pub(crate) struct Kahan {
    pub sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(y: &mut Vec3, s: f64, x: Vec3) {
    y[0] += s * x[0];
    y[1] += s * x[1];
    y[2] += s * x[2];
}

fn membrane_element(el: &MembraneElement, x: &[Vec3], grad: Option<&mut [Vec3]>) -> Result<f64> {
    let [i0, i1, i2] = el.verts;
    let e1 = sub(x[i1], x[i0]);
    let e2 = sub(x[i2], x[i0]);
    let a11 = dot(e1, e1);
    let a12 = dot(e1, e2);
    let a22 = dot(e2, e2);
    let det_a = a11 * a22 - a12 * a12;
    if !(det_a > 0.0) || !det_a.is_finite() {
        return Err(Error::ElementInversion { face: el.face });
    }
    let r = el.rest_inv;
    // C = ā⁻¹a
    let trace = r.a11 * a11 + 2.0 * r.a12 * a12 + r.a22 * a22;
    let det = det_a / el.rest_det;
    let energy = el.volume * el.material.plane_stress_energy(trace, det);
    if let Some(g) = grad {
        let (w_tr, w_det) = el.material.plane_stress_energy_partials(trace, det);
        // ∂W/∂a = W_tr·ā⁻¹ + W_det·det·a⁻¹
        let s11 = el.volume * (w_tr * r.a11 + w_det * det * a22 / det_a);
        let s12 = el.volume * (w_tr * r.a12 - w_det * det * a12 / det_a);
        let s22 = el.volume * (w_tr * r.a22 + w_det * det * a11 / det_a);
        let mut g1 = [0.0; 3];
        axpy(&mut g1, 2.0 * s11, e1);
        axpy(&mut g1, 2.0 * s12, e2);
        let mut g2 = [0.0; 3];
        axpy(&mut g2, 2.0 * s12, e1);
        axpy(&mut g2, 2.0 * s22, e2);
        axpy(&mut g[i1], 1.0, g1);
        axpy(&mut g[i2], 1.0, g2);
        axpy(&mut g[i0], -1.0, g1);
        axpy(&mut g[i0], -1.0, g2);
    }
    Ok(energy)
}

/// Signed dihedral angle at hinge (a, b; c, d) together with the unit
/// normals and unnormalized normal lengths of the two faces.
#[inline]
fn dihedral(x: &[Vec3], verts: [usize; 4]) -> (f64, Vec3, Vec3, f64, f64, Vec3) {
    let [a, b, c, d] = verts;
    let e = sub(x[b], x[a]);
    let n0 = cross(e, sub(x[c], x[a]));
    let n1 = cross(sub(x[a], x[b]), sub(x[d], x[b]));
    let l0 = norm(n0);
    let l1 = norm(n1);
    let u0 = n0.map(|v| v / l0);
    let u1 = n1.map(|v| v / l1);
    let le = norm(e);
    let sin = dot(cross(u0, u1), e) / le;
    let cos = dot(u0, u1);
    (sin.atan2(cos), u0, u1, l0, l1, e)
}

fn tri_area(x: &[Vec3], a: usize, b: usize, c: usize) -> f64 {
    0.5 * norm(cross(sub(x[b], x[a]), sub(x[c], x[a])))
}

/// Dihedral angle and its gradient with respect to (a, b, c, d).
pub(crate) fn hinge_angle_gradient(x: &[Vec3], verts: [usize; 4]) -> (f64, [Vec3; 4]) {
    let (theta, u0, u1, l0, l1, e) = dihedral(x, verts);
    let [a, _, c, d] = verts;
    let le2 = dot(e, e);
    let le = le2.sqrt();
    // heights of c and d over the edge are l0/|e| and l1/|e|
    let gc = u0.map(|v| -v * le / l0);
    let gd = u1.map(|v| -v * le / l1);
    let tc = dot(sub(x[c], x[a]), e) / le2;
    let td = dot(sub(x[d], x[a]), e) / le2;
    let ga = std::array::from_fn(|k| -(1.0 - tc) * gc[k] - (1.0 - td) * gd[k]);
    let gb = std::array::from_fn(|k| -tc * gc[k] - td * gd[k]);
    (theta, [ga, gb, gc, gd])
}

/// Per-vertex bending stencils and stiffness, see the module docs. With
/// s = Σ θ_e m_e the vertex shape operator as (s11, s22, s12), the vertex
/// energy A_v·D_v/2·((s11 + ν·s22)² + (1 − ν²)·s22² + 2(1 − ν)·s12²) is
/// ½·|Σ θ_e r_e|² for r_e = √(A_v·D_v)·(m11 + ν·m22, √(1 − ν²)·m22, √(2(1 − ν))·m12).
/// One hourglass stencil per hinge follows the vertex stencils.
fn bending_stencils(mesh: &TriMesh, areas: &[f64], face_d: &[f64], nu: f64) -> (Vec<Vec<(usize, [f64; 3])>>, Vec<f64>) {
    let mut edge_hinge = HashMap::with_capacity(mesh.hinges.len());
    for (i, h) in mesh.hinges.iter().enumerate() {
        let [a, b] = h.edge;
        edge_hinge.insert((a.min(b), a.max(b)), i);
    }
    // per hinge: (nx², ny², nx·ny)·|e|/2 in the flat reference
    let shape: Vec<[f64; 3]> = mesh
        .hinges
        .iter()
        .map(|h| {
            let e = sub(mesh.vertices[h.edge[1]], mesh.vertices[h.edge[0]]);
            let len = norm(e);
            let (nx, ny) = (-e[1] / len, e[0] / len);
            [0.5 * len * nx * nx, 0.5 * len * ny * ny, 0.5 * len * nx * ny]
        })
        .collect();
    let mut vertex_faces = vec![Vec::new(); mesh.vertices.len()];
    for (f, tri) in mesh.faces.iter().enumerate() {
        for &v in tri {
            vertex_faces[v].push(f);
        }
    }
    let (c2, c3) = ((1.0 - nu * nu).sqrt(), (2.0 * (1.0 - nu)).sqrt());
    let mut stencils = Vec::with_capacity(mesh.vertices.len());
    let mut vertex_d = vec![0.0; mesh.vertices.len()];
    let mut vertex_shape = Vec::with_capacity(mesh.vertices.len());
    for (v, faces) in vertex_faces.iter().enumerate() {
        let ring: f64 = faces.iter().map(|&f| areas[f]).sum();
        let mut local: Vec<(usize, f64)> = Vec::new();
        if ring > 0.0 {
            vertex_d[v] = faces.iter().map(|&f| areas[f] * face_d[f]).sum::<f64>() / ring;
            for &f in faces {
                let [a, b, c] = mesh.faces[f];
                for (p, q) in [(a, b), (b, c), (c, a)] {
                    let Some(&e) = edge_hinge.get(&(p.min(q), p.max(q))) else { continue };
                    match local.iter_mut().find(|(h, _)| *h == e) {
                        Some(entry) => entry.1 += 1.0,
                        None => local.push((e, 1.0)),
                    }
                }
            }
        }
        let root = (ring / 3.0 * vertex_d[v]).sqrt();
        let maps: Vec<(usize, [f64; 3])> = local.into_iter().map(|(e, count)| (e, shape[e].map(|s| s * count / ring))).collect();
        stencils.push(maps.iter().map(|&(e, m)| (e, [root * (m[0] + nu * m[1]), root * c2 * m[1], root * c3 * m[2]])).collect());
        vertex_shape.push(maps);
    }
    // Hourglass control: each hinge angle against the angle predicted by the
    // mean shape operator of its interior vertices.
    let mut edge_faces: HashMap<(usize, usize), usize> = HashMap::new();
    for &[a, b, c] in &mesh.faces {
        for (p, q) in [(a, b), (b, c), (c, a)] {
            *edge_faces.entry((p.min(q), p.max(q))).or_insert(0) += 1;
        }
    }
    let mut on_boundary = vec![false; mesh.vertices.len()];
    for (&(p, q), &n) in &edge_faces {
        if n == 1 {
            on_boundary[p] = true;
            on_boundary[q] = true;
        }
    }
    for (e, h) in mesh.hinges.iter().enumerate() {
        let [a, b] = h.edge;
        let verts = [a, b, h.opposite[0], h.opposite[1]];
        let (_, g) = hinge_angle_gradient(&mesh.vertices, verts);
        let mid = [0.5 * (mesh.vertices[a][0] + mesh.vertices[b][0]), 0.5 * (mesh.vertices[a][1] + mesh.vertices[b][1])];
        let mut response = [0.0; 3];
        for (k, &v) in verts.iter().enumerate() {
            let (x, y) = (mesh.vertices[v][0] - mid[0], mesh.vertices[v][1] - mid[1]);
            response[0] += g[k][2] * 0.5 * x * x;
            response[1] += g[k][2] * 0.5 * y * y;
            response[2] += g[k][2] * x * y;
        }
        let pair_area = tri_area(&mesh.vertices, a, b, h.opposite[0]) + tri_area(&mesh.vertices, a, b, h.opposite[1]);
        let len2 = dot(sub(mesh.vertices[b], mesh.vertices[a]), sub(mesh.vertices[b], mesh.vertices[a]));
        let d = 0.5 * (vertex_d[a] + vertex_d[b]);
        let root = (HOURGLASS_WEIGHT * d * len2 / pair_area).sqrt();
        let mut local: Vec<(usize, f64)> = vec![(e, root)];
        let inner: Vec<usize> = verts.iter().copied().filter(|&v| !on_boundary[v]).collect();
        let predictors = if inner.is_empty() { verts.to_vec() } else { inner };
        let share = root / predictors.len() as f64;
        for &v in &predictors {
            for &(e2, m) in &vertex_shape[v] {
                let c = share * dot(response, m);
                match local.iter_mut().find(|(h2, _)| *h2 == e2) {
                    Some(entry) => entry.1 += c,
                    None => local.push((e2, c)),
                }
            }
        }
        stencils.push(local.into_iter().map(|(e2, c)| (e2, [c, 0.0, 0.0])).collect());
    }
    (stencils, vertex_d)
}

/// G = Σ_v Σ r_e r_e'ᵀ over the stencils, as sorted rows.
fn coupling_of(stencils: &[Vec<(usize, [f64; 3])>], hinges: usize) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); hinges];
    for st in stencils {
        for &(e, r) in st {
            for &(e2, r2) in st {
                *rows[e].entry(e2).or_insert(0.0) += dot(r, r2);
            }
        }
    }
    rows.into_iter().map(|r| r.into_iter().collect()).collect()
}
