//! Second derivatives of the shell energy, assembled as sparse triplets.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{MatMut, Par, Side};

use super::lbfgs::Preconditioner;
use super::model::{dot, hinge_angle_gradient, sub, HingeElement, MembraneElement, ShellModel, Vec3};
use crate::error::{Error, Result};

/// (row, column, value) entries of the lower triangle (row ≥ column) of a
/// symmetric matrix; duplicates add up.
pub type Triplets = Vec<(usize, usize, f64)>;

impl ShellModel {
    /// Hessian of the elastic energy. Membrane blocks are exact; the bending
    /// part is Σ_v J_vᵀJ_v + Σ_e (Gθ)_e·∇²θ_e, with J_v = Σ r_e ∇θ_eᵀ over the
    /// vertex stencil and ∇²θ_e from central differences of the analytic
    /// angle gradient.
    pub fn hessian_triplets(&self, x: &[Vec3]) -> Result<Triplets> {
        let mut out = Vec::with_capacity(81 * self.membrane.len() + 144 * self.hinges.len());
        for el in &self.membrane {
            membrane_hessian(el, x, &mut out)?;
        }
        let step = 1e-6 * self.length_scale;
        let mut scratch = x.to_vec();
        let angles: Vec<(f64, [Vec3; 4])> = self.hinges.iter().map(|h| hinge_angle_gradient(x, h.verts)).collect();
        let theta: Vec<f64> = angles.iter().map(|a| a.0).collect();
        let moments = self.bending_moments(&theta);
        for (h, m) in self.hinges.iter().zip(moments) {
            hinge_curvature_hessian(h, &mut scratch, step, m, &mut out);
        }
        let mut dofs: Vec<usize> = Vec::new();
        let mut rows: Vec<[f64; 3]> = Vec::new();
        for stencil in &self.stencils {
            dofs.clear();
            rows.clear();
            for &(e, r) in stencil {
                for (&v, dv) in self.hinges[e].verts.iter().zip(&angles[e].1) {
                    for k in 0..3 {
                        let dof = 3 * v + k;
                        let slot = match dofs.iter().position(|&d| d == dof) {
                            Some(i) => i,
                            None => {
                                dofs.push(dof);
                                rows.push([0.0; 3]);
                                dofs.len() - 1
                            }
                        };
                        for c in 0..3 {
                            rows[slot][c] += r[c] * dv[k];
                        }
                    }
                }
            }
            for (i, &di) in dofs.iter().enumerate() {
                for (j, &dj) in dofs.iter().enumerate() {
                    if di >= dj {
                        out.push((di, dj, dot(rows[i], rows[j])));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Sparse Cholesky factor of the Hessian, shifted by a multiple of its mean
/// diagonal until positive definite. Fixed dofs get identity rows.
pub(crate) struct HessianPreconditioner<'a> {
    model: &'a ShellModel,
    fixed: &'a [bool],
    /// Diagonal shift of the last successful factorization.
    shift: f64,
    factor: Option<Llt<usize, f64>>,
    pos: Vec<Vec3>,
    pattern: Option<Pattern>,
}

/// Lower-triangle structure reused across refreshes: the entry order of the
/// assembled values, the matrix structure, and its symbolic factorization.
struct Pattern {
    entries: usize,
    structure: SymbolicSparseColMat<usize>,
    order: Argsort<usize>,
    symbolic: SymbolicLlt<usize>,
}

impl<'a> HessianPreconditioner<'a> {
    pub fn new(model: &'a ShellModel, fixed: &'a [bool]) -> Self {
        // sequential factorization keeps every solve bitwise reproducible
        faer::set_global_parallelism(Par::Seq);
        Self { model, fixed, shift: 0.0, factor: None, pos: vec![[0.0; 3]; model.num_vertices()], pattern: None }
    }

    fn pattern(&mut self, n: usize, indices: &[Pair<usize, usize>]) -> Option<&Pattern> {
        if self.pattern.as_ref().is_none_or(|p| p.entries != indices.len()) {
            let (structure, order) = SymbolicSparseColMat::try_new_from_indices(n, n, indices).ok()?;
            let symbolic = SymbolicLlt::try_new(structure.as_ref(), Side::Lower).ok()?;
            self.pattern = Some(Pattern { entries: indices.len(), structure, order, symbolic });
        }
        self.pattern.as_ref()
    }
}

const MAX_SHIFT_TRIES: usize = 16;

impl Preconditioner for HessianPreconditioner<'_> {
    fn refresh(&mut self, x: &[f64]) -> bool {
        self.pos.as_flattened_mut().copy_from_slice(x);
        self.factor = None;
        let Ok(entries) = self.model.hessian_triplets(&self.pos) else {
            return false;
        };
        let n = x.len();
        let mut diag = vec![0.0; n];
        let mut indices = Vec::with_capacity(entries.len() / 2 + n);
        let mut values = Vec::with_capacity(entries.len() / 2 + n);
        for (i, j, v) in entries {
            if self.fixed[i] || self.fixed[j] {
                continue;
            }
            if i == j {
                diag[i] += v;
            } else {
                indices.push(Pair::new(i, j));
                values.push(v);
            }
        }
        let base = values.len();
        indices.extend((0..n).map(|i| Pair::new(i, i)));
        values.resize(base + n, 0.0);
        let free = self.fixed.iter().filter(|f| !**f).count().max(1);
        let mean_diag = diag.iter().zip(self.fixed).filter(|(_, f)| !**f).map(|(d, _)| d.abs()).sum::<f64>() / free as f64;
        let fixed = self.fixed;
        let mut mu = if self.shift > 0.0 { 0.25 * self.shift } else { 0.0 };
        let Some(pattern) = self.pattern(n, &indices) else {
            return false;
        };
        for _ in 0..MAX_SHIFT_TRIES {
            for (i, &d) in diag.iter().enumerate() {
                values[base + i] = if fixed[i] { mean_diag.max(1.0) } else { d + mu };
            }
            let factor = SparseColMat::new_from_argsort(pattern.structure.clone(), &pattern.order, &values)
                .ok()
                .and_then(|m| Llt::try_new_with_symbolic(pattern.symbolic.clone(), m.as_ref(), Side::Lower).ok());
            if let Some(f) = factor {
                self.factor = Some(f);
                self.shift = mu;
                return true;
            }
            mu = if mu == 0.0 { 1e-6 * mean_diag } else { 10.0 * mu };
        }
        false
    }

    fn apply(&mut self, v: &mut [f64]) {
        if let Some(f) = &self.factor {
            let n = v.len();
            f.solve_in_place(MatMut::from_column_major_slice_mut(v, n, 1));
        }
    }
}

fn membrane_hessian(el: &MembraneElement, x: &[Vec3], out: &mut Triplets) -> Result<()> {
    let [i0, i1, i2] = el.verts;
    let e = [sub(x[i1], x[i0]), sub(x[i2], x[i0])];
    let a = [dot(e[0], e[0]), dot(e[0], e[1]), dot(e[1], e[1])];
    let det_a = a[0] * a[2] - a[1] * a[1];
    if !(det_a > 0.0) || !det_a.is_finite() {
        return Err(Error::ElementInversion { face: el.face });
    }
    let r = el.rest_inv;
    let rd = el.rest_det;
    let tr = r.a11 * a[0] + 2.0 * r.a12 * a[1] + r.a22 * a[2];
    let det = det_a / rd;
    let (c1, c2) = (el.material.c1, el.material.c2);
    let w_tr = c1 + c2 / det;
    let w_det = -c1 / (det * det) + c2 - c2 * tr / (det * det);
    let w_tr_det = -c2 / (det * det);
    let w_det_det = 2.0 * (c1 + c2 * tr) / (det * det * det);

    // derivatives of tr and det with respect to (a11, a12, a22)
    let t = [r.a11, 2.0 * r.a12, r.a22];
    let d = [a[2] / rd, -2.0 * a[1] / rd, a[0] / rd];
    let h_det = [[0.0, 0.0, 1.0 / rd], [0.0, -2.0 / rd, 0.0], [1.0 / rd, 0.0, 0.0]];
    let w_a: [f64; 3] = std::array::from_fn(|i| w_tr * t[i] + w_det * d[i]);
    let mut w_aa = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            w_aa[i][j] = w_tr_det * (t[i] * d[j] + d[i] * t[j]) + w_det_det * d[i] * d[j] + w_det * h_det[i][j];
        }
    }

    // J: ∂a/∂(e1, e2), rows a11, a12, a22
    let mut jac = [[0.0; 6]; 3];
    for k in 0..3 {
        jac[0][k] = 2.0 * e[0][k];
        jac[1][k] = e[1][k];
        jac[1][3 + k] = e[0][k];
        jac[2][3 + k] = 2.0 * e[1][k];
    }
    let mut h_e = [[0.0; 6]; 6];
    for p in 0..6 {
        for q in 0..6 {
            let mut v = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    v += jac[i][p] * w_aa[i][j] * jac[j][q];
                }
            }
            h_e[p][q] = v;
        }
    }
    for k in 0..3 {
        h_e[k][k] += 2.0 * w_a[0];
        h_e[3 + k][3 + k] += 2.0 * w_a[2];
        h_e[k][3 + k] += w_a[1];
        h_e[3 + k][k] += w_a[1];
    }

    // vertex coefficients of e1 and e2
    let coef = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    for (vi, &gi) in el.verts.iter().enumerate() {
        for (vj, &gj) in el.verts.iter().enumerate() {
            for a_ in 0..3 {
                for b_ in 0..3 {
                    let mut v = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            v += coef[vi][k] * coef[vj][l] * h_e[3 * k + a_][3 * l + b_];
                        }
                    }
                    let (r, c) = (3 * gi + a_, 3 * gj + b_);
                    if r >= c {
                        out.push((r, c, el.volume * v));
                    }
                }
            }
        }
    }
    Ok(())
}

/// moment·∇²θ for one hinge.
fn hinge_curvature_hessian(h: &HingeElement, x: &mut [Vec3], step: f64, moment: f64, out: &mut Triplets) {
    let mut second = [[0.0; 12]; 12];
    for j in 0..12 {
        let (v, k) = (h.verts[j / 3], j % 3);
        let orig = x[v][k];
        x[v][k] = orig + step;
        let (_, gp) = hinge_angle_gradient(x, h.verts);
        x[v][k] = orig - step;
        let (_, gm) = hinge_angle_gradient(x, h.verts);
        x[v][k] = orig;
        for i in 0..12 {
            second[i][j] = (gp[i / 3][i % 3] - gm[i / 3][i % 3]) / (2.0 * step);
        }
    }
    for i in 0..12 {
        for j in 0..12 {
            let sym = 0.5 * (second[i][j] + second[j][i]);
            let v = moment * sym;
            let (r, c) = (3 * h.verts[i / 3] + i % 3, 3 * h.verts[j / 3] + j % 3);
            if r >= c {
                out.push((r, c, v));
            }
        }
    }
}
