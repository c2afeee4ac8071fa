use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::hessian::HessianPreconditioner;
use super::lbfgs::{self, LbfgsOptions, LbfgsReport};
use super::model::{ShellModel, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeLabel {
    Mode1,
    Mode2,
    Unclassified,
}

/// Symmetry-breaking load pattern applied during the first solve phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    /// Uniform +z pressure.
    Positive,
    /// Uniform −z pressure.
    Negative,
    /// Alternating pressure on the arms: +z on the x arms and −z on the y arms
    /// when `x_arms_up`, reversed otherwise.
    Mode2 { x_arms_up: bool },
}

impl Seed {
    pub const GLOBAL: [Seed; 2] = [Seed::Positive, Seed::Negative];
    pub const ALL: [Seed; 4] = [Seed::Positive, Seed::Negative, Seed::Mode2 { x_arms_up: true }, Seed::Mode2 { x_arms_up: false }];

    pub fn name(&self) -> &'static str {
        match self {
            Seed::Positive => "positive",
            Seed::Negative => "negative",
            Seed::Mode2 { x_arms_up: true } => "mode2_x_up",
            Seed::Mode2 { x_arms_up: false } => "mode2_y_up",
        }
    }

    fn load(&self, model: &ShellModel, pressure: f64) -> Vec<Vec3> {
        let c = model.mesh.vertices[model.center];
        model
            .mesh
            .vertices
            .iter()
            .zip(&model.vertex_areas)
            .map(|(v, a)| {
                let s = match self {
                    Seed::Positive => 1.0,
                    Seed::Negative => -1.0,
                    Seed::Mode2 { x_arms_up } => {
                        let on_x = (v[0] - c[0]).abs() >= (v[1] - c[1]).abs();
                        if on_x == *x_arms_up {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                [0.0, 0.0, s * pressure * a]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the gradient norm, relative to Cₛ·L.
    pub tolerance: f64,
    /// Seed pressure relative to Cₛ/L.
    pub load_factor: f64,
    pub memory: usize,
    /// Largest per-coordinate step, relative to L.
    pub max_step: f64,
    /// Iterations between Hessian refactorizations; 0 disables the Hessian
    /// preconditioner (plain L-BFGS).
    pub hessian_refresh: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 20_000, tolerance: 1e-8, load_factor: 1e-4, memory: 10, max_step: 0.05, hessian_refresh: 5 }
    }
}

/// Converged configuration and its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub positions: Vec<Vec3>,
    pub energy_total: f64,
    pub energy_membrane: f64,
    pub energy_bending: f64,
    pub gradient_norm: f64,
    pub height: f64,
    pub sign: Sign,
    pub mode_label: ModeLabel,
    pub iterations: usize,
    pub evaluations: usize,
}

impl EquilibriumState {
    pub fn height_ratio(&self, length_scale: f64) -> f64 {
        self.height / length_scale
    }
}

/// Out-of-plane extent max z − min z (mm).
pub fn height_of(positions: &[Vec3]) -> f64 {
    let (lo, hi) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[2]), hi.max(p[2])));
    if positions.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Tip deflections relative to the center: (mean of ±x tips, mean of ±y tips).
fn tip_deflections(model: &ShellModel, x: &[Vec3]) -> (f64, f64) {
    let zc = x[model.center][2];
    let [px, py, mx, my] = model.tips.map(|t| x[t][2] - zc);
    (0.5 * (px + mx), 0.5 * (py + my))
}

/// Positive when the mean arm-tip z exceeds the center z.
pub fn sign_of(model: &ShellModel, x: &[Vec3]) -> Sign {
    let (dx, dy) = tip_deflections(model, x);
    if dx + dy > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Mode 2 when the x arms and y arms deflect in opposite directions.
pub fn mode_of(model: &ShellModel, x: &[Vec3]) -> ModeLabel {
    let tol = 1e-4 * model.length_scale;
    let (dx, dy) = tip_deflections(model, x);
    if height_of(x) < tol {
        ModeLabel::Unclassified
    } else if dx * dy < 0.0 && dx.abs() > tol && dy.abs() > tol {
        ModeLabel::Mode2
    } else {
        ModeLabel::Mode1
    }
}

/// Builds a classified state from positions (the gradient is evaluated
/// without load).
pub fn evaluate_state(model: &ShellModel, positions: Vec<Vec3>, iterations: usize, evaluations: usize) -> Result<EquilibriumState> {
    let mut g = vec![[0.0; 3]; positions.len()];
    let e = model.energy_and_gradient(&positions, &mut g)?;
    model.project(&mut g);
    let gradient_norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    Ok(EquilibriumState {
        energy_total: e.total(),
        energy_membrane: e.membrane,
        energy_bending: e.bending,
        gradient_norm,
        height: height_of(&positions),
        sign: sign_of(model, &positions),
        mode_label: mode_of(model, &positions),
        iterations,
        evaluations,
        positions,
    })
}

/// One quasi-static relaxation: minimizes elastic energy − load·x with the
/// gauge pins plus `held` dofs fixed. Returns the solver report.
pub(crate) fn relax(
    model: &ShellModel,
    x: &mut Vec<Vec3>,
    load: Option<&[Vec3]>,
    held: &[usize],
    opts: &SolverOptions,
    tolerance: f64,
) -> Result<LbfgsReport> {
    let mut fixed = vec![false; model.num_dofs()];
    for &d in model.pinned.iter().chain(held) {
        fixed[d] = true;
    }
    // surface an inverted start as an error instead of a stalled solve
    model.membrane_energy(x)?;
    let lopts = LbfgsOptions {
        memory: opts.memory,
        max_iterations: opts.max_iterations,
        gradient_tolerance: tolerance,
        max_step: opts.max_step * model.length_scale,
        refresh_every: opts.hessian_refresh,
    };
    let mut precond = HessianPreconditioner::new(model, &fixed);
    let precond: Option<&mut dyn lbfgs::Preconditioner> = if opts.hessian_refresh > 0 { Some(&mut precond) } else { None };
    let flat = x.as_flattened_mut();
    let mut pos = vec![[0.0; 3]; model.num_vertices()];
    let mut grad = vec![[0.0; 3]; model.num_vertices()];
    let report = lbfgs::minimize(flat, &fixed, &lopts, precond, |xf, gf| {
        pos.as_flattened_mut().copy_from_slice(xf);
        let e = model.energy_and_gradient(&pos, &mut grad).ok()?;
        let mut total = e.total();
        if let Some(f) = load {
            for ((p, gv), fv) in pos.iter().zip(grad.iter_mut()).zip(f) {
                for k in 0..3 {
                    total -= fv[k] * p[k];
                    gv[k] -= fv[k];
                }
            }
        }
        gf.copy_from_slice(grad.as_flattened());
        Some(total)
    });
    report.ok_or_else(|| Error::Domain("objective undefined at the start point".into()))
}

/// Two-phase equilibrium search: relax under the seed's small transverse
/// pressure, then remove it and relax again.
pub fn minimize(model: &ShellModel, start: &[Vec3], seed: Seed, opts: &SolverOptions) -> Result<EquilibriumState> {
    let tol = opts.tolerance * model.force_scale();
    let pressure = opts.load_factor * model.membrane_stiffness / model.length_scale;
    let load = seed.load(model, pressure);
    let mut x = start.to_vec();
    let first = relax(model, &mut x, Some(&load), &[], opts, 100.0 * tol)?;
    let second = relax(model, &mut x, None, &[], opts, tol)?;
    let iterations = first.iterations + second.iterations;
    let evaluations = first.evaluations + second.evaluations;
    let state = evaluate_state(model, x, iterations, evaluations)?;
    if second.converged {
        Ok(state)
    } else {
        Err(Error::NonConvergence { iterations, gradient_norm: state.gradient_norm, last_state: Box::new(state) })
    }
}

/// Largest vertex distance between two configurations after the optimal
/// proper rigid alignment of `b` onto `a` (Kabsch).
pub fn aligned_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let centroid = |p: &[Vec3]| p.iter().fold(Vector3::zeros(), |acc, v| acc + Vector3::from(*v)) / n;
    let (ca, cb) = (centroid(a), centroid(b));
    let mut cov = Matrix3::zeros();
    for (pa, pb) in a.iter().zip(b) {
        cov += (Vector3::from(*pb) - cb) * (Vector3::from(*pa) - ca).transpose();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (v_t.transpose() * u.transpose()).determinant().signum();
    let rot = v_t.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    a.iter()
        .zip(b)
        .map(|(pa, pb)| (rot * (Vector3::from(*pb) - cb) - (Vector3::from(*pa) - ca)).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug)]
pub struct StableStates {
    pub states: Vec<EquilibriumState>,
    /// Seeds whose solve failed, with the error.
    pub failures: Vec<(Seed, Error)>,
    /// For each seed, index into `states` of the state it reached.
    pub seed_states: Vec<(Seed, Option<usize>)>,
}

/// Solves from the planar configuration for each seed and removes duplicate
/// equilibria (aligned distance below 1e−3·L).
pub fn find_stable_states(model: &ShellModel, seeds: &[Seed], opts: &SolverOptions) -> StableStates {
    let start = model.planar_positions();
    let mut out = StableStates { states: Vec::new(), failures: Vec::new(), seed_states: Vec::new() };
    let threshold = 1e-3 * model.length_scale;
    for &seed in seeds {
        match minimize(model, &start, seed, opts) {
            Ok(state) => {
                let found = out.states.iter().position(|s| aligned_distance(&s.positions, &state.positions) < threshold);
                let idx = found.unwrap_or_else(|| {
                    out.states.push(state);
                    out.states.len() - 1
                });
                out.seed_states.push((seed, Some(idx)));
            }
            Err(e) => {
                out.failures.push((seed, e));
                out.seed_states.push((seed, None));
            }
        }
    }
    out
}
