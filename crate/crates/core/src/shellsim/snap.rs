use serde::{Deserialize, Serialize};

use super::model::{ShellModel, Vec3};
use super::solve::{evaluate_state, relax, sign_of, EquilibriumState, SolverOptions};
use crate::error::{domain, Result};

/// Quasi-static force–displacement record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapCurve {
    /// Force on the actuated vertices along the push direction (mN).
    pub force: Vec<f64>,
    /// Displacement of the actuated vertices along the push direction (mm).
    pub displacement: Vec<f64>,
    /// Elastic energy (µJ).
    pub energy: Vec<f64>,
}

impl SnapCurve {
    pub fn len(&self) -> usize {
        self.force.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force.is_empty()
    }

    fn push(&mut self, force: f64, displacement: f64, energy: f64) -> bool {
        if self.displacement.last().is_some_and(|&d| displacement <= d) {
            return false;
        }
        self.force.push(force);
        self.displacement.push(displacement);
        self.energy.push(energy);
        true
    }

    /// True if some consecutive pair of samples has decreasing force.
    pub fn has_negative_stiffness(&self) -> bool {
        self.force.windows(2).any(|w| w[1] < w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SnapControl {
    /// Prescribe the actuated z coordinates in `steps` equal increments up to
    /// `range` (mm); `None` uses max(2.5·|tip offset|, 0.05·L).
    DisplacementSteps { steps: usize, range: Option<f64> },
    /// Increase the total actuation force in `steps` equal increments up to
    /// `max_force` (mN).
    ForceRamp { steps: usize, max_force: f64 },
}

impl Default for SnapControl {
    fn default() -> Self {
        SnapControl::DisplacementSteps { steps: 60, range: None }
    }
}

#[derive(Debug, Clone)]
pub struct SnapOutcome {
    pub curve: SnapCurve,
    /// The equilibrium reached after release, or the start state when no snap
    /// happened.
    pub final_state: EquilibriumState,
    pub snapped: bool,
}

fn mean_z(x: &[Vec3], verts: &[usize]) -> f64 {
    verts.iter().map(|&v| x[v][2]).sum::<f64>() / verts.len() as f64
}

/// Pushes `from` toward the opposite configuration through `actuation`
/// vertices (default: the four arm tips). After every increment where the
/// holding force has dropped to zero or below, the actuation is released and
/// the structure relaxed; the run ends once that release lands in the
/// opposite-sign state.
pub fn snap_through(
    model: &ShellModel,
    from: &EquilibriumState,
    control: SnapControl,
    actuation: Option<&[usize]>,
    opts: &SolverOptions,
) -> Result<SnapOutcome> {
    let verts: Vec<usize> = actuation.map(<[usize]>::to_vec).unwrap_or_else(|| model.tips.to_vec());
    if verts.is_empty() || verts.iter().any(|&v| v >= model.num_vertices()) {
        return domain("actuation vertices must be non-empty valid vertex indices");
    }
    let tol = opts.tolerance * model.force_scale();
    let dir = match from.sign {
        super::solve::Sign::Positive => -1.0,
        super::solve::Sign::Negative => 1.0,
    };
    let z0: Vec<f64> = verts.iter().map(|&v| from.positions[v][2]).collect();
    let z0_mean = mean_z(&from.positions, &verts);
    let displacement_of = |x: &[Vec3]| dir * (mean_z(x, &verts) - z0_mean);

    let mut curve = SnapCurve::default();
    curve.push(0.0, 0.0, from.energy_total);
    let mut x = from.positions.clone();
    let mut grad = vec![[0.0; 3]; x.len()];

    let release = |x: &[Vec3], curve: &mut SnapCurve| -> Result<Option<EquilibriumState>> {
        let mut y = x.to_vec();
        let report = relax(model, &mut y, None, &[], opts, tol)?;
        if !report.converged || sign_of(model, &y) == from.sign {
            return Ok(None);
        }
        let state = evaluate_state(model, y, report.iterations, report.evaluations)?;
        curve.push(0.0, displacement_of(&state.positions), state.energy_total);
        Ok(Some(state))
    };

    match control {
        SnapControl::DisplacementSteps { steps, range } => {
            if steps == 0 {
                return domain("snap control needs at least one step");
            }
            let offset = (z0_mean - from.positions[model.center][2]).abs();
            let range = range.unwrap_or((2.5 * offset).max(0.05 * model.length_scale));
            if !(range > 0.0) {
                return domain(format!("snap control range must be positive, got {range}"));
            }
            let held: Vec<usize> = verts.iter().map(|&v| 3 * v + 2).collect();
            for k in 1..=steps {
                let u = range * k as f64 / steps as f64;
                for (&v, &z) in verts.iter().zip(&z0) {
                    x[v][2] = z + dir * u;
                }
                relax(model, &mut x, None, &held, opts, tol)?;
                let e = model.energy_and_gradient(&x, &mut grad)?;
                let force: f64 = verts.iter().map(|&v| dir * grad[v][2]).sum();
                curve.push(force, u, e.total());
                if force <= 0.0 {
                    if let Some(state) = release(&x, &mut curve)? {
                        return Ok(SnapOutcome { curve, final_state: state, snapped: true });
                    }
                }
            }
        }
        SnapControl::ForceRamp { steps, max_force } => {
            if steps == 0 || !(max_force > 0.0) {
                return domain("force ramp needs at least one step and a positive maximum force");
            }
            for k in 1..=steps {
                let force = max_force * k as f64 / steps as f64;
                let mut load = vec![[0.0; 3]; x.len()];
                for &v in &verts {
                    load[v][2] = dir * force / verts.len() as f64;
                }
                relax(model, &mut x, Some(&load), &[], opts, tol)?;
                let e = model.energy_and_gradient(&x, &mut grad)?;
                curve.push(force, displacement_of(&x), e.total());
                if sign_of(model, &x) != from.sign {
                    if let Some(state) = release(&x, &mut curve)? {
                        return Ok(SnapOutcome { curve, final_state: state, snapped: true });
                    }
                }
            }
        }
    }
    Ok(SnapOutcome { curve, final_state: from.clone(), snapped: false })
}
