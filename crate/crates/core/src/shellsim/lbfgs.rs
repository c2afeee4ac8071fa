//! Limited-memory BFGS with Armijo backtracking over a flat coordinate vector.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the Euclidean norm of the (masked) gradient drops below this.
    pub gradient_tolerance: f64,
    /// Largest coordinate change allowed in a single step.
    pub max_step: f64,
    /// Rebuild the preconditioner every this many iterations.
    pub refresh_every: usize,
}

/// Initial inverse-Hessian approximation for the two-loop recursion.
pub trait Preconditioner {
    /// Rebuilds the approximation at `x`; returns false if that failed.
    fn refresh(&mut self, x: &[f64]) -> bool;
    /// Replaces `v` by the approximate inverse Hessian applied to `v`.
    fn apply(&mut self, v: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective value at the start and after every accepted step.
    pub values: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const NOISE: f64 = 1e-12;
const CURVATURE: f64 = 0.9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f` starting from `x` (updated in place). `f` writes the gradient
/// and returns the value, or `None` where the objective is undefined (treated
/// as +∞ by the line search). Coordinates with `fixed[i]` never move.
pub fn minimize<F>(
    x: &mut [f64],
    fixed: &[bool],
    opts: &LbfgsOptions,
    mut precond: Option<&mut dyn Preconditioner>,
    mut f: F,
) -> Option<LbfgsReport>
where
    F: FnMut(&[f64], &mut [f64]) -> Option<f64>,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut evaluations = 1;
    let mut fx = f(x, &mut g)?;
    mask(&mut g, fixed);
    let mut values = vec![fx];

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];
    let mut failures = 0;
    let mut have_precond = false;
    let mut since_refresh = usize::MAX;

    for iter in 0..opts.max_iterations {
        let gnorm = norm(&g);
        if gnorm < opts.gradient_tolerance {
            return Some(LbfgsReport { value: fx, gradient_norm: gnorm, iterations: iter, evaluations, converged: true, values });
        }

        if let Some(p) = precond.as_deref_mut() {
            if since_refresh >= opts.refresh_every.max(1) {
                have_precond = p.refresh(x);
                since_refresh = 0;
                history.clear();
            }
            since_refresh += 1;
        }

        // two-loop recursion
        d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= alpha[k] * yi);
        }
        match precond.as_deref_mut() {
            Some(p) if have_precond => {
                p.apply(&mut d);
                mask(&mut d, fixed);
            }
            _ => {
                let gamma = match history.back() {
                    Some((s, y, _)) => dot(s, y) / dot(y, y),
                    None => opts.max_step * 1e-2 / g.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                };
                d.iter_mut().for_each(|di| *di *= gamma);
            }
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (alpha[k] - beta) * si);
        }
        mask(&mut d, fixed);

        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi * opts.max_step * 1e-2 / gnorm);
            slope = dot(&g, &d);
        }

        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut step = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
            evaluations += 1;
            if let Some(fn_) = f(&x_new, &mut g_new) {
                if fn_.is_finite() && fn_ <= fx + ARMIJO * step * slope {
                    accepted = Some(fn_);
                    break;
                }
                // Below round-off the Armijo test is noise; fall back on the
                // directional derivative while still refusing any increase.
                let noise = NOISE * fx.abs().max(1.0);
                if fn_ <= fx && (fn_ - fx).abs() < noise && {
                    mask(&mut g_new, fixed);
                    dot(&g_new, &d).abs() <= CURVATURE * slope.abs()
                } {
                    accepted = Some(fn_);
                    break;
                }
            }
            step *= 0.5;
        }

        let Some(f_new) = accepted else {
            failures += 1;
            if failures >= 2 || (history.is_empty() && !have_precond) {
                return Some(LbfgsReport { value: fx, gradient_norm: gnorm, iterations: iter, evaluations, converged: false, values });
            }
            history.clear();
            have_precond = false;
            since_refresh = usize::MAX;
            continue;
        };
        failures = 0;
        mask(&mut g_new, fixed);

        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x.copy_from_slice(&x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        values.push(fx);
    }
    let gnorm = norm(&g);
    Some(LbfgsReport {
        value: fx,
        gradient_norm: gnorm,
        iterations: opts.max_iterations,
        evaluations,
        converged: gnorm < opts.gradient_tolerance,
        values,
    })
}

fn mask(v: &mut [f64], fixed: &[bool]) {
    v.iter_mut().zip(fixed).filter(|(_, &fx)| fx).for_each(|(vi, _)| *vi = 0.0);
}
