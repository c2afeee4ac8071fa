//! Closed-form energy-balance model: pre-stretch → curvature → height.
//!
//! Release converts the substrate stretching energy into bending energy of
//! the composite. Equating the small-strain stretching energy ½·A·Cₛ·ε² with
//! the bending energy ½·A·D·κ² gives κ = √(Cₛ/D)·ε/(1+ε), and a shape law
//! maps κ to the normalized height H/L.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::materials::MooneyRivlin;

/// Geometric model linking curvature and height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeLaw {
    /// Four-sided pyramid over a cross: H/L = sin(arctan(κL/4))/2.
    Pyramid,
    /// Constant-curvature cap: H/L = κL/8.
    SphericalCap,
}

impl ShapeLaw {
    pub fn height_ratio(self, kappa: f64, length_l: f64) -> f64 {
        match self {
            ShapeLaw::Pyramid => pyramid_height_ratio(kappa, length_l),
            ShapeLaw::SphericalCap => cap_height_ratio(kappa, length_l),
        }
    }
}

/// Inputs of the forward height model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInput {
    /// Membrane stiffness (mN/mm).
    pub c_s: f64,
    /// Equivalent bending stiffness (µJ).
    pub d_eq: f64,
    /// In-plane size L (mm).
    pub length_l: f64,
    pub prestretch: f64,
    pub shape: ShapeLaw,
}

impl AnalyticInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_s > 0.0 && self.d_eq > 0.0) {
            return domain(format!(
                "stiffnesses must be positive (c_s = {}, d_eq = {})",
                self.c_s, self.d_eq
            ));
        }
        if !(self.length_l > 0.0) {
            return domain(format!("size L must be positive, got {}", self.length_l));
        }
        if !(self.prestretch >= 1.0 && self.prestretch.is_finite()) {
            return domain(format!("prestretch must be >= 1, got {}", self.prestretch));
        }
        Ok(())
    }

    pub fn curvature(&self) -> Result<f64> {
        curvature_from_prestretch(self.c_s, self.d_eq, self.prestretch - 1.0)
    }

    /// Predicted H/L under the selected shape law.
    pub fn height_ratio(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.shape.height_ratio(self.curvature()?, self.length_l))
    }

    /// Supremum of H/L over all pre-stretches (ε → ∞).
    pub fn prestretch_bound(&self) -> f64 {
        let kappa_max = (self.c_s / self.d_eq).sqrt();
        self.shape.height_ratio(kappa_max, self.length_l)
    }
}

/// κ = √(Cₛ/D)·ε/(1+ε) in 1/mm.
pub fn curvature_from_prestretch(c_s: f64, d_eq: f64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return domain(format!("pre-strain must be non-negative, got {eps}"));
    }
    if !(c_s > 0.0 && d_eq > 0.0) {
        return domain(format!("stiffnesses must be positive (c_s = {c_s}, d_eq = {d_eq})"));
    }
    if eps.is_infinite() {
        return Ok((c_s / d_eq).sqrt());
    }
    Ok((c_s / d_eq).sqrt() * eps / (1.0 + eps))
}

pub fn pyramid_height_ratio(kappa: f64, length_l: f64) -> f64 {
    0.5 * (0.25 * kappa * length_l).atan().sin()
}

pub fn cap_height_ratio(kappa: f64, length_l: f64) -> f64 {
    kappa * length_l / 8.0
}

/// Compressive strain of the released substrate relative to its bonded
/// length, ε/(1+ε) = 1 − 1/λ. This is the strain that enters the
/// energy balance behind [`curvature_from_prestretch`].
pub fn mismatch_strain(eps: f64) -> f64 {
    eps / (1.0 + eps)
}

/// Constant-curvature scaling law H/L = (L/8)·√(Cₛ/D)·ε/(1+ε).
pub fn scaling_law_height_ratio(c_s: f64, d_eq: f64, length_l: f64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return domain(format!("pre-strain must be non-negative, got {eps}"));
    }
    Ok(length_l / 8.0 * (c_s / d_eq).sqrt() * eps / (1.0 + eps))
}

/// How the unstretched substrate area relates to the released size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SubstrateKind {
    /// A = (L/(√2·λ))².
    SquareLike,
    /// A = πR²/λ² for a released radius R (mm).
    Circular { radius: f64 },
}

pub fn unstretched_area(length_l: f64, lambda: f64, kind: SubstrateKind) -> Result<f64> {
    if !(lambda >= 1.0) {
        return domain(format!("prestretch must be >= 1, got {lambda}"));
    }
    Ok(match kind {
        SubstrateKind::SquareLike => {
            let side = length_l / (std::f64::consts::SQRT_2 * lambda);
            side * side
        }
        SubstrateKind::Circular { radius } => std::f64::consts::PI * radius * radius / (lambda * lambda),
    })
}

/// Hyperelastic stretching energy W(λ)·A·tₛ (µJ).
pub fn stretch_energy_total(mat: &MooneyRivlin, lambda: f64, area: f64, t_s: f64) -> Result<f64> {
    Ok(mat.strain_energy_density_equibiaxial(lambda)? * area * t_s)
}

/// ½·A·D·κ² (µJ).
pub fn bending_energy_total(d_eq: f64, area: f64, kappa: f64) -> f64 {
    0.5 * area * d_eq * kappa * kappa
}

/// The quantity solved for by [`inverse_design`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeVariable {
    Prestretch,
    Size,
}

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

/// Solves the forward height law for the free variable so that it returns
/// `target`. The other fields of `fixed` are held; its value of the free
/// variable is ignored.
pub fn inverse_design(target: f64, free: FreeVariable, fixed: &AnalyticInput) -> Result<f64> {
    let probe = AnalyticInput { prestretch: fixed.prestretch.max(1.0), length_l: fixed.length_l.max(1.0), ..*fixed };
    probe.validate()?;
    if !(target >= 0.0) || !target.is_finite() {
        return domain(format!("target H/L must be a non-negative number, got {target}"));
    }
    match free {
        FreeVariable::Prestretch => {
            let bound = fixed.prestretch_bound();
            if target >= bound {
                return Err(Error::InfeasibleTarget { target, bound });
            }
            if target == 0.0 {
                return Ok(1.0);
            }
            let forward = |lambda: f64| AnalyticInput { prestretch: lambda, ..*fixed }.height_ratio();
            let mut hi = 2.0;
            while forward(hi)? < target {
                hi = 1.0 + 2.0 * (hi - 1.0);
                if !hi.is_finite() {
                    return Err(Error::InfeasibleTarget { target, bound });
                }
            }
            solve_increasing(|x| Ok(forward(x)? - target), 1.0, hi)
        }
        FreeVariable::Size => {
            let bound = match fixed.shape {
                ShapeLaw::Pyramid => 0.5,
                ShapeLaw::SphericalCap => f64::INFINITY,
            };
            if fixed.prestretch <= 1.0 || target == 0.0 {
                // H/L vanishes identically (ε = 0) or only at L = 0.
                let bound = if fixed.prestretch <= 1.0 { 0.0 } else { bound };
                return Err(Error::InfeasibleTarget { target, bound });
            }
            if target >= bound {
                return Err(Error::InfeasibleTarget { target, bound });
            }
            let forward = |l: f64| AnalyticInput { length_l: l, ..*fixed }.height_ratio();
            let mut hi = fixed.length_l.max(1.0);
            while forward(hi)? < target {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::InfeasibleTarget { target, bound });
                }
            }
            let lo = hi * 1e-12;
            solve_increasing(|x| Ok(forward(x)? - target), lo, hi)
        }
    }
}

/// Root of an increasing function on a bracket with f(lo) ≤ 0 ≤ f(hi):
/// false-position steps safeguarded by bisection.
fn solve_increasing(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo >= 0.0 {
        return Ok(lo);
    }
    if f_hi <= 0.0 {
        return Ok(hi);
    }
    let mut use_secant = true;
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let mut x = if use_secant { lo - f_lo * (hi - lo) / (f_hi - f_lo) } else { mid };
        if !(x > lo && x < hi) {
            x = mid;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        let shrink_before = hi - lo;
        if fx < 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        // Fall back to a bisection step whenever false position stalls.
        use_secant = hi - lo < 0.5 * shrink_before;
        if hi - lo <= ROOT_TOL * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(if -f_lo < f_hi { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CS: f64 = 209.44;
    const D: f64 = 2986.0;

    fn input(lambda: f64, shape: ShapeLaw) -> AnalyticInput {
        AnalyticInput { c_s: CS, d_eq: D, length_l: 60.0, prestretch: lambda, shape }
    }

    #[test]
    fn curvature_limits() {
        assert_eq!(curvature_from_prestretch(CS, D, 0.0).unwrap(), 0.0);
        let asym = (CS / D).sqrt();
        let k = curvature_from_prestretch(CS, D, 1e12).unwrap();
        assert!((k - asym).abs() < 1e-11 * asym);
        assert_eq!(curvature_from_prestretch(CS, D, f64::INFINITY).unwrap(), asym);
        let k1 = curvature_from_prestretch(CS, D, 0.3).unwrap();
        let k4 = curvature_from_prestretch(4.0 * CS, D, 0.3).unwrap();
        assert!((k4 - 2.0 * k1).abs() < 1e-15);
        assert!(curvature_from_prestretch(CS, D, -0.1).is_err());
    }

    #[test]
    fn pyramid_values() {
        assert_eq!(pyramid_height_ratio(0.0, 10.0), 0.0);
        let h = pyramid_height_ratio(1.0, 4.0);
        assert!((h - 0.5 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((pyramid_height_ratio(1e6, 4.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn cap_values_and_chord_relation() {
        assert_eq!(cap_height_ratio(0.0, 3.0), 0.0);
        assert_eq!(cap_height_ratio(1.0 / 7.0, 7.0), 0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let rho: f64 = rng.random_range(1.0..100.0);
            let h: f64 = rng.random_range(0.01..1.0) * rho;
            let l = 2.0 * (rho * rho - (rho - h).powi(2) + h * h).sqrt();
            let lhs = h / l;
            let rhs = cap_height_ratio(1.0 / rho, l);
            assert!(((lhs - rhs) / lhs).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_law_is_cap_of_curvature() {
        assert_eq!(scaling_law_height_ratio(CS, D, 60.0, 0.0).unwrap(), 0.0);
        for i in 0..50 {
            let eps = 0.05 * i as f64;
            let l = 20.0 + i as f64;
            let direct = scaling_law_height_ratio(CS, D, l, eps).unwrap();
            let composed = cap_height_ratio(curvature_from_prestretch(CS, D, eps).unwrap(), l);
            assert!((direct - composed).abs() <= 1e-14 * direct.abs());
        }
    }

    #[test]
    fn eightfold_stiffness_needs_root_eight_size() {
        let eps = 0.4;
        let h = scaling_law_height_ratio(CS, D, 50.0, eps).unwrap();
        let scaled = scaling_law_height_ratio(CS, 8.0 * D, 50.0 * 8f64.sqrt(), eps).unwrap();
        assert!((h - scaled).abs() < 1e-14);
    }

    #[test]
    fn area_rules() {
        let a = unstretched_area(60.0, 1.0, SubstrateKind::SquareLike).unwrap();
        assert!((a - 1800.0).abs() < 1e-9);
        let a = unstretched_area(60.0, 1.5, SubstrateKind::SquareLike).unwrap();
        assert!((a - 800.0).abs() < 1e-9);
        let c1 = unstretched_area(0.0, 1.0, SubstrateKind::Circular { radius: 10.0 }).unwrap();
        let c2 = unstretched_area(0.0, 2.0, SubstrateKind::Circular { radius: 10.0 }).unwrap();
        assert!((c1 / c2 - 4.0).abs() < 1e-12);
        assert!(unstretched_area(60.0, 0.9, SubstrateKind::SquareLike).is_err());
    }

    #[test]
    fn energies() {
        let mat = MooneyRivlin::SUBSTRATE;
        assert_eq!(stretch_energy_total(&mat, 1.0, 800.0, 1.1).unwrap(), 0.0);
        let e = stretch_energy_total(&mat, 1.5, 800.0, 1.1).unwrap();
        assert!((e * 1e-3 - 37.43).abs() < 0.01, "{e}");
        let e2 = stretch_energy_total(&mat, 1.5, 800.0, 2.2).unwrap();
        assert!((e2 - 2.0 * e).abs() < 1e-9);
        assert_eq!(bending_energy_total(D, 800.0, 0.0), 0.0);
        let b1 = bending_energy_total(D, 800.0, 0.01);
        assert!((bending_energy_total(D, 800.0, 0.03) - 9.0 * b1).abs() < 1e-9);
    }

    #[test]
    fn energy_balance_defines_curvature() {
        let eps = 0.35;
        let area = 900.0;
        let k = curvature_from_prestretch(CS, D, eps).unwrap();
        let bend = bending_energy_total(D, area, k);
        let stretch =
            crate::materials::small_strain_stretch_energy(CS, area, mismatch_strain(eps)).unwrap();
        assert!(((bend - stretch) / stretch).abs() < 1e-13);
    }

    #[test]
    fn pyramid_monotone_bounded_and_concave() {
        let vals: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let lambda = 1.0 + 9.0 * i as f64 / 200.0;
                (lambda, input(lambda, ShapeLaw::Pyramid).height_ratio().unwrap())
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[1].1 > w[0].1 && w[1].1 < 0.5);
        }
        for w in vals.windows(3) {
            if w[0].0 >= 1.5 {
                assert!(w[2].1 - 2.0 * w[1].1 + w[0].1 <= 0.0);
            }
        }
    }

    #[test]
    fn height_increases_with_size() {
        for shape in [ShapeLaw::Pyramid, ShapeLaw::SphericalCap] {
            let mut last = 0.0;
            for i in 1..40 {
                let h = AnalyticInput { length_l: 5.0 * i as f64, ..input(1.4, shape) }
                    .height_ratio()
                    .unwrap();
                assert!(h > last);
                last = h;
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for shape in [ShapeLaw::Pyramid, ShapeLaw::SphericalCap] {
            for _ in 0..50 {
                let lambda = rng.random_range(1.01..3.0);
                let fixed = AnalyticInput { length_l: rng.random_range(10.0..100.0), ..input(lambda, shape) };
                let target = fixed.height_ratio().unwrap();
                let solved = inverse_design(target, FreeVariable::Prestretch, &fixed).unwrap();
                assert!((solved - lambda).abs() < 1e-9, "{shape:?}: {solved} vs {lambda}");
                let back = AnalyticInput { prestretch: solved, ..fixed }.height_ratio().unwrap();
                assert!((back - target).abs() < 1e-9);

                let size = fixed.length_l;
                let solved = inverse_design(target, FreeVariable::Size, &fixed).unwrap();
                assert!((solved - size).abs() < 1e-9 * size, "{shape:?}: {solved} vs {size}");
            }
        }
    }

    #[test]
    fn inverse_edge_cases() {
        let fixed = input(1.5, ShapeLaw::Pyramid);
        assert_eq!(inverse_design(0.0, FreeVariable::Prestretch, &fixed).unwrap(), 1.0);
        match inverse_design(0.6, FreeVariable::Prestretch, &fixed) {
            Err(Error::InfeasibleTarget { bound, .. }) => assert!(bound < 0.5),
            other => panic!("expected infeasible target, got {other:?}"),
        }
        assert!(matches!(
            inverse_design(0.6, FreeVariable::Size, &fixed),
            Err(Error::InfeasibleTarget { bound, .. }) if bound == 0.5
        ));
        let cap = input(1.5, ShapeLaw::SphericalCap);
        let bound = cap.prestretch_bound();
        assert!(inverse_design(bound * 1.01, FreeVariable::Prestretch, &cap).is_err());
        assert!(inverse_design(bound * 0.99, FreeVariable::Prestretch, &cap).is_ok());
    }
}
