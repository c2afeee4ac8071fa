//! Incompressible two-constant Mooney–Rivlin material.
//!
//! All stresses and energy densities are in kPa, which in the crate's
//! mm / mN / µJ unit system is mN/mm² (and µJ/mm³ for energy densities).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Mooney–Rivlin constants (kPa).
///
/// `c1` may be negative; only the small-strain shear modulus `2(c1 + c2)`
/// has to be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MooneyRivlin {
    pub c1: f64,
    pub c2: f64,
}

impl MooneyRivlin {
    /// Builds a material, rejecting a non-positive shear modulus.
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        let mat = Self { c1, c2 };
        mat.shear_modulus()?;
        Ok(mat)
    }

    /// Substrate elastomer.
    pub const SUBSTRATE: Self = Self { c1: 22.1, c2: 1.7 };
    /// Face sheet used for the unilobe and pyramid composites.
    pub const KIRIGAMI_G: Self = Self { c1: 17.9, c2: 84.5 };
    /// Face sheet used for the bilobe composite.
    pub const KIRIGAMI_W: Self = Self { c1: -2.6, c2: 185.8 };

    /// Looks up one of the built-in materials by its config name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "substrate" => Some(Self::SUBSTRATE),
            "kirigami_g" => Some(Self::KIRIGAMI_G),
            "kirigami_w" => Some(Self::KIRIGAMI_W),
            _ => None,
        }
    }

    /// Small-strain shear modulus μ = 2(c1 + c2).
    pub fn shear_modulus(&self) -> Result<f64> {
        let mu = 2.0 * (self.c1 + self.c2);
        if mu > 0.0 && mu.is_finite() {
            Ok(mu)
        } else {
            Err(Error::InvalidMaterial { shear_modulus: mu })
        }
    }

    /// Incompressible small-strain Young's modulus E = 3μ = 6(c1 + c2).
    pub fn young_modulus(&self) -> Result<f64> {
        Ok(3.0 * self.shear_modulus()?)
    }

    /// Cauchy stress of an equibiaxial stretch with λ₃ = 1/λ².
    pub fn cauchy_stress_equibiaxial(&self, lambda: f64) -> Result<f64> {
        check_stretch(lambda)?;
        let l2 = lambda * lambda;
        let l4 = l2 * l2;
        Ok(2.0 * self.c1 * (l2 - 1.0 / l4) - 2.0 * self.c2 * (1.0 / l2 - l4))
    }

    /// Strain energy per unit reference volume under equibiaxial stretch.
    pub fn strain_energy_density_equibiaxial(&self, lambda: f64) -> Result<f64> {
        check_stretch(lambda)?;
        let l2 = lambda * lambda;
        let l4 = l2 * l2;
        Ok(self.c1 * (2.0 * l2 + 1.0 / l4 - 3.0) + self.c2 * (l4 + 2.0 / l2 - 3.0))
    }

    /// dW/dλ of [`Self::strain_energy_density_equibiaxial`].
    pub fn strain_energy_density_equibiaxial_derivative(&self, lambda: f64) -> Result<f64> {
        check_stretch(lambda)?;
        let l3 = lambda * lambda * lambda;
        let l5 = l3 * lambda * lambda;
        Ok(4.0 * self.c1 * (lambda - 1.0 / l5) + 4.0 * self.c2 * (l3 - 1.0 / l3))
    }

    /// Plane-stress incompressible energy density as a function of the
    /// invariants of the in-plane right Cauchy–Green tensor C₂ₓ₂:
    /// `trace = λ₁² + λ₂²` and `det = λ₁²λ₂²`.
    ///
    /// With λ₃² = 1/det, I₁ = trace + 1/det and I₂ = det + trace/det.
    #[inline]
    pub fn plane_stress_energy(&self, trace: f64, det: f64) -> f64 {
        self.c1 * (trace + 1.0 / det - 3.0) + self.c2 * (det + trace / det - 3.0)
    }

    /// Partial derivatives (∂W/∂trace, ∂W/∂det) of [`Self::plane_stress_energy`].
    #[inline]
    pub fn plane_stress_energy_partials(&self, trace: f64, det: f64) -> (f64, f64) {
        let inv_det = 1.0 / det;
        let inv_det2 = inv_det * inv_det;
        let d_trace = self.c1 + self.c2 * inv_det;
        let d_det = -self.c1 * inv_det2 + self.c2 - self.c2 * trace * inv_det2;
        (d_trace, d_det)
    }
}

fn check_stretch(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        domain(format!("stretch ratio must be positive, got {lambda}"))
    }
}

/// Small-strain membrane energy ½·A·Cₛ·ε² (µJ for mm², mN/mm).
pub fn small_strain_stretch_energy(c_s: f64, area: f64, eps: f64) -> Result<f64> {
    if area < 0.0 {
        return domain(format!("area must be non-negative, got {area}"));
    }
    Ok(0.5 * area * c_s * eps * eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: [MooneyRivlin; 3] = [
        MooneyRivlin::SUBSTRATE,
        MooneyRivlin::KIRIGAMI_G,
        MooneyRivlin::KIRIGAMI_W,
    ];

    #[test]
    fn reference_state_is_stress_and_energy_free() {
        for mat in TABLE {
            assert_eq!(mat.cauchy_stress_equibiaxial(1.0).unwrap(), 0.0);
            assert_eq!(mat.strain_energy_density_equibiaxial(1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn substrate_stress_values() {
        let mat = MooneyRivlin::SUBSTRATE;
        let s = mat.cauchy_stress_equibiaxial(1.5).unwrap();
        assert!((s - 106.420_524_691).abs() < 1e-6, "{s}");
        let s = mat.cauchy_stress_equibiaxial(0.9).unwrap();
        assert!((s + 33.532_570_166).abs() < 1e-6, "{s}");
    }

    #[test]
    fn substrate_energy_value() {
        let w = MooneyRivlin::SUBSTRATE
            .strain_energy_density_equibiaxial(1.5)
            .unwrap();
        assert!((w - 42.532_793_210).abs() < 1e-6, "{w}");
    }

    #[test]
    fn non_positive_stretch_is_rejected() {
        let mat = MooneyRivlin::SUBSTRATE;
        assert!(matches!(mat.cauchy_stress_equibiaxial(0.0), Err(Error::Domain(_))));
        assert!(matches!(mat.strain_energy_density_equibiaxial(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn young_modulus_values() {
        let e = MooneyRivlin::SUBSTRATE.young_modulus().unwrap();
        assert!((e - 142.8).abs() < 1e-12);
        let e = MooneyRivlin::KIRIGAMI_W.young_modulus().unwrap();
        assert!((e - 1099.2).abs() < 1e-9);
        assert!(matches!(
            MooneyRivlin { c1: 0.0, c2: 0.0 }.young_modulus(),
            Err(Error::InvalidMaterial { .. })
        ));
        assert!(MooneyRivlin::new(-3.0, 1.0).is_err());
    }

    #[test]
    fn energy_is_non_negative_on_grid() {
        for mat in TABLE {
            for i in 0..=250 {
                let lambda = 0.5 + 2.5 * i as f64 / 250.0;
                let w = mat.strain_energy_density_equibiaxial(lambda).unwrap();
                assert!(w >= 0.0, "{mat:?} λ={lambda} W={w}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        for mat in TABLE {
            let h = 1e-6;
            let fd = (mat.strain_energy_density_equibiaxial(1.0 + h).unwrap()
                - mat.strain_energy_density_equibiaxial(1.0 - h).unwrap())
                / (2.0 * h);
            assert!(fd.abs() < 1e-6, "reference state not stationary: {fd}");
            for lambda in [1.1, 1.5, 2.0] {
                let h = 1e-5 * lambda;
                let fd = (mat.strain_energy_density_equibiaxial(lambda + h).unwrap()
                    - mat.strain_energy_density_equibiaxial(lambda - h).unwrap())
                    / (2.0 * h);
                let exact = mat.strain_energy_density_equibiaxial_derivative(lambda).unwrap();
                assert!(((fd - exact) / exact).abs() < 1e-6, "λ={lambda}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn equibiaxial_stress_is_work_conjugate_to_stretch() {
        // For J = 1 equibiaxial kinematics σ = (λ/2)·dW/dλ.
        for mat in TABLE {
            for lambda in [0.8, 1.2, 1.7, 2.5] {
                let s = mat.cauchy_stress_equibiaxial(lambda).unwrap();
                let dw = mat.strain_energy_density_equibiaxial_derivative(lambda).unwrap();
                assert!((s - 0.5 * lambda * dw).abs() < 1e-10 * s.abs().max(1.0));
            }
        }
    }

    #[test]
    fn plane_stress_form_reduces_to_equibiaxial() {
        for mat in TABLE {
            for lambda in [0.7, 1.0, 1.3, 2.2] {
                let l2: f64 = lambda * lambda;
                let w = mat.plane_stress_energy(2.0 * l2, l2 * l2);
                let w_eq = mat.strain_energy_density_equibiaxial(lambda).unwrap();
                assert!((w - w_eq).abs() < 1e-12 * w_eq.abs().max(1.0));
            }
        }
    }

    #[test]
    fn plane_stress_partials_match_differences() {
        let mat = MooneyRivlin::KIRIGAMI_W;
        let (t, d) = (2.3, 1.4);
        let (wt, wd) = mat.plane_stress_energy_partials(t, d);
        let h = 1e-6;
        let fdt = (mat.plane_stress_energy(t + h, d) - mat.plane_stress_energy(t - h, d)) / (2.0 * h);
        let fdd = (mat.plane_stress_energy(t, d + h) - mat.plane_stress_energy(t, d - h)) / (2.0 * h);
        assert!((wt - fdt).abs() < 1e-6 * wt.abs());
        assert!((wd - fdd).abs() < 1e-6 * wd.abs());
    }

    #[test]
    fn small_strain_energy_values() {
        assert_eq!(small_strain_stretch_energy(3.0, 10.0, 0.0).unwrap(), 0.0);
        // 1 N/m = 1 mN/mm, 1 m² = 1e6 mm², 1 J = 1e6 µJ.
        let e = small_strain_stretch_energy(1.0, 1e6, 0.1).unwrap();
        assert!((e * 1e-6 - 0.005).abs() < 1e-15);
        assert_eq!(
            small_strain_stretch_energy(2.0, 5.0, -0.03).unwrap(),
            small_strain_stretch_energy(2.0, 5.0, 0.03).unwrap()
        );
        assert!(small_strain_stretch_energy(1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn small_strain_energy_against_exact_equibiaxial_energy() {
        // ½·Cₛ·ε² with Cₛ = E·t/(1−ν²) is the uniaxial-strain quadratic form.
        // The exact equibiaxial energy expands to 2·E·ε²·t, so the ratio
        // exact / quadratic tends to 2(1+ν) rather than 1.
        let mat = MooneyRivlin::SUBSTRATE;
        let (t, nu, area) = (1.1, 0.5, 800.0);
        let c_s = mat.young_modulus().unwrap() * t / (1.0 - nu * nu);
        let mut ratios = Vec::new();
        for i in 1..=10 {
            let eps = 0.005 * i as f64;
            for eps in [eps, -eps] {
                let exact = mat.strain_energy_density_equibiaxial(1.0 + eps).unwrap() * area * t;
                let quad = small_strain_stretch_energy(c_s, area, eps).unwrap();
                ratios.push((eps, exact / quad));
            }
        }
        for (eps, r) in ratios {
            let expected = 2.0 * (1.0 + nu);
            // second-order correction grows like 4|ε|·expected
            assert!((r - expected).abs() < 5.0 * eps.abs() * expected, "ε={eps}: {r}");
        }
    }
}
