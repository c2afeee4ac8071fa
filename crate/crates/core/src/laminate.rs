//! Membrane and bending stiffness of the bonded layer stack.
//!
//! Stiffnesses use the crate units: membrane stiffness in mN/mm (numerically
//! equal to N/m) and bending stiffness in µJ = mN·mm (1 N·m = 1e6 µJ).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::materials::MooneyRivlin;

/// One elastomer sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub material: MooneyRivlin,
    /// mm
    pub thickness: f64,
}

impl LayerSpec {
    pub fn new(material: MooneyRivlin, thickness: f64) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return domain(format!("layer thickness must be positive, got {thickness}"));
        }
        material.shear_modulus()?;
        Ok(Self { material, thickness })
    }

    pub const SUBSTRATE: Self = Self { material: MooneyRivlin::SUBSTRATE, thickness: 1.1 };
    pub const KIRIGAMI_G: Self = Self { material: MooneyRivlin::KIRIGAMI_G, thickness: 1.6 };
    pub const KIRIGAMI_W: Self = Self { material: MooneyRivlin::KIRIGAMI_W, thickness: 1.4 };

    fn modulus(&self) -> Result<f64> {
        self.material.young_modulus()
    }
}

/// Pre-stretched substrate sandwiched between two identical patterned faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilayerSpec {
    pub substrate: LayerSpec,
    /// Used for both the top and the bottom face.
    pub face: LayerSpec,
    pub prestretch: f64,
    /// Area fraction of the substrate covered by the faces.
    pub coverage: f64,
    pub poisson: f64,
}

/// Poisson ratio of an incompressible elastomer.
pub const DEFAULT_POISSON: f64 = 0.5;

impl TrilayerSpec {
    pub fn new(
        substrate: LayerSpec,
        face: LayerSpec,
        prestretch: f64,
        coverage: f64,
        poisson: f64,
    ) -> Result<Self> {
        let spec = Self { substrate, face, prestretch, coverage, poisson };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        LayerSpec::new(self.substrate.material, self.substrate.thickness)?;
        LayerSpec::new(self.face.material, self.face.thickness)?;
        if !(self.prestretch >= 1.0 && self.prestretch.is_finite()) {
            return domain(format!("prestretch must be >= 1, got {}", self.prestretch));
        }
        if !(0.0..=1.0).contains(&self.coverage) {
            return domain(format!("coverage must lie in [0, 1], got {}", self.coverage));
        }
        if !(0.0..=0.5).contains(&self.poisson) {
            return domain(format!("poisson ratio must lie in [0, 0.5], got {}", self.poisson));
        }
        Ok(())
    }

    /// Engineering pre-strain ε = λ − 1.
    pub fn strain(&self) -> f64 {
        self.prestretch - 1.0
    }
}

/// Cₛ = E·t/(1 − ν²).
pub fn membrane_stiffness(layer: &LayerSpec, nu: f64) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return domain(format!("poisson ratio must satisfy |ν| < 1, got {nu}"));
    }
    Ok(layer.modulus()? * layer.thickness / (1.0 - nu * nu))
}

/// Plate stiffness E·t³/(12(1 − ν²)) of a single homogeneous layer.
pub fn plate_bending_stiffness(layer: &LayerSpec, nu: f64) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return domain(format!("poisson ratio must satisfy |ν| < 1, got {nu}"));
    }
    let t = layer.thickness;
    Ok(layer.modulus()? * t * t * t / (12.0 * (1.0 - nu * nu)))
}

/// Bending stiffness of the fully covered symmetric stack about the
/// substrate mid-plane (coverage ignored).
pub fn covered_trilayer_stiffness(spec: &TrilayerSpec) -> Result<f64> {
    let (es, ts) = (spec.substrate.modulus()?, spec.substrate.thickness);
    let (ek, tk) = (spec.face.modulus()?, spec.face.thickness);
    let offset = 0.5 * (tk + ts);
    let faces = 2.0 * ek * (tk.powi(3) / 12.0 + tk * offset * offset);
    Ok((faces + es * ts.powi(3) / 12.0) / (1.0 - spec.poisson * spec.poisson))
}

/// Equivalent bending stiffness of the trilayer, mixing the covered stack and
/// the bare substrate by the coverage fraction.
pub fn bending_stiffness_trilayer(spec: &TrilayerSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.coverage;
    let bare = plate_bending_stiffness(&spec.substrate, spec.poisson)?;
    Ok(n * covered_trilayer_stiffness(spec)? + (1.0 - n) * bare)
}

/// Neutral-axis height of a substrate + one face, measured from the bottom
/// of the substrate (mm).
pub fn neutral_axis_bilayer(sub: &LayerSpec, face: &LayerSpec) -> Result<f64> {
    let ratio = sub.modulus()? / face.modulus()?;
    let (ts, tk) = (sub.thickness, face.thickness);
    Ok((tk * (0.5 * tk + ts) + ratio * ts * (0.5 * ts)) / (tk + ratio * ts))
}

/// Equivalent bending stiffness of the bilayer obtained by dropping one face.
pub fn bending_stiffness_bilayer(spec: &TrilayerSpec) -> Result<f64> {
    spec.validate()?;
    let (es, ts) = (spec.substrate.modulus()?, spec.substrate.thickness);
    let (ek, tk) = (spec.face.modulus()?, spec.face.thickness);
    let z = neutral_axis_bilayer(&spec.substrate, &spec.face)?;
    let nu2 = 1.0 - spec.poisson * spec.poisson;
    let face_term = ek * (tk.powi(3) / 12.0 + tk * (0.5 * tk + ts - z).powi(2));
    let sub_term = es * (ts.powi(3) / 12.0 + ts * (0.5 * ts - z).powi(2));
    let n = spec.coverage;
    Ok(n * (face_term + sub_term) / nu2 + (1.0 - n) * es * ts.powi(3) / (12.0 * nu2))
}
