//! Study configuration: a TOML file with nested sections, optionally patched
//! by `key=value` overrides, then validated field by field.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use kirigami_core::analytic::{FreeVariable, ShapeLaw};
use kirigami_core::laminate::{LayerSpec, DEFAULT_POISSON};
use kirigami_core::materials::MooneyRivlin;
use kirigami_core::pattern::{KirigamiPattern, SubstrateShape};
use kirigami_core::shellsim::{Seed, SolverOptions};
use serde::{Deserialize, Serialize};

/// A problem with one config field, addressed by its dotted path.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<FieldError>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn single(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError(vec![FieldError { path: path.into(), message: message.into() }])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    /// kPa
    pub c1: f64,
    /// kPa
    pub c2: f64,
    /// mm
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaminateConfig {
    pub substrate: String,
    pub face: String,
    #[serde(default = "default_poisson")]
    pub poisson: f64,
}

fn default_poisson() -> f64 {
    DEFAULT_POISSON
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Square,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateConfig {
    pub shape: ShapeKind,
    /// Side of a square or diameter of a circle (mm).
    pub size: f64,
}

/// Pattern dimensions are given for the configured substrate size and scale
/// with it in sweeps over `sweep.sizes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    /// Missing dimensions default to L and L/3.
    Cross { arm_length: Option<f64>, arm_width: Option<f64> },
    Lobes {
        lobes: usize,
        inner_radius: f64,
        outer_radius: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    None,
}

fn default_samples() -> usize {
    256
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrestretchConfig {
    pub values: Option<Vec<f64>>,
    pub range: Option<RangeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Target edge length (mm); overrides `divisions`.
    pub edge_length: Option<f64>,
    /// Edge length as L / divisions.
    #[serde(default = "default_divisions")]
    pub divisions: f64,
}

fn default_divisions() -> f64 {
    46.0
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { edge_length: None, divisions: default_divisions() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSet {
    /// Positive and negative global loads.
    Global,
    /// Global loads plus the two saddle (mode 2) loads.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_tolerance")]
    pub tolerance: f64,
    #[serde(default = "d_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "d_load_factor")]
    pub load_factor: f64,
    #[serde(default = "d_memory")]
    pub memory: usize,
    #[serde(default = "d_max_step")]
    pub max_step: f64,
    #[serde(default = "d_hessian_refresh")]
    pub hessian_refresh: usize,
    #[serde(default = "d_seeds")]
    pub seeds: SeedSet,
}

fn d_tolerance() -> f64 {
    SolverOptions::default().tolerance
}
fn d_max_iterations() -> usize {
    SolverOptions::default().max_iterations
}
fn d_load_factor() -> f64 {
    SolverOptions::default().load_factor
}
fn d_memory() -> usize {
    SolverOptions::default().memory
}
fn d_max_step() -> f64 {
    SolverOptions::default().max_step
}
fn d_hessian_refresh() -> usize {
    SolverOptions::default().hessian_refresh
}
fn d_seeds() -> SeedSet {
    SeedSet::Global
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: d_tolerance(),
            max_iterations: d_max_iterations(),
            load_factor: d_load_factor(),
            memory: d_memory(),
            max_step: d_max_step(),
            hessian_refresh: d_hessian_refresh(),
            seeds: d_seeds(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            load_factor: self.load_factor,
            memory: self.memory,
            max_step: self.max_step,
            hessian_refresh: self.hessian_refresh,
        }
    }

    pub fn seeds(&self) -> &'static [Seed] {
        match self.seeds {
            SeedSet::Global => &Seed::GLOBAL,
            SeedSet::All => &Seed::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Substrate sizes L (mm); pattern dimensions scale with L. Defaults to
    /// the substrate size.
    pub sizes: Option<Vec<f64>>,
    #[serde(default)]
    pub simulate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapConfig {
    #[serde(default = "d_snap_steps")]
    pub steps: usize,
    /// Push range (mm); default max(2.5·tip offset, 0.05·L).
    pub range: Option<f64>,
}

fn d_snap_steps() -> usize {
    60
}

impl Default for SnapConfig {
    fn default() -> Self {
        Self { steps: d_snap_steps(), range: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub target: Option<f64>,
    #[serde(default = "d_free")]
    pub free: FreeVariable,
    #[serde(default = "d_law")]
    pub shape_law: ShapeLaw,
}

fn d_free() -> FreeVariable {
    FreeVariable::Prestretch
}
fn d_law() -> ShapeLaw {
    ShapeLaw::Pyramid
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self { target: None, free: d_free(), shape_law: d_law() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

/// Everything a study needs. Units: mm, kPa, mN, µJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Recorded in every output; all algorithms are deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Merged over the built-in table (substrate, kirigami_g, kirigami_w).
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialEntry>,
    pub laminate: LaminateConfig,
    pub substrate: SubstrateConfig,
    pub pattern: PatternConfig,
    pub prestretch: PrestretchConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub snap: SnapConfig,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn builtin_materials() -> BTreeMap<String, MaterialEntry> {
    let entry = |l: LayerSpec| MaterialEntry { c1: l.material.c1, c2: l.material.c2, thickness: l.thickness };
    BTreeMap::from([
        ("substrate".to_string(), entry(LayerSpec::SUBSTRATE)),
        ("kirigami_g".to_string(), entry(LayerSpec::KIRIGAMI_G)),
        ("kirigami_w".to_string(), entry(LayerSpec::KIRIGAMI_W)),
    ])
}

impl StudyConfig {
    /// Parses TOML text, applies `key=value` overrides, merges the built-in
    /// materials and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| single("", format!("TOML syntax: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let mut cfg: StudyConfig = serde_path_to_error::deserialize(toml::Value::Table(root)).map_err(|e| {
            let path = e.path().to_string();
            single(if path == "." { String::new() } else { path }, e.into_inner().message().to_string())
        })?;
        let mut materials = builtin_materials();
        materials.append(&mut cfg.materials);
        cfg.materials = materials;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| single("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut err = |path: String, message: String| errs.push(FieldError { path, message });

        for (name, m) in &self.materials {
            if let Err(e) = MooneyRivlin::new(m.c1, m.c2) {
                err(format!("materials.{name}"), e.to_string());
            }
            if !(m.thickness > 0.0 && m.thickness.is_finite()) {
                err(format!("materials.{name}.thickness"), format!("must be positive, got {}", m.thickness));
            }
        }
        for (field, name) in [("substrate", &self.laminate.substrate), ("face", &self.laminate.face)] {
            if !self.materials.contains_key(name) {
                err(format!("laminate.{field}"), format!("unknown material '{name}'"));
            }
        }
        if !(0.0..=0.5).contains(&self.laminate.poisson) {
            err("laminate.poisson".into(), format!("must lie in [0, 0.5], got {}", self.laminate.poisson));
        }
        if !(self.substrate.size > 0.0 && self.substrate.size.is_finite()) {
            err("substrate.size".into(), format!("must be positive, got {}", self.substrate.size));
        } else if let Err(e) = self.pattern_at(self.substrate.size) {
            err("pattern".into(), e);
        }

        match (&self.prestretch.values, &self.prestretch.range) {
            (Some(_), Some(_)) => err("prestretch".into(), "give either values or range, not both".into()),
            (None, None) => err("prestretch".into(), "needs values or range".into()),
            (Some(v), None) => {
                if v.is_empty() {
                    err("prestretch.values".into(), "must not be empty".into());
                }
                for (i, l) in v.iter().enumerate() {
                    if !(*l >= 1.0 && l.is_finite()) {
                        err(format!("prestretch.values[{i}]"), format!("must be >= 1, got {l}"));
                    }
                }
            }
            (None, Some(r)) => {
                if r.count == 0 {
                    err("prestretch.range.count".into(), "must be at least 1".into());
                }
                if !(r.start >= 1.0 && r.start.is_finite()) {
                    err("prestretch.range.start".into(), format!("must be >= 1, got {}", r.start));
                }
                if !(r.stop >= r.start && r.stop.is_finite()) {
                    err("prestretch.range.stop".into(), format!("must be >= start, got {}", r.stop));
                }
            }
        }

        if let Some(h) = self.mesh.edge_length {
            if !(h > 0.0 && h.is_finite()) {
                err("mesh.edge_length".into(), format!("must be positive, got {h}"));
            }
        }
        if !(self.mesh.divisions >= 1.0 && self.mesh.divisions.is_finite()) {
            err("mesh.divisions".into(), format!("must be >= 1, got {}", self.mesh.divisions));
        }

        let s = &self.solver;
        if !(s.tolerance > 0.0 && s.tolerance.is_finite()) {
            err("solver.tolerance".into(), format!("must be positive, got {}", s.tolerance));
        }
        if s.max_iterations == 0 {
            err("solver.max_iterations".into(), "must be at least 1".into());
        }
        if !(s.load_factor > 0.0 && s.load_factor.is_finite()) {
            err("solver.load_factor".into(), format!("must be positive, got {}", s.load_factor));
        }
        if s.memory == 0 {
            err("solver.memory".into(), "must be at least 1".into());
        }
        if !(s.max_step > 0.0 && s.max_step.is_finite()) {
            err("solver.max_step".into(), format!("must be positive, got {}", s.max_step));
        }

        if let Some(sizes) = &self.sweep.sizes {
            if sizes.is_empty() {
                err("sweep.sizes".into(), "must not be empty".into());
            }
            for (i, l) in sizes.iter().enumerate() {
                if !(*l > 0.0 && l.is_finite()) {
                    err(format!("sweep.sizes[{i}]"), format!("must be positive, got {l}"));
                }
            }
        }
        if self.snap.steps == 0 {
            err("snap.steps".into(), "must be at least 1".into());
        }
        if let Some(r) = self.snap.range {
            if !(r > 0.0 && r.is_finite()) {
                err("snap.range".into(), format!("must be positive, got {r}"));
            }
        }
        if let Some(t) = self.design.target {
            if !(t >= 0.0 && t.is_finite()) {
                err("design.target".into(), format!("must be a non-negative number, got {t}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    /// Pre-stretch values in input order.
    pub fn prestretches(&self) -> Vec<f64> {
        match (&self.prestretch.values, &self.prestretch.range) {
            (Some(v), _) => v.clone(),
            (None, Some(r)) if r.count == 1 => vec![r.start],
            (None, Some(r)) => (0..r.count).map(|i| r.start + (r.stop - r.start) * i as f64 / (r.count - 1) as f64).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.sweep.sizes.clone().unwrap_or_else(|| vec![self.substrate.size])
    }

    pub fn layer(&self, name: &str) -> LayerSpec {
        let m = self.materials[name];
        LayerSpec { material: MooneyRivlin { c1: m.c1, c2: m.c2 }, thickness: m.thickness }
    }

    pub fn substrate_layer(&self) -> LayerSpec {
        self.layer(&self.laminate.substrate)
    }

    pub fn face_layer(&self) -> LayerSpec {
        self.layer(&self.laminate.face)
    }

    /// Substrate outline at size `size`.
    pub fn substrate_at(&self, size: f64) -> SubstrateShape {
        match self.substrate.shape {
            ShapeKind::Square => SubstrateShape::Square { side: size },
            ShapeKind::Circle => SubstrateShape::Circle { radius: 0.5 * size },
        }
    }

    /// Pattern scaled from the configured substrate size to `size`.
    pub fn pattern_at(&self, size: f64) -> Result<KirigamiPattern, String> {
        let k = size / self.substrate.size;
        let p = match self.pattern {
            PatternConfig::Cross { arm_length, arm_width } => {
                let l0 = self.substrate.size;
                KirigamiPattern::cross(k * arm_length.unwrap_or(l0), k * arm_width.unwrap_or(l0 / 3.0))
            }
            PatternConfig::Lobes { lobes, inner_radius, outer_radius, phase, samples } => {
                KirigamiPattern::lobes(lobes, k * inner_radius, k * outer_radius, phase, samples)
            }
            PatternConfig::None => Ok(KirigamiPattern::empty()),
        };
        p.map_err(|e| e.to_string())
    }

    /// Cross arm width at `size`, if the pattern is a cross.
    pub fn arm_width_at(&self, size: f64) -> Option<f64> {
        match self.pattern {
            PatternConfig::Cross { arm_width, .. } => Some(size / self.substrate.size * arm_width.unwrap_or(self.substrate.size / 3.0)),
            _ => None,
        }
    }

    pub fn edge_length_at(&self, size: f64) -> f64 {
        match self.mesh.edge_length {
            Some(h) => h * size / self.substrate.size,
            None => size / self.mesh.divisions,
        }
    }
}

/// Applies `a.b.c=value` to the TOML tree. The value is parsed as a TOML
/// value and taken as a bare string when that fails.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = spec.split_once('=') else {
        return Err(single("", format!("override '{spec}' is not of the form key=value")));
    };
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(single(key, "invalid override key"));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut table = root;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(single(parts[..=i].join("."), "is not a table")),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [laminate]
        substrate = "substrate"
        face = "kirigami_g"

        [substrate]
        shape = "square"
        size = 60.0

        [pattern]
        kind = "cross"

        [prestretch]
        values = [1.2, 1.6]
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = StudyConfig::from_toml_str(BASE, &[]).unwrap();
        assert_eq!(c.prestretches(), vec![1.2, 1.6]);
        assert_eq!(c.sizes(), vec![60.0]);
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.materials.contains_key("kirigami_w"));
        assert_eq!(c.arm_width_at(120.0), Some(40.0));
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let c = StudyConfig::from_toml_str(
            BASE,
            &["prestretch.values=[1.1]".into(), "solver.seeds=all".into(), "sweep.sizes=[40, 80]".into()],
        )
        .unwrap();
        assert_eq!(c.prestretches(), vec![1.1]);
        assert_eq!(c.solver.seeds, SeedSet::All);
        assert_eq!(c.sizes(), vec![40.0, 80.0]);
    }

    #[test]
    fn range_expands_inclusively() {
        let c = StudyConfig::from_toml_str(
            &BASE.replace("values = [1.2, 1.6]", "range = { start = 1.2, stop = 2.0, count = 5 }"),
            &[],
        )
        .unwrap();
        let l = c.prestretches();
        assert_eq!(l.len(), 5);
        assert_eq!(l[0], 1.2);
        assert_eq!(l[4], 2.0);
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = StudyConfig::from_toml_str(BASE, &["laminate.face=nope".into()]).unwrap_err();
        assert_eq!(e.0[0].path, "laminate.face");
        let e = StudyConfig::from_toml_str(BASE, &["prestretch.values=[1.2, 0.9]".into()]).unwrap_err();
        assert_eq!(e.0[0].path, "prestretch.values[1]");
        let e = StudyConfig::from_toml_str(BASE, &["solver.tolerance=\"x\"".into()]).unwrap_err();
        assert_eq!(e.0[0].path, "solver.tolerance");
        let e = StudyConfig::from_toml_str(BASE, &["mesh.bogus=1".into()]).unwrap_err();
        assert_eq!(e.0[0].path, "mesh.bogus");
        let e = StudyConfig::from_toml_str(BASE, &["materials.soft={c1 = -5.0, c2 = 1.0, thickness = 1.0}".into()]).unwrap_err();
        assert_eq!(e.0[0].path, "materials.soft");
    }

    #[test]
    fn malformed_override_is_rejected() {
        assert!(StudyConfig::from_toml_str(BASE, &["novalue".into()]).is_err());
        assert!(StudyConfig::from_toml_str(BASE, &["laminate.face.x=1".into()]).is_err());
    }
}
