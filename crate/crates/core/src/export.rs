//! Text exports: Wavefront OBJ meshes and snap-curve CSV.

use std::fmt::Write as _;

use crate::pattern::TriMesh;
use crate::shellsim::{SnapCurve, Vec3};

pub const SNAP_CSV_HEADER: &str = "force_mN,displacement_mm,energy_uJ";

/// Formats `v` with 9 significant digits in plain decimal notation (scientific
/// for very large or very small magnitudes).
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-6..=15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.trim_start_matches('-').trim_matches(|c| c == '0' || c == '.').is_empty() {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// OBJ text with one `v` record per vertex and one `f` record (1-based) per face.
pub fn obj_string(mesh: &TriMesh, positions: &[Vec3]) -> String {
    let mut out = String::with_capacity(40 * (positions.len() + mesh.faces.len()));
    for p in positions {
        let _ = writeln!(out, "v {} {} {}", sig9(p[0]), sig9(p[1]), sig9(p[2]));
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// CSV rows under [`SNAP_CSV_HEADER`]. A `trailer` becomes a final row whose
/// first field is the quoted message and whose other fields are empty.
pub fn snap_csv_string(curve: &SnapCurve, trailer: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SNAP_CSV_HEADER}");
    for i in 0..curve.len() {
        let _ = writeln!(out, "{},{},{}", sig9(curve.force[i]), sig9(curve.displacement[i]), sig9(curve.energy[i]));
    }
    if let Some(t) = trailer {
        let _ = writeln!(out, "\"{}\",,", t.replace('"', "\"\""));
    }
    out
}
