//! Kirigami cut patterns, substrate outlines and the triangulated
//! mid-surface used by the shell simulator.

pub mod geometry;
mod mesh;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use geometry::{clip_convex, contains, regular_polygon, signed_area, validate_simple_ccw, Point2};

pub use mesh::{assign_rest_metrics, generate_mesh, Hinge, Metric2, TriMesh};

/// Number of sides used whenever a circle has to be represented as a polygon.
pub const CIRCLE_SIDES: usize = 256;

/// Face-sheet footprint. Polygons are simple counter-clockwise loops in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KirigamiPattern {
    /// Union of two axis-aligned `arm_length × arm_width` rectangles centered
    /// at the origin.
    Cross { arm_length: f64, arm_width: f64 },
    Lobes { polygons: Vec<Vec<Point2>> },
    Custom { polygons: Vec<Vec<Point2>> },
}

impl KirigamiPattern {
    pub fn cross(arm_length: f64, arm_width: f64) -> Result<Self> {
        let p = Self::Cross { arm_length, arm_width };
        p.validate()?;
        Ok(p)
    }

    pub fn empty() -> Self {
        Self::Custom { polygons: Vec::new() }
    }

    /// Flower-like outline with `lobes` petals whose radius oscillates
    /// between `inner_radius` and `outer_radius`, rotated by `phase` (rad).
    /// One lobe gives an off-center teardrop, two a peanut.
    pub fn lobes(lobes: usize, inner_radius: f64, outer_radius: f64, phase: f64, samples: usize) -> Result<Self> {
        if lobes == 0 || samples < 3 * lobes.max(4) {
            return Err(Error::Geometry(format!("need lobes > 0 and enough samples, got {lobes}/{samples}")));
        }
        if !(inner_radius > 0.0 && outer_radius >= inner_radius) {
            return Err(Error::Geometry("lobe radii must satisfy 0 < inner <= outer".into()));
        }
        let polygon = (0..samples)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / samples as f64;
                let r = inner_radius
                    + (outer_radius - inner_radius) * 0.5 * (1.0 + (lobes as f64 * (t - phase)).cos());
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let p = Self::Lobes { polygons: vec![polygon] };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cross { arm_length, arm_width } => {
                if !(*arm_width > 0.0 && arm_width <= arm_length && arm_length.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "cross requires 0 < w <= L, got L = {arm_length}, w = {arm_width}"
                    )));
                }
                Ok(())
            }
            Self::Lobes { polygons } | Self::Custom { polygons } => {
                for p in polygons {
                    validate_simple_ccw(p)?;
                }
                for (i, a) in polygons.iter().enumerate() {
                    for b in &polygons[i + 1..] {
                        if polygons_touch(a, b) {
                            return Err(Error::Geometry(format!("pattern polygon {i} overlaps another polygon")));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// The pattern as a list of disjoint polygons.
    pub fn polygons(&self) -> Vec<Vec<Point2>> {
        match self {
            Self::Cross { arm_length, arm_width } => {
                let (a, b) = (0.5 * arm_length, 0.5 * arm_width);
                if a == b {
                    return vec![vec![[-a, -a], [a, -a], [a, a], [-a, a]]];
                }
                vec![vec![
                    [b, -a],
                    [b, -b],
                    [a, -b],
                    [a, b],
                    [b, b],
                    [b, a],
                    [-b, a],
                    [-b, b],
                    [-a, b],
                    [-a, -b],
                    [-b, -b],
                    [-b, -a],
                ]]
            }
            Self::Lobes { polygons } | Self::Custom { polygons } => polygons.clone(),
        }
    }

    /// Smallest feature that a mesh has to resolve (mm).
    pub fn feature_size(&self) -> Option<f64> {
        match self {
            Self::Cross { arm_width, .. } => Some(*arm_width),
            Self::Lobes { polygons } | Self::Custom { polygons } => polygons
                .iter()
                .map(|p| {
                    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                    for v in p {
                        for k in 0..2 {
                            lo[k] = lo[k].min(v[k]);
                            hi[k] = hi[k].max(v[k]);
                        }
                    }
                    (hi[0] - lo[0]).min(hi[1] - lo[1])
                })
                .min_by(f64::total_cmp),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.polygons().iter().any(|poly| contains(poly, p))
    }
}

fn polygons_touch(a: &[Point2], b: &[Point2]) -> bool {
    if a.iter().any(|&p| contains(b, p)) || b.iter().any(|&p| contains(a, p)) {
        return true;
    }
    let clipped = overlap_area(a, b);
    clipped > 0.0
}

// Overlap area of two simple polygons by fan decomposition of `b` into
// triangles, each of which is a convex clip window.
fn overlap_area(a: &[Point2], b: &[Point2]) -> f64 {
    let mut area = 0.0;
    for tri in ear_triangles(b) {
        area += signed_area(&clip_convex(a, &tri)).abs();
    }
    area
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
fn ear_triangles(poly: &[Point2]) -> Vec<Vec<Point2>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::new();
    let cross = |a: Point2, b: Point2, c: Point2| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let mut guard = 0;
    while idx.len() > 3 && guard < 10 * poly.len() * poly.len() {
        guard += 1;
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let tri = [a, b, c];
            let blocked = idx
                .iter()
                .filter(|&&j| j != ia && j != ib && j != ic)
                .any(|&j| contains(&tri, poly[j]));
            if !blocked {
                tris.push(tri.to_vec());
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        tris.push(idx.iter().map(|&i| poly[i]).collect());
    }
    tris
}

/// Released outline of the pre-stretched substrate, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubstrateShape {
    Square { side: f64 },
    Circle { radius: f64 },
}

impl SubstrateShape {
    pub fn validate(&self) -> Result<()> {
        let d = match self {
            Self::Square { side } => *side,
            Self::Circle { radius } => *radius,
        };
        if d > 0.0 && d.is_finite() {
            Ok(())
        } else {
            Err(Error::Geometry(format!("substrate dimension must be positive, got {d}")))
        }
    }

    /// Convex counter-clockwise outline; circles use [`CIRCLE_SIDES`] sides.
    pub fn outline(&self) -> Vec<Point2> {
        match *self {
            Self::Square { side } => {
                let h = 0.5 * side;
                vec![[-h, -h], [h, -h], [h, h], [-h, h]]
            }
            Self::Circle { radius } => regular_polygon([0.0, 0.0], radius, CIRCLE_SIDES),
        }
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outline())
    }

    /// Characteristic in-plane size L: the side of a square or the diameter
    /// of a circle.
    pub fn size(&self) -> f64 {
        match *self {
            Self::Square { side } => side,
            Self::Circle { radius } => 2.0 * radius,
        }
    }
}

/// Fraction of the substrate area covered by the pattern.
pub fn coverage_fraction(pattern: &KirigamiPattern, substrate: &SubstrateShape) -> Result<f64> {
    pattern.validate()?;
    substrate.validate()?;
    let window = substrate.outline();
    let covered: f64 = pattern
        .polygons()
        .iter()
        .map(|p| signed_area(&clip_convex(p, &window)).max(0.0))
        .sum();
    Ok((covered / signed_area(&window)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cross_coverage_matches_formula() {
        let cross = KirigamiPattern::cross(60.0, 20.0).unwrap();
        let n = coverage_fraction(&cross, &SubstrateShape::Square { side: 60.0 }).unwrap();
        assert!((n - 2000.0 / 3600.0).abs() < 1e-12);
    }

    #[test]
    fn cross_coverage_monte_carlo() {
        let cross = KirigamiPattern::cross(60.0, 20.0).unwrap();
        let sub = SubstrateShape::Square { side: 60.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples = 1_000_000;
        let hits = (0..samples)
            .filter(|_| cross.contains([rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)]))
            .count();
        let mc = hits as f64 / samples as f64;
        let exact = coverage_fraction(&cross, &sub).unwrap();
        assert!((mc - exact).abs() < 0.003, "{mc} vs {exact}");
    }

    #[test]
    fn clipped_cross_in_circle_monte_carlo() {
        let cross = KirigamiPattern::cross(70.0, 16.0).unwrap();
        let sub = SubstrateShape::Circle { radius: 30.0 };
        let outline = sub.outline();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut inside, mut hits) = (0usize, 0usize);
        for _ in 0..1_000_000 {
            let p = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
            if contains(&outline, p) {
                inside += 1;
                if cross.contains(p) {
                    hits += 1;
                }
            }
        }
        let mc = hits as f64 / inside as f64;
        let exact = coverage_fraction(&cross, &sub).unwrap();
        assert!((mc - exact).abs() < 0.003, "{mc} vs {exact}");
    }

    #[test]
    fn trivial_coverages() {
        let sub = SubstrateShape::Square { side: 10.0 };
        assert_eq!(coverage_fraction(&KirigamiPattern::empty(), &sub).unwrap(), 0.0);
        let big = KirigamiPattern::Custom { polygons: vec![vec![[-8.0, -8.0], [8.0, -8.0], [8.0, 8.0], [-8.0, 8.0]]] };
        assert_eq!(coverage_fraction(&big, &sub).unwrap(), 1.0);
        let circle = SubstrateShape::Circle { radius: 4.0 };
        assert!((coverage_fraction(&big, &circle).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_patterns() {
        assert!(KirigamiPattern::cross(10.0, 12.0).is_err());
        assert!(KirigamiPattern::cross(10.0, 0.0).is_err());
        let bowtie = KirigamiPattern::Custom { polygons: vec![vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]] };
        assert!(matches!(
            coverage_fraction(&bowtie, &SubstrateShape::Square { side: 2.0 }),
            Err(Error::Geometry(_))
        ));
        let sq = |x: f64| vec![[x, 0.0], [x + 1.0, 0.0], [x + 1.0, 1.0], [x, 1.0]];
        let overlapping = KirigamiPattern::Custom { polygons: vec![sq(0.0), sq(0.5)] };
        assert!(overlapping.validate().is_err());
        let disjoint = KirigamiPattern::Custom { polygons: vec![sq(0.0), sq(2.0)] };
        assert!(disjoint.validate().is_ok());
    }

    #[test]
    fn lobe_patterns_are_valid() {
        for k in 1..=4 {
            let p = KirigamiPattern::lobes(k, 6.0, 14.0, 0.0, 120).unwrap();
            let n = coverage_fraction(&p, &SubstrateShape::Circle { radius: 20.0 }).unwrap();
            assert!(n > 0.0 && n < 1.0);
        }
    }
}
