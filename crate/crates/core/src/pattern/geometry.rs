//! Planar polygon utilities.

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

/// Signed shoelace area (positive for counter-clockwise loops).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Checks that `poly` is a simple counter-clockwise loop with at least three
/// distinct vertices.
pub fn validate_simple_ccw(poly: &[Point2]) -> Result<()> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
    }
    if poly.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Geometry("polygon has non-finite coordinates".into()));
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return Err(Error::Geometry(format!("polygon has repeated vertex at index {i}")));
        }
        for j in (i + 1)..n {
            // adjacent edges share an endpoint by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    if signed_area(poly) <= 0.0 {
        return Err(Error::Geometry("polygon must be counter-clockwise".into()));
    }
    Ok(())
}

/// Even–odd point containment.
pub fn contains(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > p[1]) != (pj[1] > p[1]) {
            let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Sutherland–Hodgman clip of an arbitrary subject polygon by a convex
/// counter-clockwise window. The area of the result equals the area of the
/// intersection even when the output contains degenerate bridging edges.
pub fn clip_convex(subject: &[Point2], window: &[Point2]) -> Vec<Point2> {
    let mut output: Vec<Point2> = subject.to_vec();
    let m = window.len();
    for k in 0..m {
        if output.is_empty() {
            break;
        }
        let (a, b) = (window[k], window[(k + 1) % m]);
        let input = std::mem::take(&mut output);
        let inside = |p: Point2| orient(a, b, p) >= 0.0;
        let crossing = |p: Point2, q: Point2| {
            let dp = orient(a, b, p);
            let dq = orient(a, b, q);
            let t = dp / (dp - dq);
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        };
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(crossing(prev, cur)),
                (false, true) => {
                    output.push(crossing(prev, cur));
                    output.push(cur);
                }
                (false, false) => {}
            }
            prev = cur;
        }
    }
    output
}

/// Regular counter-clockwise n-gon inscribed in a circle.
pub fn regular_polygon(center: Point2, radius: f64, sides: usize) -> Vec<Point2> {
    (0..sides)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / sides as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}
