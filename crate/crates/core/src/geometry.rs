//! Planar primitives: polar lines, discs, ray hits, convex cells around the
//! origin, radii, perimeters and a discrete Hausdorff distance.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Sub};

#[allow(unused_imports)] // inherent float methods win when std is linked
use num_traits::Float;

/// Vertices closer than this are merged when building a cell.
pub const MERGE_TOL: f64 = 1e-9;

/// Relative tolerance on the ray–circle discriminant under which a ray is
/// treated as tangent (and counted as a hit).
pub const TANGENT_TOL: f64 = 1e-12;

/// Maps any finite angle onto `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a % TAU;
    let r = if r < 0.0 { r + TAU } else { r };
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wrap-aware difference `a - b`, returned in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(r * c, r * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Polar angle in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// The line `{x : <x, (cos θ, sin θ)> = ρ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarLine {
    pub rho: f64,
    pub theta: f64,
}

impl PolarLine {
    pub fn new(rho: f64, theta: f64) -> Self {
        debug_assert!(rho.is_finite() && rho >= 0.0, "invalid line distance {rho}");
        PolarLine {
            rho,
            theta: normalize_angle(theta),
        }
    }

    pub fn normal(&self) -> Point {
        Point::polar(1.0, self.theta)
    }

    /// Signed distance of `p` past the line (negative on the origin side).
    pub fn excess(&self, p: Point) -> f64 {
        p.dot(self.normal()) - self.rho
    }

    /// Foot of the perpendicular from the origin.
    pub fn foot(&self) -> Point {
        Point::polar(self.rho, self.theta)
    }
}

/// A disc given in polar coordinates of its centre. `gap` is the distance
/// from the origin to the nearest boundary point; it is kept alongside the
/// centre so that large rescaled discs do not lose it to cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center_angle: f64,
    pub center_distance: f64,
    pub radius: f64,
    pub gap: f64,
}

impl Disc {
    pub fn new(center_angle: f64, center_distance: f64, radius: f64) -> Self {
        debug_assert!(center_distance > radius && radius > 0.0);
        Disc {
            center_angle: normalize_angle(center_angle),
            center_distance,
            radius,
            gap: center_distance - radius,
        }
    }

    /// Builds the disc from its gap to the origin instead of its centre distance.
    pub fn from_gap(center_angle: f64, gap: f64, radius: f64) -> Self {
        debug_assert!(gap >= 0.0 && radius > 0.0);
        Disc {
            center_angle: normalize_angle(center_angle),
            center_distance: gap + radius,
            radius,
            gap,
        }
    }

    pub fn center(&self) -> Point {
        Point::polar(self.center_distance, self.center_angle)
    }

    /// Open-disc membership.
    pub fn contains(&self, p: Point) -> bool {
        p.dist(self.center()) < self.radius
    }
}

/// Distance along the ray of direction `t` to `line`, if the ray meets it.
pub fn ray_line_hit(t: f64, line: &PolarLine) -> Option<f64> {
    let c = (line.theta - t).cos();
    if c > f64::EPSILON {
        Some(line.rho / c)
    } else {
        None
    }
}

/// Smallest positive distance along the ray of direction `t` to the circle
/// bounding `disc`. Tangent rays count as hits.
pub fn ray_disc_hit(t: f64, disc: &Disc) -> Option<f64> {
    let phi = angle_diff(disc.center_angle, t);
    let (s, c) = phi.sin_cos();
    let b = disc.center_distance * c;
    if b <= 0.0 {
        return None;
    }
    let off = disc.center_distance * s.abs();
    let r = disc.radius;
    let mut disc_sq = (r - off) * (r + off);
    if disc_sq < 0.0 {
        if disc_sq < -TANGENT_TOL * r * r {
            return None;
        }
        disc_sq = 0.0;
    }
    // smaller root of s^2 - 2bs + (D^2 - r^2), written without cancellation
    let c0 = disc.gap * (disc.gap + 2.0 * r);
    Some(c0 / (b + disc_sq.sqrt()))
}

/// Convex polygon strictly containing the origin. Edge `i` runs from
/// `vertices[i]` to `vertices[i + 1]` (cyclically) and lies on
/// `supporting_lines[i]`; `sources[i]` is the index of that line in the
/// input of [`halfplane_intersection`]. Vertex 0 has the smallest polar angle.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point>,
    pub supporting_lines: Vec<PolarLine>,
    pub sources: Vec<usize>,
}

impl ConvexPolygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_angles(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.angle()).collect()
    }

    /// Index of the edge crossed by the ray of direction `t`.
    pub fn edge_at(&self, t: f64) -> usize {
        let t = normalize_angle(t);
        let angles = self.vertex_angles();
        match angles.iter().rposition(|&a| a <= t) {
            Some(i) => i,
            None => angles.len() - 1,
        }
    }
}

fn hull_cross(o: Point, a: Point, b: Point) -> f64 {
    (a - o).cross(b - o)
}

/// Andrew's monotone chain; returns indices of the strict hull in CCW order.
fn convex_hull(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p.x.partial_cmp(&q.x)
            .unwrap_or(Ordering::Equal)
            .then(p.y.partial_cmp(&q.y).unwrap_or(Ordering::Equal))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    let push = |hull: &mut Vec<usize>, i: usize, floor: usize| {
        while hull.len() >= floor + 2 {
            let k = hull.len();
            if hull_cross(points[hull[k - 2]], points[hull[k - 1]], points[i]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    };
    for &i in &idx {
        push(&mut hull, i, 0);
    }
    // upper chain may not eat into the lower one
    let floor = hull.len() - 1;
    for &i in idx.iter().rev().skip(1) {
        push(&mut hull, i, floor);
    }
    hull.pop();
    hull
}

fn intersect_lines(a: &PolarLine, b: &PolarLine) -> Option<Point> {
    let (sa, ca) = a.theta.sin_cos();
    let (sb, cb) = b.theta.sin_cos();
    let det = ca * sb - sa * cb;
    if det.abs() < 1e-300 {
        return None;
    }
    Some(Point::new(
        (a.rho * sb - b.rho * sa) / det,
        (ca * b.rho - cb * a.rho) / det,
    ))
}

/// Intersection of the half-planes `{x : <x, u(θ_i)> <= ρ_i}`.
///
/// Returns `None` when the intersection is unbounded (including the empty
/// input) or when some line passes through the origin. Redundant lines are
/// dropped, so every supporting line carries an edge of positive length.
///
/// The cell is computed as the polar dual of the convex hull of the points
/// `u(θ_i) / ρ_i`: hull vertices are the supporting lines and the cell is
/// bounded exactly when the origin lies strictly inside that hull.
pub fn halfplane_intersection(lines: &[PolarLine]) -> Option<ConvexPolygon> {
    if lines.iter().any(|l| !(l.rho > 0.0) || !l.rho.is_finite()) {
        return None;
    }
    let dual: Vec<Point> = lines.iter().map(|l| l.normal() * (1.0 / l.rho)).collect();
    let mut hull = convex_hull(&dual);
    if hull.len() < 3 {
        return None;
    }
    for k in 0..hull.len() {
        let a = dual[hull[k]];
        let b = dual[hull[(k + 1) % hull.len()]];
        if hull_cross(a, b, Point::ORIGIN) <= 0.0 {
            return None;
        }
    }

    // Vertex k is where hull[k] meets hull[k + 1]; drop edges that collapse.
    let mut vertices: Vec<Point>;
    loop {
        let m = hull.len();
        if m < 3 {
            return None;
        }
        vertices = Vec::with_capacity(m);
        for k in 0..m {
            let p = intersect_lines(&lines[hull[k]], &lines[hull[(k + 1) % m]])?;
            vertices.push(p);
        }
        // edge hull[k] runs from vertex k-1 to vertex k
        let collapsed = (0..m).find(|&k| vertices[(k + m - 1) % m].dist(vertices[k]) < MERGE_TOL);
        match collapsed {
            Some(k) => {
                hull.remove(k);
            }
            None => break,
        }
    }

    // Renumber: polygon vertex i = hull vertex (k-1), edge i lies on hull[k].
    let m = hull.len();
    let start = (0..m)
        .min_by(|&i, &j| {
            vertices[i]
                .angle()
                .partial_cmp(&vertices[j].angle())
                .unwrap_or(Ordering::Equal)
        })
        .unwrap_or(0);
    let mut out = ConvexPolygon {
        vertices: Vec::with_capacity(m),
        supporting_lines: Vec::with_capacity(m),
        sources: Vec::with_capacity(m),
    };
    for i in 0..m {
        let k = (start + i) % m;
        let edge = hull[(k + 1) % m];
        out.vertices.push(vertices[k]);
        out.supporting_lines.push(lines[edge]);
        out.sources.push(edge);
    }
    Some(out)
}

/// Radius of the largest centred disc inside `p`.
pub fn inner_radius(p: &ConvexPolygon) -> f64 {
    p.supporting_lines
        .iter()
        .map(|l| l.rho)
        .fold(f64::INFINITY, f64::min)
}

/// Radius of the smallest centred disc containing `p`.
pub fn outer_radius(p: &ConvexPolygon) -> f64 {
    p.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Length of the closed polygonal line through `vertices`.
pub fn perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].dist(vertices[(i + 1) % n]))
        .sum()
}

fn directed_hausdorff(from: &[Point], to_sorted: &[Point]) -> f64 {
    let mut worst = 0.0f64;
    for &p in from {
        let pos = to_sorted.partition_point(|q| q.x < p.x);
        let mut best_sq = f64::INFINITY;
        for q in to_sorted[pos..].iter() {
            let dx = q.x - p.x;
            if dx * dx >= best_sq {
                break;
            }
            let dy = q.y - p.y;
            best_sq = best_sq.min(dx * dx + dy * dy);
        }
        for q in to_sorted[..pos].iter().rev() {
            let dx = p.x - q.x;
            if dx * dx >= best_sq {
                break;
            }
            let dy = q.y - p.y;
            best_sq = best_sq.min(dx * dx + dy * dy);
        }
        worst = worst.max(best_sq.sqrt());
        if !worst.is_finite() {
            break;
        }
    }
    worst
}

/// Symmetric max–min distance between the points of `a` and `b` that lie in
/// the closed ball `B(0, m)`. `None` if either side is empty after clipping.
pub fn discrete_hausdorff_in_ball(a: &[Point], b: &[Point], m: f64) -> Option<f64> {
    let lim = m * (1.0 + 1e-12);
    let clip = |pts: &[Point]| -> Vec<Point> {
        let mut v: Vec<Point> = pts.iter().copied().filter(|p| p.norm() <= lim).collect();
        v.sort_by(|p, q| p.x.partial_cmp(&q.x).unwrap_or(Ordering::Equal));
        v
    };
    let a = clip(a);
    let b = clip(b);
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;

    fn triangle_lines() -> Vec<PolarLine> {
        vec![
            PolarLine::new(1.0, FRAC_PI_2),
            PolarLine::new(1.0, 7.0 * PI / 6.0),
            PolarLine::new(1.0, 11.0 * PI / 6.0),
        ]
    }

    #[test]
    fn angles_wrap() {
        assert_eq!(normalize_angle(-FRAC_PI_2), 1.5 * PI);
        assert_relative_eq!(angle_diff(0.1, TAU - 0.1), 0.2, epsilon = 1e-12);
        assert_relative_eq!(angle_diff(TAU - 0.1, 0.1), -0.2, epsilon = 1e-12);
        assert_eq!(angle_diff(PI, 0.0), PI);
    }

    #[test]
    fn line_hits() {
        let l = PolarLine::new(1.0, 0.0);
        assert_eq!(ray_line_hit(0.0, &l), Some(1.0));
        assert_relative_eq!(ray_line_hit(PI / 3.0, &l).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(ray_line_hit(FRAC_PI_2, &l), None);
        assert_eq!(ray_line_hit(PI, &l), None);
    }

    #[test]
    fn disc_hits() {
        let d = Disc::new(0.0, 2.0, 1.0);
        assert_relative_eq!(ray_disc_hit(0.0, &d).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(ray_disc_hit(PI / 6.0, &d).unwrap(), 3f64.sqrt(), epsilon = 1e-7);
        assert_eq!(ray_disc_hit(FRAC_PI_2, &d), None);
        assert_eq!(ray_disc_hit(PI, &d), None);
    }

    #[test]
    fn disc_hit_is_within_gap_bounds() {
        let d = Disc::new(1.0, 5.0, 2.0);
        for k in 0..200 {
            let t = k as f64 * TAU / 200.0;
            if let Some(s) = ray_disc_hit(t, &d) {
                assert!((3.0 - 1e-12..=7.0 + 1e-12).contains(&s));
                let p = Point::polar(s, t);
                assert_relative_eq!(p.dist(d.center()), 2.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn equilateral_triangle() {
        let p = halfplane_intersection(&triangle_lines()).unwrap();
        assert_eq!(p.len(), 3);
        for v in &p.vertices {
            assert_relative_eq!(v.norm(), 2.0, epsilon = 1e-12);
        }
        let angles = p.vertex_angles();
        assert_relative_eq!(angles[0], PI / 6.0, epsilon = 1e-12);
        assert_relative_eq!(angles[1], 5.0 * PI / 6.0, epsilon = 1e-12);
        assert_relative_eq!(angles[2], 1.5 * PI, epsilon = 1e-12);
        assert_relative_eq!(inner_radius(&p), 1.0);
        assert_relative_eq!(outer_radius(&p), 2.0, epsilon = 1e-12);
        assert_relative_eq!(perimeter(&p.vertices), 6.0 * 3f64.sqrt(), epsilon = 1e-12);
        // edge i lies on its supporting line and spans [V_i, V_{i+1})
        for i in 0..3 {
            let l = p.supporting_lines[i];
            assert!(l.excess(p.vertices[i]).abs() < 1e-12);
            assert!(l.excess(p.vertices[(i + 1) % 3]).abs() < 1e-12);
        }
        // the edge between π/6 and 5π/6 is the top one
        assert_eq!(p.sources[0], 0);
    }

    #[test]
    fn square_radii() {
        let lines: Vec<_> = (0..4)
            .map(|k| PolarLine::new(1.0, k as f64 * FRAC_PI_2))
            .collect();
        let p = halfplane_intersection(&lines).unwrap();
        assert_eq!(p.len(), 4);
        assert_relative_eq!(inner_radius(&p), 1.0);
        assert_relative_eq!(outer_radius(&p), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn unbounded_cases() {
        assert!(halfplane_intersection(&[]).is_none());
        let strip = [PolarLine::new(1.0, 0.0), PolarLine::new(1.0, PI)];
        assert!(halfplane_intersection(&strip).is_none());
        // three lines whose normals fit in a half-plane of directions
        let wedge = [
            PolarLine::new(1.0, 0.0),
            PolarLine::new(1.0, 1.0),
            PolarLine::new(1.0, 2.0),
        ];
        assert!(halfplane_intersection(&wedge).is_none());
    }

    #[test]
    fn elongated_cell_is_bounded() {
        // Two nearly parallel lines meet far away; a third closes the cell.
        let d = 1e-3;
        let lines = [
            PolarLine::new(1.0, FRAC_PI_2 - d),
            PolarLine::new(1.0, -(FRAC_PI_2 - d)),
            PolarLine::new(1.0, PI),
        ];
        let p = halfplane_intersection(&lines).unwrap();
        assert_eq!(p.len(), 3);
        assert_relative_eq!(outer_radius(&p), 1.0 / d.sin(), max_relative = 1e-9);
    }

    #[test]
    fn redundant_line_is_dropped() {
        let mut lines = triangle_lines();
        lines.push(PolarLine::new(5.0, 0.3));
        let p = halfplane_intersection(&lines).unwrap();
        assert_eq!(p.len(), 3);
        assert!(!p.sources.contains(&3));
    }

    #[test]
    fn concurrent_lines_merge() {
        // a fourth line through the top-right vertex of the triangle
        let mut lines = triangle_lines();
        let v = Point::polar(2.0, PI / 6.0);
        let theta = 0.8f64;
        lines.push(PolarLine::new(v.dot(Point::polar(1.0, theta)), theta));
        let p = halfplane_intersection(&lines).unwrap();
        assert_eq!(p.len(), 3);
        for w in p.vertices.windows(2) {
            assert!(w[0].dist(w[1]) > MERGE_TOL);
        }
    }

    #[test]
    fn perimeters() {
        let s = 2f64.sqrt();
        let tri = [Point::ORIGIN, Point::new(s, 0.0), Point::new(0.0, s)];
        assert_relative_eq!(perimeter(&tri), 2.0 + 2.0 * s, epsilon = 1e-12);
        let degenerate = [Point::ORIGIN, Point::new(3.0, 0.0), Point::new(3.0, 0.0)];
        assert_relative_eq!(perimeter(&degenerate), 6.0);
    }

    #[test]
    fn hausdorff_examples() {
        let circle = |r: f64, n: usize| -> Vec<Point> {
            (0..n).map(|k| Point::polar(r, k as f64 * TAU / n as f64)).collect()
        };
        let a = circle(1.0, 1000);
        assert_eq!(discrete_hausdorff_in_ball(&a, &a, 2.0), Some(0.0));
        let h = discrete_hausdorff_in_ball(&a, &circle(1.1, 1000), 2.0).unwrap();
        assert_relative_eq!(h, 0.1, epsilon = 1e-4);
        let eps = 0.01;
        let shifted: Vec<Point> = a.iter().map(|p| *p + Point::new(eps, 0.0)).collect();
        let h = discrete_hausdorff_in_ball(&a, &shifted, 2.0).unwrap();
        assert!((h - eps).abs() < TAU / 1000.0);
        assert_eq!(discrete_hausdorff_in_ball(&a, &circle(3.0, 10), 2.0), None);
    }
}
