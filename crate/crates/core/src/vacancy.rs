//! Crofton cell with per-edge marks, radial trace of the rescaled vacant
//! component, and the defect processes built on top of them.
//!
//! Angles are sampled on the uniform grid `t_j = 2π j / n`. Along each
//! direction `L_line` is the first line hit and `L_disc` the first hit of a
//! rescaled disc; `d = L_disc - L_line`. The approximate defect `d_bar` uses
//! the disc of the very atom carrying the first line, and `X` is its
//! `λ²`-scaled limit `-Υ²/(2R) cos 2(Θ-t) / cos³(Θ-t)`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};
use core::fmt;

#[allow(unused_imports)] // inherent float methods win when std is linked
use num_traits::Float;

use crate::coupling::{disc_of, enlarged_radius, Realization};
use crate::geometry::{self, normalize_angle, Point};
use crate::quad;

#[derive(Clone, Debug, PartialEq)]
pub enum VacancyError {
    Uncertified,
    LambdaTooSmall,
    BelowLambda0 { lambda_sq: f64, required: f64 },
}

impl fmt::Display for VacancyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VacancyError::Uncertified => write!(f, "uncertified realization"),
            VacancyError::LambdaTooSmall => write!(f, "lambda too small: approximate defect undefined on the grid"),
            VacancyError::BelowLambda0 { lambda_sq, required } => {
                write!(f, "below lambda_0(M): lambda_sq {lambda_sq} < M/R* = {required}")
            }
        }
    }
}

impl core::error::Error for VacancyError {}

/// One edge of the cell: distance `upsilon` and normal angle `theta` of its
/// line, the mark of the atom, and the atom's index in the realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEdge {
    pub upsilon: f64,
    pub theta: f64,
    pub mark_radius: f64,
    pub atom: usize,
}

/// Edge `i` joins `vertices[i]` (included) to `vertices[i + 1]` (excluded).
#[derive(Clone, Debug, PartialEq)]
pub struct CroftonCell {
    pub edges: Vec<CellEdge>,
    pub vertices: Vec<Point>,
    pub vertex_angles: Vec<f64>,
}

impl CroftonCell {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Index of the edge whose angular span contains `t`.
    pub fn edge_at(&self, t: f64) -> usize {
        let t = normalize_angle(t);
        match self.vertex_angles.iter().rposition(|&a| a <= t) {
            Some(i) => i,
            None => self.vertex_angles.len() - 1,
        }
    }

    pub fn inner_radius(&self) -> f64 {
        self.edges.iter().map(|e| e.upsilon).fold(f64::INFINITY, f64::min)
    }

    pub fn outer_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn perimeter(&self) -> f64 {
        geometry::perimeter(&self.vertices)
    }
}

pub fn build_crofton_cell(r: &Realization) -> Result<CroftonCell, VacancyError> {
    let poly = geometry::halfplane_intersection(&r.lines).ok_or(VacancyError::Uncertified)?;
    let edges = poly
        .sources
        .iter()
        .map(|&i| CellEdge {
            upsilon: r.lines[i].rho,
            theta: r.lines[i].theta,
            mark_radius: r.points[i].mark_radius,
            atom: i,
        })
        .collect();
    Ok(CroftonCell {
        edges,
        vertex_angles: poly.vertex_angles(),
        vertices: poly.vertices,
    })
}

/// `X = -Υ²/(2R) cos 2φ / cos³ φ` with `φ = Θ - t`.
pub fn limit_defect(upsilon: f64, theta: f64, mark_radius: f64, t: f64) -> f64 {
    let c = (theta - t).cos();
    let c2 = (2.0 * (theta - t)).cos();
    -upsilon * upsilon / (2.0 * mark_radius) * c2 / (c * c * c)
}

/// Approximate defect of one atom along `t`: the first hit of its rescaled
/// disc minus the first hit of its line, `+∞` when the ray misses the disc.
pub fn approximate_defect(r: &Realization, atom: usize, t: f64) -> f64 {
    let Some(l) = geometry::ray_line_hit(t, &r.lines[atom]) else {
        return f64::INFINITY;
    };
    let disc = disc_of(&r.points[atom], r.lambda_sq);
    match geometry::ray_disc_hit(t, &disc) {
        Some(s) => s - l,
        None => f64::INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectSample {
    pub t: f64,
    pub l_line: f64,
    pub line_atom: Option<usize>,
    pub l_disc: f64,
    pub disc_atom: Option<usize>,
    pub d: f64,
    pub d_bar: f64,
    pub x: f64,
}

impl DefectSample {
    /// `d_bar` undefined although a line is hit.
    pub fn is_sentinel(&self) -> bool {
        self.line_atom.is_some() && !self.d_bar.is_finite()
    }
}

/// Everything along one direction.
pub fn defect_at(r: &Realization, t: f64) -> DefectSample {
    let line = r.first_line_hit(t);
    let disc = r.first_disc_hit(t);
    let (l_line, line_atom) = line.map_or((f64::INFINITY, None), |(d, i)| (d, Some(i)));
    let (l_disc, disc_atom) = disc.map_or((f64::INFINITY, None), |(d, i)| (d, Some(i)));
    let (d_bar, x) = match line_atom {
        Some(i) => {
            let l = &r.lines[i];
            (
                approximate_defect(r, i, t),
                limit_defect(l.rho, l.theta, r.points[i].mark_radius, t),
            )
        }
        None => (f64::INFINITY, f64::NAN),
    };
    DefectSample { t, l_line, line_atom, l_disc, disc_atom, d: l_disc - l_line, d_bar, x }
}

/// Defect processes on a uniform angular grid, with the `L¹` mass of
/// `λ² |d - d_bar|` on every grid cell where it can be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectTrace {
    pub lambda_sq: f64,
    pub samples: Vec<DefectSample>,
    /// `(j, ∫ λ²|d - d_bar|)` over `[t_j, t_{j+1}]`; all other cells carry
    /// the same atom for both hits throughout and contribute zero.
    pub jump_cells: Vec<(usize, f64)>,
}

impl DefectTrace {
    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn has_sentinel(&self) -> bool {
        self.samples.iter().any(DefectSample::is_sentinel)
    }
}

fn gap_integrand(r: &Realization, t: f64) -> f64 {
    let s = defect_at(r, t);
    if s.line_atom == s.disc_atom {
        return 0.0;
    }
    if s.line_atom.is_none() || s.disc_atom.is_none() {
        return f64::INFINITY;
    }
    r.lambda_sq * (s.d - s.d_bar).abs()
}

pub fn trace_defect(r: &Realization, grid_size: usize) -> DefectTrace {
    let h = TAU / grid_size as f64;
    let samples: Vec<DefectSample> = (0..grid_size).map(|j| defect_at(r, j as f64 * h)).collect();

    let n = grid_size;
    let mut flagged = alloc::vec![false; n];
    for j in 0..n {
        let a = &samples[j];
        let b = &samples[(j + 1) % n];
        let suspicious = a.line_atom != b.line_atom
            || a.disc_atom != b.disc_atom
            || a.line_atom != a.disc_atom
            || b.line_atom != b.disc_atom;
        if suspicious {
            // mismatch windows can straddle the neighbouring cells
            flagged[(j + n - 1) % n] = true;
            flagged[j] = true;
            flagged[(j + 1) % n] = true;
        }
    }
    let jump_cells = (0..n)
        .filter(|&j| flagged[j])
        .map(|j| {
            let a = j as f64 * h;
            let v = match quad::integrate(|t| gap_integrand(r, t), a, a + h, 1e-12 * r.lambda_sq.max(1.0)) {
                Ok(e) => e.value,
                Err(e) => e.estimate,
            };
            (j, v)
        })
        .collect();
    DefectTrace { lambda_sq: r.lambda_sq, samples, jump_cells }
}

/// `∫₀^{2π} λ² |d - d_bar| dt`.
pub fn l1_gap(trace: &DefectTrace) -> Result<f64, VacancyError> {
    if trace.has_sentinel() {
        return Err(VacancyError::LambdaTooSmall);
    }
    let mut acc = crate::sum::Fsum::new();
    for &(_, v) in &trace.jump_cells {
        acc.add(v);
    }
    Ok(acc.value())
}

/// `max_j |λ² d_bar(t_j) - X(t_j)|`.
pub fn sup_gap(trace: &DefectTrace) -> Result<f64, VacancyError> {
    if trace.has_sentinel() {
        return Err(VacancyError::LambdaTooSmall);
    }
    Ok(trace
        .samples
        .iter()
        .filter(|s| s.line_atom.is_some())
        .map(|s| (trace.lambda_sq * s.d_bar - s.x).abs())
        .fold(0.0, f64::max))
}

/// Inner and outer radii of the cell and of the rescaled vacant component.
/// `r_max_lambda` is the largest first disc hit on the grid, a radial
/// surrogate for the outer radius of the component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiSummary {
    pub r_min: f64,
    pub r_max: f64,
    pub r_min_lambda: f64,
    pub r_max_lambda: f64,
}

pub fn radii_summary(r: &Realization, grid_size: usize) -> Result<RadiiSummary, VacancyError> {
    let cell = build_crofton_cell(r)?;
    let r_min_lambda = r.discs.iter().map(|d| d.gap).fold(f64::INFINITY, f64::min);
    let h = TAU / grid_size as f64;
    let r_max_lambda = (0..grid_size)
        .map(|j| r.first_disc_hit(j as f64 * h).map_or(f64::INFINITY, |(d, _)| d))
        .fold(0.0, f64::max);
    Ok(RadiiSummary {
        r_min: cell.inner_radius(),
        r_max: cell.outer_radius(),
        r_min_lambda,
        r_max_lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HausdorffCheck {
    pub distance: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Points of the vacant boundary inside `B(0, m)`, spaced about `step`
/// apart: uncovered arcs of every disc circle entering the ball, and
/// uncovered points of the circle `|x| = m`.
///
/// Disc arcs are traced along the circles rather than by rays from the
/// origin: the vacant set is not star-shaped, and rays grazing a disc near
/// the origin skip the part of its boundary that faces away from it.
pub fn vacant_boundary_samples(r: &Realization, m: f64, step: f64) -> Vec<Point> {
    let covered = |q: Point, skip: usize| r.discs.iter().enumerate().any(|(j, d)| j != skip && d.contains(q));
    let mut out = Vec::new();
    for (i, d) in r.discs.iter().enumerate() {
        if d.gap >= m {
            continue;
        }
        // |q|² <= m² on the circle  <=>  2 sin²(β/2) <= (m² - u²) / (2 c ρ_d),
        // with β measured from the point nearest the origin
        let (u, big) = (d.gap, d.radius);
        let s = ((m * m - u * u) / (4.0 * d.center_distance * big)).sqrt().min(1.0);
        let beta_max = 2.0 * s.asin();
        let k = (beta_max * big / step).ceil().max(1.0) as i64;
        let (n, perp) = (Point::polar(1.0, d.center_angle), Point::polar(1.0, d.center_angle + FRAC_PI_2));
        for j in -k..=k {
            let beta = beta_max * j as f64 / k as f64;
            let h = (beta / 2.0).sin();
            // nearest point plus the rise along the circle, free of cancellation
            let a = u + 2.0 * big * h * h;
            let b = big * beta.sin();
            let q = Point::new(a * n.x + b * perp.x, a * n.y + b * perp.y);
            if q.norm() <= m && !covered(q, i) {
                out.push(q);
            }
        }
    }
    let k = (TAU * m / step).ceil() as usize;
    out.extend(
        (0..k)
            .map(|j| Point::polar(m, TAU * j as f64 / k as f64))
            .filter(|&q| !covered(q, usize::MAX)),
    );
    out
}

/// Points of the cell boundary inside `B(0, m)`, spaced at most `step`
/// apart along every edge, plus the points of `|x| = m` inside the cell.
pub fn cell_boundary_samples(cell: &CroftonCell, lines: &[geometry::PolarLine], m: f64, step: f64) -> Vec<Point> {
    let n = cell.vertices.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (p, q) = (cell.vertices[i], cell.vertices[(i + 1) % n]);
        let k = (p.dist(q) / step).ceil().max(1.0) as usize;
        out.extend(
            (0..k)
                .map(|j| {
                    let s = j as f64 / k as f64;
                    Point::new(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y))
                })
                .filter(|v| v.norm() <= m),
        );
    }
    let k = (TAU * m / step).ceil() as usize;
    out.extend(
        (0..k)
            .map(|j| Point::polar(m, TAU * j as f64 / k as f64))
            .filter(|&v| lines.iter().all(|l| l.excess(v) <= 0.0)),
    );
    out
}

/// Discrete `M`-Hausdorff distance between the cell and the rescaled vacant
/// component, compared with `M'²/(R★ λ²)`.
///
/// Both boundaries, clipped to `B(0, M)`, are sampled by arc length at
/// spacing `2πM / grid_size`. Radial sampling would not do: an edge whose
/// line nearly passes through the origin is crossed by rays at wildly
/// uneven spacing. Components of the vacant set other than the one at the
/// origin are not separated out.
pub fn hausdorff_check(r: &Realization, m: f64, grid_size: usize) -> Result<HausdorffCheck, VacancyError> {
    let required = m / r.r_star;
    if r.lambda_sq < required {
        return Err(VacancyError::BelowLambda0 { lambda_sq: r.lambda_sq, required });
    }
    let cell = build_crofton_cell(r)?;
    let slack = TAU * m / grid_size as f64;
    let a = cell_boundary_samples(&cell, &r.lines, m, slack);
    let b = vacant_boundary_samples(r, m, slack);
    let distance = geometry::discrete_hausdorff_in_ball(&a, &b, m).ok_or(VacancyError::Uncertified)?;
    let mp = enlarged_radius(m, r.lambda_sq, r.r_star);
    let bound = mp * mp / (r.r_star * r.lambda_sq);
    Ok(HausdorffCheck { distance, bound, slack, pass: distance <= bound + slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::atom;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn triangle(lambda_sq: f64) -> Realization {
        let pts = vec![
            atom(1.0, FRAC_PI_2, 1.0),
            atom(1.0, 7.0 * PI / 6.0, 1.0),
            atom(1.0, 11.0 * PI / 6.0, 1.0),
        ];
        Realization::from_points(pts, lambda_sq, 10.0, 1.0, 256)
    }

    #[test]
    fn triangle_cell() {
        let cell = build_crofton_cell(&triangle(100.0)).unwrap();
        assert_eq!(cell.n_edges(), 3);
        let want = [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI];
        for (a, w) in cell.vertex_angles.iter().zip(want) {
            assert_relative_eq!(*a, w, epsilon = 1e-12);
        }
        assert!(cell.edges.iter().all(|e| e.upsilon == 1.0 && e.mark_radius == 1.0));
        assert_eq!(cell.edge_at(FRAC_PI_2), 0);
        assert_eq!(cell.edge_at(0.1), 2);
        assert_relative_eq!(cell.outer_radius(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn uncertified_cell() {
        let r = Realization::from_points(vec![atom(1.0, 0.0, 1.0)], 100.0, 10.0, 1.0, 64);
        assert_eq!(build_crofton_cell(&r), Err(VacancyError::Uncertified));
    }

    #[test]
    fn approximate_defect_head_on() {
        let r = Realization::from_points(vec![atom(1.0, 0.7, 1.0)], 10.0, 10.0, 1.0, 64);
        let want = 10.0 * 1.2f64.sqrt() - 10.0 - 1.0;
        assert_relative_eq!(approximate_defect(&r, 0, 0.7), want, epsilon = 1e-13);
        assert_relative_eq!(want, -0.045_548_85, epsilon = 1e-8);
        assert_relative_eq!(limit_defect(1.0, 0.7, 1.0, 0.7), -0.5);
        assert!(limit_defect(1.0, 0.7 + FRAC_PI_4, 1.0, 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_atom_defects_agree() {
        let r = Realization::from_points(vec![atom(0.8, 1.0, 1.0)], 50.0, 10.0, 1.0, 64);
        let trace = trace_defect(&r, 512);
        let mut defined = 0;
        for s in &trace.samples {
            if s.line_atom.is_some() && s.d_bar.is_finite() {
                assert_eq!(s.d, s.d_bar);
                defined += 1;
            }
        }
        assert!(defined > 200);
        // cells next to the missed directions are undefined, all others vanish
        assert!(trace.jump_cells.iter().all(|&(_, v)| v == 0.0 || !v.is_finite()));
    }

    #[test]
    fn sentinel_makes_gaps_fail() {
        // a tiny lambda leaves steep directions without a disc hit
        let r = triangle(0.5);
        let trace = trace_defect(&r, 256);
        assert!(trace.has_sentinel());
        assert_eq!(l1_gap(&trace), Err(VacancyError::LambdaTooSmall));
        assert_eq!(sup_gap(&trace), Err(VacancyError::LambdaTooSmall));
    }

    #[test]
    fn symmetric_triangle_has_no_mismatch() {
        // both discs meet exactly above each vertex
        let g = trace_defect(&triangle(100.0), 1024);
        assert_eq!(l1_gap(&g).unwrap(), 0.0);
    }

    #[test]
    fn gaps_shrink_with_lambda() {
        let pts = vec![
            atom(1.0, FRAC_PI_2, 1.0),
            atom(1.3, 7.0 * PI / 6.0 + 0.2, 0.7),
            atom(0.8, 11.0 * PI / 6.0, 1.2),
        ];
        let r = Realization::from_points(pts, 100.0, 10.0, 0.7, 256);
        let g1 = trace_defect(&r, 1024);
        let g2 = trace_defect(&r.with_lambda_sq(400.0, 256), 1024);
        let (l1, l2) = (l1_gap(&g1).unwrap(), l1_gap(&g2).unwrap());
        let (s1, s2) = (sup_gap(&g1).unwrap(), sup_gap(&g2).unwrap());
        assert!(l1 > 0.0);
        assert!(l2 < 0.5 * l1, "{l1} {l2}");
        assert!(s2 < 0.5 * s1, "{s1} {s2}");
    }

    #[test]
    fn triangle_radii() {
        let s = radii_summary(&triangle(1e4), 1024).unwrap();
        assert_eq!(s.r_min, 1.0);
        assert_relative_eq!(s.r_max, 2.0, epsilon = 1e-12);
        assert!(s.r_min_lambda <= s.r_min && s.r_min - s.r_min_lambda <= 1.0 / (2.0 * 1e4));
        assert!(s.r_min_lambda <= s.r_max_lambda);
    }

    #[test]
    fn triangle_hausdorff() {
        let c = hausdorff_check(&triangle(100.0), 3.0, 2048).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(matches!(
            hausdorff_check(&triangle(2.0), 3.0, 256),
            Err(VacancyError::BelowLambda0 { .. })
        ));
    }
}
