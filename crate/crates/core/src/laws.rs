//! Closed-form laws of the line process and its coupled Boolean model, with
//! quadrature oracles for the quantities that have no closed form.

use core::cell::Cell;
use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::fmt;

#[allow(unused_imports)] // inherent float methods win when std is linked
use num_traits::Float;
use rand::Rng;

use crate::coupling::MarkLaw;
use crate::quad::{self, Estimate, QuadError};

/// Exponent beyond which `exp(-x)` is dropped from the integrals.
const CUTOFF: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LawError {
    DegenerateDirection,
    Quadrature(QuadError),
    Precondition(&'static str),
}

impl fmt::Display for LawError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawError::DegenerateDirection => write!(f, "degenerate direction: |Θ - t| = π/2"),
            LawError::Quadrature(e) => write!(f, "{e}"),
            LawError::Precondition(what) => write!(f, "precondition violated: {what}"),
        }
    }
}

impl core::error::Error for LawError {}

impl From<QuadError> for LawError {
    fn from(e: QuadError) -> Self {
        LawError::Quadrature(e)
    }
}

/// `P(R_m > r) = exp(-2πr)` for the inner radius of the Crofton cell.
pub fn inner_ccdf(r: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else {
        (-TAU * r).exp()
    }
}

/// `P(R_m(λ) > r) = exp(-(2πr + πr²/λ²))` for the rescaled vacant component.
pub fn boolean_inner_ccdf(r: f64, lambda_sq: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else {
        (-(TAU * r + PI * r * r / lambda_sq)).exp()
    }
}

/// Two-sided bound on `P(R_M >= r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterBound {
    pub lower: f64,
    pub upper: f64,
}

pub fn outer_bounds(r: f64) -> OuterBound {
    let c1 = 1f64.cos();
    let lead = TAU * r * (-2.0 * r).exp();
    let lower = lead * (c1 + (-(TAU * c1 - 1.0) * r).exp() / (TAU * r));
    let e2 = (-2.0 * r).exp();
    let upper = lead
        * (1.0 - (PI - 2.0) * r * e2
            + 2.0 / 3.0 * (PI - 3.0).powi(2) * r * r * e2 * e2
            + (-2.0 * (PI - 1.0) * r).exp() / (TAU * r));
    OuterBound {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
    }
}

/// Joint density `e^{-2ℓ} cos θ` of the distance and relative normal angle
/// of the first line met by a ray.
pub fn first_hit_density(l: f64, theta: f64) -> f64 {
    if l < 0.0 || theta.abs() >= FRAC_PI_2 {
        0.0
    } else {
        (-2.0 * l).exp() * theta.cos()
    }
}

/// `P(L <= ℓ) = 1 - e^{-2ℓ}`.
pub fn first_hit_distance_cdf(l: f64) -> f64 {
    if l <= 0.0 {
        0.0
    } else {
        -(-2.0 * l).exp_m1()
    }
}

/// `P(Θ <= θ) = (1 + sin θ)/2` on `(-π/2, π/2)`.
pub fn first_hit_angle_cdf(theta: f64) -> f64 {
    0.5 * (1.0 + theta.clamp(-FRAC_PI_2, FRAC_PI_2).sin())
}

/// Draws `(L, Θ)` by inverting both marginal CDFs.
pub fn sample_first_hit<G: Rng + ?Sized>(rng: &mut G) -> (f64, f64) {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let l = -(-u).ln_1p() / 2.0;
    let theta = (2.0 * v - 1.0).asin();
    (l, theta)
}

/// `Z = -L²/2 · cos 2(Θ-t) / (R cos(Θ-t))`.
pub fn limit_z(l: f64, theta: f64, r: f64, t: f64) -> Result<f64, LawError> {
    let c = (theta - t).cos();
    if c.abs() <= f64::EPSILON {
        return Err(LawError::DegenerateDirection);
    }
    Ok(-l * l / 2.0 * (2.0 * (theta - t)).cos() / (r * c))
}

/// Draws the one-direction limit `Z`, with the mark drawn from the law the
/// coupling attaches to atoms.
pub fn sample_z<G: Rng + ?Sized>(rng: &mut G, marks: &MarkLaw) -> f64 {
    loop {
        let (l, theta) = sample_first_hit(rng);
        let r = marks.sample(rng);
        if let Ok(z) = limit_z(l, theta, r, 0.0) {
            return z;
        }
    }
}

/// Range of `cos θ` on which `|cos 2θ| / cos θ <= k`.
fn truncation_window(k: f64) -> (f64, f64) {
    let s = (k * k + 8.0).sqrt();
    let lo = (-k + s) / 4.0;
    let hi = ((k + s) / 4.0).min(1.0);
    (lo, hi)
}

/// `E[Z^p 1{|Z| <= K}]` for a fixed mark, as a 2D integral over `(ℓ, θ)`.
fn z_moment_fixed_mark(power: i32, k: f64, r: f64, tol: f64) -> Result<Estimate, QuadError> {
    let l_max = 0.5 * CUTOFF;
    quad::integrate_2d(
        |l, theta| {
            let (s, c) = theta.sin_cos();
            let c2 = c * c - s * s;
            let z = -l * l / (2.0 * r) * c2 / c;
            // factor 2: the θ-domain is folded onto θ >= 0
            2.0 * z.powi(power) * (-2.0 * l).exp() * c
        },
        0.0,
        l_max,
        |l| {
            if l == 0.0 {
                return (0.0, FRAC_PI_2);
            }
            let (lo, hi) = truncation_window(2.0 * r * k / (l * l));
            (hi.acos(), lo.acos())
        },
        tol,
    )
}

fn z_moment(power: i32, k: f64, marks: &MarkLaw, tol: f64) -> Result<f64, LawError> {
    if !(k > 0.0) {
        return Err(LawError::Precondition("truncation level must be positive"));
    }
    let failed = Cell::new(None);
    let v = marks.expect_sampling(|r| match z_moment_fixed_mark(power, k, r, tol) {
        Ok(e) => e.value,
        Err(e) => {
            failed.set(Some(e));
            e.estimate
        }
    });
    match failed.get() {
        Some(e) => Err(LawError::Quadrature(QuadError { estimate: v, ..e })),
        None => Ok(v),
    }
}

/// `E[Z 1{|Z| <= K}]`; tends to 0 as `K` grows.
pub fn z_truncated_mean(k: f64, marks: &MarkLaw, tol: f64) -> Result<f64, LawError> {
    z_moment(1, k, marks, tol)
}

/// `E[Z² 1{|Z| <= K}]`; grows like `log K`.
pub fn z_second_moment_truncated(k: f64, marks: &MarkLaw, tol: f64) -> Result<f64, LawError> {
    z_moment(2, k, marks, tol)
}

/// Arc of normal angles `α` for which a line meets both rays `0` and `t`.
pub fn admissible_arc(t: f64) -> Option<(f64, f64)> {
    let t = crate::geometry::normalize_angle(t);
    if t == 0.0 {
        Some((-FRAC_PI_2, FRAC_PI_2))
    } else if t < PI {
        Some((t - FRAC_PI_2, FRAC_PI_2))
    } else if t > PI {
        Some((-FRAC_PI_2, t - 1.5 * PI))
    } else {
        None
    }
}

/// Perimeter of the triangle `(0, a e_0, b e_t)`.
pub fn anchored_triangle_perimeter(a: f64, b: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    a + b + (a - b * c).hypot(b * s)
}

/// Perimeter of the triangle cut from the rays `0` and `t` by the line
/// `(ρ, α)`; `+∞` when the line misses one of the rays.
pub fn same_line_perimeter(rho: f64, alpha: f64, t: f64) -> f64 {
    let (c0, ct) = (alpha.cos(), (alpha - t).cos());
    if c0 <= 0.0 || ct <= 0.0 {
        return f64::INFINITY;
    }
    anchored_triangle_perimeter(rho / c0, rho / ct, t)
}

/// Probability that the first lines met in directions `0` and `t` coincide:
/// `∫∫ exp(-𝔭(Δ_{0,t}(ρ, α))) dρ dα`. The mark integrates out.
pub fn same_line_prob(t: f64, _marks: &MarkLaw, tol: f64) -> Result<f64, LawError> {
    let Some((lo, hi)) = admissible_arc(t) else {
        return Ok(0.0);
    };
    let e = quad::integrate_2d(
        |alpha, rho| (-same_line_perimeter(rho, alpha, t)).exp(),
        lo,
        hi,
        |alpha| {
            let p = same_line_perimeter(1.0, alpha, t);
            if p.is_finite() {
                (0.0, CUTOFF / p)
            } else {
                (0.0, 0.0)
            }
        },
        tol,
    )?;
    Ok(e.value.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairBranch {
    /// One line `(ρ, α)` is first in both directions.
    SameLine { rho: f64, alpha: f64 },
    /// Line 1 is first in direction 0, line 2 in direction `t`.
    TwoLines { rho1: f64, alpha1: f64, rho2: f64, alpha2: f64 },
}

/// Unnormalised density of the first-hit configuration in directions `0`
/// and `t`. In the two-line branch the region avoided by all other lines is
/// the union of the segments `[0, x1]` and `[0, x2]`, whose hitting measure
/// is the perimeter of the triangle `(0, x1, x2)`.
pub fn pair_branch_density(branch: PairBranch, t: f64) -> f64 {
    match branch {
        PairBranch::SameLine { rho, alpha } => (-same_line_perimeter(rho, alpha, t)).exp(),
        PairBranch::TwoLines { rho1, alpha1, rho2, alpha2 } => {
            let c1 = alpha1.cos();
            let c2 = (alpha2 - t).cos();
            if c1 <= 0.0 || c2 <= 0.0 {
                return 0.0;
            }
            let a = rho1 / c1;
            let b = rho2 / c2;
            // line 1 must not cross [0, x2], nor line 2 cross [0, x1]
            let c1t = (alpha1 - t).cos();
            if c1t > 0.0 && b * c1t >= rho1 {
                return 0.0;
            }
            let c20 = alpha2.cos();
            if c20 > 0.0 && a * c20 >= rho2 {
                return 0.0;
            }
            (-anchored_triangle_perimeter(a, b, t)).exp()
        }
    }
}

/// `∫ cos α dα` over the angles in `(lo, hi)` (length below π) whose lines
/// through `a e_0` would also cross `[0, b e_t]`.
fn blocked_weight(a: f64, b: f64, t: f64, lo: f64, hi: f64) -> f64 {
    // b cos(α - t) - a cos α = C cos(α - φ)
    let (s, c) = t.sin_cos();
    let phi = (b * s).atan2(b * c - a);
    let mid = 0.5 * (lo + hi);
    let phi = phi + TAU * ((mid - phi) / TAU).round();
    let l = lo.max(phi - FRAC_PI_2);
    let h = hi.min(phi + FRAC_PI_2);
    if h > l {
        h.sin() - l.sin()
    } else {
        0.0
    }
}

/// Total mass of the two-line branch, `1 - same_line_prob(t)`, integrated
/// independently: with `a = ρ1/cos α1` and `b = ρ2/cos(α2 - t)` the density
/// depends on the angles only through the blocking indicators, which are
/// integrated in closed form.
pub fn two_line_mass(t: f64, tol: f64) -> Result<f64, LawError> {
    let arc = admissible_arc(t);
    let e = quad::integrate_2d(
        |a, b| {
            let (w1, w2) = match arc {
                Some((lo, hi)) => (
                    2.0 - blocked_weight(a, b, t, lo, hi),
                    // mirror image: swap the roles of the two rays
                    2.0 - blocked_weight(b, a, -t, lo - t, hi - t),
                ),
                None => (2.0, 2.0),
            };
            w1 * w2 * (-anchored_triangle_perimeter(a, b, t)).exp()
        },
        0.0,
        CUTOFF,
        |a| (0.0, CUTOFF - a),
        tol,
    )?;
    Ok(e.value)
}

fn lens_theta0(lambda_sq: f64, r: f64, mark: f64, n: u32) -> f64 {
    (r / (2.0 * lambda_sq * mark)).acos() - PI / n as f64
}

fn lens_preconditions(lambda_sq: f64, r: f64, mark: f64, n: u32) -> Result<f64, LawError> {
    if n < 12 {
        return Err(LawError::Precondition("N >= 12"));
    }
    if !(r > 0.0 && mark > 0.0 && lambda_sq > 0.0) {
        return Err(LawError::Precondition("r, R and lambda_sq must be positive"));
    }
    if !(lambda_sq > 2.0 * r) {
        return Err(LawError::Precondition("lambda_sq > 2 r"));
    }
    let big = lambda_sq * mark;
    if r >= 2.0 * big {
        return Err(LawError::Precondition("r < 2 lambda_sq R"));
    }
    let theta0 = lens_theta0(lambda_sq, r, mark, n);
    let step = PI / n as f64;
    if !(theta0 > step) {
        return Err(LawError::Precondition("theta_0 > pi/N"));
    }
    let need = (r / (2.0 * (theta0 - step).cos())).max(r / (2.0 * step.cos()));
    if big < need {
        return Err(LawError::Precondition("lambda_sq R >= max(r/(2cos(theta_0 - pi/N)), r/(2cos(pi/N)))"));
    }
    Ok(theta0)
}

/// Outer boundary `ρ_e(θ)` of the lens: the exit distance from the disc of
/// radius `λ²R` centred at polar `(r, -π/N)` (mirrored for `θ < 0`).
pub fn lens_boundary(theta: f64, lambda_sq: f64, r: f64, mark: f64, n: u32) -> f64 {
    let big = lambda_sq * mark;
    let phi = theta.abs() + PI / n as f64;
    let s = r * phi.sin() / big;
    r * phi.cos() + big * (1.0 - s * s).sqrt()
}

/// Area of `[B((r, π/N), λ²R) ∩ B((r, -π/N), λ²R)] \ B(0, λ²R)` by polar
/// quadrature of `(ρ_e² - (λ²R)²)/2` over `(-θ0, θ0)`.
pub fn lens_area(lambda_sq: f64, r: f64, mark: f64, n: u32) -> Result<f64, LawError> {
    let theta0 = lens_preconditions(lambda_sq, r, mark, n)?;
    let big = lambda_sq * mark;
    let e = quad::integrate(
        |th| {
            let rho = lens_boundary(th, lambda_sq, r, mark, n);
            // ρ² - L² = (ρ - L)(ρ + L), without cancellation
            (rho - big) * (rho + big)
        },
        0.0,
        theta0,
        1e-10 * big * r,
    )?;
    Ok(e.value)
}

/// `(3π/24) λ² R r`.
pub fn lens_lower_bound(lambda_sq: f64, r: f64, mark: f64) -> f64 {
    3.0 * PI / 24.0 * lambda_sq * mark * r
}

/// Union bound `N exp(-E[a_{λ,r,R}] / λ²)` over the `N` sector lenses: a
/// majorant for the tail of the outer radius of the rescaled vacant
/// component, not its law.
pub fn outer_tail_majorant(lambda_sq: f64, r: f64, marks: &MarkLaw, n: u32) -> Result<f64, LawError> {
    let failed = Cell::new(None);
    let mean_area = marks.expect(|mark| match lens_area(lambda_sq, r, mark, n) {
        Ok(a) => a,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    });
    if let Some(e) = failed.get() {
        return Err(e);
    }
    Ok((n as f64 * (-mean_area / lambda_sq).exp()).min(1.0))
}
