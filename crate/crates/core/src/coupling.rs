//! The driving marked Poisson process and the coupling map.
//!
//! Atoms `(rho, theta, R)` of a Poisson process with intensity
//! `dρ dθ dμ(R)` give both a polar line `(rho, theta)` and, in the frame
//! rescaled by `lambda^2`, a disc of radius `lambda^2 R` whose centre lies at
//! distance `lambda^2 psi(rho, R)` in direction `theta`.
//!
//! Atoms are generated in increasing `rho` (exponential spacings of rate
//! 2π), so enlarging a window only appends atoms and a realization restricted
//! to a smaller window is exactly the smaller-window realization.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

#[allow(unused_imports)] // inherent float methods win when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::geometry::{self, normalize_angle, Disc, PolarLine};

/// Number of window doublings attempted before giving up.
pub const MAX_DOUBLINGS: u32 = 8;

const MEAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarkKind {
    /// `R = 1` almost surely.
    Deterministic,
    /// Uniform on `[a, b]` with `a + b = 2`.
    Uniform { a: f64, b: f64 },
    /// `r1` with probability `p1`, otherwise `r2`.
    TwoPoint { r1: f64, p1: f64, r2: f64 },
}

/// Law `μ` of the disc radii, with the sampling mode used by the coupling.
///
/// With `size_biased` the marks attached to atoms are drawn from
/// `R dμ(R)`, which makes the image of the driving process exactly the
/// Boolean model of intensity `λ² dx` with radii of law `μ`. Without it the
/// marks are drawn from `μ` itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkLaw {
    pub kind: MarkKind,
    pub size_biased: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MarkLawError {
    NonPositiveSupport,
    MeanNotOne(f64),
    BadProbability(f64),
}

impl fmt::Display for MarkLawError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkLawError::NonPositiveSupport => write!(f, "mark support must be positive"),
            MarkLawError::MeanNotOne(m) => write!(f, "mark law must have mean 1, got {m}"),
            MarkLawError::BadProbability(p) => write!(f, "two-point weight {p} not in (0, 1)"),
        }
    }
}

impl core::error::Error for MarkLawError {}

/// 16 panels of 15-point Kronrod nodes on [0, 1], used for expectations
/// under the uniform law.
fn uniform_nodes() -> impl Iterator<Item = (f64, f64)> {
    const X: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const W: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_727_8,
    ];
    const PANELS: usize = 16;
    let h = 0.5 / PANELS as f64;
    (0..PANELS).flat_map(move |p| {
        let c = (2 * p + 1) as f64 * h;
        (0..15).map(move |k| {
            let (x, w) = if k < 8 { (-X[k], W[k]) } else { (X[14 - k], W[14 - k]) };
            (c + h * x, w * h)
        })
    })
}

impl MarkLaw {
    pub fn new(kind: MarkKind, size_biased: bool) -> Result<Self, MarkLawError> {
        match kind {
            MarkKind::Deterministic => {}
            MarkKind::Uniform { a, b } => {
                if !(a > 0.0 && b > a) {
                    return Err(MarkLawError::NonPositiveSupport);
                }
                let mean = 0.5 * (a + b);
                if (mean - 1.0).abs() > MEAN_TOL {
                    return Err(MarkLawError::MeanNotOne(mean));
                }
            }
            MarkKind::TwoPoint { r1, p1, r2 } => {
                if !(r1 > 0.0 && r2 > 0.0) {
                    return Err(MarkLawError::NonPositiveSupport);
                }
                if !(p1 > 0.0 && p1 < 1.0) {
                    return Err(MarkLawError::BadProbability(p1));
                }
                let mean = p1 * r1 + (1.0 - p1) * r2;
                if (mean - 1.0).abs() > MEAN_TOL {
                    return Err(MarkLawError::MeanNotOne(mean));
                }
            }
        }
        Ok(MarkLaw { kind, size_biased })
    }

    pub fn deterministic() -> Self {
        MarkLaw { kind: MarkKind::Deterministic, size_biased: true }
    }

    /// Lower end of the support, `R★`.
    pub fn r_star(&self) -> f64 {
        match self.kind {
            MarkKind::Deterministic => 1.0,
            MarkKind::Uniform { a, .. } => a,
            MarkKind::TwoPoint { r1, r2, .. } => r1.min(r2),
        }
    }

    /// Same law with the given sampling mode.
    pub fn with_size_biased(self, size_biased: bool) -> Self {
        MarkLaw { size_biased, ..self }
    }

    /// True when `μ` is a point mass (both sampling modes coincide).
    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, MarkKind::Deterministic)
    }

    /// Draws one mark from the sampling law.
    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> f64 {
        let u: f64 = rng.random();
        match (self.kind, self.size_biased) {
            (MarkKind::Deterministic, _) => 1.0,
            (MarkKind::Uniform { a, b }, false) => a + (b - a) * u,
            // density r / (b^2 - a^2) * 2 on [a, b]
            (MarkKind::Uniform { a, b }, true) => (a * a + u * (b * b - a * a)).sqrt(),
            (MarkKind::TwoPoint { r1, p1, r2 }, biased) => {
                let w1 = if biased { p1 * r1 } else { p1 };
                if u < w1 {
                    r1
                } else {
                    r2
                }
            }
        }
    }

    /// `E[f(R)]` under `μ`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        self.expect_weighted(false, f)
    }

    /// `E[f(R)]` under the law marks are actually drawn from.
    pub fn expect_sampling<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        self.expect_weighted(self.size_biased, f)
    }

    fn expect_weighted<F: FnMut(f64) -> f64>(&self, biased: bool, mut f: F) -> f64 {
        match self.kind {
            MarkKind::Deterministic => f(1.0),
            MarkKind::Uniform { a, b } => uniform_nodes()
                .map(|(x, w)| {
                    let r = a + (b - a) * x;
                    let bias = if biased { r } else { 1.0 };
                    w * bias * f(r)
                })
                .sum(),
            MarkKind::TwoPoint { r1, p1, r2 } => {
                let (w1, w2) = if biased {
                    (p1 * r1, (1.0 - p1) * r2)
                } else {
                    (p1, 1.0 - p1)
                };
                w1 * f(r1) + w2 * f(r2)
            }
        }
    }
}

/// One atom of the driving process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkedPoint {
    pub rho: f64,
    pub theta: f64,
    pub mark_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    NonPositiveIntensity(f64),
    WindowTooSmall { window: f64, required: f64 },
    GridTooCoarse(usize),
    NegativeBall(f64),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NonPositiveIntensity(l) => write!(f, "lambda_sq must be positive, got {l}"),
            ConfigError::WindowTooSmall { window, required } => write!(
                f,
                "window_rho_max {window} is below target_ball_M + target_ball_M^2/(lambda_sq R*) = {required}"
            ),
            ConfigError::GridTooCoarse(n) => write!(f, "grid_size must be at least 16, got {n}"),
            ConfigError::NegativeBall(m) => write!(f, "target_ball_M must be non-negative, got {m}"),
        }
    }
}

impl core::error::Error for ConfigError {}

/// Everything that determines a reproducible run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub lambda_sq: f64,
    pub mark_law: MarkLaw,
    pub window_rho_max: f64,
    pub target_ball_m: f64,
    pub seed: u64,
    pub replicas: usize,
    pub grid_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda_sq: 100.0,
            mark_law: MarkLaw::deterministic(),
            window_rho_max: 20.0,
            target_ball_m: 3.0,
            seed: 42,
            replicas: 1,
            grid_size: 4096,
        }
    }
}

/// `M' = M + M^2 / (λ² R★)`: lines that matter inside `B(0, M)` live within it.
pub fn enlarged_radius(m: f64, lambda_sq: f64, r_star: f64) -> f64 {
    m + m * m / (lambda_sq * r_star)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda_sq > 0.0 && self.lambda_sq.is_finite()) {
            return Err(ConfigError::NonPositiveIntensity(self.lambda_sq));
        }
        if !(self.target_ball_m >= 0.0) {
            return Err(ConfigError::NegativeBall(self.target_ball_m));
        }
        if self.grid_size < 16 {
            return Err(ConfigError::GridTooCoarse(self.grid_size));
        }
        let required = enlarged_radius(self.target_ball_m, self.lambda_sq, self.mark_law.r_star());
        if !(self.window_rho_max >= required) {
            return Err(ConfigError::WindowTooSmall { window: self.window_rho_max, required });
        }
        Ok(())
    }
}

/// Per-replica random stream: ChaCha8 keyed by the master seed, with the
/// replica index as stream id.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Endless stream of atoms in increasing `rho`.
#[derive(Clone, Debug)]
pub struct AtomStream {
    rng: ChaCha8Rng,
    rho: f64,
    marks: MarkLaw,
}

impl AtomStream {
    pub fn new(seed: u64, replica: u64, marks: MarkLaw) -> Self {
        AtomStream { rng: replica_rng(seed, replica), rho: 0.0, marks }
    }

    pub fn from_rng(rng: ChaCha8Rng, marks: MarkLaw) -> Self {
        AtomStream { rng, rho: 0.0, marks }
    }
}

impl Iterator for AtomStream {
    type Item = MarkedPoint;

    fn next(&mut self) -> Option<MarkedPoint> {
        let gap: f64 = self.rng.sample(Exp1);
        self.rho += gap / TAU;
        let theta = TAU * self.rng.random::<f64>();
        let mark_radius = self.marks.sample(&mut self.rng);
        Some(MarkedPoint { rho: self.rho, theta, mark_radius })
    }
}

/// Atoms with `rho <= cfg.window_rho_max` for one replica.
pub fn sample_marked_process(cfg: &RunConfig, replica: u64) -> Vec<MarkedPoint> {
    AtomStream::new(cfg.seed, replica, cfg.mark_law)
        .take_while(|p| p.rho <= cfg.window_rho_max)
        .collect()
}

/// `ψ_λ(ρ, R) = R sqrt(1 + 2ρ/(λ² R))`.
pub fn psi_lambda(rho: f64, r: f64, lambda_sq: f64) -> f64 {
    r * (1.0 + 2.0 * rho / (lambda_sq * r)).sqrt()
}

/// Distance from the origin to the coupled rescaled disc,
/// `λ² R (sqrt(1 + 2ρ/(λ²R)) - 1)`, evaluated without cancellation.
pub fn nearest_gap(rho: f64, r: f64, lambda_sq: f64) -> f64 {
    2.0 * rho / (1.0 + (1.0 + 2.0 * rho / (lambda_sq * r)).sqrt())
}

pub fn line_of(p: &MarkedPoint) -> PolarLine {
    PolarLine::new(p.rho, p.theta)
}

/// Coupled disc in the frame rescaled by `λ²`.
pub fn disc_of(p: &MarkedPoint, lambda_sq: f64) -> Disc {
    Disc::from_gap(p.theta, nearest_gap(p.rho, p.mark_radius, lambda_sq), lambda_sq * p.mark_radius)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingError {
    DiscCoversOrigin,
    WindowExhausted(Box<Realization>),
}

impl fmt::Display for CouplingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingError::DiscCoversOrigin => write!(f, "disc covers origin"),
            CouplingError::WindowExhausted(r) => write!(
                f,
                "window exhausted: no certified realization up to window {}",
                r.window
            ),
        }
    }
}

impl core::error::Error for CouplingError {}

/// Inverse of the coupling: from the rescaled centre distance of a disc of
/// radius `λ² R` back to the distance of its line.
pub fn inverse_coupling(center_distance_rescaled: f64, r: f64, lambda_sq: f64) -> Result<f64, CouplingError> {
    let rc = center_distance_rescaled / lambda_sq;
    let excess = rc - r;
    if excess < 0.0 {
        return Err(CouplingError::DiscCoversOrigin);
    }
    Ok(lambda_sq * excess + lambda_sq * excess * excess / (2.0 * r))
}

/// One coupled sample: atoms sorted by `rho`, their lines and rescaled discs.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub lambda_sq: f64,
    pub seed: u64,
    pub replica: u64,
    pub window: f64,
    pub r_star: f64,
    pub points: Vec<MarkedPoint>,
    pub lines: Vec<PolarLine>,
    pub discs: Vec<Disc>,
    pub certified: bool,
}

impl Realization {
    /// Builds a realization from explicit atoms and certifies it on a grid
    /// of `grid_size` directions.
    pub fn from_points(
        mut points: Vec<MarkedPoint>,
        lambda_sq: f64,
        window: f64,
        r_star: f64,
        grid_size: usize,
    ) -> Self {
        points.sort_by(|a, b| a.rho.partial_cmp(&b.rho).unwrap_or(core::cmp::Ordering::Equal));
        let mut r = Realization {
            lambda_sq,
            seed: 0,
            replica: 0,
            window,
            r_star,
            lines: points.iter().map(line_of).collect(),
            discs: points.iter().map(|p| disc_of(p, lambda_sq)).collect(),
            points,
            certified: false,
        };
        r.certified = r.certify(grid_size);
        r
    }

    /// Same atoms, different intensity.
    pub fn with_lambda_sq(&self, lambda_sq: f64, grid_size: usize) -> Self {
        let mut r = Realization::from_points(self.points.clone(), lambda_sq, self.window, self.r_star, grid_size);
        r.seed = self.seed;
        r.replica = self.replica;
        r
    }

    /// Every disc of an atom beyond the window stays at least this far
    /// from the origin.
    pub fn disc_exact_radius(&self) -> f64 {
        nearest_gap(self.window, self.r_star, self.lambda_sq)
    }

    /// First line met along direction `t`: `(distance, atom index)`.
    pub fn first_line_hit(&self, t: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, line) in self.lines.iter().enumerate() {
            if let Some((d, _)) = best {
                if line.rho >= d {
                    break;
                }
            }
            if let Some(h) = geometry::ray_line_hit(t, line) {
                if best.is_none_or(|(d, _)| h < d) {
                    best = Some((h, i));
                }
            }
        }
        best
    }

    /// First disc boundary met along direction `t`: `(distance, atom index)`.
    pub fn first_disc_hit(&self, t: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, disc) in self.discs.iter().enumerate() {
            if let Some((d, _)) = best {
                if nearest_gap(self.points[i].rho, self.r_star, self.lambda_sq) >= d {
                    break;
                }
            }
            if let Some(h) = geometry::ray_disc_hit(t, disc) {
                if best.is_none_or(|(d, _)| h < d) {
                    best = Some((h, i));
                }
            }
        }
        best
    }

    /// Grid check that the sampled window determines both the Crofton cell
    /// and the radial extent of the vacant component.
    pub fn certify(&self, grid_size: usize) -> bool {
        let Some(cell) = geometry::halfplane_intersection(&self.lines) else {
            return false;
        };
        if !(geometry::outer_radius(&cell) < self.window) {
            return false;
        }
        let limit = self.disc_exact_radius();
        let slack = 1.0 + TAU / grid_size as f64;
        (0..grid_size).all(|j| {
            let t = TAU * j as f64 / grid_size as f64;
            matches!(self.first_disc_hit(t), Some((d, _)) if d * slack < limit)
        })
    }
}

/// Samples atoms on the configured window, doubling it (and extending the
/// same atom stream) until the realization certifies.
pub fn windowed_realization(cfg: &RunConfig, replica: u64) -> Result<Realization, CouplingError> {
    let mut stream = AtomStream::new(cfg.seed, replica, cfg.mark_law).peekable();
    let mut points = Vec::new();
    let mut window = cfg.window_rho_max;
    let mut attempt = 0;
    loop {
        while let Some(p) = stream.next_if(|p| p.rho <= window) {
            points.push(p);
        }
        let mut r = Realization {
            lambda_sq: cfg.lambda_sq,
            seed: cfg.seed,
            replica,
            window,
            r_star: cfg.mark_law.r_star(),
            lines: points.iter().map(line_of).collect(),
            discs: points.iter().map(|p| disc_of(p, cfg.lambda_sq)).collect(),
            points: points.clone(),
            certified: false,
        };
        r.certified = r.certify(cfg.grid_size);
        if r.certified {
            return Ok(r);
        }
        if attempt == MAX_DOUBLINGS {
            return Err(CouplingError::WindowExhausted(Box::new(r)));
        }
        attempt += 1;
        window *= 2.0;
    }
}

/// Normalises an atom angle; convenience for hand-built atoms.
pub fn atom(rho: f64, theta: f64, mark_radius: f64) -> MarkedPoint {
    MarkedPoint { rho, theta: normalize_angle(theta), mark_radius }
}
