//! Goodness-of-fit tests, estimators and the JSON test report.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use vacancy_core::sum::Fsum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("values must be positive and finite")]
    NonPositive,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
}

/// Free-form extra fields of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Detail {
    Num(f64),
    Int(u64),
    Flag(bool),
    Text(String),
    List(Vec<f64>),
}

impl From<f64> for Detail {
    fn from(x: f64) -> Self {
        Detail::Num(x)
    }
}
impl From<usize> for Detail {
    fn from(x: usize) -> Self {
        Detail::Int(x as u64)
    }
}
impl From<bool> for Detail {
    fn from(x: bool) -> Self {
        Detail::Flag(x)
    }
}
impl From<&str> for Detail {
    fn from(x: &str) -> Self {
        Detail::Text(x.into())
    }
}
impl From<String> for Detail {
    fn from(x: String) -> Self {
        Detail::Text(x)
    }
}
impl From<Vec<f64>> for Detail {
    fn from(x: Vec<f64>) -> Self {
        Detail::List(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub seed: u64,
    pub sample_size: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub details: BTreeMap<String, Detail>,
}

impl TestReport {
    pub fn new(name: &str, seed: u64) -> Self {
        TestReport {
            name: name.into(),
            seed,
            sample_size: 0,
            statistic: f64::NAN,
            p_value: None,
            tolerance: f64::NAN,
            pass: false,
            details: BTreeMap::new(),
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Into<Detail>) -> &mut Self {
        self.details.insert(key.into(), value.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ks {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form, fast for small x
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let cdf: f64 = (1..=8)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-(j * j) * pi2 / (8.0 * x * x)).exp()
            })
            .sum::<f64>()
            * (std::f64::consts::TAU).sqrt()
            / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let sf: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * x * x).exp()
            })
            .sum::<f64>()
            * 2.0;
        sf.clamp(0.0, 1.0)
    }
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub const KS_MIN_SAMPLES: usize = 100;

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<Ks, StatsError> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(StatsError::TooFew { need: KS_MIN_SAMPLES, got: n });
    }
    let xs = sorted(samples);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    Ok(Ks { n, statistic: d, p_value: ks_p(d, nf) })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<Ks, StatsError> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(StatsError::TooFew { need: KS_MIN_SAMPLES, got: s.len() });
        }
    }
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(Ks { n: xa.len() + xb.len(), statistic: d, p_value: ks_p(d, na * nb / (na + nb)) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson statistic of independent Poisson counts against known means.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> Result<ChiSquare, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::Length(observed.len(), expected.len()));
    }
    if expected.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(StatsError::NonPositive);
    }
    let stat: Fsum = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).collect();
    let dof = observed.len();
    let law = ChiSquared::new(dof as f64).expect("positive dof");
    let statistic = stat.value();
    Ok(ChiSquare { statistic, dof, p_value: law.sf(statistic) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandPoint {
    pub r: f64,
    pub ccdf: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lower: f64,
    pub upper: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandCheck {
    pub n: usize,
    pub confidence: f64,
    pub points: Vec<BandPoint>,
    pub violations: usize,
}

/// Two-sided normal quantile for the given confidence.
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Checks that the Wilson interval of the empirical `P(X >= r)` meets
/// `[lower(r), upper(r)]` at every `r` of the grid.
pub fn ccdf_band_check(
    samples: &[f64],
    bounds: impl Fn(f64) -> (f64, f64),
    r_grid: &[f64],
    confidence: f64,
) -> BandCheck {
    let n = samples.len() as f64;
    let z = normal_quantile(confidence);
    let points: Vec<BandPoint> = r_grid
        .iter()
        .map(|&r| {
            let k = samples.iter().filter(|&&x| x >= r).count() as f64;
            let p = k / n;
            let denom = 1.0 + z * z / n;
            let centre = (p + z * z / (2.0 * n)) / denom;
            let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
            let (ci_low, ci_high) = ((centre - half).max(0.0), (centre + half).min(1.0));
            let (lower, upper) = bounds(r);
            BandPoint { r, ccdf: p, ci_low, ci_high, lower, upper, ok: ci_high >= lower && ci_low <= upper }
        })
        .collect();
    let violations = points.iter().filter(|p| !p.ok).count();
    BandCheck { n: samples.len(), confidence, points, violations }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares line through `(ln x, ln y)`.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::Length(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(StatsError::NonPositive);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept: my - slope * mx, r_squared })
}

/// Hill estimator of the tail index from the `k` largest values of `|x|`.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<f64, StatsError> {
    if k == 0 || 2 * k >= samples.len() {
        return Err(StatsError::TooFew { need: 2 * k + 1, got: samples.len() });
    }
    let mut v: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let threshold = v[k];
    if !(threshold > 0.0) {
        return Err(StatsError::NonPositive);
    }
    let s: Fsum = v[..k].iter().map(|x| (x / threshold).ln()).collect();
    Ok(k as f64 / s.value())
}

/// Median of finite-or-infinite values (NaN-free input).
pub fn median(values: &[f64]) -> f64 {
    let v = sorted(values);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    let s: Fsum = values.iter().copied().collect();
    s.value() / values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovEstimate {
    pub cov: f64,
    pub ci_half: f64,
    pub trimmed: f64,
}

/// Sample covariance with a normal-approximation interval built from the
/// variance of the centred products, plus a trimmed estimate that drops
/// pairs with either coordinate outside its `[trim, 1 - trim]` quantiles.
pub fn covariance(xs: &[f64], ys: &[f64], confidence: f64, trim: f64) -> CovEstimate {
    let n = xs.len();
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let s: Fsum = prods.iter().copied().collect();
    let cov = s.value() / (n as f64 - 1.0);
    let m = s.value() / n as f64;
    let v: Fsum = prods.iter().map(|p| (p - m) * (p - m)).collect();
    let sd = (v.value() / (n as f64 - 1.0)).sqrt();
    let ci_half = normal_quantile(confidence) * sd / (n as f64).sqrt();

    let bounds = |v: &[f64]| {
        let s = sorted(v);
        let lo = ((trim * n as f64).floor() as usize).min(n - 1);
        let hi = (n - 1).saturating_sub(lo);
        (s[lo], s[hi])
    };
    let (bx, by) = (bounds(xs), bounds(ys));
    let kept: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x >= bx.0 && **x <= bx.1 && **y >= by.0 && **y <= by.1)
        .map(|(x, y)| (*x, *y))
        .collect();
    let trimmed = if kept.len() < 2 {
        f64::NAN
    } else {
        let kx: Vec<f64> = kept.iter().map(|p| p.0).collect();
        let ky: Vec<f64> = kept.iter().map(|p| p.1).collect();
        let (mx, my) = (mean(&kx), mean(&ky));
        let s: Fsum = kept.iter().map(|(x, y)| (x - mx) * (y - my)).collect();
        s.value() / (kept.len() as f64 - 1.0)
    };
    CovEstimate { cov, ci_half, trimmed }
}

/// `cov(λ² d(0), λ² d(t))` over independent realizations, for separations
/// `t_k = 2πk / grid`, `k = 1..=grid/2`, with the mirrored separation
/// `2π - t_k` alongside as an isotropy check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Covariogram {
    pub lambda_sq: f64,
    pub samples: usize,
    pub confidence: f64,
    /// Sample variance of `λ² d(0)`, the value at `t = 0`.
    pub variance: f64,
    pub t: Vec<f64>,
    pub estimate: Vec<CovEstimate>,
    pub mirror: Vec<CovEstimate>,
}

impl Covariogram {
    pub const HEADER: [&'static str; 8] =
        ["t", "cov", "ci_half", "trimmed_cov", "mirror_cov", "mirror_ci_half", "lambda_sq", "samples"];

    pub fn rows(&self) -> Vec<Vec<String>> {
        use crate::io::sci;
        self.t
            .iter()
            .zip(self.estimate.iter().zip(&self.mirror))
            .map(|(t, (e, m))| {
                vec![
                    sci(*t),
                    sci(e.cov),
                    sci(e.ci_half),
                    sci(e.trimmed),
                    sci(m.cov),
                    sci(m.ci_half),
                    sci(self.lambda_sq),
                    self.samples.to_string(),
                ]
            })
            .collect()
    }

    /// Number of separations where the curve and its mirror disagree beyond
    /// their combined interval.
    pub fn isotropy_violations(&self) -> usize {
        self.estimate
            .iter()
            .zip(&self.mirror)
            .filter(|(e, m)| (e.cov - m.cov).abs() > e.ci_half + m.ci_half)
            .count()
    }
}
