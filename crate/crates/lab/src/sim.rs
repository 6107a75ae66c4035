//! Replica-parallel drivers. Work is split over replicas only and results
//! are collected in replica order, so outputs never depend on the number of
//! threads.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use vacancy_core::coupling::{windowed_realization, CouplingError, MarkedPoint};
use vacancy_core::geometry::{angle_diff, ray_line_hit};
use vacancy_core::vacancy::{defect_at, l1_gap, sup_gap, trace_defect};
use vacancy_core::{PolarLine, RunConfig};

use crate::stats::{self, Covariogram, RateFit};
use crate::Error;

pub const THREADS_ENV: &str = "VACANCY_LAB_THREADS";

/// Thread count from the flag, else from `VACANCY_LAB_THREADS`, else rayon's
/// default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a thread count, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn pool(threads: Option<usize>) -> Result<ThreadPool, Error> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// `f(0), f(1), ..., f(n - 1)` evaluated on the pool, in order.
pub fn par_map<T, F>(pool: &ThreadPool, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// First line of the stream met along each direction, `(distance, atom)`,
/// consuming atoms only until no later atom can be closer.
pub fn first_lines(atoms: impl Iterator<Item = MarkedPoint>, dirs: &[f64]) -> Vec<(f64, MarkedPoint)> {
    let mut best: Vec<Option<(f64, MarkedPoint)>> = vec![None; dirs.len()];
    for p in atoms {
        let done = best.iter().all(|b| matches!(b, Some((d, _)) if p.rho >= *d));
        if done {
            break;
        }
        let line = PolarLine::new(p.rho, p.theta);
        for (b, &t) in best.iter_mut().zip(dirs) {
            if let Some(h) = ray_line_hit(t, &line) {
                if b.is_none_or(|(d, _)| h < d) {
                    *b = Some((h, p));
                }
            }
        }
    }
    best.into_iter().map(|b| b.expect("every direction is eventually hit")).collect()
}

/// Signed angle of an atom's normal relative to direction `t`.
pub fn relative_angle(p: &MarkedPoint, t: f64) -> f64 {
    angle_diff(p.theta, t)
}

fn exhausted(replica: u64, e: CouplingError) -> Error {
    Error::WindowExhausted { replica, message: e.to_string() }
}

/// Outcome of one replica at one intensity of the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapOutcome {
    Gaps { sup: f64, l1: f64 },
    Sentinel,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda_sq: f64,
    pub replicas: usize,
    pub median_sup_gap: f64,
    pub median_l1_gap: f64,
    pub sentinels: usize,
    pub exhausted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub sup_fit: Option<RateFit>,
    pub l1_fit: Option<RateFit>,
}

impl Sweep {
    pub const HEADER: [&'static str; 12] = [
        "lambda_sq",
        "replicas",
        "median_sup_gap",
        "median_l1_gap",
        "sentinels",
        "exhausted",
        "sup_slope",
        "sup_intercept",
        "sup_r2",
        "l1_slope",
        "l1_intercept",
        "l1_r2",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        use crate::io::sci;
        let fit = |f: &Option<RateFit>| match f {
            Some(f) => [sci(f.slope), sci(f.intercept), sci(f.r_squared)],
            None => ["nan".into(), "nan".into(), "nan".into()],
        };
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    sci(r.lambda_sq),
                    r.replicas.to_string(),
                    sci(r.median_sup_gap),
                    sci(r.median_l1_gap),
                    r.sentinels.to_string(),
                    r.exhausted.to_string(),
                ];
                v.extend(fit(&self.sup_fit));
                v.extend(fit(&self.l1_fit));
                v
            })
            .collect()
    }
}

/// Gap metrics of one replica at one intensity. Replicas sharing `(seed,
/// replica)` share their atoms, so the runs are coupled across intensities.
pub fn gap_outcome(cfg: &RunConfig, replica: u64) -> GapOutcome {
    let Ok(r) = windowed_realization(cfg, replica) else {
        return GapOutcome::Exhausted;
    };
    let trace = trace_defect(&r, cfg.grid_size);
    match (sup_gap(&trace), l1_gap(&trace)) {
        (Ok(sup), Ok(l1)) => GapOutcome::Gaps { sup, l1 },
        _ => GapOutcome::Sentinel,
    }
}

/// Medians of `sup_gap` and `l1_gap` over coupled replicas for every `λ²`,
/// and their log-log fits. Sentinel and exhausted replicas enter the medians
/// as `+∞`.
pub fn sweep(pool: &ThreadPool, cfg: &RunConfig, lambdas: &[f64], replicas: usize) -> Sweep {
    let rows: Vec<SweepRow> = lambdas
        .iter()
        .map(|&lambda_sq| {
            let c = RunConfig { lambda_sq, ..*cfg };
            let out = par_map(pool, replicas as u64, |k| gap_outcome(&c, k));
            let pick = |f: fn(&GapOutcome) -> f64| out.iter().map(f).collect::<Vec<f64>>();
            let sups = pick(|o| match o {
                GapOutcome::Gaps { sup, .. } => *sup,
                _ => f64::INFINITY,
            });
            let l1s = pick(|o| match o {
                GapOutcome::Gaps { l1, .. } => *l1,
                _ => f64::INFINITY,
            });
            SweepRow {
                lambda_sq,
                replicas,
                median_sup_gap: stats::median(&sups),
                median_l1_gap: stats::median(&l1s),
                sentinels: out.iter().filter(|o| **o == GapOutcome::Sentinel).count(),
                exhausted: out.iter().filter(|o| **o == GapOutcome::Exhausted).count(),
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda_sq).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.median_sup_gap).collect();
    let l1: Vec<f64> = rows.iter().map(|r| r.median_l1_gap).collect();
    Sweep { sup_fit: stats::rate_fit(&xs, &sup).ok(), l1_fit: stats::rate_fit(&xs, &l1).ok(), rows }
}

/// `λ² d(2πj/grid)`, `j = 0..grid`, for one replica.
pub fn scaled_defects(cfg: &RunConfig, replica: u64, grid: usize) -> Result<Vec<f64>, Error> {
    let r = windowed_realization(cfg, replica).map_err(|e| exhausted(replica, e))?;
    Ok((0..grid)
        .map(|j| cfg.lambda_sq * defect_at(&r, TAU * j as f64 / grid as f64).d)
        .collect())
}

/// Covariogram of `λ² d` from `samples` independent replicas, one pair per
/// replica and separation.
pub fn covariogram(
    pool: &ThreadPool,
    cfg: &RunConfig,
    samples: usize,
    grid: usize,
    trim: f64,
) -> Result<Covariogram, Error> {
    let rows = par_map(pool, samples as u64, |k| scaled_defects(cfg, k, grid));
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_, _>>()?;
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let x0 = column(0);
    let confidence = 0.95;
    let half = grid / 2;
    let (mut t, mut estimate, mut mirror) = (Vec::new(), Vec::new(), Vec::new());
    for k in 1..=half {
        t.push(TAU * k as f64 / grid as f64);
        estimate.push(stats::covariance(&x0, &column(k), confidence, trim));
        mirror.push(stats::covariance(&x0, &column(grid - k), confidence, trim));
    }
    let variance = stats::covariance(&x0, &x0, confidence, trim).cov;
    Ok(Covariogram { lambda_sq: cfg.lambda_sq, samples, confidence, variance, t, estimate, mirror })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vacancy_core::coupling::{atom, AtomStream};
    use vacancy_core::MarkLaw;

    #[test]
    fn par_map_is_ordered_and_thread_free() {
        let a = par_map(&pool(Some(1)).unwrap(), 1000, |k| k * k);
        let b = par_map(&pool(Some(4)).unwrap(), 1000, |k| k * k);
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }

    #[test]
    fn first_lines_match_brute_force() {
        let dirs = [0.0, 1.0, 2.5, 4.0];
        for replica in 0..50 {
            let atoms: Vec<_> = AtomStream::new(7, replica, MarkLaw::deterministic()).take(400).collect();
            let got = first_lines(atoms.iter().copied(), &dirs);
            for (g, &t) in got.iter().zip(&dirs) {
                let want = atoms
                    .iter()
                    .filter_map(|p| ray_line_hit(t, &PolarLine::new(p.rho, p.theta)))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(g.0, want);
            }
        }
    }

    #[test]
    fn relative_angle_is_signed() {
        let p = atom(1.0, 0.1, 1.0);
        assert!((relative_angle(&p, 6.2) - (0.1 + TAU - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn small_covariogram_shape() {
        let cfg = RunConfig { grid_size: 64, ..RunConfig::default() };
        let c = covariogram(&pool(Some(2)).unwrap(), &cfg, 200, 16, 0.01).unwrap();
        assert_eq!(c.t.len(), 8);
        assert!(c.estimate.iter().all(|e| e.cov.is_finite() && e.ci_half > 0.0));
        // at t = π the curve is its own mirror
        assert_eq!(c.estimate[7], c.mirror[7]);
    }
}
