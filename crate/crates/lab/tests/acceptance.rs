//! Acceptance suite: runs the verification battery at full size and prints
//! one line per criterion.
//!
//! Two criteria cannot be met as stated and are expected to fail (see
//! `KNOWN_FAILURES`). For those the suite asserts the mechanism behind the
//! failure instead, so a change in behaviour still breaks the build.

use std::f64::consts::TAU;

use vacancy_core::coupling::windowed_realization;
use vacancy_core::geometry::Point;
use vacancy_core::vacancy::{build_crofton_cell, hausdorff_check};
use vacancy_core::{Realization, RunConfig};
use vacancy_lab::cli::cmd_verify;
use vacancy_lab::config::Config;
use vacancy_lab::io::Manifest;
use vacancy_lab::sim;
use vacancy_lab::stats::{Detail, TestReport};
use vacancy_lab::verify::{sub_seed, BatteryReport};

const CRITERIA: [(usize, &str); 11] = [
    (1, "inner_radius_laws"),
    (2, "first_hit_law"),
    (3, "coupling_intensity"),
    (4, "hausdorff_bound"),
    (5, "outer_radius_sandwich"),
    (6, "lens_bound"),
    (7, "one_direction_limit"),
    (8, "convergence_rates"),
    (9, "limit_moments"),
    (10, "two_direction_structure"),
    (11, "covariogram_shape"),
];

/// Criteria that fail for reasons analysed in the decisions ledger.
const KNOWN_FAILURES: [(&str, &str); 2] = [
    ("hausdorff_bound", "acute cell corners push the vacant corner beyond the bound"),
    ("covariogram_shape", "at fixed t > 0 the covariance has a finite limit; no growth in lambda"),
];

fn num(r: &TestReport, key: &str) -> f64 {
    match r.details.get(key) {
        Some(Detail::Num(x)) => *x,
        Some(Detail::Int(x)) => *x as f64,
        other => panic!("{}: detail {key} is {other:?}", r.name),
    }
}

fn flag(r: &TestReport, key: &str) -> bool {
    match r.details.get(key) {
        Some(Detail::Flag(b)) => *b,
        other => panic!("{}: detail {key} is {other:?}", r.name),
    }
}

fn summary(r: &TestReport) -> String {
    let p = r.p_value.map_or(String::new(), |p| format!(" p={p:.3e}"));
    format!("stat={:.4e}{p} n={}", r.statistic, r.sample_size)
}

fn battery(threads: usize, dir: &std::path::Path) -> (BatteryReport, Vec<u8>) {
    let cfg = Config::default();
    let pool = sim::pool(Some(threads)).unwrap();
    let mut manifest = Manifest::new("verify", &cfg);
    let report = cmd_verify(&cfg, &pool, dir, &mut manifest).unwrap();
    let bytes = std::fs::read(dir.join("verify_report.json")).unwrap();
    (report, bytes)
}

fn circle_intersections(c1: Point, r1: f64, c2: Point, r2: f64) -> Option<[Point; 2]> {
    let d = c1.dist(c2);
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    if h2.is_nan() || h2 < 0.0 {
        return None;
    }
    let h = h2.sqrt();
    let (ux, uy) = ((c2.x - c1.x) / d, (c2.y - c1.y) / d);
    let (px, py) = (c1.x + a * ux, c1.y + a * uy);
    Some([Point::new(px - h * uy, py + h * ux), Point::new(px + h * uy, py - h * ux)])
}

/// Largest distance from a cell vertex in `B(0, m)` to the uncovered corner
/// where the discs of its two edges cross, and the interior angle there.
fn worst_corner(r: &Realization, m: f64) -> (f64, f64) {
    let cell = build_crofton_cell(r).unwrap();
    let n = cell.vertices.len();
    let mut worst = (0.0, TAU);
    for i in 0..n {
        let v = cell.vertices[i];
        if v.norm() > m {
            continue;
        }
        let (e1, e2) = (cell.edges[(i + n - 1) % n], cell.edges[i]);
        let (d1, d2) = (r.discs[e1.atom], r.discs[e2.atom]);
        let Some(pts) = circle_intersections(d1.center(), d1.radius, d2.center(), d2.radius) else {
            continue;
        };
        let q = if pts[0].dist(v) < pts[1].dist(v) { pts[0] } else { pts[1] };
        let others = r.discs.iter().enumerate().filter(|(j, _)| *j != e1.atom && *j != e2.atom);
        if others.into_iter().any(|(_, d)| d.contains(q)) {
            continue;
        }
        let (a, b) = (cell.vertices[(i + n - 1) % n] - v, cell.vertices[(i + 1) % n] - v);
        let angle = (a.dot(b) / (a.norm() * b.norm())).acos();
        if q.dist(v) > worst.0 {
            worst = (q.dist(v), angle);
        }
    }
    worst
}

/// Every Hausdorff violation is matched by an exact circle-circle corner
/// lying beyond the bound next to an acute vertex.
fn hausdorff_mechanism(cfg: &Config) -> usize {
    let rc = RunConfig { seed: sub_seed(cfg.run.seed, "hausdorff_bound"), ..cfg.run_config().unwrap() };
    let m = rc.target_ball_m;
    let mut explained = 0;
    for k in 0..1000 {
        let r = windowed_realization(&rc, k).unwrap();
        let h = hausdorff_check(&r, m, rc.grid_size).unwrap();
        if h.pass {
            continue;
        }
        let (corner, angle) = worst_corner(&r, m);
        assert!(corner > h.bound + h.slack, "replica {k}: exact corner {corner} within bound {}", h.bound);
        assert!((corner - h.distance).abs() <= 2.0 * h.slack, "replica {k}: corner {corner} vs sampled {}", h.distance);
        assert!(angle < 0.5, "replica {k}: violation at a non-acute corner ({angle} rad)");
        println!("    replica {k}: sampled {:.4}, exact corner {corner:.4}, bound {:.4}, interior angle {angle:.3} rad", h.distance, h.bound);
        explained += 1;
    }
    explained
}

#[test]
fn acceptance() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (report, bytes_a) = battery(1, dir_a.path());
    let mut unexpected = Vec::new();

    println!("acceptance criteria (seed {}):", report.seed);
    for (id, name) in CRITERIA {
        let r = report.tests.iter().find(|t| t.name == name).expect("criterion in report");
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == name);
        let verdict = match (r.pass, known) {
            (true, _) => "PASS".to_string(),
            (false, Some((_, why))) => format!("FAIL (known: {why})"),
            (false, None) => {
                unexpected.push(name);
                "FAIL".to_string()
            }
        };
        println!("  {id:>2} {name:<24} {verdict}  {}", summary(r));
    }

    let (_, bytes_b) = battery(3, dir_b.path());
    let same = bytes_a == bytes_b;
    println!("  12 determinism             {}  1 vs 3 threads, {} report bytes", if same { "PASS" } else { "FAIL" }, bytes_a.len());
    assert!(same, "verify reports differ between runs");

    // analysis of the known failures
    let cfg = Config::default();
    let h = report.tests.iter().find(|t| t.name == "hausdorff_bound").unwrap();
    println!("  hausdorff_bound violations, each checked against the exact disc corner:");
    let explained = hausdorff_mechanism(&cfg);
    assert_eq!(explained as f64, num(h, "violations"));
    assert_eq!(num(h, "uncertified"), 0.0);

    let c = report.tests.iter().find(|t| t.name == "covariogram_shape").unwrap();
    assert!(flag(c, "finite") && flag(c, "decays"), "covariogram shape: {:?}", c.details);
    // the first separation has converged: both intensities agree well inside the interval
    let (lo, hi) = (num(c, "cov_first_low"), num(c, "cov_first_high"));
    assert!((hi - lo).abs() < 0.1 * num(c, "ci_first_low"), "cov(t1): {lo} vs {hi}");
    println!("  covariogram_shape: cov(t1) {lo:.4} at 1e3 vs {hi:.4} at 1e4, interval +-{:.4}", num(c, "ci_first_low"));

    for (name, _) in KNOWN_FAILURES {
        let r = report.tests.iter().find(|t| t.name == name).unwrap();
        if r.pass {
            println!("  note: {name} passed at this seed");
        }
    }
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
