//! Globally adaptive Gauss–Kronrod (7/15) quadrature, plus a nested 2D driver.

use alloc::collections::BinaryHeap;
use core::cell::Cell;
use core::cmp::Ordering;
use core::fmt;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Subdivision budget per call.
pub const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tolerance not reached; carries the best estimate obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadError {
    pub estimate: f64,
    pub error: f64,
    pub tolerance: f64,
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "quadrature did not reach tolerance {:e}: estimate {} with error {:e}",
            self.tolerance, self.estimate, self.error
        )
    }
}

impl core::error::Error for QuadError {}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Estimate {
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est
            .error
            .partial_cmp(&o.est.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate, QuadError> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if b < a {
        return integrate(f, b, a, tol).map(|e| Estimate { value: -e.value, ..e });
    }
    let first = gk15(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, est: first });
    while error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(QuadError { estimate: value, error, tolerance: tol });
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // cannot split any further
            return Err(QuadError { estimate: value, error, tolerance: tol });
        }
        let left = gk15(&mut f, worst.a, m);
        let right = gk15(&mut f, m, worst.b);
        if !(left.value + right.value).is_finite() {
            return Err(QuadError { estimate: value, error, tolerance: tol });
        }
        value += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Piece { a: worst.a, b: m, est: left });
        heap.push(Piece { a: m, b: worst.b, est: right });
        if heap.len() % 64 == 0 {
            // refresh the running sums to stop drift
            value = heap.iter().map(|p| p.est.value).sum();
            error = heap.iter().map(|p| p.est.error).sum();
        }
    }
    if !value.is_finite() {
        return Err(QuadError { estimate: value, error, tolerance: tol });
    }
    Ok(Estimate { value, error })
}

/// Integrates `f(x, y)` over `{a <= x <= b, lo(x) <= y <= hi(x)}` by nesting
/// [`integrate`]. The inner tolerance is scaled so that the total error
/// stays within `tol`.
pub fn integrate_2d<F, L>(mut f: F, a: f64, b: f64, limits: L, tol: f64) -> Result<Estimate, QuadError>
where
    F: FnMut(f64, f64) -> f64,
    L: Fn(f64) -> (f64, f64),
{
    let inner_tol = 0.25 * tol / (b - a).abs().max(1e-300);
    let inner_err = Cell::new(0.0f64);
    let failed = Cell::new(None::<QuadError>);
    let outer = integrate(
        |x| {
            let (lo, hi) = limits(x);
            if !(hi > lo) {
                return 0.0;
            }
            match integrate(|y| f(x, y), lo, hi, inner_tol) {
                Ok(e) => {
                    inner_err.set(inner_err.get().max(e.error));
                    e.value
                }
                Err(e) => {
                    if failed.get().is_none() {
                        failed.set(Some(e));
                    }
                    e.estimate
                }
            }
        },
        a,
        b,
        0.5 * tol,
    )?;
    let error = outer.error + inner_err.get() * (b - a).abs();
    if let Some(e) = failed.get() {
        return Err(QuadError {
            estimate: outer.value,
            error: error.max(e.error),
            tolerance: tol,
        });
    }
    Ok(Estimate { value: outer.value, error })
}
