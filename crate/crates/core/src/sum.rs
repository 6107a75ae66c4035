//! Exactly rounded floating-point summation (Shewchuk partials).
//!
//! The result depends only on the multiset of inputs, not on their order,
//! which makes reductions over replicas scheduling-independent.

use alloc::vec::Vec;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fsum {
    partials: Vec<f64>,
    special: f64,
}

impl Fsum {
    pub fn new() -> Self {
        Fsum::default()
    }

    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut x = x;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Merges another accumulator; exact, hence associative and commutative.
    pub fn merge(&mut self, other: &Fsum) {
        for &p in &other.partials {
            self.add(p);
        }
        self.special += other.special;
    }

    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round-half-even correction, as in Python's math.fsum
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

impl Extend<f64> for Fsum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for Fsum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Fsum::new();
        s.extend(iter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation() {
        let s: Fsum = [1e100, 1.0, -1e100, 1e-100].into_iter().collect();
        assert_eq!(s.value(), 1.0 + 1e-100);
        let s: Fsum = [0.1; 10].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn order_free_merge() {
        let xs: Vec<f64> = (1..200).map(|i| 1.0 / i as f64 * if i % 3 == 0 { -1e8 } else { 1.0 }).collect();
        let fwd: Fsum = xs.iter().copied().collect();
        let mut a: Fsum = xs[..77].iter().copied().collect();
        let b: Fsum = xs[77..].iter().rev().copied().collect();
        a.merge(&b);
        assert_eq!(a.value(), fwd.value());
    }

    #[test]
    fn non_finite() {
        let s: Fsum = [1.0, f64::INFINITY].into_iter().collect();
        assert_eq!(s.value(), f64::INFINITY);
        assert_eq!(Fsum::new().value(), 0.0);
    }
}
