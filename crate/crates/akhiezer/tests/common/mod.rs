#![allow(dead_code)]

use akhiezer::IntervalSet;

pub fn chebyshev() -> IntervalSet {
    IntervalSet::new(&[], &[-1.0, 1.0]).unwrap()
}

/// E = (−1, −0.3) ∪ (0.1, 1).
pub fn two_bands() -> IntervalSet {
    IntervalSet::new(&[-0.3], &[-1.0, 0.1, 1.0]).unwrap()
}

/// E = (−1, −0.5) ∪ (−0.3, 0.2) ∪ (0.5, 1).
pub fn three_bands() -> IntervalSet {
    IntervalSet::new(&[-0.5, 0.2], &[-1.0, -0.3, 0.5, 1.0]).unwrap()
}

/// E = (−1, −0.6) ∪ (−0.4, −0.1) ∪ (0.1, 0.4) ∪ (0.6, 1).
pub fn four_bands() -> IntervalSet {
    IntervalSet::new(&[-0.6, -0.1, 0.4], &[-1.0, -0.4, 0.1, 0.6, 1.0]).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
