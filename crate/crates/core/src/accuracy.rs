//! Exact count-based accuracies. Fractions are kept as integer counts so that
//! impact arithmetic and candidate tie-breaking never go through floats.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// An accuracy as an exact fraction `correct / total`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
}

impl Accuracy {
    pub fn new(correct: u64, total: u64) -> Self {
        assert!(total > 0, "accuracy over an empty set");
        assert!(correct <= total);
        Self { correct, total }
    }

    pub fn as_f64(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn is_perfect(&self) -> bool {
        self.correct == self.total
    }

    pub fn is_zero(&self) -> bool {
        self.correct == 0
    }

    /// Exact signed difference `self - other`.
    pub fn diff(&self, other: &Accuracy) -> Rational {
        Rational::new(
            self.correct as i64 * other.total as i64 - other.correct as i64 * self.total as i64,
            self.total as i64 * other.total as i64,
        )
    }
}

impl PartialOrd for Accuracy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Accuracy {
    fn cmp(&self, other: &Self) -> Ordering {
        // Cross-multiplication keeps the comparison exact.
        let lhs = self.correct as u128 * other.total as u128;
        let rhs = other.correct as u128 * self.total as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.correct, self.total)
    }
}

/// A reduced signed rational, used for impact scores.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i64;
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Renders a rational as the shortest decimal with at most two places
/// (`0.2`, not `0.20`; `-0.05` stays as is).
pub fn format_impact(value: &Rational) -> String {
    let mut s = format!("{:.2}", value.as_f64());
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
