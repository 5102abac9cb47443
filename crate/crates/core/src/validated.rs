//! Floating-point values carrying a rigorous absolute error bound.

use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

const EPS: f64 = f64::EPSILON;

/// A real number known to lie in `[value - error, value + error]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validated {
    pub value: f64,
    pub error: f64,
}

impl Validated {
    pub fn new(value: f64, error: f64) -> Self {
        debug_assert!(error >= 0.0);
        Self { value, error }
    }

    /// A value that is exactly representable.
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    /// A correctly rounded (or faithfully rounded) floating-point result.
    pub fn rounded(value: f64) -> Self {
        Self { value, error: value.abs() * EPS }
    }

    pub fn pi() -> Self {
        Self::rounded(std::f64::consts::PI)
    }

    pub fn sqrt(self) -> Self {
        assert!(self.value - self.error > 0.0, "sqrt of a non-positive enclosure");
        let v = self.value.sqrt();
        // |sqrt(x+e) - sqrt(x)| <= e / (2 sqrt(x - e))
        let prop = self.error / (2.0 * (self.value - self.error).sqrt());
        Self::new(v, prop + v * EPS)
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.error
    }

    pub fn relative_error(&self) -> f64 {
        self.error / self.value.abs()
    }
}

impl Add for Validated {
    type Output = Validated;
    fn add(self, rhs: Validated) -> Validated {
        let v = self.value + rhs.value;
        Validated::new(v, self.error + rhs.error + v.abs() * EPS)
    }
}

impl Mul for Validated {
    type Output = Validated;
    fn mul(self, rhs: Validated) -> Validated {
        let v = self.value * rhs.value;
        let e = self.value.abs() * rhs.error + rhs.value.abs() * self.error + self.error * rhs.error;
        Validated::new(v, e + v.abs() * EPS)
    }
}

impl Div for Validated {
    type Output = Validated;
    fn div(self, rhs: Validated) -> Validated {
        let lo = rhs.value.abs() - rhs.error;
        assert!(lo > 0.0, "division by an enclosure containing zero");
        let v = self.value / rhs.value;
        // |a/b - a'/b'| <= (|a| e_b / |b| + e_a) / (|b| - e_b)
        let e = (self.value.abs() * rhs.error / rhs.value.abs() + self.error) / lo;
        Validated::new(v, e + v.abs() * EPS)
    }
}

impl Mul<f64> for Validated {
    type Output = Validated;
    /// Multiplication by an exactly representable scalar.
    fn mul(self, rhs: f64) -> Validated {
        let v = self.value * rhs;
        Validated::new(v, self.error * rhs.abs() + v.abs() * EPS)
    }
}

impl fmt::Display for Validated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.1e}", self.value, self.error)
    }
}

/// Neumaier compensated summation. The returned bound covers the rounding of
/// the summation itself, not errors already present in the addends.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs: f64,
    count: u64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs
    }

    /// Rounding error of the summation: `2u|s| + 2n u^2 sum|x_i|` with slack.
    pub fn rounding_bound(&self) -> f64 {
        let n = self.count as f64;
        2.0 * EPS * self.value().abs() + 4.0 * n * EPS * EPS * self.abs + EPS * self.abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_encloses_exact_results() {
        let a = Validated::new(1.0, 1e-10);
        let b = Validated::new(3.0, 2e-10);
        assert!((a * b).contains(3.0 + 1e-10 * 3.0 + 2e-10));
        assert!((a / b).contains((1.0 + 1e-10) / (3.0 - 2e-10)));
        assert!((a + b).contains(4.0 - 3e-10));
        assert!(Validated::exact(2.0).sqrt().contains(std::f64::consts::SQRT_2));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-13)).abs() < 1e-16);
    }
}
