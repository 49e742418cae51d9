//! Signed log-space scalars.
//!
//! Every probability in this crate is carried as a `LogProb`: a sign in
//! `{-1, 0, +1}` and the natural log of the magnitude. Products of many
//! Gamma ratios stay representable long after `f64` would under- or
//! overflow, and sign tracking lets the same type hold falling factorials
//! and rising factorials of negative bases.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogProb {
    ln: f64,
    sign: i8,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb {
        ln: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogProb = LogProb { ln: 0.0, sign: 1 };

    /// Builds a positive value from its logarithm. `-inf` gives zero.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogProb { ln, sign: 1 }
        }
    }

    /// Builds a value from a log magnitude and an explicit sign.
    pub fn from_parts(ln: f64, sign: i8) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogProb {
                ln,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x.is_nan() {
            LogProb {
                ln: f64::NAN,
                sign: 1,
            }
        } else {
            LogProb {
                ln: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Natural log of the magnitude.
    pub fn ln(self) -> f64 {
        self.ln
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn value(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln.exp(),
        }
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogProb {
                ln: self.ln,
                sign: 1,
            }
        }
    }

    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::ONE;
        }
        match self.sign {
            0 => Self::ZERO,
            1 => LogProb::from_ln(self.ln * p),
            _ => LogProb {
                ln: f64::NAN,
                sign: 1,
            },
        }
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    /// `|ln(self) - ln(other)|` for two values of the same sign; the usual
    /// relative-error proxy in log space. Two zeros compare equal.
    pub fn log_distance(self, other: Self) -> f64 {
        if self.sign != other.sign {
            return f64::INFINITY;
        }
        if self.sign == 0 {
            return 0.0;
        }
        (self.ln - other.ln).abs()
    }

    /// Relative error `|a - b| / |b|`, with `0/0 = 0`.
    pub fn rel_err(self, reference: Self) -> f64 {
        if reference.is_zero() {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        ((self - reference) / reference).value().abs()
    }
}

impl Default for LogProb {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for LogProb {
    fn from(x: f64) -> Self {
        LogProb::from_f64(x)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Mul for LogProb {
    type Output = LogProb;
    fn mul(self, rhs: LogProb) -> LogProb {
        if self.sign == 0 || rhs.sign == 0 {
            return LogProb::ZERO;
        }
        LogProb {
            ln: self.ln + rhs.ln,
            sign: self.sign * rhs.sign,
        }
    }
}

/// Division by zero yields `+inf` magnitude (or NaN for `0/0`); callers
/// that can hit a zero denominator check it first.
impl Div for LogProb {
    type Output = LogProb;
    fn div(self, rhs: LogProb) -> LogProb {
        if rhs.sign == 0 {
            return if self.sign == 0 {
                LogProb {
                    ln: f64::NAN,
                    sign: 1,
                }
            } else {
                LogProb {
                    ln: f64::INFINITY,
                    sign: self.sign,
                }
            };
        }
        if self.sign == 0 {
            return LogProb::ZERO;
        }
        LogProb {
            ln: self.ln - rhs.ln,
            sign: self.sign * rhs.sign,
        }
    }
}

impl Neg for LogProb {
    type Output = LogProb;
    fn neg(self) -> LogProb {
        LogProb {
            ln: self.ln,
            sign: -self.sign,
        }
    }
}

impl Add for LogProb {
    type Output = LogProb;
    fn add(self, rhs: LogProb) -> LogProb {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln >= rhs.ln {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if big.ln == f64::INFINITY {
            return big;
        }
        let d = small.ln - big.ln;
        if big.sign == small.sign {
            LogProb {
                ln: big.ln + d.exp().ln_1p(),
                sign: big.sign,
            }
        } else if d == 0.0 {
            LogProb::ZERO
        } else {
            // ln(1 - e^d) for d < 0
            let m = if d > -std::f64::consts::LN_2 {
                (-d.exp_m1()).ln()
            } else {
                (-d.exp()).ln_1p()
            };
            LogProb::from_parts(big.ln + m, big.sign)
        }
    }
}

impl Sub for LogProb {
    type Output = LogProb;
    fn sub(self, rhs: LogProb) -> LogProb {
        self + (-rhs)
    }
}

impl Sum for LogProb {
    fn sum<I: Iterator<Item = LogProb>>(iter: I) -> LogProb {
        // Collect so the sum is a single max-shifted pass.
        let items: Vec<LogProb> = iter.filter(|x| !x.is_zero()).collect();
        log_sum(&items)
    }
}

impl<'a> Sum<&'a LogProb> for LogProb {
    fn sum<I: Iterator<Item = &'a LogProb>>(iter: I) -> LogProb {
        iter.copied().sum()
    }
}

impl Product for LogProb {
    fn product<I: Iterator<Item = LogProb>>(iter: I) -> LogProb {
        iter.fold(LogProb::ONE, |a, b| a * b)
    }
}

impl PartialOrd for LogProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value_ordering(other)
    }
}

impl LogProb {
    fn value_ordering(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln.partial_cmp(&other.ln),
                _ => other.ln.partial_cmp(&self.ln),
            },
            o => Some(o),
        }
    }
}

/// Log-sum-exp over signed terms with a single max shift. Positive and
/// negative parts are accumulated separately with Neumaier summation.
pub fn log_sum(items: &[LogProb]) -> LogProb {
    let max = items
        .iter()
        .filter(|x| !x.is_zero())
        .map(|x| x.ln)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogProb::ZERO;
    }
    if max == f64::INFINITY {
        return items.iter().copied().fold(LogProb::ZERO, |a, b| a + b);
    }
    let mut pos = Neumaier::default();
    let mut neg = Neumaier::default();
    for x in items {
        match x.sign {
            1 => pos.add((x.ln - max).exp()),
            -1 => neg.add((x.ln - max).exp()),
            _ => {}
        }
    }
    let total = pos.total() - neg.total();
    let r = LogProb::from_f64(total);
    LogProb::from_parts(r.ln + max, r.sign)
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_has_negative_infinite_log() {
        assert_eq!(LogProb::ZERO.ln(), f64::NEG_INFINITY);
        assert_eq!(LogProb::from_f64(0.0), LogProb::ZERO);
        assert_eq!(LogProb::from_parts(3.0, 0), LogProb::ZERO);
        assert!(LogProb::from_ln(f64::NEG_INFINITY).is_zero());
    }

    #[test]
    fn cancellation_gives_exact_zero() {
        let a = LogProb::from_f64(0.25);
        assert!((a - a).is_zero());
    }

    #[test]
    fn tiny_magnitudes_survive_products() {
        let tiny = LogProb::from_ln(-800.0);
        let p = tiny * tiny / tiny;
        assert!((p.ln() + 800.0).abs() < 1e-12);
        assert_eq!(tiny.value(), 0.0);
    }

    #[test]
    fn ordering_respects_sign() {
        let a = LogProb::from_f64(-2.0);
        let b = LogProb::from_f64(-1.0);
        let c = LogProb::from_f64(0.5);
        assert!(a < b && b < LogProb::ZERO && LogProb::ZERO < c);
    }

    #[test]
    fn division_by_zero_is_infinite() {
        let r = LogProb::ONE / LogProb::ZERO;
        assert_eq!(r.ln(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_linear(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let la = LogProb::from_f64(a);
            let lb = LogProb::from_f64(b);
            let tol = 1e-12 * (a.abs() + b.abs()).max(1e-300);
            prop_assert!(((la + lb).value() - (a + b)).abs() <= tol * 4.0);
            prop_assert!(((la - lb).value() - (a - b)).abs() <= tol * 4.0);
            prop_assert!(((la * lb).value() - a * b).abs() <= 1e-12 * (a * b).abs() + 1e-300);
            if b != 0.0 {
                prop_assert!(((la / lb).value() - a / b).abs() <= 1e-12 * (a / b).abs());
            }
        }

        #[test]
        fn sum_matches_pairwise(xs in proptest::collection::vec(-50f64..50.0, 1..20)) {
            let direct: f64 = xs.iter().sum();
            let lp: LogProb = xs.iter().map(|&x| LogProb::from_f64(x)).sum();
            let scale: f64 = xs.iter().map(|x| x.abs()).sum();
            prop_assert!((lp.value() - direct).abs() <= 1e-12 * scale);
        }
    }
}
