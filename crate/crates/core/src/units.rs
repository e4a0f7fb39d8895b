//! Exact quantities shared across the crate.
//!
//! Money is integral, time is rational. Budget and battery comparisons are
//! therefore tolerance-free: two quantities are either equal or they are not.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_rational::Rational64;

/// Deployment money. Budgets and per-type deployment costs are integers.
pub type Money = u64;

/// A point in time or a duration, possibly unbounded.
///
/// Travel matrix entries use `Infinite` for vertex pairs with no permitted
/// path, and task deadlines use it for "no deadline". The `Ord` instance
/// places `Infinite` above every finite value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TimeVal {
    Finite(Rational64),
    Infinite,
}

impl TimeVal {
    pub const ZERO: TimeVal = TimeVal::Finite(Rational64::new_raw(0, 1));

    pub fn from_int(v: i64) -> TimeVal {
        TimeVal::Finite(Rational64::from_integer(v))
    }

    pub fn is_finite(self) -> bool {
        matches!(self, TimeVal::Finite(_))
    }

    /// The underlying rational, or `None` when infinite.
    pub fn finite(self) -> Option<Rational64> {
        match self {
            TimeVal::Finite(v) => Some(v),
            TimeVal::Infinite => None,
        }
    }

    /// Lossy conversion for reporting and MILP export.
    pub fn to_f64(self) -> f64 {
        match self {
            TimeVal::Finite(v) => *v.numer() as f64 / *v.denom() as f64,
            TimeVal::Infinite => f64::INFINITY,
        }
    }
}

impl Add for TimeVal {
    type Output = TimeVal;

    fn add(self, rhs: TimeVal) -> TimeVal {
        match (self, rhs) {
            (TimeVal::Finite(a), TimeVal::Finite(b)) => TimeVal::Finite(a + b),
            _ => TimeVal::Infinite,
        }
    }
}

impl Sum for TimeVal {
    fn sum<I: Iterator<Item = TimeVal>>(iter: I) -> TimeVal {
        iter.fold(TimeVal::ZERO, Add::add)
    }
}

impl From<Rational64> for TimeVal {
    fn from(v: Rational64) -> TimeVal {
        TimeVal::Finite(v)
    }
}

impl fmt::Display for TimeVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeVal::Finite(v) if v.is_integer() => write!(f, "{}", v.numer()),
            TimeVal::Finite(v) => write!(f, "{}/{}", v.numer(), v.denom()),
            TimeVal::Infinite => write!(f, "inf"),
        }
    }
}
