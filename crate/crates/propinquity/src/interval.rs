//! Closed intervals `[lo, hi]` used to report bracketed metric quantities.
//!
//! Hausdorff-type quantities over state-space nets are only ever bracketed,
//! so every tunnel and journey measurement carries both ends explicitly and
//! downstream arithmetic (sums along journeys, maxima of reach and depth)
//! is interval arithmetic.

use std::fmt;

/// Provenance of a numeric result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Produced by an exact finite algorithm (LP at pivot tolerance, closed form).
    Exact,
    /// A one-sided bound from an iterative solver; the true value is `>=` the reported one.
    CertifiedLowerBound,
    /// A two-sided bracket with certified net resolution.
    Interval,
    /// Derived from a heuristic net; the bracket is indicative, not certified.
    Heuristic,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Exact => "exact",
            Status::CertifiedLowerBound => "certified_lower_bound",
            Status::Interval => "interval",
            Status::Heuristic => "heuristic",
        };
        f.write_str(s)
    }
}

impl Status {
    /// Combines the provenance of two inputs: any heuristic taints the result,
    /// and anything weaker than exact widens it to an interval.
    pub fn merge(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Heuristic, _) | (_, Heuristic) => Heuristic,
            (Exact, Exact) => Exact,
            _ => Interval,
        }
    }
}

/// A closed interval of nonnegative reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "interval ends out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// The degenerate interval `[v, v]`.
    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn zero() -> Interval {
        Interval { lo: 0.0, hi: 0.0 }
    }

    /// Clamps the lower end at zero; metric quantities are nonnegative.
    pub fn nonneg(lo: f64, hi: f64) -> Interval {
        Interval::new(lo.max(0.0), hi.max(0.0))
    }

    pub fn add(self, other: Interval) -> Interval {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    /// Componentwise maximum; this is how tunnel length combines reach and depth.
    pub fn join_max(self, other: Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    pub fn contains(self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    /// Widens both ends by `slack >= 0`, clamping below at zero.
    pub fn widen(self, slack: f64) -> Interval {
        Interval::nonneg(self.lo - slack, self.hi + slack)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.9}, {:.9}]", self.lo, self.hi)
    }
}
