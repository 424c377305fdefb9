//! Compiler version numbers and `pragma solidity` version ranges.
//!
//! A range is kept as a union of half-open intervals `[lower, upper)` over
//! release versions. Pre-release tags never appear in Solidity pragmas and
//! are not modelled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VersionError {
    #[error("empty version constraint")]
    Empty,
    #[error("invalid version `{0}`")]
    InvalidVersion(String),
    #[error("unsupported comparator `{0}`")]
    InvalidOperator(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
}

impl Version {
    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        Self { major, minor, patch }
    }

    /// Smallest version strictly greater than `self`.
    pub const fn next_patch(self) -> Self {
        Self::new(self.major, self.minor, self.patch + 1)
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

impl FromStr for Version {
    type Err = VersionError;

    /// Accepts `0.8.19`, `v0.8.6+commit.11564f7e`, and partial forms such as
    /// `0.8` (missing components are zero).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let partial = parse_partial(s.trim())?;
        if partial.parts.is_empty() {
            return Err(VersionError::InvalidVersion(s.to_string()));
        }
        Ok(partial.floor())
    }
}

impl Serialize for VersionRange {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.intervals.iter().map(|i| i.to_string()))
    }
}

/// Half-open interval `[lower, upper)`; `upper = None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lower: Version,
    pub upper: Option<Version>,
}

impl Interval {
    pub const fn unbounded() -> Self {
        Self { lower: Version::new(0, 0, 0), upper: None }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.upper, Some(u) if u <= self.lower)
    }

    pub fn contains(&self, v: Version) -> bool {
        v >= self.lower && self.upper.is_none_or(|u| v < u)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lower = self.lower.max(other.lower);
        let upper = match (self.upper, other.upper) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        Interval { lower, upper }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, ">={} <{}", self.lower, u),
            None => write!(f, ">={}", self.lower),
        }
    }
}

/// Set of versions admitted by a `pragma solidity` constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VersionRange {
    intervals: Vec<Interval>,
    pin: Option<Version>,
}

impl VersionRange {
    pub fn any() -> Self {
        Self { intervals: vec![Interval::unbounded()], pin: None }
    }

    /// Closed window `[floor, ceiling]`.
    pub fn window(floor: Version, ceiling: Version) -> Self {
        Self::from_intervals(vec![Interval { lower: floor, upper: Some(ceiling.next_patch()) }])
    }

    pub fn exact(v: Version) -> Self {
        Self {
            intervals: vec![Interval { lower: v, upper: Some(v.next_patch()) }],
            pin: Some(v),
        }
    }

    fn from_intervals(intervals: Vec<Interval>) -> Self {
        let mut intervals: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        intervals.sort_by_key(|i| i.lower);
        Self { intervals, pin: None }
    }

    /// Parses npm-style constraints as accepted by solc: `^0.8.0`,
    /// `>=0.4.22 <0.6.0`, `0.8.17`, `~0.7`, `0.5.x`, `0.4.0 - 0.5.0`, and
    /// `||` alternatives.
    pub fn parse(text: &str) -> Result<Self, VersionError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(VersionError::Empty);
        }
        let alternatives: Vec<&str> = text.split("||").map(str::trim).collect();
        let mut intervals = Vec::new();
        let mut pin = None;
        for alt in &alternatives {
            let (interval, exact) = parse_alternative(alt)?;
            intervals.push(interval);
            if alternatives.len() == 1 {
                pin = exact;
            }
        }
        let mut range = Self::from_intervals(intervals);
        range.pin = pin;
        Ok(range)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// The pinned version when the constraint names one exact version with
    /// no range operator.
    pub fn exact_pin(&self) -> Option<Version> {
        self.pin
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, v: Version) -> bool {
        self.intervals.iter().any(|i| i.contains(v))
    }

    pub fn intersects(&self, other: &VersionRange) -> bool {
        self.intervals
            .iter()
            .any(|a| other.intervals.iter().any(|b| !a.intersect(b).is_empty()))
    }

    /// True when some admitted version is strictly below `threshold`.
    pub fn admits_below(&self, threshold: Version) -> bool {
        self.intervals.iter().any(|i| i.lower < threshold)
    }

    /// The only admitted version, if exactly one exists.
    pub fn single_version(&self) -> Option<Version> {
        match self.intervals.as_slice() {
            [only] if only.upper == Some(only.lower.next_patch()) => Some(only.lower),
            _ => None,
        }
    }
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(" || "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Exact,
    Caret,
    Tilde,
    Gt,
    Ge,
    Lt,
    Le,
}

/// Version with possibly missing components (`0.8`, `0.8.x`, `*`).
#[derive(Debug, Clone)]
struct Partial {
    parts: Vec<u64>,
}

impl Partial {
    fn is_full(&self) -> bool {
        self.parts.len() == 3
    }

    fn floor(&self) -> Version {
        let get = |i: usize| self.parts.get(i).copied().unwrap_or(0);
        Version::new(get(0), get(1), get(2))
    }

    /// Exclusive upper bound covering every version matching this partial.
    fn ceiling(&self) -> Option<Version> {
        match self.parts.as_slice() {
            [] => None,
            [major] => Some(Version::new(major + 1, 0, 0)),
            [major, minor] => Some(Version::new(*major, minor + 1, 0)),
            _ => Some(self.floor().next_patch()),
        }
    }
}

fn parse_partial(s: &str) -> Result<Partial, VersionError> {
    let s = s.strip_prefix('v').unwrap_or(s);
    let s = s.split('+').next().unwrap_or(s);
    if s.is_empty() {
        return Err(VersionError::InvalidVersion(s.to_string()));
    }
    let mut parts = Vec::new();
    for (idx, piece) in s.split('.').enumerate() {
        if idx >= 3 {
            return Err(VersionError::InvalidVersion(s.to_string()));
        }
        if matches!(piece, "x" | "X" | "*") {
            break;
        }
        let n = piece
            .parse::<u64>()
            .map_err(|_| VersionError::InvalidVersion(s.to_string()))?;
        parts.push(n);
    }
    Ok(Partial { parts })
}

fn comparator_interval(op: Op, v: &Partial) -> Interval {
    let floor = v.floor();
    let (lower, upper) = match op {
        Op::Exact => (floor, v.ceiling()),
        Op::Ge => (floor, None),
        Op::Gt => match v.ceiling() {
            Some(c) => (c, None),
            // `>*` admits nothing
            None => (floor, Some(floor)),
        },
        Op::Lt => (Version::new(0, 0, 0), Some(floor)),
        Op::Le => (Version::new(0, 0, 0), v.ceiling()),
        Op::Tilde => {
            let upper = match v.parts.as_slice() {
                [] => None,
                [major] => Some(Version::new(major + 1, 0, 0)),
                [major, minor, ..] => Some(Version::new(*major, minor + 1, 0)),
            };
            (floor, upper)
        }
        Op::Caret => {
            let upper = match v.parts.as_slice() {
                [] => None,
                [major, ..] if *major > 0 || v.parts.len() == 1 => Some(Version::new(major + 1, 0, 0)),
                [0, minor] => Some(Version::new(0, minor + 1, 0)),
                [0, minor, _] if *minor > 0 => Some(Version::new(0, minor + 1, 0)),
                [0, 0, patch] => Some(Version::new(0, 0, patch + 1)),
                _ => unreachable!("caret bound covers all component counts"),
            };
            (floor, upper)
        }
    };
    Interval { lower, upper }
}

fn split_operator(word: &str) -> Result<(Op, &str), VersionError> {
    let ops: [(&str, Op); 7] = [
        (">=", Op::Ge),
        ("<=", Op::Le),
        (">", Op::Gt),
        ("<", Op::Lt),
        ("=", Op::Exact),
        ("^", Op::Caret),
        ("~", Op::Tilde),
    ];
    for (prefix, op) in ops {
        if let Some(rest) = word.strip_prefix(prefix) {
            return Ok((op, rest));
        }
    }
    match word.chars().next() {
        Some(c) if c.is_ascii_digit() || matches!(c, 'x' | 'X' | '*' | 'v') => Ok((Op::Exact, word)),
        _ => Err(VersionError::InvalidOperator(word.to_string())),
    }
}

/// One `||` alternative: a conjunction of comparators, or a hyphen range.
/// Returns the interval plus the pinned version if the alternative is a bare
/// full version.
fn parse_alternative(alt: &str) -> Result<(Interval, Option<Version>), VersionError> {
    let words: Vec<&str> = alt.split_whitespace().collect();
    if words.is_empty() {
        return Err(VersionError::Empty);
    }
    if let [from, "-", to] = words.as_slice() {
        let from = parse_partial(from)?;
        let to = parse_partial(to)?;
        return Ok((Interval { lower: from.floor(), upper: to.ceiling() }, None));
    }

    // Re-join operators separated from their version by whitespace (`>= 0.8.0`).
    let mut comparators: Vec<(Op, Partial, bool)> = Vec::new();
    let mut pending: Option<(Op, bool)> = None;
    for word in words {
        let (op, rest, explicit) = match pending.take() {
            Some((op, explicit)) => (op, word, explicit),
            None => {
                let (op, rest) = split_operator(word)?;
                let explicit = rest.len() != word.len();
                (op, rest, explicit)
            }
        };
        if rest.is_empty() {
            pending = Some((op, explicit));
            continue;
        }
        comparators.push((op, parse_partial(rest)?, explicit));
    }
    if let Some((_, _)) = pending {
        return Err(VersionError::InvalidVersion(alt.to_string()));
    }

    let pin = match comparators.as_slice() {
        [(Op::Exact, v, _)] if v.is_full() => Some(v.floor()),
        _ => None,
    };
    let interval = comparators
        .iter()
        .map(|(op, v, _)| comparator_interval(*op, v))
        .fold(Interval::unbounded(), |acc, i| acc.intersect(&i));
    Ok((interval, pin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Version {
        s.parse().unwrap()
    }

    #[test]
    fn caret_on_zero_major_bumps_minor() {
        let r = VersionRange::parse("^0.8.0").unwrap();
        assert!(r.contains(v("0.8.19")));
        assert!(!r.contains(v("0.9.0")));
        assert!(!r.contains(v("0.7.6")));
        assert_eq!(r.exact_pin(), None);
    }

    #[test]
    fn bounded_range_and_spaced_operators() {
        let r = VersionRange::parse(">=0.4.22 <0.6.0").unwrap();
        assert!(r.contains(v("0.4.22")));
        assert!(r.contains(v("0.5.17")));
        assert!(!r.contains(v("0.6.0")));
        assert_eq!(r, VersionRange::parse(">= 0.4.22 < 0.6.0").unwrap());
    }

    #[test]
    fn exact_pin_is_single_version() {
        let r = VersionRange::parse("0.8.17").unwrap();
        assert_eq!(r.exact_pin(), Some(v("0.8.17")));
        assert_eq!(r.single_version(), Some(v("0.8.17")));
        assert_eq!(VersionRange::parse("=0.4.24").unwrap().exact_pin(), Some(v("0.4.24")));
        // partial versions and operators are not pins
        assert_eq!(VersionRange::parse("0.8").unwrap().exact_pin(), None);
        assert_eq!(VersionRange::parse(">=0.8.17").unwrap().exact_pin(), None);
    }

    #[test]
    fn tilde_hyphen_wildcard_and_alternatives() {
        let t = VersionRange::parse("~0.7.3").unwrap();
        assert!(t.contains(v("0.7.6")) && !t.contains(v("0.8.0")));
        let h = VersionRange::parse("0.4.0 - 0.5").unwrap();
        assert!(h.contains(v("0.5.17")) && !h.contains(v("0.6.0")));
        let x = VersionRange::parse("0.5.x").unwrap();
        assert!(x.contains(v("0.5.0")) && !x.contains(v("0.6.0")));
        let alt = VersionRange::parse("^0.4.24 || ^0.8.0").unwrap();
        assert!(alt.contains(v("0.4.26")) && alt.contains(v("0.8.1")) && !alt.contains(v("0.6.0")));
        assert!(VersionRange::parse("*").unwrap().contains(v("0.1.0")));
    }

    #[test]
    fn strict_bounds() {
        let gt = VersionRange::parse(">0.8.0").unwrap();
        assert!(!gt.contains(v("0.8.0")) && gt.contains(v("0.8.1")));
        let le = VersionRange::parse("<=0.8.19").unwrap();
        assert!(le.contains(v("0.8.19")) && !le.contains(v("0.8.20")));
        let contradictory = VersionRange::parse(">0.8.0 <0.7.0").unwrap();
        assert!(contradictory.is_empty());
    }

    #[test]
    fn admits_below_threshold() {
        let t = v("0.8.0");
        assert!(VersionRange::parse("^0.6.0").unwrap().admits_below(t));
        assert!(!VersionRange::parse("^0.8.4").unwrap().admits_below(t));
        assert!(VersionRange::parse(">=0.4.22 <0.9.0").unwrap().admits_below(t));
    }

    #[test]
    fn rejects_garbage() {
        assert!(VersionRange::parse("").is_err());
        assert!(VersionRange::parse("abc").is_err());
        assert!(VersionRange::parse("0.8.a").is_err());
        assert!(VersionRange::parse(">=").is_err());
        assert!(VersionRange::parse("1.2.3.4").is_err());
    }

    #[test]
    fn compiler_version_strings() {
        assert_eq!(v("v0.8.6+commit.11564f7e"), Version::new(0, 8, 6));
    }
}
