use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{EsnError, Result};
use crate::format::sig17;

/// A finite union of closed intervals, kept sorted and pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn single(left: f64, right: f64) -> Self {
        let mut s = IntervalSet::empty();
        if right > left {
            s.intervals.push((left, right));
        }
        s
    }

    /// Union of arbitrary (possibly overlapping, unsorted) intervals.
    /// Degenerate pieces with `right <= left` are dropped.
    pub fn from_union<I: IntoIterator<Item = (f64, f64)>>(pieces: I) -> Self {
        let mut v: Vec<(f64, f64)> = pieces.into_iter().filter(|(l, r)| r > l).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::merge_sorted(v)
    }

    /// Union of intervals already sorted by left endpoint.
    pub(crate) fn merge_sorted<I: IntoIterator<Item = (f64, f64)>>(sorted: I) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (l, r) in sorted {
            if r <= l {
                continue;
            }
            match out.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(r),
                _ => out.push((l, r)),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Checked constructor for already disjoint sorted intervals.
    pub fn from_sorted(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(EsnError::InvalidParams("intervals overlap or are unsorted".into()));
            }
        }
        if intervals.iter().any(|(l, r)| !(r > l)) {
            return Err(EsnError::InvalidParams("interval with left ≥ right".into()));
        }
        Ok(IntervalSet { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|(l, _)| *l <= x);
        i > 0 && x <= self.intervals[i - 1].1
    }

    /// `[lo, hi]` minus the interiors of the intervals of `self`.
    ///
    /// Points where two intervals touch are dropped (zero length), so only
    /// pieces of positive length remain.
    pub fn complement_within(&self, lo: f64, hi: f64) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(l, r) in &self.intervals {
            if r <= cursor {
                continue;
            }
            if l >= hi {
                break;
            }
            if l > cursor {
                out.push((cursor, l.min(hi)));
            }
            cursor = cursor.max(r);
            if cursor >= hi {
                break;
            }
        }
        if cursor < hi {
            out.push((cursor, hi));
        }
        IntervalSet { intervals: out }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("left,right\n");
        for (l, r) in &self.intervals {
            let _ = writeln!(s, "{},{}", sig17(*l), sig17(*r));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut v = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("left")) {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| EsnError::Parse(format!("line {}: expected two columns", i + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| EsnError::Parse(format!("line {}: {e}", i + 1)))
            };
            v.push((parse(a)?, parse(b)?));
        }
        Self::from_sorted(v)
    }
}
