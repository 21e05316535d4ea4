//! Integer domains stored as sorted runs of closed intervals.

use std::fmt;

use super::FdError;

/// A finite set of integers kept as strictly ascending, disjoint and
/// non-adjacent closed intervals.
///
/// An empty `Domain` is a legal value (it is how removal and narrowing
/// report a wipe-out) but the store never keeps one on a live variable.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Domain {
    intervals: Vec<(i64, i64)>,
}

impl Domain {
    /// `{lo..hi}`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self, FdError> {
        if lo > hi {
            return Err(FdError::InvalidRange { lo, hi });
        }
        Ok(Domain {
            intervals: vec![(lo, hi)],
        })
    }

    pub fn singleton(v: i64) -> Self {
        Domain {
            intervals: vec![(v, v)],
        }
    }

    pub fn empty() -> Self {
        Domain::default()
    }

    /// Builds a domain from arbitrary values (duplicates allowed).
    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut vs: Vec<i64> = values.into_iter().collect();
        vs.sort_unstable();
        vs.dedup();
        let mut intervals: Vec<(i64, i64)> = Vec::new();
        for v in vs {
            match intervals.last_mut() {
                Some((_, hi)) if *hi + 1 == v => *hi = v,
                _ => intervals.push((v, v)),
            }
        }
        Domain { intervals }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi - lo) as u64 + 1)
            .sum()
    }

    pub fn min(&self) -> Option<i64> {
        self.intervals.first().map(|&(lo, _)| lo)
    }

    pub fn max(&self) -> Option<i64> {
        self.intervals.last().map(|&(_, hi)| hi)
    }

    /// The value of a singleton domain.
    pub fn value(&self) -> Option<i64> {
        match self.intervals.as_slice() {
            [(lo, hi)] if lo == hi => Some(*lo),
            _ => None,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.value().is_some()
    }

    pub fn contains(&self, v: i64) -> bool {
        self.find(v).is_ok()
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    /// All values in ascending order.
    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    /// Smallest member `>= v`.
    pub fn next_at_or_above(&self, v: i64) -> Option<i64> {
        match self.find(v) {
            Ok(_) => Some(v),
            Err(i) => self.intervals.get(i).map(|&(lo, _)| lo),
        }
    }

    /// Largest member `<= v`.
    pub fn next_at_or_below(&self, v: i64) -> Option<i64> {
        match self.find(v) {
            Ok(_) => Some(v),
            Err(0) => None,
            Err(i) => Some(self.intervals[i - 1].1),
        }
    }

    /// `self \ {v}`.
    pub fn remove_value(&self, v: i64) -> Domain {
        let Ok(i) = self.find(v) else {
            return self.clone();
        };
        let (lo, hi) = self.intervals[i];
        let mut intervals = Vec::with_capacity(self.intervals.len() + 1);
        intervals.extend_from_slice(&self.intervals[..i]);
        if lo < v {
            intervals.push((lo, v - 1));
        }
        if v < hi {
            intervals.push((v + 1, hi));
        }
        intervals.extend_from_slice(&self.intervals[i + 1..]);
        Domain { intervals }
    }

    /// `self ∩ [lo, hi]`.
    pub fn narrow_bounds(&self, lo: i64, hi: i64) -> Domain {
        let intervals = self
            .intervals
            .iter()
            .filter_map(|&(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                (a <= b).then_some((a, b))
            })
            .collect();
        Domain { intervals }
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        let (mut i, mut j) = (0, 0);
        let mut intervals = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = self.intervals[i];
            let (c, d) = other.intervals[j];
            let (lo, hi) = (a.max(c), b.min(d));
            if lo <= hi {
                intervals.push((lo, hi));
            }
            if b < d {
                i += 1;
            } else {
                j += 1;
            }
        }
        Domain { intervals }
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.intersect(other) == *self
    }

    /// `Ok(index)` of the interval holding `v`, or `Err(index)` of the first
    /// interval lying entirely above `v`.
    fn find(&self, v: i64) -> Result<usize, usize> {
        self.intervals.binary_search_by(|&(lo, hi)| {
            if hi < v {
                std::cmp::Ordering::Less
            } else if lo > v {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    }

    /// Checks the representation invariant; used by tests.
    pub fn is_normalized(&self) -> bool {
        self.intervals.iter().all(|&(lo, hi)| lo <= hi)
            && self.intervals.windows(2).all(|w| w[1].0 > w[0].1 + 1)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, &(lo, hi)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}..{hi}")?;
            }
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
