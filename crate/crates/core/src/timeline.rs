//! Continuous-time interval algebra.
//!
//! All intervals are half-open `[start, end)` in seconds. A [`Timeline`] is
//! always kept in maximal merged form: sorted, pairwise disjoint and
//! non-adjacent, with no zero-length pieces. Two timelines that merely touch
//! therefore share no measure, and an instant of overlap never counts as
//! contact.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("interval endpoints must be finite, got [{start}, {end})")]
    NonFinite { start: f64, end: f64 },
    #[error("interval start {start} is after end {end}")]
    Reversed { start: f64, end: f64 },
    #[error("measurement window must have positive length, got [{start}, {end})")]
    EmptyWindow { start: f64, end: f64 },
}

/// A half-open interval `[start, end)` with `start < end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    start: f64,
    end: f64,
}

impl Interval {
    /// Builds a non-empty interval; zero-length input yields `Ok(None)`.
    pub fn new(start: f64, end: f64) -> Result<Option<Interval>, TimelineError> {
        if !start.is_finite() || !end.is_finite() {
            return Err(TimelineError::NonFinite { start, end });
        }
        if start > end {
            return Err(TimelineError::Reversed { start, end });
        }
        if start == end {
            return Ok(None);
        }
        Ok(Some(Interval { start, end }))
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// The span `[start, end)` over which availability is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementWindow {
    start: f64,
    end: f64,
}

impl MeasurementWindow {
    pub fn new(start: f64, end: f64) -> Result<Self, TimelineError> {
        if !start.is_finite() || !end.is_finite() {
            return Err(TimelineError::NonFinite { start, end });
        }
        if end <= start {
            return Err(TimelineError::EmptyWindow { start, end });
        }
        Ok(MeasurementWindow { start, end })
    }

    /// Window `[0, days * 86400)`.
    pub fn days(days: u32) -> Result<Self, TimelineError> {
        Self::new(0.0, f64::from(days) * crate::SECONDS_PER_DAY)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn as_timeline(&self) -> Timeline {
        Timeline {
            intervals: vec![Interval {
                start: self.start,
                end: self.end,
            }],
        }
    }
}

/// A set of online intervals in canonical (maximal merged) form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    intervals: Vec<Interval>,
}

impl Timeline {
    pub fn empty() -> Self {
        Timeline::default()
    }

    /// Sorts and merges raw `(start, end)` pairs. Overlapping and touching
    /// intervals merge; zero-length ones are dropped.
    pub fn normalize<I>(raw: I) -> Result<Timeline, TimelineError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut items = Vec::new();
        for (start, end) in raw {
            if let Some(iv) = Interval::new(start, end)? {
                items.push(iv);
            }
        }
        Ok(Self::from_valid(items))
    }

    fn from_valid(mut items: Vec<Interval>) -> Timeline {
        items.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut out: Vec<Interval> = Vec::with_capacity(items.len());
        for iv in items {
            match out.last_mut() {
                Some(last) if iv.start <= last.end => {
                    if iv.end > last.end {
                        last.end = iv.end;
                    }
                }
                _ => out.push(iv),
            }
        }
        Timeline { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Total length, unclipped.
    pub fn total(&self) -> f64 {
        self.intervals.iter().map(Interval::len).fold(0.0, |a, b| a + b)
    }

    pub fn union(&self, other: &Timeline) -> Timeline {
        let mut out: Vec<Interval> = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.intervals, &other.intervals);
        while i < a.len() || j < b.len() {
            let next = if j >= b.len() || (i < a.len() && a[i].start <= b[j].start) {
                i += 1;
                a[i - 1]
            } else {
                j += 1;
                b[j - 1]
            };
            match out.last_mut() {
                Some(last) if next.start <= last.end => {
                    if next.end > last.end {
                        last.end = next.end;
                    }
                }
                _ => out.push(next),
            }
        }
        Timeline { intervals: out }
    }

    pub fn union_all<'a, I>(timelines: I) -> Timeline
    where
        I: IntoIterator<Item = &'a Timeline>,
    {
        let items: Vec<Interval> = timelines
            .into_iter()
            .flat_map(|t| t.intervals.iter().copied())
            .collect();
        Self::from_valid(items)
    }

    pub fn intersect(&self, other: &Timeline) -> Timeline {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.intervals, &other.intervals);
        while i < a.len() && j < b.len() {
            let start = a[i].start.max(b[j].start);
            let end = a[i].end.min(b[j].end);
            if start < end {
                out.push(Interval { start, end });
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        Timeline { intervals: out }
    }

    /// Restriction to `[start, end)`.
    pub fn clip(&self, start: f64, end: f64) -> Timeline {
        let intervals = self
            .intervals
            .iter()
            .filter_map(|iv| {
                let s = iv.start.max(start);
                let e = iv.end.min(end);
                (s < e).then_some(Interval { start: s, end: e })
            })
            .collect();
        Timeline { intervals }
    }

    pub fn clip_to(&self, w: &MeasurementWindow) -> Timeline {
        self.clip(w.start, w.end)
    }

    /// Length of the part of this timeline inside `w`.
    pub fn measure(&self, w: &MeasurementWindow) -> f64 {
        self.intervals
            .iter()
            .map(|iv| (iv.end.min(w.end) - iv.start.max(w.start)).max(0.0))
            // Not `sum()`: an empty f64 sum is -0.0.
            .fold(0.0, |a, b| a + b)
    }

    /// Whether `t` lies inside some `[start, end)`.
    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(idx).is_some_and(|iv| iv.start <= t)
    }

    /// Start of the earliest positive-length overlap with `other` at or after `from`.
    pub fn first_overlap_from(&self, other: &Timeline, from: f64) -> Option<f64> {
        let a = &self.intervals;
        let b = &other.intervals;
        let mut i = a.partition_point(|iv| iv.end <= from);
        let mut j = b.partition_point(|iv| iv.end <= from);
        while i < a.len() && j < b.len() {
            let start = a[i].start.max(b[j].start).max(from);
            let end = a[i].end.min(b[j].end);
            if start < end {
                return Some(start);
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        None
    }
}

impl fmt::Display for Timeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tl(raw: &[(f64, f64)]) -> Timeline {
        Timeline::normalize(raw.iter().copied()).unwrap()
    }

    fn pairs(t: &Timeline) -> Vec<(f64, f64)> {
        t.intervals().iter().map(|iv| (iv.start(), iv.end())).collect()
    }

    fn w(start: f64, end: f64) -> MeasurementWindow {
        MeasurementWindow::new(start, end).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert!(tl(&[]).is_empty());
        assert_eq!(pairs(&tl(&[(0.0, 10.0), (5.0, 20.0)])), vec![(0.0, 20.0)]);
        assert_eq!(
            pairs(&tl(&[(0.0, 5.0), (5.0, 8.0), (9.0, 9.0)])),
            vec![(0.0, 8.0)]
        );
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert_eq!(
            Timeline::normalize([(3.0, 1.0)]),
            Err(TimelineError::Reversed {
                start: 3.0,
                end: 1.0
            })
        );
        assert!(matches!(
            Timeline::normalize([(0.0, f64::INFINITY)]),
            Err(TimelineError::NonFinite { .. })
        ));
        assert!(Timeline::normalize([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn union_examples() {
        let a = tl(&[(0.0, 10.0)]);
        assert_eq!(a.union(&Timeline::empty()), a);
        let b = tl(&[(5.0, 20.0), (25.0, 30.0)]);
        assert_eq!(pairs(&a.union(&b)), vec![(0.0, 20.0), (25.0, 30.0)]);
        assert_eq!(a.union(&a), a);
    }

    #[test]
    fn intersect_examples() {
        let a = tl(&[(0.0, 10.0)]);
        assert!(a.intersect(&tl(&[(10.0, 20.0)])).is_empty());
        assert_eq!(pairs(&a.intersect(&tl(&[(5.0, 20.0)]))), vec![(5.0, 10.0)]);
        let b = tl(&[(-5.0, 3.0), (8.0, 50.0)]);
        let window = w(0.0, 40.0);
        assert_eq!(b.intersect(&window.as_timeline()), b.clip_to(&window));
    }

    #[test]
    fn measure_examples() {
        assert_eq!(Timeline::empty().measure(&w(0.0, 5.0)), 0.0);
        assert_eq!(
            tl(&[(0.0, 10.0), (20.0, 30.0)]).measure(&w(0.0, 40.0)),
            20.0
        );
        assert_eq!(tl(&[(0.0, 100.0)]).measure(&w(10.0, 20.0)), 10.0);
    }

    #[test]
    fn window_must_be_positive() {
        assert!(MeasurementWindow::new(5.0, 5.0).is_err());
        assert!(MeasurementWindow::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn half_open_contains() {
        let t = tl(&[(0.0, 10.0), (20.0, 30.0)]);
        assert!(t.contains(0.0));
        assert!(!t.contains(10.0));
        assert!(t.contains(29.999));
        assert!(!t.contains(15.0));
    }

    #[test]
    fn first_overlap_skips_touching() {
        let a = tl(&[(0.0, 10.0), (20.0, 30.0)]);
        let b = tl(&[(10.0, 12.0), (25.0, 40.0)]);
        assert_eq!(a.first_overlap_from(&b, 0.0), Some(25.0));
        assert_eq!(a.first_overlap_from(&b, 27.0), Some(27.0));
        assert_eq!(a.first_overlap_from(&b, 30.0), None);
    }

    fn arb_timeline() -> impl Strategy<Value = Timeline> {
        prop::collection::vec((0u32..200, 0u32..30), 0..8).prop_map(|v| {
            Timeline::normalize(
                v.into_iter()
                    .map(|(s, l)| (f64::from(s), f64::from(s + l))),
            )
            .unwrap()
        })
    }

    fn is_canonical(t: &Timeline) -> bool {
        t.intervals().iter().all(|iv| iv.start() < iv.end())
            && t
                .intervals()
                .windows(2)
                .all(|p| p[0].end() < p[1].start())
    }

    proptest! {
        #[test]
        fn algebra_laws(a in arb_timeline(), b in arb_timeline(), c in arb_timeline()) {
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.intersect(&b), b.intersect(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.intersect(&b).intersect(&c), a.intersect(&b.intersect(&c)));
            prop_assert_eq!(a.intersect(&a), a.clone());
            prop_assert!(is_canonical(&a.union(&b)));
            prop_assert!(is_canonical(&a.intersect(&b)));
            prop_assert_eq!(Timeline::union_all([&a, &b, &c]), a.union(&b).union(&c));
        }

        #[test]
        fn normalize_is_projection(a in arb_timeline()) {
            let again = Timeline::normalize(
                a.intervals().iter().map(|iv| (iv.start(), iv.end()))).unwrap();
            prop_assert_eq!(again, a);
        }

        #[test]
        fn measure_monotone(a in arb_timeline(), b in arb_timeline(), lo in 0u32..100, len in 1u32..200) {
            let w = MeasurementWindow::new(f64::from(lo), f64::from(lo + len)).unwrap();
            let m = a.measure(&w);
            prop_assert!(m >= 0.0 && m <= w.len());
            prop_assert!(a.intersect(&b).measure(&w) <= m);
            prop_assert!(m <= a.union(&b).measure(&w));
        }
    }
}
