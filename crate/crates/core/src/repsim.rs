//! Replica propagation through ego networks and the resulting availability.
//!
//! At the window start only the owner holds its content. Under
//!
//! - `R0` nobody else ever gets it,
//! - `R1` a friend copies it from the owner during their first
//!   positive-length co-online period,
//! - `R2` any member of the owner's ego network (owner plus friends) that
//!   holds a copy passes it to any other ego member it is co-online with,
//!   whether or not those two are friends themselves.
//!
//! Transfers are instantaneous and replicas are never deleted. Each owner is
//! independent of every other, so owners are processed in parallel.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufWriter, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::graphgen::Graph;
use crate::sessiongen::PresenceSet;
use crate::stats::Ecdf;
use crate::timeline::{MeasurementWindow, Timeline};
use crate::SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    R0,
    R1,
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    /// Fraction of the window during which some replica is online.
    M1,
    /// Fraction of the friends' online time during which some replica is online.
    M2,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "R0" => Ok(Scheme::R0),
            "R1" => Ok(Scheme::R1),
            "R2" => Ok(Scheme::R2),
            other => Err(format!("unknown scheme {other:?} (expected R0, R1 or R2)")),
        }
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" => Ok(Metric::M1),
            "M2" => Ok(Metric::M2),
            other => Err(format!("unknown metric {other:?} (expected M1 or M2)")),
        }
    }
}

/// When each friend of `owner` first held the owner's content.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionMap {
    pub owner: usize,
    pub acquired_at: BTreeMap<usize, f64>,
}

/// Earliest acquisition times of the owner's friends under `scheme`.
pub fn acquisition_times(
    g: &Graph,
    presence: &PresenceSet,
    owner: usize,
    scheme: Scheme,
    window: &MeasurementWindow,
) -> AcquisitionMap {
    let friends = g.friends(owner);
    let clipped: Vec<Timeline> = std::iter::once(owner)
        .chain(friends.iter().copied())
        .map(|u| presence.timeline(u).clip_to(window))
        .collect();
    let times = match scheme {
        Scheme::R0 => vec![None; friends.len()],
        Scheme::R1 => direct(&clipped, window.start()),
        Scheme::R2 => indirect(&clipped, window.start()),
    };
    AcquisitionMap {
        owner,
        acquired_at: friends
            .iter()
            .zip(times)
            .filter_map(|(&f, t)| t.map(|t| (f, t)))
            .collect(),
    }
}

/// `ego[0]` is the owner; returns one entry per friend `ego[1..]`.
fn direct(ego: &[Timeline], from: f64) -> Vec<Option<f64>> {
    let owner = &ego[0];
    ego[1..]
        .iter()
        .map(|f| owner.first_overlap_from(f, from))
        .collect()
}

/// Earliest-acquisition fixpoint over the ego network by an event sweep.
///
/// Between two consecutive interval endpoints the set of online ego members
/// is constant. If a holder is online at the start of such a segment, every
/// member online in it becomes a holder at that instant (chains within an
/// instant are allowed); otherwise nothing changes until the next endpoint.
/// Segments have positive length, so touching intervals never transfer.
fn indirect(ego: &[Timeline], from: f64) -> Vec<Option<f64>> {
    #[derive(Clone, Copy)]
    struct Event {
        at: f64,
        member: usize,
        starts: bool,
    }
    let mut events: Vec<Event> = ego
        .iter()
        .enumerate()
        .flat_map(|(member, t)| {
            t.intervals().iter().flat_map(move |iv| {
                [
                    Event {
                        at: iv.start(),
                        member,
                        starts: true,
                    },
                    Event {
                        at: iv.end(),
                        member,
                        starts: false,
                    },
                ]
            })
        })
        .collect();
    // Ends before starts at the same instant: [a, b) and [b, c) never meet.
    events.sort_by(|a, b| a.at.total_cmp(&b.at).then(a.starts.cmp(&b.starts)));

    let mut acquired: Vec<Option<f64>> = vec![None; ego.len()];
    acquired[0] = Some(from);
    let mut online = vec![false; ego.len()];
    let mut online_holders = 0usize;
    // Online members that do not hold the content yet.
    let mut waiting: Vec<usize> = Vec::new();

    let mut i = 0;
    while i < events.len() {
        let at = events[i].at;
        while i < events.len() && events[i].at == at {
            let e = events[i];
            online[e.member] = e.starts;
            let holds = acquired[e.member].is_some();
            match (e.starts, holds) {
                (true, true) => online_holders += 1,
                (false, true) => online_holders -= 1,
                (true, false) => waiting.push(e.member),
                (false, false) => waiting.retain(|&m| m != e.member),
            }
            i += 1;
        }
        if online_holders > 0 && !waiting.is_empty() {
            for m in waiting.drain(..) {
                acquired[m] = Some(at);
                online_holders += 1;
            }
        }
    }
    debug_assert!(online.iter().all(|o| !o));
    acquired.split_off(1)
}

/// Per-user availability under one scheme and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityRecord {
    pub user: usize,
    pub degree: usize,
    pub scheme: Scheme,
    pub metric: Metric,
    /// `None` for M2 when no friend is ever online.
    pub availability: Option<f64>,
    /// One entry per 24 h sub-window when a day breakdown was requested.
    pub per_day: Vec<Option<f64>>,
    /// The owner's own online fraction over the window.
    pub online_fraction: f64,
}

/// Online time of the owner's replicas and friends, ready for measuring.
struct EgoCoverage {
    available: Timeline,
    friends_online: Timeline,
}

fn coverage(
    g: &Graph,
    presence: &PresenceSet,
    acq: &AcquisitionMap,
    window: &MeasurementWindow,
) -> EgoCoverage {
    let owner_tl = presence.timeline(acq.owner).clip_to(window);
    let friends = g.friends(acq.owner);
    let friend_tls: Vec<Timeline> = friends
        .iter()
        .map(|&f| presence.timeline(f).clip_to(window))
        .collect();
    let replicas: Vec<Timeline> = friends
        .iter()
        .zip(&friend_tls)
        .filter_map(|(f, tl)| acq.acquired_at.get(f).map(|&a| tl.clip(a, window.end())))
        .collect();
    EgoCoverage {
        available: Timeline::union_all(std::iter::once(&owner_tl).chain(&replicas)),
        friends_online: Timeline::union_all(&friend_tls),
    }
}

impl EgoCoverage {
    fn metric(&self, metric: Metric, w: &MeasurementWindow) -> Option<f64> {
        match metric {
            Metric::M1 => Some(self.available.measure(w) / w.len()),
            Metric::M2 => {
                let denom = self.friends_online.measure(w);
                (denom > 0.0).then(|| {
                    let num = self.available.intersect(&self.friends_online).measure(w);
                    (num / denom).min(1.0)
                })
            }
        }
    }
}

/// Availability of `owner`'s content; `acq` must come from [`acquisition_times`].
pub fn availability(
    g: &Graph,
    presence: &PresenceSet,
    acq: &AcquisitionMap,
    scheme: Scheme,
    metric: Metric,
    window: &MeasurementWindow,
) -> AvailabilityRecord {
    let cov = coverage(g, presence, acq, window);
    AvailabilityRecord {
        user: acq.owner,
        degree: g.degree(acq.owner),
        scheme,
        metric,
        availability: cov.metric(metric, window),
        per_day: Vec::new(),
        online_fraction: presence.timeline(acq.owner).measure(window) / window.len(),
    }
}

/// 24 h sub-windows of `w`; a trailing partial day is kept.
pub fn day_windows(w: &MeasurementWindow) -> Vec<MeasurementWindow> {
    let mut out = Vec::new();
    let mut start = w.start();
    while start < w.end() {
        let end = (start + SECONDS_PER_DAY).min(w.end());
        out.push(MeasurementWindow::new(start, end).expect("start < end"));
        start = end;
    }
    out
}

/// One record per (user, scheme, metric) in that order.
///
/// Per-day values reuse acquisitions accumulated since the window start.
/// Results do not depend on the rayon thread count.
pub fn run_experiment(
    g: &Graph,
    presence: &PresenceSet,
    schemes: &[Scheme],
    metrics: &[Metric],
    window: &MeasurementWindow,
    day_breakdown: bool,
) -> Vec<AvailabilityRecord> {
    assert_eq!(
        g.n_nodes(),
        presence.n_users(),
        "graph and presence set disagree on the number of users"
    );
    let days = if day_breakdown {
        day_windows(window)
    } else {
        Vec::new()
    };
    (0..g.n_nodes())
        .into_par_iter()
        .flat_map_iter(|owner| {
            let online_fraction = presence.timeline(owner).measure(window) / window.len();
            let mut out = Vec::with_capacity(schemes.len() * metrics.len());
            for &scheme in schemes {
                let acq = acquisition_times(g, presence, owner, scheme, window);
                let cov = coverage(g, presence, &acq, window);
                for &metric in metrics {
                    out.push(AvailabilityRecord {
                        user: owner,
                        degree: g.degree(owner),
                        scheme,
                        metric,
                        availability: cov.metric(metric, window),
                        per_day: days.iter().map(|d| cov.metric(metric, d)).collect(),
                        online_fraction,
                    });
                }
            }
            out
        })
        .collect()
}

pub const REPORT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Distribution of one (scheme, metric) column.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSummary {
    pub scheme: Scheme,
    pub metric: Metric,
    /// `None` for the whole window, `Some(d)` for day `d` (0-based).
    pub day: Option<usize>,
    pub n_users: usize,
    pub n_excluded: usize,
    pub n_undefined: usize,
    pub values: Vec<f64>,
    /// `(availability, cumulative fraction)` over defined values.
    pub ecdf: Vec<(f64, f64)>,
    pub quantiles: Vec<(f64, f64)>,
    pub frac_zero: f64,
    pub frac_one: f64,
}

impl CdfSummary {
    pub fn frac_undefined(&self) -> f64 {
        let considered = self.n_users - self.n_excluded;
        if considered == 0 {
            0.0
        } else {
            self.n_undefined as f64 / considered as f64
        }
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    /// Lower quantile of the defined values.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        Ecdf::new(&self.values).ok().map(|e| e.quantile(q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summaries: Vec<CdfSummary>,
    pub exclude_never_online: bool,
}

impl Report {
    pub fn get(&self, scheme: Scheme, metric: Metric) -> Option<&CdfSummary> {
        self.summaries
            .iter()
            .find(|s| s.scheme == scheme && s.metric == metric && s.day.is_none())
    }

    pub fn get_day(&self, scheme: Scheme, metric: Metric, day: usize) -> Option<&CdfSummary> {
        self.summaries
            .iter()
            .find(|s| s.scheme == scheme && s.metric == metric && s.day == Some(day))
    }
}

fn summarize(
    scheme: Scheme,
    metric: Metric,
    day: Option<usize>,
    rows: &[(bool, Option<f64>)],
) -> CdfSummary {
    let n_users = rows.len();
    let n_excluded = rows.iter().filter(|(excluded, _)| *excluded).count();
    let kept = rows.iter().filter(|(excluded, _)| !excluded);
    let n_undefined = kept.clone().filter(|(_, v)| v.is_none()).count();
    let mut values: Vec<f64> = kept.filter_map(|(_, v)| *v).collect();
    values.sort_by(f64::total_cmp);
    let (ecdf, quantiles, frac_zero, frac_one) = match Ecdf::new(&values) {
        Ok(e) => {
            let n = values.len() as f64;
            (
                e.points(),
                REPORT_QUANTILES.iter().map(|&q| (q, e.quantile(q))).collect(),
                values.iter().filter(|&&v| v == 0.0).count() as f64 / n,
                values.iter().filter(|&&v| v == 1.0).count() as f64 / n,
            )
        }
        Err(_) => (Vec::new(), Vec::new(), 0.0, 0.0),
    };
    CdfSummary {
        scheme,
        metric,
        day,
        n_users,
        n_excluded,
        n_undefined,
        values,
        ecdf,
        quantiles,
        frac_zero,
        frac_one,
    }
}

/// Per (scheme, metric) CDFs, and per-day CDFs when records carry them.
/// With `exclude_never_online`, owners with zero online time are dropped.
pub fn report(records: &[AvailabilityRecord], exclude_never_online: bool) -> Report {
    let mut groups: BTreeMap<(Scheme, Metric), Vec<&AvailabilityRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scheme, r.metric)).or_default().push(r);
    }
    let mut summaries = Vec::new();
    for ((scheme, metric), rs) in &groups {
        let excluded = |r: &AvailabilityRecord| exclude_never_online && r.online_fraction == 0.0;
        let rows: Vec<(bool, Option<f64>)> =
            rs.iter().map(|r| (excluded(r), r.availability)).collect();
        summaries.push(summarize(*scheme, *metric, None, &rows));
        let n_days = rs.iter().map(|r| r.per_day.len()).max().unwrap_or(0);
        for d in 0..n_days {
            let rows: Vec<(bool, Option<f64>)> = rs
                .iter()
                .map(|r| (excluded(r), r.per_day.get(d).copied().flatten()))
                .collect();
            summaries.push(summarize(*scheme, *metric, Some(d), &rows));
        }
    }
    Report {
        summaries,
        exclude_never_online,
    }
}

fn write_header<W: Write>(out: &mut W, metadata: &[String], header: &str) -> io::Result<()> {
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{header}")
}

fn fmt_value(v: Option<f64>) -> (String, u8) {
    match v {
        Some(v) => (v.to_string(), 1),
        None => (String::new(), 0),
    }
}

pub const RESULTS_HEADER: &str = "user,degree,scheme,metric,availability,defined";
pub const DAILY_HEADER: &str = "user,degree,scheme,metric,day,availability,defined";
pub const CDF_HEADER: &str = "scheme,metric,availability,cum_fraction";
pub const DAILY_CDF_HEADER: &str = "day,scheme,metric,availability,cum_fraction";
pub const SUMMARY_HEADER: &str =
    "scheme,metric,day,n_users,n_excluded,n_undefined,frac_zero,frac_one,q05,q25,q50,q75,q95";

pub fn write_results<W: Write>(
    records: &[AvailabilityRecord],
    out: W,
    metadata: &[String],
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    write_header(&mut out, metadata, RESULTS_HEADER)?;
    for r in records {
        let (v, defined) = fmt_value(r.availability);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.user, r.degree, r.scheme, r.metric, v, defined
        )?;
    }
    out.flush()
}

/// Day numbers in the file are 1-based.
pub fn write_daily<W: Write>(
    records: &[AvailabilityRecord],
    out: W,
    metadata: &[String],
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    write_header(&mut out, metadata, DAILY_HEADER)?;
    for r in records {
        for (d, v) in r.per_day.iter().enumerate() {
            let (v, defined) = fmt_value(*v);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.user,
                r.degree,
                r.scheme,
                r.metric,
                d + 1,
                v,
                defined
            )?;
        }
    }
    out.flush()
}

pub fn write_cdf<W: Write>(report: &Report, out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    write_header(&mut out, metadata, CDF_HEADER)?;
    for s in report.summaries.iter().filter(|s| s.day.is_none()) {
        for (v, c) in &s.ecdf {
            writeln!(out, "{},{},{},{}", s.scheme, s.metric, v, c)?;
        }
    }
    out.flush()
}

pub fn write_daily_cdf<W: Write>(report: &Report, out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    write_header(&mut out, metadata, DAILY_CDF_HEADER)?;
    for s in &report.summaries {
        if let Some(d) = s.day {
            for (v, c) in &s.ecdf {
                writeln!(out, "{},{},{},{},{}", d + 1, s.scheme, s.metric, v, c)?;
            }
        }
    }
    out.flush()
}

pub fn write_summary<W: Write>(report: &Report, out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    write_header(&mut out, metadata, SUMMARY_HEADER)?;
    for s in &report.summaries {
        let day = s.day.map(|d| (d + 1).to_string()).unwrap_or_else(|| "all".into());
        let qs: Vec<String> = if s.quantiles.is_empty() {
            vec![String::new(); REPORT_QUANTILES.len()]
        } else {
            s.quantiles.iter().map(|(_, v)| v.to_string()).collect()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.scheme,
            s.metric,
            day,
            s.n_users,
            s.n_excluded,
            s.n_undefined,
            s.frac_zero,
            s.frac_one,
            qs.join(",")
        )?;
    }
    out.flush()
}

/// Orders records the way [`run_experiment`] emits them.
pub fn record_order(a: &AvailabilityRecord, b: &AvailabilityRecord) -> Ordering {
    (a.user, a.scheme, a.metric).cmp(&(b.user, b.scheme, b.metric))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(raw: &[(f64, f64)]) -> Timeline {
        Timeline::normalize(raw.iter().copied()).unwrap()
    }

    /// Alice (0) online [0,10), Charlie (1) [5,20), Bob (2) [15,30); Bob and
    /// Charlie are Alice's friends but not each other's.
    fn alice() -> (Graph, PresenceSet, MeasurementWindow) {
        let g = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let w = MeasurementWindow::new(0.0, 40.0).unwrap();
        let p = PresenceSet::new(
            w,
            vec![tl(&[(0.0, 10.0)]), tl(&[(5.0, 20.0)]), tl(&[(15.0, 30.0)])],
        );
        (g, p, w)
    }

    fn avail(g: &Graph, p: &PresenceSet, w: &MeasurementWindow, s: Scheme, m: Metric) -> Option<f64> {
        let acq = acquisition_times(g, p, 0, s, w);
        availability(g, p, &acq, s, m, w).availability
    }

    #[test]
    fn alice_acquisitions() {
        let (g, p, w) = alice();
        let r1 = acquisition_times(&g, &p, 0, Scheme::R1, &w);
        assert_eq!(r1.acquired_at, BTreeMap::from([(1, 5.0)]));
        let r2 = acquisition_times(&g, &p, 0, Scheme::R2, &w);
        assert_eq!(r2.acquired_at, BTreeMap::from([(1, 5.0), (2, 15.0)]));
        assert!(acquisition_times(&g, &p, 0, Scheme::R0, &w).acquired_at.is_empty());
    }

    #[test]
    fn alice_availability() {
        let (g, p, w) = alice();
        assert_eq!(avail(&g, &p, &w, Scheme::R2, Metric::M1), Some(0.75));
        assert_eq!(avail(&g, &p, &w, Scheme::R1, Metric::M1), Some(0.5));
        assert_eq!(avail(&g, &p, &w, Scheme::R2, Metric::M2), Some(1.0));
        assert_eq!(avail(&g, &p, &w, Scheme::R1, Metric::M2), Some(0.6));
        assert_eq!(avail(&g, &p, &w, Scheme::R0, Metric::M1), Some(0.25));
    }

    #[test]
    fn isolated_owner() {
        let g = Graph::empty(1);
        let w = MeasurementWindow::new(0.0, 10.0).unwrap();
        let p = PresenceSet::new(w, vec![tl(&[(0.0, 4.0)])]);
        for s in [Scheme::R0, Scheme::R1, Scheme::R2] {
            assert!(acquisition_times(&g, &p, 0, s, &w).acquired_at.is_empty());
            assert_eq!(avail(&g, &p, &w, s, Metric::M1), Some(0.4));
            assert_eq!(avail(&g, &p, &w, s, Metric::M2), None);
        }
    }

    #[test]
    fn disjoint_friend_gives_zero_m2() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let w = MeasurementWindow::new(0.0, 100.0).unwrap();
        let p = PresenceSet::new(w, vec![tl(&[(0.0, 30.0)]), tl(&[(50.0, 60.0)])]);
        assert_eq!(avail(&g, &p, &w, Scheme::R1, Metric::M2), Some(0.0));
        assert_eq!(avail(&g, &p, &w, Scheme::R1, Metric::M1), Some(0.3));
    }

    #[test]
    fn touching_sessions_do_not_transfer() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let w = MeasurementWindow::new(0.0, 100.0).unwrap();
        let p = PresenceSet::new(w, vec![tl(&[(0.0, 30.0)]), tl(&[(30.0, 60.0)])]);
        assert!(acquisition_times(&g, &p, 0, Scheme::R2, &w).acquired_at.is_empty());
    }

    #[test]
    fn same_instant_chaining() {
        // Owner and a relay come online together; the relay meets a third
        // friend only after the owner left.
        let g = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let w = MeasurementWindow::new(0.0, 100.0).unwrap();
        let p = PresenceSet::new(
            w,
            vec![tl(&[(10.0, 20.0)]), tl(&[(10.0, 40.0)]), tl(&[(10.0, 15.0), (30.0, 50.0)])],
        );
        let r2 = acquisition_times(&g, &p, 0, Scheme::R2, &w);
        assert_eq!(r2.acquired_at, BTreeMap::from([(1, 10.0), (2, 10.0)]));
    }

    #[test]
    fn always_on_converges_at_start() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let w = MeasurementWindow::new(0.0, 86_400.0).unwrap();
        let p = PresenceSet::new(w, vec![w.as_timeline(); 4]);
        for s in [Scheme::R1, Scheme::R2] {
            let acq = acquisition_times(&g, &p, 0, s, &w);
            assert_eq!(acq.acquired_at.len(), 3);
            assert!(acq.acquired_at.values().all(|&t| t == 0.0));
        }
        let recs = run_experiment(&g, &p, &[Scheme::R2], &[Metric::M1], &w, false);
        assert!(recs.iter().all(|r| r.availability == Some(1.0)));
    }

    #[test]
    fn per_day_uses_accumulated_replicas() {
        // Friend meets the owner on day 1 only; on day 2 the owner is offline
        // but the friend still serves the content.
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let w = MeasurementWindow::days(2).unwrap();
        let day = SECONDS_PER_DAY;
        let p = PresenceSet::new(
            w,
            vec![tl(&[(0.0, 100.0)]), tl(&[(50.0, 150.0), (day + 10.0, day + 1010.0)])],
        );
        let recs = run_experiment(&g, &p, &[Scheme::R1], &[Metric::M1, Metric::M2], &w, true);
        let owner_m1 = &recs[0];
        assert_eq!(owner_m1.per_day.len(), 2);
        assert_eq!(owner_m1.per_day[1], Some(1000.0 / day));
        let owner_m2 = &recs[1];
        assert_eq!(owner_m2.per_day, vec![Some(1.0), Some(1.0)]);
    }

    #[test]
    fn report_excludes_and_counts() {
        let w = MeasurementWindow::new(0.0, 10.0).unwrap();
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let p = PresenceSet::new(w, vec![tl(&[(0.0, 5.0)]), Timeline::empty(), tl(&[(0.0, 5.0)])]);
        let recs = run_experiment(&g, &p, &[Scheme::R0], &[Metric::M1, Metric::M2], &w, false);
        let rep = report(&recs, true);
        let m1 = rep.get(Scheme::R0, Metric::M1).unwrap();
        assert_eq!((m1.n_users, m1.n_excluded), (3, 1));
        assert_eq!(m1.values, vec![0.5, 0.5]);
        assert_eq!(m1.ecdf, vec![(0.5, 1.0)]);
        let m2 = rep.get(Scheme::R0, Metric::M2).unwrap();
        // User 0's only friend never comes online; user 2 has no friends.
        assert_eq!(m2.n_undefined, 2);
        assert!(m2.values.is_empty());
        let all = report(&recs, false);
        assert_eq!(all.get(Scheme::R0, Metric::M1).unwrap().frac_zero, 1.0 / 3.0);
    }

    #[test]
    fn csv_layouts() {
        let (g, p, w) = alice();
        let recs = run_experiment(&g, &p, &[Scheme::R1], &[Metric::M2], &w, false);
        let mut buf = Vec::new();
        write_results(&recs, &mut buf, &["seed=1".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# seed=1\nuser,degree,scheme,metric,availability,defined\n\
             0,2,R1,M2,0.6,1\n1,1,R1,M2,0.5,1\n2,1,R1,M2,0,1\n"
        );
    }
}
