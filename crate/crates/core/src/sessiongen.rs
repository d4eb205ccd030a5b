//! Online-session generation.
//!
//! Session starts follow a time-of-day modulated Poisson process over
//! 20-minute bins; durations are Weibull, clamped below at a minimum length.
//! A fraction of users is always online. For `N` users, always-on fraction
//! `P`, `S` sessions per user per day and `D` days, exactly
//! `round((1 - P) * N * S * D)` sessions are drawn and each is handed to a
//! uniformly chosen dynamic user, so per-user session counts are
//! multinomial (approximately Poisson with mean `S * D`).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::stats;
use crate::timeline::{MeasurementWindow, Timeline, TimelineError};
use crate::SECONDS_PER_DAY;

pub const BINS_PER_DAY: usize = 72;
pub const BIN_SECONDS: f64 = SECONDS_PER_DAY / BINS_PER_DAY as f64;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session model: {key} {reason}")]
    InvalidModel { key: &'static str, reason: String },
    #[error("need at least one user")]
    NoUsers,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> SessionError {
    SessionError::InvalidModel {
        key,
        reason: reason.into(),
    }
}

/// Relative arrival weights for the 72 twenty-minute bins of a day,
/// normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DayProfile {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DayProfile {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, SessionError> {
        if weights.len() != BINS_PER_DAY {
            return Err(invalid(
                "profile",
                format!("needs {BINS_PER_DAY} weights, got {}", weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("profile", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("profile", "weights are all zero"));
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(DayProfile {
            weights,
            cumulative,
        })
    }

    pub fn uniform() -> Self {
        Self::from_weights(vec![1.0; BINS_PER_DAY]).expect("uniform weights are valid")
    }

    /// Single-peak diurnal cosine whose quietest bin sits at
    /// `(1 - deviation_low)` times the mean weight.
    ///
    /// A cosine is symmetric, so the busiest bin lands at
    /// `(1 + deviation_low)` times the mean whatever `deviation_high` asks
    /// for; [`DayProfile::deviations`] reports what was realized.
    pub fn cosine(deviation_low: f64, deviation_high: f64) -> Result<Self, SessionError> {
        if !(0.0..1.0).contains(&deviation_low) {
            return Err(invalid(
                "profile_low",
                format!("must lie in [0, 1), got {deviation_low}"),
            ));
        }
        if deviation_high.is_nan() || deviation_high < 0.0 {
            return Err(invalid(
                "profile_high",
                format!("must be nonnegative, got {deviation_high}"),
            ));
        }
        // Peak in the 20:00 bin, trough twelve hours earlier.
        let peak = 20.0 / 24.0;
        let wave: Vec<f64> = (0..BINS_PER_DAY)
            .map(|b| (2.0 * PI * ((b as f64 + 0.5) / BINS_PER_DAY as f64 - peak)).cos())
            .collect();
        let trough = wave.iter().copied().fold(f64::INFINITY, f64::min);
        let amplitude = deviation_low / -trough;
        let profile = Self::from_weights(wave.iter().map(|c| 1.0 + amplitude * c).collect())?;
        let (_, high) = profile.deviations();
        if (high - deviation_high).abs() > 1e-9 {
            log::info!(
                "cosine day profile: requested high deviation {deviation_high:+.3}, realized {high:+.3}"
            );
        }
        Ok(profile)
    }

    /// Reads one weight per non-comment line (72 lines).
    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let reader = BufReader::new(File::open(path)?);
        let mut weights = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let w = t.parse::<f64>().map_err(|e| SessionError::Parse {
                line: idx + 1,
                message: format!("bad weight {t:?}: {e}"),
            })?;
            weights.push(w);
        }
        Self::from_weights(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(min / mean - 1, max / mean - 1)`.
    pub fn deviations(&self) -> (f64, f64) {
        let mean = 1.0 / BINS_PER_DAY as f64;
        let min = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min / mean - 1.0, max / mean - 1.0)
    }

    pub fn sample_bin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(BINS_PER_DAY - 1)
    }
}

pub fn default_profile(deviation_low: f64, deviation_high: f64) -> Result<DayProfile, SessionError> {
    if deviation_low == 0.0 {
        return Ok(DayProfile::uniform());
    }
    DayProfile::cosine(deviation_low, deviation_high)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionModel {
    /// Weibull shape of session durations.
    pub duration_shape: f64,
    /// Weibull scale of session durations, seconds.
    pub duration_scale: f64,
    pub sessions_per_day: f64,
    /// Shorter draws are clamped up to this length, seconds.
    pub min_duration: f64,
    pub always_on_fraction: f64,
    pub day_profile: DayProfile,
    pub days: u32,
}

impl SessionModel {
    /// Facebook sessions seen at an ISP aggregation point.
    pub fn facebook(days: u32) -> Self {
        SessionModel {
            duration_shape: 0.4,
            duration_scale: 1284.0,
            sessions_per_day: 2.5,
            min_duration: 5.0,
            always_on_fraction: 0.0,
            day_profile: DayProfile::cosine(0.97, 1.07).expect("preset is valid"),
            days,
        }
    }

    /// DSL line sessions, excluding permanently connected lines.
    pub fn radius(days: u32) -> Self {
        SessionModel {
            duration_shape: 0.35,
            duration_scale: 550.0,
            sessions_per_day: 4.5,
            min_duration: 5.0,
            always_on_fraction: 0.0,
            day_profile: DayProfile::cosine(0.52, 0.44).expect("preset is valid"),
            days,
        }
    }

    pub fn with_always_on(mut self, fraction: f64) -> Self {
        self.always_on_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let positive = |key: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        positive("duration_shape", self.duration_shape)?;
        positive("duration_scale", self.duration_scale)?;
        positive("sessions_per_day", self.sessions_per_day)?;
        positive("min_duration_s", self.min_duration)?;
        if !(0.0..=1.0).contains(&self.always_on_fraction) {
            return Err(invalid(
                "always_on_fraction",
                format!("must lie in [0, 1], got {}", self.always_on_fraction),
            ));
        }
        if self.days == 0 {
            return Err(invalid("days", "must be at least 1"));
        }
        Ok(())
    }

    pub fn window(&self) -> MeasurementWindow {
        MeasurementWindow::days(self.days).expect("days >= 1")
    }

    /// Number of dynamic sessions drawn for `n_users` users.
    pub fn session_budget(&self, n_users: usize) -> usize {
        ((1.0 - self.always_on_fraction)
            * n_users as f64
            * self.sessions_per_day
            * f64::from(self.days))
        .round() as usize
    }

    /// Mean of the unclamped duration distribution.
    pub fn mean_raw_duration(&self) -> f64 {
        self.duration_scale * statrs::function::gamma::gamma(1.0 + 1.0 / self.duration_shape)
    }
}

/// One dynamic session before merging and truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSession {
    pub user: usize,
    pub start: f64,
    /// After clamping to the minimum duration.
    pub duration: f64,
    pub clamped: bool,
}

/// Online timelines of every user over the experiment window.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceSet {
    window: MeasurementWindow,
    timelines: Vec<Timeline>,
    always_on: Vec<usize>,
}

impl PresenceSet {
    /// Clips every timeline to `window`; users covering the whole window are
    /// recorded as always-on.
    pub fn new(window: MeasurementWindow, timelines: Vec<Timeline>) -> Self {
        let timelines: Vec<Timeline> = timelines.iter().map(|t| t.clip_to(&window)).collect();
        let full = window.as_timeline();
        let always_on = timelines
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == full)
            .map(|(u, _)| u)
            .collect();
        PresenceSet {
            window,
            timelines,
            always_on,
        }
    }

    pub fn window(&self) -> MeasurementWindow {
        self.window
    }

    pub fn n_users(&self) -> usize {
        self.timelines.len()
    }

    pub fn timeline(&self, user: usize) -> &Timeline {
        &self.timelines[user]
    }

    pub fn timelines(&self) -> &[Timeline] {
        &self.timelines
    }

    pub fn always_on(&self) -> &[usize] {
        &self.always_on
    }

    pub fn is_always_on(&self, user: usize) -> bool {
        self.always_on.binary_search(&user).is_ok()
    }

    pub fn never_online(&self) -> usize {
        self.timelines.iter().filter(|t| t.is_empty()).count()
    }

    pub fn online_fraction(&self, user: usize) -> f64 {
        self.timelines[user].measure(&self.window) / self.window.len()
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub presence: PresenceSet,
    /// Dynamic sessions in draw order.
    pub sessions: Vec<RawSession>,
}

impl Generated {
    pub fn clamped_count(&self) -> usize {
        self.sessions.iter().filter(|s| s.clamped).count()
    }
}

pub fn generate<R: Rng + ?Sized>(
    model: &SessionModel,
    n_users: usize,
    rng: &mut R,
) -> Result<Generated, SessionError> {
    model.validate()?;
    if n_users == 0 {
        return Err(SessionError::NoUsers);
    }
    let window = model.window();
    // The epsilon keeps products like 0.57 * 10000 from flooring to 5699.
    let n_always = (model.always_on_fraction * n_users as f64 + 1e-9).floor() as usize;
    let mut always_on = index::sample(rng, n_users, n_always).into_vec();
    always_on.sort_unstable();

    let mut dynamic = Vec::with_capacity(n_users - n_always);
    let mut next_always = always_on.iter().peekable();
    for u in 0..n_users {
        if next_always.peek() == Some(&&u) {
            next_always.next();
        } else {
            dynamic.push(u);
        }
    }

    let budget = if dynamic.is_empty() {
        0
    } else {
        model.session_budget(n_users)
    };
    let mut sessions = Vec::with_capacity(budget);
    for _ in 0..budget {
        let day = rng.gen_range(0..model.days);
        let bin = model.day_profile.sample_bin(rng);
        let start = f64::from(day) * SECONDS_PER_DAY + (bin as f64 + rng.gen::<f64>()) * BIN_SECONDS;
        let raw = stats::weibull_sample(model.duration_shape, model.duration_scale, rng);
        let clamped = raw < model.min_duration;
        let duration = raw.max(model.min_duration);
        let user = dynamic[rng.gen_range(0..dynamic.len())];
        sessions.push(RawSession {
            user,
            start,
            duration,
            clamped,
        });
    }

    let mut per_user: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_users];
    for s in &sessions {
        per_user[s.user].push((s.start, (s.start + s.duration).min(window.end())));
    }
    for &u in &always_on {
        per_user[u].push((window.start(), window.end()));
    }
    let timelines = per_user
        .into_iter()
        .map(Timeline::normalize)
        .collect::<Result<Vec<_>, _>>()?;

    let presence = PresenceSet {
        timelines: timelines.iter().map(|t| t.clip_to(&window)).collect(),
        window,
        always_on,
    };
    Ok(Generated { presence, sessions })
}

pub const SESSIONS_HEADER: &str = "user,start_s,end_s";

/// Writes `#` metadata lines, the CSV header, then one row per interval in
/// user order.
pub fn write_sessions<W: Write>(p: &PresenceSet, out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{SESSIONS_HEADER}")?;
    for (u, t) in p.timelines.iter().enumerate() {
        for iv in t.intervals() {
            writeln!(out, "{u},{},{}", iv.start(), iv.end())?;
        }
    }
    out.flush()
}

/// Like [`write_sessions`] but with one row per generated session (truncated
/// at the window end) and one full-window row per always-on user, so the row
/// count equals the session budget plus the always-on count. Rows are sorted
/// by user, then start. Reading the file back yields the same presence set.
pub fn write_generated<W: Write>(g: &Generated, out: W, metadata: &[String]) -> io::Result<()> {
    let w = g.presence.window;
    let mut rows: Vec<(usize, f64, f64)> = g
        .sessions
        .iter()
        .map(|s| (s.user, s.start, (s.start + s.duration).min(w.end())))
        .chain(g.presence.always_on.iter().map(|&u| (u, w.start(), w.end())))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let mut out = BufWriter::new(out);
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{SESSIONS_HEADER}")?;
    for (u, start, end) in rows {
        writeln!(out, "{u},{start},{end}")?;
    }
    out.flush()
}

/// Reads a sessions CSV. The user count is the larger of `n_users` and the
/// highest id seen plus one.
pub fn read_sessions<R: BufRead>(
    input: R,
    window: MeasurementWindow,
    n_users: Option<usize>,
) -> Result<PresenceSet, SessionError> {
    let mut rows: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_users.unwrap_or(0)];
    let mut seen_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !seen_header {
            if t != SESSIONS_HEADER {
                return Err(SessionError::Parse {
                    line: line_no,
                    message: format!("expected header {SESSIONS_HEADER:?}, got {t:?}"),
                });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(SessionError::Parse {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let user = fields[0].parse::<usize>().map_err(|e| SessionError::Parse {
            line: line_no,
            message: format!("bad user id {:?}: {e}", fields[0]),
        })?;
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SessionError::Parse {
                    line: line_no,
                    message: format!("bad {what} {s:?}"),
                })
        };
        let start = num(fields[1], "start_s")?;
        let end = num(fields[2], "end_s")?;
        if end < start {
            return Err(SessionError::Parse {
                line: line_no,
                message: format!("end {end} before start {start}"),
            });
        }
        if user >= rows.len() {
            rows.resize(user + 1, Vec::new());
        }
        rows[user].push((start, end));
    }
    let timelines = rows
        .into_iter()
        .map(Timeline::normalize)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PresenceSet::new(window, timelines))
}

pub fn save_sessions(p: &PresenceSet, path: &Path, metadata: &[String]) -> Result<(), SessionError> {
    write_sessions(p, File::create(path)?, metadata)?;
    Ok(())
}

pub fn load_sessions(
    path: &Path,
    window: MeasurementWindow,
    n_users: Option<usize>,
) -> Result<PresenceSet, SessionError> {
    read_sessions(BufReader::new(File::open(path)?), window, n_users)
}
