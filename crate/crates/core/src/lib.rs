//! Content availability under friend-to-friend replication.
//!
//! Users store their content on their own device and on the devices of their
//! friends. Friends obtain a copy only while they are online at the same time
//! as someone who already holds it. This crate provides
//!
//! - [`timeline`]: exact interval algebra over online periods,
//! - [`graphgen`]: social graphs with prescribed degree distributions,
//! - [`sessiongen`]: time-of-day modulated online sessions,
//! - [`repsim`]: replica propagation (schemes R0/R1/R2) and availability
//!   metrics (M1 pure, M2 friend availability),
//! - [`analytic`]: the discrete-time Markov model of replica growth, with a
//!   Monte-Carlo estimator to cross-check it,
//! - [`stats`]: ECDFs, Weibull sampling and fitting, KS distances.

pub mod analytic;
pub mod graphgen;
pub mod repsim;
pub mod seed;
pub mod sessiongen;
pub mod stats;
pub mod timeline;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub use graphgen::{DegreeSpec, Graph};
pub use repsim::{AvailabilityRecord, Metric, Scheme};
pub use sessiongen::{PresenceSet, SessionModel};
pub use timeline::{Interval, MeasurementWindow, Timeline};
