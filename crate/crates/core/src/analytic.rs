//! Discrete-time model of replica growth for one owner with `n` friends.
//!
//! Time is split into `T` bins. In bin `t` every member of the ego network
//! (owner plus `n` friends) is online independently with probability
//! `alpha[t]`. If at least one current replica is online, every online friend
//! that is not yet a replica becomes one. The replica count `k` includes the
//! owner, so it starts at 1 and ranges over `1..=n+1`.
//!
//! With `k` replicas and `m = n + 1 - k` friends still lacking a copy:
//!
//! ```text
//! P(X = 0 | k) = (1-a)^k + (1 - (1-a)^k) (1-a)^m
//! P(X = j | k) = (1 - (1-a)^k) C(m, j) a^j (1-a)^(m-j),   1 <= j <= m
//! ```
//!
//! Content is available in bin `t` iff some replica present when the bin
//! begins is online, which has probability `1 - (1-a)^k`.

use std::io::{self, BufWriter, Write};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("online probability in bin {bin} must lie in [0, 1], got {value}")]
    InvalidAlpha { bin: usize, value: f64 },
    #[error("need at least one time bin")]
    NoBins,
    #[error("need at least one Monte-Carlo run")]
    NoRuns,
}

/// Default bins per simulated day (20-minute bins).
pub const DEFAULT_BINS: usize = 72;

/// Which non-replica friend count the transition uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionRule {
    /// `m = n + 1 - k`, the count the process actually has.
    #[default]
    Exact,
    /// `m = n - k` (floored at zero): the published closed form, which
    /// counts the owner among the `n` friends. Kept for comparison plots;
    /// under it the replica count never exceeds `n`.
    ShiftedFriendCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticParams {
    n: usize,
    alpha: Vec<f64>,
}

impl AnalyticParams {
    pub fn new(n: usize, alpha: Vec<f64>) -> Result<Self, AnalyticError> {
        if alpha.is_empty() {
            return Err(AnalyticError::NoBins);
        }
        if let Some((bin, &value)) = alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !(0.0..=1.0).contains(*a))
        {
            return Err(AnalyticError::InvalidAlpha { bin, value });
        }
        Ok(AnalyticParams { n, alpha })
    }

    pub fn constant(n: usize, alpha: f64, bins: usize) -> Result<Self, AnalyticError> {
        Self::new(n, vec![alpha; bins])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bins(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// `probs[k - 1] = P(replica count = k)` for `k = 1..=n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaDistribution {
    probs: Vec<f64>,
}

impl ReplicaDistribution {
    /// Only the owner holds the content.
    pub fn initial(n: usize) -> Self {
        Self::point_mass(n, 1)
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        assert!((1..=n + 1).contains(&k), "k = {k} outside 1..={}", n + 1);
        let mut probs = vec![0.0; n + 1];
        probs[k - 1] = 1.0;
        ReplicaDistribution { probs }
    }

    pub fn from_probs(probs: Vec<f64>) -> Self {
        assert!(!probs.is_empty());
        ReplicaDistribution { probs }
    }

    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(1)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// `P(count <= k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        self.probs.iter().take(k).sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// Availability once every friend holds a replica: `1 - (1 - a)^(n+1)`.
pub fn converged_bound(n: usize, alpha: f64) -> f64 {
    1.0 - (1.0 - alpha).powi(n as i32 + 1)
}

fn binomial_row(m: usize) -> Vec<f64> {
    // C(m, j) by the multiplicative recurrence C(m, j) = C(m, j-1) (m-j+1) / j.
    let mut row = Vec::with_capacity(m + 1);
    let mut c = 1.0;
    row.push(c);
    for j in 1..=m {
        c = c * (m - j + 1) as f64 / j as f64;
        row.push(c);
    }
    row
}

/// One bin of the replica-count Markov chain.
pub fn transition(dist: &ReplicaDistribution, alpha: f64, rule: TransitionRule) -> ReplicaDistribution {
    let n = dist.n();
    let q = 1.0 - alpha;
    let mut next = vec![0.0; n + 1];
    for (idx, &p) in dist.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let k = idx + 1;
        let m = match rule {
            TransitionRule::Exact => n + 1 - k,
            TransitionRule::ShiftedFriendCount => n.saturating_sub(k),
        };
        let none_online = q.powi(k as i32);
        let some_online = 1.0 - none_online;
        next[idx] += p * (none_online + some_online * q.powi(m as i32));
        let choose = binomial_row(m);
        for (j, c) in choose.iter().enumerate().skip(1) {
            next[idx + j] += p * some_online * c * alpha.powi(j as i32) * q.powi((m - j) as i32);
        }
    }
    ReplicaDistribution { probs: next }
}

/// Probability that some replica present at the start of the bin is online.
pub fn availability_at(dist: &ReplicaDistribution, alpha: f64) -> f64 {
    let q = 1.0 - alpha;
    dist.probs
        .iter()
        .enumerate()
        .map(|(idx, p)| p * (1.0 - q.powi(idx as i32 + 1)))
        .sum()
}

/// Replica distributions entering each bin, plus the one after the last bin.
pub fn distributions(params: &AnalyticParams, rule: TransitionRule) -> Vec<ReplicaDistribution> {
    let mut out = Vec::with_capacity(params.bins() + 1);
    out.push(ReplicaDistribution::initial(params.n));
    for &a in &params.alpha {
        let next = transition(out.last().expect("non-empty"), a, rule);
        out.push(next);
    }
    out
}

/// Per-bin availability `P(A(t))`, `t = 1..=T`.
pub fn availability_trace(params: &AnalyticParams, rule: TransitionRule) -> Vec<f64> {
    distributions(params, rule)
        .iter()
        .zip(&params.alpha)
        .map(|(d, &a)| availability_at(d, a))
        .collect()
}

/// Mean of the per-bin availability over the `T` bins.
pub fn average_availability(params: &AnalyticParams) -> f64 {
    average_availability_with(params, TransitionRule::Exact)
}

pub fn average_availability_with(params: &AnalyticParams, rule: TransitionRule) -> f64 {
    let trace = availability_trace(params, rule);
    trace.iter().sum::<f64>() / trace.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub runs: usize,
    pub per_bin_mean: Vec<f64>,
    /// Empirical standard error `sqrt(p (1-p) / runs)` per bin.
    pub per_bin_stderr: Vec<f64>,
    /// Mean over runs of each run's average availability.
    pub average_mean: f64,
    pub average_stderr: f64,
}

const MC_CHUNK: usize = 4096;

/// Direct simulation of the ego network, `runs` independent days.
///
/// Runs are grouped into chunks with their own keyed RNG streams, so the
/// estimate is the same whatever the thread count.
pub fn monte_carlo(
    params: &AnalyticParams,
    runs: usize,
    master_seed: u64,
) -> Result<MonteCarloEstimate, AnalyticError> {
    if runs == 0 {
        return Err(AnalyticError::NoRuns);
    }
    let bins = params.bins();
    let n = params.n;
    let chunks = runs.div_ceil(MC_CHUNK);
    let partial: Vec<(Vec<u64>, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(master_seed, "analytic/monte-carlo", c as u64);
            let here = MC_CHUNK.min(runs - c * MC_CHUNK);
            let mut per_bin = vec![0u64; bins];
            let (mut sum, mut sum_sq) = (0u64, 0u64);
            // holder[0] is the owner.
            let mut holder = vec![false; n + 1];
            let mut online = vec![false; n + 1];
            for _ in 0..here {
                holder.fill(false);
                holder[0] = true;
                let mut available_bins = 0u64;
                for (t, &a) in params.alpha.iter().enumerate() {
                    for o in online.iter_mut() {
                        *o = rng.gen::<f64>() < a;
                    }
                    let available = holder.iter().zip(&online).any(|(h, o)| *h && *o);
                    if available {
                        per_bin[t] += 1;
                        available_bins += 1;
                        for (h, o) in holder.iter_mut().zip(&online) {
                            *h |= *o;
                        }
                    }
                }
                sum += available_bins;
                sum_sq += available_bins * available_bins;
            }
            (per_bin, sum, sum_sq)
        })
        .collect();

    let mut per_bin = vec![0u64; bins];
    let (mut sum, mut sum_sq) = (0u64, 0u64);
    for (pb, s, sq) in partial {
        for (acc, v) in per_bin.iter_mut().zip(pb) {
            *acc += v;
        }
        sum += s;
        sum_sq += sq;
    }
    let r = runs as f64;
    let per_bin_mean: Vec<f64> = per_bin.iter().map(|&c| c as f64 / r).collect();
    let per_bin_stderr = per_bin_mean
        .iter()
        .map(|p| (p * (1.0 - p) / r).sqrt())
        .collect();
    let t = bins as f64;
    let mean_bins = sum as f64 / r;
    let var_bins = if runs > 1 {
        (sum_sq as f64 - r * mean_bins * mean_bins) / (r - 1.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        runs,
        per_bin_mean,
        per_bin_stderr,
        average_mean: mean_bins / t,
        average_stderr: (var_bins.max(0.0) / r).sqrt() / t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub degree: usize,
    pub alpha: f64,
    pub avg_availability: f64,
    pub converged_bound: f64,
}

/// Average availability on a degree-by-alpha grid with constant alpha.
pub fn degree_sweep(
    degrees: &[usize],
    alphas: &[f64],
    bins: usize,
) -> Result<Vec<SweepRow>, AnalyticError> {
    let cells: Vec<(usize, f64)> = degrees
        .iter()
        .flat_map(|&d| alphas.iter().map(move |&a| (d, a)))
        .collect();
    cells
        .into_par_iter()
        .map(|(degree, alpha)| {
            let params = AnalyticParams::constant(degree, alpha, bins)?;
            Ok(SweepRow {
                degree,
                alpha,
                avg_availability: average_availability(&params),
                converged_bound: converged_bound(degree, alpha),
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "degree,alpha,avg_availability,converged_bound";
pub const TRACE_HEADER: &str = "t,analytic,mc_mean,mc_stderr";

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.degree, r.alpha, r.avg_availability, r.converged_bound
        )?;
    }
    out.flush()
}

/// Bins are numbered from 1.
pub fn write_trace<W: Write>(
    analytic: &[f64],
    mc: &MonteCarloEstimate,
    out: W,
    metadata: &[String],
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{TRACE_HEADER}")?;
    for (t, a) in analytic.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            t + 1,
            a,
            mc.per_bin_mean[t],
            mc.per_bin_stderr[t]
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bound_examples() {
        assert_eq!(converged_bound(9, 0.0), 0.0);
        assert_eq!(converged_bound(0, 0.37), 0.37);
        assert!(close(converged_bound(6, 0.2), 1.0 - 0.8f64.powi(7), 1e-15));
        assert!(close(converged_bound(6, 0.2), 0.7903, 1e-4));
    }

    #[test]
    fn transition_edges() {
        let d = ReplicaDistribution::from_probs(vec![0.2, 0.5, 0.3]);
        assert_eq!(transition(&d, 0.0, TransitionRule::Exact), d);
        let start = ReplicaDistribution::initial(5);
        let all = transition(&start, 1.0, TransitionRule::Exact);
        assert_eq!(all, ReplicaDistribution::point_mass(5, 6));
    }

    #[test]
    fn transition_two_friends_half() {
        // Enumerating the 8 on/off patterns of owner and two friends:
        // X = 0 w.p. 0.5 + 0.5 * 0.25, X = 1 w.p. 0.5 * 2 * 0.25, X = 2 w.p. 0.5 * 0.25.
        let next = transition(&ReplicaDistribution::initial(2), 0.5, TransitionRule::Exact);
        assert!(close(next.prob(1), 0.625, 1e-15));
        assert!(close(next.prob(2), 0.25, 1e-15));
        assert!(close(next.prob(3), 0.125, 1e-15));
    }

    #[test]
    fn availability_examples() {
        let d = ReplicaDistribution::from_probs(vec![0.625, 0.25, 0.125]);
        assert_eq!(availability_at(&d, 0.0), 0.0);
        assert!(close(availability_at(&d, 0.5), 0.609375, 1e-15));
        let full = ReplicaDistribution::point_mass(6, 7);
        assert!(close(availability_at(&full, 0.2), converged_bound(6, 0.2), 1e-15));
    }

    #[test]
    fn always_online_is_fully_available() {
        for n in [0, 1, 7, 40] {
            let p = AnalyticParams::constant(n, 1.0, 72).unwrap();
            assert_eq!(average_availability(&p), 1.0);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(
            AnalyticParams::new(3, vec![0.2, 1.2]),
            Err(AnalyticError::InvalidAlpha { bin: 1, .. })
        ));
        assert!(matches!(AnalyticParams::new(3, vec![]), Err(AnalyticError::NoBins)));
        let p = AnalyticParams::constant(3, 0.2, 4).unwrap();
        assert!(matches!(monte_carlo(&p, 0, 1), Err(AnalyticError::NoRuns)));
    }

    #[test]
    fn distributions_stay_normalized_and_grow() {
        for rule in [TransitionRule::Exact, TransitionRule::ShiftedFriendCount] {
            for n in [0, 1, 5, 22, 100] {
                for a in [0.01, 0.2, 0.7] {
                    let p = AnalyticParams::constant(n, a, 72).unwrap();
                    let ds = distributions(&p, rule);
                    for w in ds.windows(2) {
                        let s: f64 = w[1].probs().iter().sum();
                        assert!(close(s, 1.0, 1e-12), "sum {s}");
                        assert!(w[1].probs().iter().all(|&x| x >= 0.0));
                        for k in 1..=n + 1 {
                            assert!(w[1].cdf(k) <= w[0].cdf(k) + 1e-12);
                        }
                    }
                    for (d, &a) in ds.iter().zip(p.alpha()) {
                        assert!(availability_at(d, a) <= converged_bound(n, a) + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_rule_stops_at_n() {
        let p = AnalyticParams::constant(4, 0.9, 200).unwrap();
        let last = distributions(&p, TransitionRule::ShiftedFriendCount).pop().unwrap();
        assert!(close(last.prob(4), 1.0, 1e-9));
        assert_eq!(last.prob(5), 0.0);
    }

    #[test]
    fn converges_to_full_replication() {
        let p = AnalyticParams::constant(10, 0.3, 2000).unwrap();
        let trace = availability_trace(&p, TransitionRule::Exact);
        assert!(close(*trace.last().unwrap(), converged_bound(10, 0.3), 1e-12));
    }

    #[test]
    fn monte_carlo_trivial_cases() {
        let p = AnalyticParams::constant(4, 0.0, 10).unwrap();
        let mc = monte_carlo(&p, 1000, 3).unwrap();
        assert!(mc.per_bin_mean.iter().all(|&v| v == 0.0));
        assert_eq!(mc.average_mean, 0.0);
        // One bin: only the owner can serve, so P(A) = alpha.
        let p = AnalyticParams::constant(2, 0.5, 1).unwrap();
        let mc = monte_carlo(&p, 200_000, 4).unwrap();
        assert!((mc.per_bin_mean[0] - 0.5).abs() <= 3.0 * (0.25f64 / 200_000.0).sqrt());
    }

    #[test]
    fn monte_carlo_thread_independent() {
        let p = AnalyticParams::constant(22, 0.1, 72).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| monte_carlo(&p, 20_000, 9).unwrap());
        let b = four.install(|| monte_carlo(&p, 20_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_consistency_and_monotonicity() {
        let degrees = [1, 2, 6, 10, 22, 30, 50];
        let alphas = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8];
        let rows = degree_sweep(&degrees, &alphas, 72).unwrap();
        assert_eq!(rows.len(), degrees.len() * alphas.len());
        let cell = |d: usize, a: f64| {
            rows.iter()
                .find(|r| r.degree == d && r.alpha == a)
                .unwrap()
                .avg_availability
        };
        let direct = average_availability(&AnalyticParams::constant(6, 0.2, 72).unwrap());
        assert_eq!(cell(6, 0.2), direct);
        for &a in &alphas {
            for w in degrees.windows(2) {
                assert!(cell(w[1], a) >= cell(w[0], a));
            }
        }
        for &d in &degrees {
            for w in alphas.windows(2) {
                assert!(cell(d, w[1]) >= cell(d, w[0]));
            }
        }
        assert!(rows.iter().all(|r| r.converged_bound == converged_bound(r.degree, r.alpha)));
    }
}
