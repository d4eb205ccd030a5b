//! Synthetic social graphs with prescribed degree distributions.
//!
//! Degrees are drawn i.i.d. from a [`DegreeSpec`] and realized with the
//! erased configuration model: stubs are matched uniformly at random, then
//! self-loops and duplicate edges are dropped. The loss is measured and
//! returned in a [`RealizationReport`] rather than corrected by rewiring.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid degree spec: {key} {reason}")]
    InvalidSpec { key: &'static str, reason: String },
    #[error("no power-law support on [1, {cap}] reaches mean {target} within 1% (closest {closest:.3})")]
    Unreachable { target: f64, cap: usize, closest: f64 },
    #[error("need at least one node")]
    NoNodes,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge ({u}, {v}) is invalid: {reason}")]
    BadEdge { u: usize, v: usize, reason: &'static str },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeKind {
    Weibull { shape: f64, scale: f64 },
    PowerLaw { exponent: f64, target_mean: f64 },
    Regular { degree: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeSpec {
    pub kind: DegreeKind,
    pub max_degree: Option<usize>,
}

impl DegreeSpec {
    pub fn weibull(shape: f64, scale: f64) -> Self {
        DegreeSpec {
            kind: DegreeKind::Weibull { shape, scale },
            max_degree: None,
        }
    }

    pub fn powerlaw(exponent: f64, target_mean: f64) -> Self {
        DegreeSpec {
            kind: DegreeKind::PowerLaw {
                exponent,
                target_mean,
            },
            max_degree: None,
        }
    }

    pub fn regular(degree: usize) -> Self {
        DegreeSpec {
            kind: DegreeKind::Regular { degree },
            max_degree: None,
        }
    }

    /// Degree distribution fitted to the StudiVZ friendship graph.
    pub fn studivz() -> Self {
        Self::weibull(0.9, 22.5)
    }

    /// In-degree distribution fitted to the Twitter follower graph.
    pub fn twitter() -> Self {
        Self::powerlaw(2.25, 41.0)
    }

    pub fn with_max_degree(mut self, max_degree: usize) -> Self {
        self.max_degree = Some(max_degree);
        self
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        fn positive(key: &'static str, v: f64) -> Result<(), GraphError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GraphError::InvalidSpec {
                    key,
                    reason: format!("must be a positive number, got {v}"),
                })
            }
        }
        match self.kind {
            DegreeKind::Weibull { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            DegreeKind::PowerLaw {
                exponent,
                target_mean,
            } => {
                positive("exponent", exponent)?;
                positive("target_mean", target_mean)?;
                if exponent <= 2.0 {
                    return Err(GraphError::InvalidSpec {
                        key: "exponent",
                        reason: format!("must exceed 2 for a finite mean, got {exponent}"),
                    });
                }
                if target_mean <= 1.0 {
                    return Err(GraphError::InvalidSpec {
                        key: "target_mean",
                        reason: format!("must exceed 1, got {target_mean}"),
                    });
                }
            }
            DegreeKind::Regular { degree } => {
                if degree == 0 {
                    return Err(GraphError::InvalidSpec {
                        key: "degree",
                        reason: "must be at least 1".into(),
                    });
                }
            }
        }
        if self.max_degree == Some(0) {
            return Err(GraphError::InvalidSpec {
                key: "max_degree",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for DegreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DegreeKind::Weibull { shape, scale } => write!(f, "weibull({shape}, {scale})")?,
            DegreeKind::PowerLaw {
                exponent,
                target_mean,
            } => write!(f, "powerlaw({exponent}, mean {target_mean})")?,
            DegreeKind::Regular { degree } => write!(f, "regular({degree})")?,
        }
        if let Some(m) = self.max_degree {
            write!(f, " max {m}")?;
        }
        Ok(())
    }
}

/// Integer support `[k_min, k_max]` of a truncated discrete power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerlawSupport {
    pub k_min: usize,
    pub k_max: usize,
    pub mean: f64,
}

/// Mean of `p(k) ∝ k^-exponent` on `[k_min, k_max]` by direct summation.
pub fn powerlaw_mean(exponent: f64, k_min: usize, k_max: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in k_min..=k_max {
        let w = (k as f64).powf(-exponent);
        num += k as f64 * w;
        den += w;
    }
    num / den
}

/// Finds `[k_min, k_max]` whose power-law mean is within 1% of `target_mean`.
///
/// `k_min` is the smallest value whose mean on `[k_min, cap]` reaches the
/// target (bisection; the mean grows with `k_min`). Integer steps in `k_min`
/// move the mean by roughly `(exponent - 1) / (exponent - 2)`, so `k_max` is
/// then trimmed down from `cap`, again by bisection, to land on the target.
pub fn calibrate_powerlaw_support(
    exponent: f64,
    target_mean: f64,
    cap: usize,
) -> Result<PowerlawSupport, GraphError> {
    DegreeSpec::powerlaw(exponent, target_mean).validate()?;
    if cap == 0 {
        return Err(GraphError::InvalidSpec {
            key: "max_degree",
            reason: "power-law cap must be at least 1".into(),
        });
    }
    let mean = |lo: usize, hi: usize| powerlaw_mean(exponent, lo, hi);

    let k_min = if mean(1, cap) >= target_mean {
        1
    } else {
        if (cap as f64) < target_mean {
            return Err(GraphError::Unreachable {
                target: target_mean,
                cap,
                closest: cap as f64,
            });
        }
        // mean(lo) < target <= mean(hi)
        let (mut lo, mut hi) = (1usize, cap);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if mean(mid, cap) >= target_mean {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    // Largest k_max with mean <= target, then the closer of it and its successor.
    let k_max = if mean(k_min, k_min) > target_mean {
        k_min
    } else {
        let (mut lo, mut hi) = (k_min, cap);
        if mean(k_min, cap) <= target_mean {
            lo = cap;
        } else {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if mean(k_min, mid) <= target_mean {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        if lo < cap
            && (mean(k_min, lo + 1) - target_mean).abs() < (mean(k_min, lo) - target_mean).abs()
        {
            lo + 1
        } else {
            lo
        }
    };
    let m = mean(k_min, k_max);
    if (m / target_mean - 1.0).abs() > 0.01 {
        return Err(GraphError::Unreachable {
            target: target_mean,
            cap,
            closest: m,
        });
    }
    Ok(PowerlawSupport {
        k_min,
        k_max,
        mean: m,
    })
}

/// A prepared degree distribution: sampling plus its exact discrete CDF.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    spec: DegreeSpec,
    /// Cumulative weights over `[k_min, k_max]` for the power law.
    powerlaw: Option<(PowerlawSupport, Vec<f64>)>,
}

impl DegreeSampler {
    /// `n` bounds the power-law support at `n - 1` unless `max_degree` is set.
    pub fn new(spec: DegreeSpec, n: usize) -> Result<Self, GraphError> {
        spec.validate()?;
        if n == 0 {
            return Err(GraphError::NoNodes);
        }
        let powerlaw = match spec.kind {
            DegreeKind::PowerLaw {
                exponent,
                target_mean,
            } => {
                let cap = spec.max_degree.unwrap_or(n - 1).max(1);
                let support = calibrate_powerlaw_support(exponent, target_mean, cap)?;
                let mut acc = 0.0;
                let cum = (support.k_min..=support.k_max)
                    .map(|k| {
                        acc += (k as f64).powf(-exponent);
                        acc
                    })
                    .collect::<Vec<_>>();
                let total = acc;
                let cum = cum.into_iter().map(|c| c / total).collect();
                Some((support, cum))
            }
            _ => None,
        };
        Ok(DegreeSampler { spec, powerlaw })
    }

    pub fn spec(&self) -> &DegreeSpec {
        &self.spec
    }

    pub fn powerlaw_support(&self) -> Option<PowerlawSupport> {
        self.powerlaw.as_ref().map(|(s, _)| *s)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let cap = self.spec.max_degree.unwrap_or(usize::MAX);
        match self.spec.kind {
            DegreeKind::Regular { degree } => degree.min(cap),
            DegreeKind::Weibull { shape, scale } => {
                let x = stats::weibull_sample(shape, scale, rng).round();
                // Saturating float-to-int cast; absurd tails clamp to the cap.
                (x as usize).max(1).min(cap)
            }
            DegreeKind::PowerLaw { .. } => {
                let (support, cum) = self.powerlaw.as_ref().expect("prepared in new");
                let u: f64 = rng.gen();
                let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                support.k_min + idx
            }
        }
    }

    /// `P(degree <= k)` of the discretized distribution.
    pub fn cdf(&self, k: usize) -> f64 {
        if self.spec.max_degree.is_some_and(|m| k >= m) {
            return 1.0;
        }
        match self.spec.kind {
            DegreeKind::Regular { degree } => {
                if k >= degree {
                    1.0
                } else {
                    0.0
                }
            }
            DegreeKind::Weibull { shape, scale } => {
                if k == 0 {
                    0.0
                } else {
                    stats::weibull_cdf(k as f64 + 0.5, shape, scale)
                }
            }
            DegreeKind::PowerLaw { .. } => {
                let (support, cum) = self.powerlaw.as_ref().expect("prepared in new");
                if k < support.k_min {
                    0.0
                } else if k >= support.k_max {
                    1.0
                } else {
                    cum[k - support.k_min]
                }
            }
        }
    }
}

pub fn sample_degrees<R: Rng + ?Sized>(
    spec: DegreeSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>, GraphError> {
    let sampler = DegreeSampler::new(spec, n)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

/// Simple undirected graph; `friends(u)` are the nodes that may host `u`'s data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n_nodes],
        }
    }

    /// Builds a graph from undirected edges, rejecting self-loops, duplicates
    /// (in either orientation) and out-of-range ids.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::BadEdge {
                    u,
                    v,
                    reason: "self-loop",
                });
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(GraphError::BadEdge {
                    u,
                    v,
                    reason: "node id out of range",
                });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::BadEdge {
                    u,
                    v: w[0],
                    reason: "duplicate edge",
                });
            }
        }
        Ok(Graph { adjacency })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn friends(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Each undirected edge once as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_simple_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(u, list)| {
            list.windows(2).all(|w| w[0] < w[1])
                && list
                    .iter()
                    .all(|&v| v != u && self.adjacency[v].binary_search(&u).is_ok())
        })
    }
}

/// What the erased configuration model lost relative to the request.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationReport {
    pub requested_stubs: usize,
    pub self_loops_removed: usize,
    pub multi_edges_removed: usize,
    /// Node whose degree was raised by one to make the stub count even.
    pub parity_adjusted: Option<usize>,
    pub mean_abs_deviation: f64,
}

impl RealizationReport {
    pub fn stub_loss_fraction(&self) -> f64 {
        if self.requested_stubs == 0 {
            return 0.0;
        }
        2.0 * (self.self_loops_removed + self.multi_edges_removed) as f64
            / self.requested_stubs as f64
    }
}

/// Erased configuration model.
pub fn realize_graph<R: Rng + ?Sized>(
    degrees: &[usize],
    rng: &mut R,
) -> Result<(Graph, RealizationReport), GraphError> {
    if degrees.is_empty() {
        return Err(GraphError::NoNodes);
    }
    let n = degrees.len();
    let mut requested = degrees.to_vec();
    let mut parity_adjusted = None;
    if requested.iter().sum::<usize>() % 2 == 1 {
        let u = rng.gen_range(0..n);
        requested[u] += 1;
        parity_adjusted = Some(u);
        log::info!("odd stub count: raised degree of node {u} by one");
    }
    let mut stubs: Vec<usize> = requested
        .iter()
        .enumerate()
        .flat_map(|(u, &d)| std::iter::repeat_n(u, d))
        .collect();
    stubs.shuffle(rng);

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(stubs.len() / 2);
    let mut self_loops = 0;
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v {
            self_loops += 1;
        } else {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    let multi = before - edges.len();

    let graph = Graph::from_edges(n, edges)?;
    let mad = requested
        .iter()
        .zip(graph.adjacency.iter())
        .map(|(&want, got)| (want - got.len()) as f64)
        .sum::<f64>()
        / n as f64;
    let report = RealizationReport {
        requested_stubs: stubs.len(),
        self_loops_removed: self_loops,
        multi_edges_removed: multi,
        parity_adjusted,
        mean_abs_deviation: mad,
    };
    Ok((graph, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// `(q, degree)` for q in 5/25/50/75/95 %, lower quantile convention.
    pub quantiles: Vec<(f64, usize)>,
    /// `(d, fraction of nodes with degree >= d)` for every observed degree.
    pub ccdf: Vec<(usize, f64)>,
}

pub const REPORT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let mut degrees = g.degrees();
    degrees.sort_unstable();
    let n = degrees.len();
    if n == 0 {
        return DegreeStats {
            n_nodes: 0,
            n_edges: 0,
            min: 0,
            max: 0,
            mean: 0.0,
            quantiles: Vec::new(),
            ccdf: Vec::new(),
        };
    }
    let quantiles = REPORT_QUANTILES
        .iter()
        .map(|&q| {
            let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
            (q, degrees[rank - 1])
        })
        .collect();
    let mut ccdf = Vec::new();
    let mut i = 0;
    while i < n {
        let d = degrees[i];
        ccdf.push((d, (n - i) as f64 / n as f64));
        while i < n && degrees[i] == d {
            i += 1;
        }
    }
    DegreeStats {
        n_nodes: n,
        n_edges: g.n_edges(),
        min: degrees[0],
        max: degrees[n - 1],
        mean: degrees.iter().sum::<usize>() as f64 / n as f64,
        quantiles,
        ccdf,
    }
}

/// Edge-list text format:
///
/// ```text
/// # friendrep edge list
/// # n_nodes=<N>
/// # <free-form metadata lines>
/// <u> <v>
/// ```
///
/// One undirected edge per line with `u < v`, sorted by `u` then `v`.
/// Readers skip blank lines and any other `#` line.
pub fn write_edge_list<W: Write>(g: &Graph, out: W, metadata: &[String]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# friendrep edge list")?;
    writeln!(out, "# n_nodes={}", g.n_nodes())?;
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph, GraphError> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut max_id = None;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("n_nodes=") {
                let n = v.trim().parse::<usize>().map_err(|e| GraphError::Parse {
                    line: line_no,
                    message: format!("bad n_nodes value {v:?}: {e}"),
                })?;
                declared = Some(n);
            }
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
            let tok = tok.ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            tok.parse::<usize>().map_err(|e| GraphError::Parse {
                line: line_no,
                message: format!("bad node id {tok:?}: {e}"),
            })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(GraphError::Parse {
                line: line_no,
                message: "expected exactly two node ids".into(),
            });
        }
        if u == v {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("self-loop on node {u}"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("duplicate edge {u} {v}"),
            });
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v));
    }
    let n = match (declared, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(GraphError::Parse {
                line: 0,
                message: format!("node id {m} exceeds declared n_nodes={n}"),
            })
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    Graph::from_edges(n, edges)
}

pub fn save_graph(g: &Graph, path: &Path, metadata: &[String]) -> Result<(), GraphError> {
    write_edge_list(g, File::create(path)?, metadata)?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<Graph, GraphError> {
    read_edge_list(BufReader::new(File::open(path)?))
}
