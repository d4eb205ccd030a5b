use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use friendrep::analytic::{self, AnalyticParams};
use friendrep::graphgen::{self, DegreeSampler, Graph, RealizationReport};
use friendrep::repsim::{self, AvailabilityRecord, Metric, Report, Scheme};
use friendrep::seed;
use friendrep::sessiongen::{self, PresenceSet};
use friendrep::stats;
use friendrep::timeline::MeasurementWindow;
use log::{info, warn};

use crate::config::{Config, GraphSource, SessionSource};
use crate::error::{output, CliError};

pub struct Context {
    pub config: Config,
    pub seed: u64,
    pub out_dir: PathBuf,
    digest: String,
}

impl Context {
    pub fn new(config: Config) -> Context {
        Context {
            seed: config.experiment.seed,
            out_dir: config.out_dir(),
            digest: config.digest(),
            config,
        }
    }

    /// `#` lines at the top of every output file.
    fn metadata(&self, extra: &[String]) -> Vec<String> {
        let mut m = vec![
            format!("friendrep {}", env!("CARGO_PKG_VERSION")),
            format!("seed={}", self.seed),
            format!("config_sha256={}", self.digest),
        ];
        m.extend_from_slice(extra);
        m
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn prepare_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(output(&self.out_dir))
    }

    fn create(&self, name: &str) -> Result<(File, PathBuf), CliError> {
        let path = self.path(name);
        let f = File::create(&path).map_err(output(&path))?;
        Ok((f, path))
    }
}

struct BuiltGraph {
    graph: Graph,
    describe: String,
    realization: Option<RealizationReport>,
    extra: Vec<String>,
}

fn build_graph(ctx: &Context) -> Result<BuiltGraph, CliError> {
    match ctx.config.graph_source()? {
        GraphSource::File(path) => {
            let graph = graphgen::load_graph(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(BuiltGraph {
                graph,
                describe: format!("file {}", path.display()),
                realization: None,
                extra: Vec::new(),
            })
        }
        GraphSource::Generate { spec, n_nodes } => {
            let mut rng = seed::stream(ctx.seed, "graph", 0);
            let degrees = graphgen::sample_degrees(spec, n_nodes, &mut rng)?;
            let (graph, report) = graphgen::realize_graph(&degrees, &mut rng)?;
            if !graph.is_simple_symmetric() {
                return Err(CliError::Internal("realized graph is not simple".into()));
            }
            let mut extra = Vec::new();
            if let Some(s) = DegreeSampler::new(spec, n_nodes)?.powerlaw_support() {
                extra.push(format!(
                    "powerlaw_support k_min={} k_max={} mean={}",
                    s.k_min, s.k_max, s.mean
                ));
            }
            Ok(BuiltGraph {
                graph,
                describe: format!("{spec} n_nodes={n_nodes}"),
                realization: Some(report),
                extra,
            })
        }
    }
}

enum BuiltSessions {
    Generated(sessiongen::Generated),
    Loaded(PresenceSet),
}

impl BuiltSessions {
    fn presence(&self) -> &PresenceSet {
        match self {
            BuiltSessions::Generated(g) => &g.presence,
            BuiltSessions::Loaded(p) => p,
        }
    }
}

fn build_sessions(ctx: &Context, n_users: usize) -> Result<(BuiltSessions, String), CliError> {
    match ctx.config.session_source()? {
        SessionSource::Generate(model) => {
            let mut rng = seed::stream(ctx.seed, "sessions", 0);
            let g = sessiongen::generate(&model, n_users, &mut rng)?;
            let describe = format!(
                "weibull({}, {}) sessions_per_day={} min_duration_s={} always_on_fraction={} days={}",
                model.duration_shape,
                model.duration_scale,
                model.sessions_per_day,
                model.min_duration,
                model.always_on_fraction,
                model.days
            );
            Ok((BuiltSessions::Generated(g), describe))
        }
        SessionSource::File { path, days } => {
            let window = MeasurementWindow::days(days)
                .map_err(|e| CliError::Config(format!("sessions.days: {e}")))?;
            let p = sessiongen::load_sessions(&path, window, Some(n_users))
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if p.n_users() > n_users {
                return Err(CliError::Input(format!(
                    "{}: user id {} out of range for a graph of {n_users} nodes",
                    path.display(),
                    p.n_users() - 1
                )));
            }
            Ok((BuiltSessions::Loaded(p), format!("file {}", path.display())))
        }
    }
}

pub fn graph(ctx: &Context) -> Result<(), CliError> {
    let built = build_graph(ctx)?;
    ctx.prepare_out_dir()?;
    let mut meta = ctx.metadata(&[format!("graph {}", built.describe)]);
    meta.extend(built.extra.iter().cloned());
    if let Some(r) = &built.realization {
        meta.push(format!(
            "requested_stubs={} self_loops_removed={} multi_edges_removed={} stub_loss_fraction={}",
            r.requested_stubs,
            r.self_loops_removed,
            r.multi_edges_removed,
            r.stub_loss_fraction()
        ));
    }
    let path = ctx.path("graph.txt");
    graphgen::save_graph(&built.graph, &path, &meta).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;

    let stats = graphgen::degree_stats(&built.graph);
    let (f, spath) = ctx.create("degree_stats.csv")?;
    write_degree_stats(f, &meta, &stats, built.realization.as_ref()).map_err(output(&spath))?;
    let (f, cpath) = ctx.create("degree_ccdf.csv")?;
    write_ccdf(f, &meta, &stats).map_err(output(&cpath))?;

    println!(
        "graph: {} nodes, {} edges, mean degree {:.3} -> {}",
        stats.n_nodes,
        stats.n_edges,
        stats.mean,
        path.display()
    );
    if let Some(r) = &built.realization {
        if r.stub_loss_fraction() > 0.01 {
            warn!("configuration model discarded {:.2}% of stubs", 100.0 * r.stub_loss_fraction());
        }
    }
    Ok(())
}

fn write_degree_stats(
    f: File,
    meta: &[String],
    s: &graphgen::DegreeStats,
    r: Option<&RealizationReport>,
) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(f);
    for line in meta {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "statistic,value")?;
    writeln!(out, "n_nodes,{}", s.n_nodes)?;
    writeln!(out, "n_edges,{}", s.n_edges)?;
    writeln!(out, "min,{}", s.min)?;
    writeln!(out, "max,{}", s.max)?;
    writeln!(out, "mean,{}", s.mean)?;
    for (q, d) in &s.quantiles {
        writeln!(out, "q{:02},{d}", (q * 100.0).round() as u32)?;
    }
    if let Some(r) = r {
        writeln!(out, "requested_stubs,{}", r.requested_stubs)?;
        writeln!(out, "self_loops_removed,{}", r.self_loops_removed)?;
        writeln!(out, "multi_edges_removed,{}", r.multi_edges_removed)?;
        writeln!(out, "stub_loss_fraction,{}", r.stub_loss_fraction())?;
        writeln!(out, "mean_abs_deviation,{}", r.mean_abs_deviation)?;
    }
    out.flush()
}

fn write_ccdf(f: File, meta: &[String], s: &graphgen::DegreeStats) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(f);
    for line in meta {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "degree,ccdf")?;
    for (d, c) in &s.ccdf {
        writeln!(out, "{d},{c}")?;
    }
    out.flush()
}

/// Number of users the sessions are generated for: the graph's node count.
fn n_users(ctx: &Context) -> Result<usize, CliError> {
    match ctx.config.graph_source()? {
        GraphSource::Generate { n_nodes, .. } => Ok(n_nodes),
        GraphSource::File(_) => Ok(build_graph(ctx)?.graph.n_nodes()),
    }
}

pub fn sessions(ctx: &Context) -> Result<(), CliError> {
    let n = n_users(ctx)?;
    let (built, describe) = build_sessions(ctx, n)?;
    ctx.prepare_out_dir()?;
    let meta = ctx.metadata(&[format!("sessions {describe}"), format!("n_users={n}")]);
    let (f, path) = ctx.create("sessions.csv")?;
    match &built {
        BuiltSessions::Generated(g) => {
            sessiongen::write_generated(g, f, &meta).map_err(output(&path))?;
            println!(
                "sessions: {} dynamic sessions ({} clamped to the minimum), {} always-on users -> {}",
                g.sessions.len(),
                g.clamped_count(),
                g.presence.always_on().len(),
                path.display()
            );
        }
        BuiltSessions::Loaded(p) => {
            sessiongen::write_sessions(p, f, &meta).map_err(output(&path))?;
            println!("sessions: {} users -> {}", p.n_users(), path.display());
        }
    }
    let p = built.presence();
    info!(
        "{} users never online, mean online fraction {:.4}",
        p.never_online(),
        (0..p.n_users()).map(|u| p.online_fraction(u)).sum::<f64>() / p.n_users() as f64
    );
    Ok(())
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let schemes = ctx.config.schemes()?;
    let metrics = ctx.config.metrics()?;
    let g = build_graph(ctx)?;
    let (s, sdesc) = build_sessions(ctx, g.graph.n_nodes())?;
    let presence = s.presence();
    let window = presence.window();
    let day_breakdown = ctx.config.experiment.day_breakdown;
    let records = repsim::run_experiment(&g.graph, presence, &schemes, &metrics, &window, day_breakdown);
    let expected = g.graph.n_nodes() * schemes.len() * metrics.len();
    if records.len() != expected {
        return Err(CliError::Internal(format!(
            "expected {expected} availability records, got {}",
            records.len()
        )));
    }
    if let Some(r) = records
        .iter()
        .find(|r| r.availability.is_some_and(|v| !(0.0..=1.0).contains(&v)))
    {
        return Err(CliError::Internal(format!(
            "availability {:?} out of [0, 1] for user {}",
            r.availability, r.user
        )));
    }
    let report = repsim::report(&records, ctx.config.experiment.exclude_never_online);

    ctx.prepare_out_dir()?;
    let meta = ctx.metadata(&[
        format!("graph {}", g.describe),
        format!("sessions {sdesc}"),
        format!("window_s={}", window.len()),
    ]);
    let (f, path) = ctx.create("results.csv")?;
    repsim::write_results(&records, f, &meta).map_err(output(&path))?;
    if day_breakdown {
        let (f, dpath) = ctx.create("daily.csv")?;
        repsim::write_daily(&records, f, &meta).map_err(output(&dpath))?;
    }
    write_report(ctx, &report, &meta)?;
    print_medians(&report);
    println!("results -> {}", path.display());
    Ok(())
}

fn write_report(ctx: &Context, report: &Report, meta: &[String]) -> Result<(), CliError> {
    let (f, path) = ctx.create("cdf.csv")?;
    repsim::write_cdf(report, f, meta).map_err(output(&path))?;
    let (f, path) = ctx.create("summary.csv")?;
    repsim::write_summary(report, f, meta).map_err(output(&path))?;
    if report.summaries.iter().any(|s| s.day.is_some()) {
        let (f, path) = ctx.create("daily_cdf.csv")?;
        repsim::write_daily_cdf(report, f, meta).map_err(output(&path))?;
    }
    Ok(())
}

fn print_medians(report: &Report) {
    for s in report.summaries.iter().filter(|s| s.day.is_none()) {
        let med = s.median().map_or("n/a".to_string(), |m| format!("{m:.4}"));
        println!(
            "{}/{}: median {med}, {:.2}% at zero, {} users ({} excluded, {} undefined)",
            s.scheme,
            s.metric,
            100.0 * s.frac_zero,
            s.n_users,
            s.n_excluded,
            s.n_undefined
        );
    }
}

/// Rebuilds the CDF and summary files from saved per-user results.
pub fn report(ctx: &Context, results: Option<&Path>, daily: Option<&Path>) -> Result<(), CliError> {
    let results = results.map_or_else(|| ctx.path("results.csv"), Path::to_path_buf);
    let mut records = read_results(&results)?;
    if let Some(daily) = daily {
        attach_daily(&mut records, daily)?;
    }
    let exclude = ctx.config.experiment.exclude_never_online;
    let mut online: BTreeMap<usize, f64> = BTreeMap::new();
    for r in records.values() {
        if r.scheme == Scheme::R0 && r.metric == Metric::M1 {
            online.insert(r.user, r.availability.unwrap_or(0.0));
        }
    }
    let mut records: Vec<AvailabilityRecord> = records.into_values().collect();
    if exclude {
        for r in &mut records {
            r.online_fraction = *online.get(&r.user).ok_or_else(|| {
                CliError::Input(format!(
                    "{}: excluding never-online users needs R0/M1 rows, none for user {}",
                    results.display(),
                    r.user
                ))
            })?;
        }
    }
    let report = repsim::report(&records, exclude);
    ctx.prepare_out_dir()?;
    let meta = ctx.metadata(&[format!("report from {}", results.display())]);
    write_report(ctx, &report, &meta)?;
    print_medians(&report);
    Ok(())
}

type RecordKey = (usize, Scheme, Metric);

fn data_lines(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !seen_header {
            if t != header {
                return Err(CliError::Input(format!(
                    "{}:{}: expected header {header:?}",
                    path.display(),
                    i + 1
                )));
            }
            seen_header = true;
            continue;
        }
        rows.push((i + 1, t.split(',').map(|s| s.trim().to_string()).collect()));
    }
    if !seen_header {
        return Err(CliError::Input(format!("{}: missing header {header:?}", path.display())));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Input(format!("{}:{line}: bad {name} {v:?}", path.display())))
}

fn availability_field(path: &Path, line: usize, v: &str, defined: &str) -> Result<Option<f64>, CliError> {
    match defined {
        "0" => Ok(None),
        "1" => {
            let a: f64 = field(path, line, "availability", v)?;
            if !(0.0..=1.0).contains(&a) {
                return Err(CliError::Input(format!("{}:{line}: availability {a} outside [0, 1]", path.display())));
            }
            Ok(Some(a))
        }
        other => Err(CliError::Input(format!("{}:{line}: bad defined flag {other:?}", path.display()))),
    }
}

fn read_results(path: &Path) -> Result<BTreeMap<RecordKey, AvailabilityRecord>, CliError> {
    let mut out = BTreeMap::new();
    for (line, f) in data_lines(path, repsim::RESULTS_HEADER)? {
        if f.len() != 6 {
            return Err(CliError::Input(format!("{}:{line}: expected 6 fields", path.display())));
        }
        let scheme: Scheme = f[2].parse().map_err(|e: String| CliError::Input(format!("{}:{line}: {e}", path.display())))?;
        let metric: Metric = f[3].parse().map_err(|e: String| CliError::Input(format!("{}:{line}: {e}", path.display())))?;
        let rec = AvailabilityRecord {
            user: field(path, line, "user", &f[0])?,
            degree: field(path, line, "degree", &f[1])?,
            scheme,
            metric,
            availability: availability_field(path, line, &f[4], &f[5])?,
            per_day: Vec::new(),
            online_fraction: 1.0,
        };
        if out.insert((rec.user, scheme, metric), rec).is_some() {
            return Err(CliError::Input(format!("{}:{line}: duplicate row", path.display())));
        }
    }
    Ok(out)
}

fn attach_daily(records: &mut BTreeMap<RecordKey, AvailabilityRecord>, path: &Path) -> Result<(), CliError> {
    for (line, f) in data_lines(path, repsim::DAILY_HEADER)? {
        if f.len() != 7 {
            return Err(CliError::Input(format!("{}:{line}: expected 7 fields", path.display())));
        }
        let user: usize = field(path, line, "user", &f[0])?;
        let scheme: Scheme = f[2].parse().map_err(|e: String| CliError::Input(format!("{}:{line}: {e}", path.display())))?;
        let metric: Metric = f[3].parse().map_err(|e: String| CliError::Input(format!("{}:{line}: {e}", path.display())))?;
        let day: usize = field(path, line, "day", &f[4])?;
        let value = availability_field(path, line, &f[5], &f[6])?;
        let rec = records.get_mut(&(user, scheme, metric)).ok_or_else(|| {
            CliError::Input(format!("{}:{line}: no matching row in the results file", path.display()))
        })?;
        if day != rec.per_day.len() + 1 {
            return Err(CliError::Input(format!("{}:{line}: day {day} out of order", path.display())));
        }
        rec.per_day.push(value);
    }
    Ok(())
}

pub fn analytic(ctx: &Context) -> Result<(), CliError> {
    let a = &ctx.config.analytic;
    let rule = ctx.config.rule()?;
    if a.bins == 0 {
        return Err(CliError::Config("analytic.bins must be at least 1".into()));
    }
    if a.degrees.is_empty() || a.alphas.is_empty() {
        return Err(CliError::Config("analytic.degrees and analytic.alphas must not be empty".into()));
    }
    for &alpha in a.alphas.iter().chain(&a.mc_alphas) {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CliError::Config(format!("analytic.alphas: {alpha} outside [0, 1]")));
        }
    }
    let mut rows = analytic::degree_sweep(&a.degrees, &a.alphas, a.bins)
        .map_err(|e| CliError::Config(format!("analytic: {e}")))?;
    if rule != analytic::TransitionRule::Exact {
        for r in &mut rows {
            let p = AnalyticParams::constant(r.degree, r.alpha, a.bins).expect("validated above");
            r.avg_availability = analytic::average_availability_with(&p, rule);
        }
    }
    ctx.prepare_out_dir()?;
    let meta = ctx.metadata(&[format!("analytic bins={} rule={}", a.bins, a.rule)]);
    let (f, path) = ctx.create("sweep.csv")?;
    analytic::write_sweep(&rows, f, &meta).map_err(output(&path))?;
    println!("sweep: {} cells -> {}", rows.len(), path.display());

    if a.mc_runs > 0 {
        for &alpha in &a.mc_alphas {
            let params = AnalyticParams::constant(a.mc_degree, alpha, a.bins)
                .map_err(|e| CliError::Config(format!("analytic: {e}")))?;
            let trace = analytic::availability_trace(&params, rule);
            let mc_seed = seed::derive_seed(ctx.seed, "analytic/monte-carlo", alpha.to_bits());
            let mc = analytic::monte_carlo(&params, a.mc_runs, mc_seed)
                .map_err(|e| CliError::Config(format!("analytic: {e}")))?;
            let name = format!("trace_n{}_a{alpha}.csv", a.mc_degree);
            let meta = ctx.metadata(&[format!(
                "analytic trace degree={} alpha={alpha} bins={} rule={} mc_runs={}",
                a.mc_degree, a.bins, a.rule, a.mc_runs
            )]);
            let (f, path) = ctx.create(&name)?;
            analytic::write_trace(&trace, &mc, f, &meta).map_err(output(&path))?;
            let avg = trace.iter().sum::<f64>() / trace.len() as f64;
            println!(
                "trace n={} alpha={alpha}: analytic {avg:.4}, monte-carlo {:.4} +/- {:.4} -> {}",
                a.mc_degree,
                mc.average_mean,
                mc.average_stderr,
                path.display()
            );
        }
    }
    Ok(())
}

pub fn fit(ctx: &Context, samples: &[PathBuf]) -> Result<(), CliError> {
    if samples.is_empty() {
        return Err(CliError::Config("fit needs at least one samples file".into()));
    }
    let mut fits = Vec::new();
    for path in samples {
        let values = read_samples(path)?;
        let fitted = stats::weibull_mle(&values)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        println!(
            "{name}: shape {:.4}, scale {:.2}, n {}, KS D {:.4} (5% critical {:.4})",
            fitted.shape,
            fitted.scale,
            fitted.n_samples,
            fitted.ks_statistic,
            fitted.ks_critical()
        );
        fits.push((name, fitted));
    }
    ctx.prepare_out_dir()?;
    let meta = ctx.metadata(&[]);
    let (f, path) = ctx.create("fit.csv")?;
    write_fits(f, &meta, &fits).map_err(output(&path))?;
    Ok(())
}

fn write_fits(f: File, meta: &[String], fits: &[(String, stats::FittedWeibull)]) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(f);
    for line in meta {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "dataset,shape,scale,n,ks_D")?;
    for (name, w) in fits {
        writeln!(out, "{name},{},{},{},{}", w.shape, w.scale, w.n_samples, w.ks_statistic)?;
    }
    out.flush()
}

/// One positive duration per line; blank lines and `#` comments are skipped.
fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = field(path, i + 1, "sample", t)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Input(format!(
                "{}:{}: durations must be positive, got {v}",
                path.display(),
                i + 1
            )));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Input(format!("{}: no samples", path.display())));
    }
    Ok(values)
}
