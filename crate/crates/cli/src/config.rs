//! Experiment configuration file.
//!
//! TOML with four optional sections; unknown keys are rejected.
//!
//! ```toml
//! [experiment]
//! seed = 42
//! out_dir = "out"
//! schemes = ["R0", "R1", "R2"]
//! metrics = ["M1", "M2"]
//! exclude_never_online = true
//! day_breakdown = false
//!
//! [graph]
//! kind = "weibull"        # weibull | powerlaw | regular | file
//! n_nodes = 10000
//!
//! [sessions]
//! model = "facebook"      # facebook | radius | custom | file
//! days = 1
//! always_on_fraction = 0.0
//!
//! [analytic]
//! degrees = [1, 2, 6, 10, 22, 30]
//! alphas = [0.1, 0.2, 0.3]
//! ```

use std::path::{Path, PathBuf};

use friendrep::analytic::TransitionRule;
use friendrep::graphgen::DegreeSpec;
use friendrep::repsim::{Metric, Scheme};
use friendrep::sessiongen::{self, DayProfile, SessionModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub sessions: SessionsSection,
    #[serde(default)]
    pub analytic: AnalyticSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub schemes: Vec<String>,
    pub metrics: Vec<String>,
    pub exclude_never_online: bool,
    pub day_breakdown: bool,
    pub threads: Option<usize>,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment {
            seed: 0,
            out_dir: None,
            schemes: vec!["R0".into(), "R1".into(), "R2".into()],
            metrics: vec!["M1".into(), "M2".into()],
            exclude_never_online: true,
            day_breakdown: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub kind: String,
    pub n_nodes: usize,
    pub shape: Option<f64>,
    pub scale: Option<f64>,
    pub exponent: Option<f64>,
    pub target_mean: Option<f64>,
    pub degree: Option<usize>,
    pub max_degree: Option<usize>,
    pub path: Option<PathBuf>,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            kind: "weibull".into(),
            n_nodes: 10_000,
            shape: None,
            scale: None,
            exponent: None,
            target_mean: None,
            degree: None,
            max_degree: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionsSection {
    pub model: String,
    pub days: u32,
    pub always_on_fraction: f64,
    pub duration_shape: Option<f64>,
    pub duration_scale: Option<f64>,
    pub sessions_per_day: Option<f64>,
    pub min_duration_s: Option<f64>,
    /// `uniform` or `cosine`; the preset's own profile when absent.
    pub profile: Option<String>,
    pub profile_low: Option<f64>,
    pub profile_high: Option<f64>,
    /// File of 72 per-bin weights, one per line.
    pub profile_path: Option<PathBuf>,
    pub path: Option<PathBuf>,
}

impl Default for SessionsSection {
    fn default() -> Self {
        SessionsSection {
            model: "facebook".into(),
            days: 1,
            always_on_fraction: 0.0,
            duration_shape: None,
            duration_scale: None,
            sessions_per_day: None,
            min_duration_s: None,
            profile: None,
            profile_low: None,
            profile_high: None,
            profile_path: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticSection {
    pub degrees: Vec<usize>,
    pub alphas: Vec<f64>,
    pub bins: usize,
    pub rule: String,
    /// Monte-Carlo runs per trace; 0 skips the traces.
    pub mc_runs: usize,
    pub mc_degree: usize,
    pub mc_alphas: Vec<f64>,
}

impl Default for AnalyticSection {
    fn default() -> Self {
        AnalyticSection {
            degrees: vec![0, 1, 2, 4, 6, 8, 10, 15, 22, 30, 50, 100],
            alphas: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
            bins: friendrep::analytic::DEFAULT_BINS,
            rule: "exact".into(),
            mc_runs: 100_000,
            mc_degree: 22,
            mc_alphas: vec![0.05, 0.1, 0.2, 0.3, 0.5],
        }
    }
}

/// How the graph is obtained.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Generate { spec: DegreeSpec, n_nodes: usize },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum SessionSource {
    Generate(SessionModel),
    File { path: PathBuf, days: u32 },
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical form of every setting that affects results.
    /// The output directory and thread count are left out.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.experiment.out_dir = None;
        c.experiment.threads = None;
        let canonical = toml::to_string(&c).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.experiment
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>, CliError> {
        parse_list("experiment.schemes", &self.experiment.schemes)
    }

    pub fn metrics(&self) -> Result<Vec<Metric>, CliError> {
        parse_list("experiment.metrics", &self.experiment.metrics)
    }

    pub fn graph_source(&self) -> Result<GraphSource, CliError> {
        let g = &self.graph;
        let spec = match g.kind.as_str() {
            "file" => return Ok(GraphSource::File(existing("graph.path", g.path.as_ref())?)),
            "weibull" => DegreeSpec::weibull(g.shape.unwrap_or(0.9), g.scale.unwrap_or(22.5)),
            "powerlaw" => {
                DegreeSpec::powerlaw(g.exponent.unwrap_or(2.25), g.target_mean.unwrap_or(41.0))
            }
            "regular" => DegreeSpec::regular(g.degree.ok_or_else(|| {
                CliError::Config("graph.degree is required for kind = \"regular\"".into())
            })?),
            other => {
                return Err(CliError::Config(format!(
                    "graph.kind: unknown kind {other:?} (expected weibull, powerlaw, regular or file)"
                )))
            }
        };
        let spec = match g.max_degree {
            Some(m) => spec.with_max_degree(m),
            None => spec,
        };
        spec.validate()
            .map_err(|e| CliError::Config(format!("graph: {e}")))?;
        if g.n_nodes == 0 {
            return Err(CliError::Config("graph.n_nodes must be at least 1".into()));
        }
        Ok(GraphSource::Generate {
            spec,
            n_nodes: g.n_nodes,
        })
    }

    pub fn session_source(&self) -> Result<SessionSource, CliError> {
        let s = &self.sessions;
        if s.days == 0 {
            return Err(CliError::Config("sessions.days must be at least 1".into()));
        }
        let mut model = match s.model.as_str() {
            "file" => {
                return Ok(SessionSource::File {
                    path: existing("sessions.path", s.path.as_ref())?,
                    days: s.days,
                })
            }
            "facebook" => SessionModel::facebook(s.days),
            "radius" => SessionModel::radius(s.days),
            "custom" => {
                let need = |key: &str, v: Option<f64>| {
                    v.ok_or_else(|| {
                        CliError::Config(format!("sessions.{key} is required for model = \"custom\""))
                    })
                };
                SessionModel {
                    duration_shape: need("duration_shape", s.duration_shape)?,
                    duration_scale: need("duration_scale", s.duration_scale)?,
                    sessions_per_day: need("sessions_per_day", s.sessions_per_day)?,
                    min_duration: 5.0,
                    always_on_fraction: 0.0,
                    day_profile: DayProfile::uniform(),
                    days: s.days,
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "sessions.model: unknown model {other:?} (expected facebook, radius, custom or file)"
                )))
            }
        };
        if let Some(v) = s.duration_shape {
            model.duration_shape = v;
        }
        if let Some(v) = s.duration_scale {
            model.duration_scale = v;
        }
        if let Some(v) = s.sessions_per_day {
            model.sessions_per_day = v;
        }
        if let Some(v) = s.min_duration_s {
            model.min_duration = v;
        }
        model.always_on_fraction = s.always_on_fraction;
        if let Some(path) = &s.profile_path {
            if s.profile.is_some() {
                return Err(CliError::Config(
                    "sessions.profile and sessions.profile_path are mutually exclusive".into(),
                ));
            }
            let path = existing("sessions.profile_path", Some(path))?;
            model.day_profile = DayProfile::load(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
        match s.profile.as_deref() {
            None => {}
            Some("uniform") => model.day_profile = DayProfile::uniform(),
            Some("cosine") => {
                let low = s.profile_low.unwrap_or(0.97);
                let high = s.profile_high.unwrap_or(low);
                model.day_profile = sessiongen::default_profile(low, high)
                    .map_err(|e| CliError::Config(format!("sessions.profile_low/profile_high: {e}")))?;
            }
            Some(other) => {
                return Err(CliError::Config(format!(
                    "sessions.profile: unknown profile {other:?} (expected uniform or cosine)"
                )))
            }
        }
        model
            .validate()
            .map_err(|e| CliError::Config(format!("sessions: {e}")))?;
        Ok(SessionSource::Generate(model))
    }

    pub fn rule(&self) -> Result<TransitionRule, CliError> {
        match self.analytic.rule.as_str() {
            "exact" => Ok(TransitionRule::Exact),
            "shifted" => Ok(TransitionRule::ShiftedFriendCount),
            other => Err(CliError::Config(format!(
                "analytic.rule: unknown rule {other:?} (expected exact or shifted)"
            ))),
        }
    }
}

fn parse_list<T: std::str::FromStr<Err = String>>(key: &str, items: &[String]) -> Result<Vec<T>, CliError> {
    if items.is_empty() {
        return Err(CliError::Config(format!("{key} must not be empty")));
    }
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        out.push(item.parse().map_err(|e| CliError::Config(format!("{key}: {e}")))?);
    }
    Ok(out)
}

fn existing(key: &str, path: Option<&PathBuf>) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| CliError::Config(format!("{key} is required")))?;
    if !path.exists() {
        return Err(CliError::Config(format!("{key}: {} does not exist", path.display())));
    }
    Ok(path.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.graph.n_nodes, 10_000);
        assert_eq!(c.schemes().unwrap(), vec![Scheme::R0, Scheme::R1, Scheme::R2]);
        assert!(matches!(c.graph_source().unwrap(), GraphSource::Generate { .. }));
        assert!(matches!(c.session_source().unwrap(), SessionSource::Generate(_)));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = Config::parse("[graph]\nnodes = 5\n").unwrap_err();
        assert!(err.to_string().contains("nodes"), "{err}");
        assert!(Config::parse("[graphs]\n").is_err());
    }

    #[test]
    fn invalid_spec_names_key() {
        let c = Config::parse("[graph]\nkind = \"weibull\"\nshape = -1.0\n").unwrap();
        assert!(c.graph_source().unwrap_err().to_string().contains("shape"));
        let c = Config::parse("[sessions]\nalways_on_fraction = 1.5\n").unwrap();
        assert!(c.session_source().unwrap_err().to_string().contains("always_on_fraction"));
        let c = Config::parse("[experiment]\nschemes = [\"R3\"]\n").unwrap();
        assert!(c.schemes().unwrap_err().to_string().contains("experiment.schemes"));
    }

    #[test]
    fn digest_ignores_out_dir_and_threads() {
        let a = Config::parse("[experiment]\nseed = 3\nout_dir = \"a\"\nthreads = 1\n").unwrap();
        let b = Config::parse("[experiment]\nseed = 3\nout_dir = \"b\"\n").unwrap();
        let c = Config::parse("[experiment]\nseed = 4\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn overrides_apply_to_presets() {
        let c = Config::parse("[sessions]\nmodel = \"radius\"\nsessions_per_day = 3.0\nprofile = \"uniform\"\n").unwrap();
        let SessionSource::Generate(m) = c.session_source().unwrap() else { panic!() };
        assert_eq!(m.sessions_per_day, 3.0);
        assert_eq!(m.duration_shape, 0.35);
        assert_eq!(m.day_profile, DayProfile::uniform());
    }
}
