//! Experiment configuration (TOML) and its validation.
//!
//! ```toml
//! base_seed = 7
//! trials = 20
//! algos = ["mc", "lv", "baseline"]
//! n = [500, 2000]
//! k = [5]
//! clusters = ["balanced"]          # or "skewed:4", "sizes:10,5,5"
//! distributions = [{ f_plus = "0:0.1,1:0.9", f_minus = "0:0.9,1:0.1" }]
//! mc_min_success = 0.9             # gate used by `bench --check`
//!
//! [constants]
//! c = 118.0
//! c_prime = 3.0
//! scale = 0.01
//! band = "lemma"
//!
//! [output]
//! dir = "results"
//! timing = false
//! ```
//!
//! Cells are the product `n × k × clusters × distributions`, in that nesting
//! order. A `sizes:` entry fixes `k` itself, so it yields one cell per `n` and
//! distribution pair rather than one per `k`; its sizes must sum to `n`.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::divergence::Distribution;
use crate::estimation::Constants;
use crate::instance::ClusterSpec;
use crate::report::Algo;
use crate::solver_mc::{Band, McParams};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    /// Dotted location of the offending value, empty for whole-file problems.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn err<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        path: path.into(),
        message: message.into(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    base_seed: Option<u64>,
    trials: Option<i64>,
    algos: Option<Vec<String>>,
    n: Vec<i64>,
    k: Option<Vec<i64>>,
    clusters: Option<Vec<String>>,
    distributions: Vec<RawPair>,
    mc_min_success: Option<f64>,
    #[serde(default)]
    constants: RawConstants,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    f_plus: String,
    f_minus: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    c: Option<f64>,
    c_prime: Option<f64>,
    scale: Option<f64>,
    band: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    timing: Option<bool>,
}

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub k: usize,
    pub clusters: ClusterSpec,
    /// The `clusters` entry as written in the config.
    pub clusters_label: String,
    pub f_plus: Distribution,
    pub f_minus: Distribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub base_seed: u64,
    pub trials: usize,
    pub algos: Vec<Algo>,
    pub cells: Vec<Cell>,
    pub params: McParams,
    pub mc_min_success: f64,
    pub output_dir: Option<PathBuf>,
    /// Record wall time in the outputs. Off by default so repeated runs
    /// produce identical files.
    pub timing: bool,
}

/// Parses a `clusters` entry for a given `k`: `balanced`, `skewed:RATIO` or
/// `sizes:A,B,...`.
pub fn parse_cluster_spec(text: &str, k: usize) -> Result<ClusterSpec, String> {
    let text = text.trim();
    if text == "balanced" {
        return Ok(ClusterSpec::Balanced(k));
    }
    if let Some(ratio) = text.strip_prefix("skewed:") {
        let ratio: f64 = ratio
            .trim()
            .parse()
            .map_err(|e| format!("bad skew ratio `{ratio}`: {e}"))?;
        return Ok(ClusterSpec::Skewed { k, ratio });
    }
    if let Some(sizes) = text.strip_prefix("sizes:") {
        let sizes = sizes
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad size `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(ClusterSpec::ExplicitSizes(sizes));
    }
    Err(format!(
        "unknown cluster spec `{text}` (expected balanced, skewed:RATIO or sizes:A,B,...)"
    ))
}

fn positive(path: String, v: i64) -> Result<usize, ConfigError> {
    if v < 1 {
        return err(path, format!("must be at least 1, got {v}"));
    }
    Ok(v as usize)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: String::new(),
            message: e.to_string().trim_end().to_string(),
        })?;
        Self::validate(raw)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    fn validate(raw: RawConfig) -> Result<Self, ConfigError> {
        let trials = positive("trials".into(), raw.trials.unwrap_or(1))?;

        let algo_names = raw.algos.unwrap_or_else(|| vec!["mc".into(), "lv".into(), "baseline".into()]);
        if algo_names.is_empty() {
            return err("algos", "must list at least one algorithm");
        }
        let mut algos = Vec::new();
        for (i, name) in algo_names.iter().enumerate() {
            let algo: Algo = name.parse().map_err(|m| ConfigError {
                path: format!("algos[{i}]"),
                message: m,
            })?;
            if algos.contains(&algo) {
                return err(format!("algos[{i}]"), format!("`{name}` is listed twice"));
            }
            algos.push(algo);
        }

        if raw.n.is_empty() {
            return err("n", "must list at least one value");
        }
        let ns = raw
            .n
            .iter()
            .enumerate()
            .map(|(i, &v)| positive(format!("n[{i}]"), v))
            .collect::<Result<Vec<_>, _>>()?;
        let ks = match raw.k {
            Some(ks) if ks.is_empty() => return err("k", "must list at least one value"),
            Some(ks) => ks
                .iter()
                .enumerate()
                .map(|(i, &v)| positive(format!("k[{i}]"), v))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![1],
        };
        let cluster_labels = raw.clusters.unwrap_or_else(|| vec!["balanced".into()]);
        if cluster_labels.is_empty() {
            return err("clusters", "must list at least one spec");
        }
        if raw.distributions.is_empty() {
            return err("distributions", "must list at least one pair");
        }
        let mut pairs = Vec::new();
        for (i, p) in raw.distributions.iter().enumerate() {
            let parse = |field: &str, text: &str| {
                text.parse::<Distribution>().map_err(|e| ConfigError {
                    path: format!("distributions[{i}].{field}"),
                    message: e.to_string(),
                })
            };
            let fp = parse("f_plus", &p.f_plus)?;
            let fm = parse("f_minus", &p.f_minus)?;
            if !fp.shares_support(&fm) {
                return err(format!("distributions[{i}]"), "f_plus and f_minus must share a support");
            }
            if fp.q() > 256 {
                return err(format!("distributions[{i}]"), "support has more than 256 points");
            }
            pairs.push((fp, fm));
        }

        let mut cells = Vec::new();
        for (ni, &n) in ns.iter().enumerate() {
            for (ki, &k) in ks.iter().enumerate() {
                for (ci, label) in cluster_labels.iter().enumerate() {
                    let path = format!("clusters[{ci}]");
                    let spec = parse_cluster_spec(label, k).map_err(|m| ConfigError {
                        path: path.clone(),
                        message: m,
                    })?;
                    if matches!(spec, ClusterSpec::ExplicitSizes(_)) && ki > 0 {
                        continue;
                    }
                    if let Err(e) = spec.sizes(n) {
                        return err(path, format!("with n[{ni}] = {n}: {e}"));
                    }
                    for (fp, fm) in &pairs {
                        cells.push(Cell {
                            index: cells.len(),
                            n,
                            k: spec.k(),
                            clusters: spec.clone(),
                            clusters_label: label.trim().to_string(),
                            f_plus: fp.clone(),
                            f_minus: fm.clone(),
                        });
                    }
                }
            }
        }

        let defaults = Constants::default();
        let constants = Constants {
            c: raw.constants.c.unwrap_or(defaults.c),
            c_prime: raw.constants.c_prime.unwrap_or(defaults.c_prime),
            scale: raw.constants.scale.unwrap_or(defaults.scale),
        };
        if let Err(e) = constants.validate() {
            return err("constants", e.to_string());
        }
        let band = match raw.constants.band {
            Some(b) => b.parse::<Band>().map_err(|m| ConfigError {
                path: "constants.band".into(),
                message: m,
            })?,
            None => Band::default(),
        };

        let mc_min_success = raw.mc_min_success.unwrap_or(0.9);
        if !(0.0..=1.0).contains(&mc_min_success) {
            return err("mc_min_success", format!("{mc_min_success} is outside [0, 1]"));
        }

        Ok(Self {
            base_seed: raw.base_seed.unwrap_or(0),
            trials,
            algos,
            cells,
            params: McParams { constants, band },
            mc_min_success,
            output_dir: raw.output.dir,
            timing: raw.output.timing.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"distributions = [{ f_plus = "0:0.1,1:0.9", f_minus = "0:0.9,1:0.1" }]"#;

    fn config(body: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_toml(&format!("{PAIR}\n{body}\n"))
    }

    #[test]
    fn defaults_and_cells() {
        let c = config("n = [10, 20]").unwrap();
        assert_eq!(c.trials, 1);
        assert_eq!(c.algos, vec![Algo::Mc, Algo::Lv, Algo::Baseline]);
        assert_eq!(c.params, McParams::default());
        assert_eq!(c.cells.len(), 2);
        assert!(!c.timing);
        let c = config("n = [10]\nk = [1, 2]\nclusters = [\"balanced\", \"sizes:4,6\"]").unwrap();
        let ks: Vec<_> = c.cells.iter().map(|c| c.k).collect();
        assert_eq!(ks, vec![1, 2, 2]);
        assert_eq!(c.cells[1].clusters, ClusterSpec::ExplicitSizes(vec![4, 6]));
    }

    #[test]
    fn path_addressed_errors() {
        let path = |body: &str| config(body).unwrap_err().path;
        assert_eq!(path("n = [10]\ntrials = 0"), "trials");
        assert_eq!(path("n = [10, -3]"), "n[1]");
        assert_eq!(path("n = [10]\nk = [0]"), "k[0]");
        assert_eq!(path("n = [10]\nalgos = [\"lv\", \"fast\"]"), "algos[1]");
        assert_eq!(path("n = [10]\nclusters = [\"balanced\", \"sizes:3,3\"]"), "clusters[1]");
        assert_eq!(path("n = [10]\n[constants]\nc = 50.0"), "constants");
        assert_eq!(path("n = [10]\n[constants]\nband = \"wide\""), "constants.band");
        assert_eq!(path("n = [10]\nmc_min_success = 2.0"), "mc_min_success");
        let e = ExperimentConfig::from_toml(
            "n = [10]\ndistributions = [{ f_plus = \"0:0.5,1:0.5\", f_minus = \"0:0.5,2:0.5\" }]",
        )
        .unwrap_err();
        assert_eq!(e.path, "distributions[0]");
        let e = ExperimentConfig::from_toml("n = [10]\ndistributions = [{ f_plus = \"0:2\", f_minus = \"0:1\" }]")
            .unwrap_err();
        assert_eq!(e.path, "distributions[0].f_plus");
        assert_eq!(config("n = [10]\nbogus = 1").unwrap_err().path, "");
    }

    #[test]
    fn cluster_specs() {
        assert_eq!(parse_cluster_spec("balanced", 3), Ok(ClusterSpec::Balanced(3)));
        assert_eq!(
            parse_cluster_spec("skewed:4", 3),
            Ok(ClusterSpec::Skewed { k: 3, ratio: 4.0 })
        );
        assert_eq!(
            parse_cluster_spec("sizes: 1, 2", 9),
            Ok(ClusterSpec::ExplicitSizes(vec![1, 2]))
        );
        assert!(parse_cluster_spec("zipf", 3).is_err());
    }
}
