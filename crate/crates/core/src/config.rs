//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default; [`RunConfig::to_text`] writes all of them so that a written
//! configuration reproduces its run when read back.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::immune::AISParams;
use crate::ngram::NormalizationOptions;
use crate::similarity::Metric;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Sgml,
    Plaintext,
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Sgml => "sgml",
            CorpusFormat::Plaintext => "plaintext",
        })
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgml" => Ok(CorpusFormat::Sgml),
            "plaintext" => Ok(CorpusFormat::Plaintext),
            _ => Err("expected sgml or plaintext".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ais,
    KMeans,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ais => "ais",
            Method::KMeans => "kmeans",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ais" => Ok(Method::Ais),
            "kmeans" => Ok(Method::KMeans),
            _ => Err("expected ais or kmeans".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    /// Documents sampled per source; `None` keeps everything.
    pub per_source: Option<usize>,
    pub n: usize,
    /// Permits gram lengths outside 2..=5.
    pub allow_any_n: bool,
    pub fold_case: bool,
    pub strip_punctuation: bool,
    pub k_per_doc: usize,
    pub metric: Metric,
    pub method: Method,
    pub kmeans_k: usize,
    pub kmeans_max_iter: usize,
    /// `None` picks the metric's default.
    pub affinity_threshold: Option<f64>,
    pub clone_budget: usize,
    /// Per-coordinate clone noise. `None` scales the immune default by
    /// `1 / sqrt(dimension)` once the feature space is known.
    pub mutation_scale: Option<f64>,
    pub suppression_threshold: f64,
    pub max_iterations: usize,
    pub stall_window: usize,
    pub initial_repertoire: Option<usize>,
    pub seed: u64,
    pub beta: f64,
    pub out: PathBuf,
    pub dump_vocabulary: bool,
    pub dump_similarity: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ais = AISParams::for_metric(Metric::Cosine);
        RunConfig {
            corpus: PathBuf::from("corpus"),
            format: CorpusFormat::Sgml,
            per_source: None,
            n: 3,
            allow_any_n: false,
            fold_case: true,
            strip_punctuation: true,
            k_per_doc: 10,
            metric: Metric::Cosine,
            method: Method::Ais,
            kmeans_k: 10,
            kmeans_max_iter: 100,
            affinity_threshold: None,
            clone_budget: ais.clone_budget,
            mutation_scale: None,
            suppression_threshold: ais.suppression_threshold,
            max_iterations: ais.max_iterations,
            stall_window: ais.stall_window,
            initial_repertoire: None,
            seed: 42,
            beta: 1.0,
            out: PathBuf::from("immunoclust-out"),
            dump_vocabulary: false,
            dump_similarity: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if value == none {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn show_optional<T: fmt::Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref()
        .map_or_else(|| none.to_string(), |x| x.to_string())
}

impl RunConfig {
    pub const KEYS: [&'static str; 24] = [
        "corpus",
        "format",
        "per_source",
        "n",
        "allow_any_n",
        "fold_case",
        "strip_punctuation",
        "k_per_doc",
        "metric",
        "method",
        "kmeans_k",
        "kmeans_max_iter",
        "affinity_threshold",
        "clone_budget",
        "mutation_scale",
        "suppression_threshold",
        "max_iterations",
        "stall_window",
        "initial_repertoire",
        "seed",
        "beta",
        "out",
        "dump_vocabulary",
        "dump_similarity",
    ];

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim() {
            "corpus" => self.corpus = PathBuf::from(value),
            "format" => self.format = parse_value(key, value)?,
            "per_source" => self.per_source = parse_optional(key, value, "all")?,
            "n" => self.n = parse_value(key, value)?,
            "allow_any_n" => self.allow_any_n = parse_value(key, value)?,
            "fold_case" => self.fold_case = parse_value(key, value)?,
            "strip_punctuation" => self.strip_punctuation = parse_value(key, value)?,
            "k_per_doc" => self.k_per_doc = parse_value(key, value)?,
            "metric" => self.metric = parse_value(key, value)?,
            "method" => self.method = parse_value(key, value)?,
            "kmeans_k" => self.kmeans_k = parse_value(key, value)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse_value(key, value)?,
            "affinity_threshold" => self.affinity_threshold = parse_optional(key, value, "auto")?,
            "clone_budget" => self.clone_budget = parse_value(key, value)?,
            "mutation_scale" => self.mutation_scale = parse_optional(key, value, "auto")?,
            "suppression_threshold" => self.suppression_threshold = parse_value(key, value)?,
            "max_iterations" => self.max_iterations = parse_value(key, value)?,
            "stall_window" => self.stall_window = parse_value(key, value)?,
            "initial_repertoire" => self.initial_repertoire = parse_optional(key, value, "auto")?,
            "seed" => self.seed = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "dump_vocabulary" => self.dump_vocabulary = parse_value(key, value)?,
            "dump_similarity" => self.dump_similarity = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: lineno + 1,
                text: line.to_string(),
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        let pairs: Vec<(&str, String)> = vec![
            ("corpus", self.corpus.display().to_string()),
            ("format", self.format.to_string()),
            ("per_source", show_optional(&self.per_source, "all")),
            ("n", self.n.to_string()),
            ("allow_any_n", self.allow_any_n.to_string()),
            ("fold_case", self.fold_case.to_string()),
            ("strip_punctuation", self.strip_punctuation.to_string()),
            ("k_per_doc", self.k_per_doc.to_string()),
            ("metric", self.metric.to_string()),
            ("method", self.method.to_string()),
            ("kmeans_k", self.kmeans_k.to_string()),
            ("kmeans_max_iter", self.kmeans_max_iter.to_string()),
            (
                "affinity_threshold",
                show_optional(&self.affinity_threshold, "auto"),
            ),
            ("clone_budget", self.clone_budget.to_string()),
            (
                "mutation_scale",
                show_optional(&self.mutation_scale, "auto"),
            ),
            (
                "suppression_threshold",
                self.suppression_threshold.to_string(),
            ),
            ("max_iterations", self.max_iterations.to_string()),
            ("stall_window", self.stall_window.to_string()),
            (
                "initial_repertoire",
                show_optional(&self.initial_repertoire, "auto"),
            ),
            ("seed", self.seed.to_string()),
            ("beta", self.beta.to_string()),
            ("out", self.out.display().to_string()),
            ("dump_vocabulary", self.dump_vocabulary.to_string()),
            ("dump_similarity", self.dump_similarity.to_string()),
        ];
        let mut text = String::from("# immunoclust run configuration\n");
        for (k, v) in pairs {
            text.push_str(k);
            text.push('=');
            text.push_str(&v);
            text.push('\n');
        }
        text
    }

    pub fn normalization(&self) -> NormalizationOptions {
        NormalizationOptions {
            fold_case: self.fold_case,
            strip_punctuation: self.strip_punctuation,
        }
    }

    /// Immune parameters with metric-dependent defaults filled in.
    pub fn ais_params(&self) -> AISParams {
        let defaults = AISParams::for_metric(self.metric);
        AISParams {
            metric: self.metric,
            affinity_threshold: self
                .affinity_threshold
                .unwrap_or(defaults.affinity_threshold),
            clone_budget: self.clone_budget,
            mutation_scale: self.mutation_scale.unwrap_or(defaults.mutation_scale),
            suppression_threshold: self.suppression_threshold,
            max_iterations: self.max_iterations,
            stall_window: self.stall_window,
            initial_repertoire_size: self.initial_repertoire,
            seed: self.seed,
        }
    }

    /// Copy with every metric-dependent default made explicit.
    pub fn resolved(&self) -> RunConfig {
        RunConfig {
            affinity_threshold: Some(self.ais_params().affinity_threshold),
            ..self.clone()
        }
    }

    /// Fixes an automatic mutation scale for a `dim`-dimensional feature
    /// space, so that the expected norm of a founder's jitter stays at the
    /// immune default rather than growing with `sqrt(dim)`.
    pub fn with_dimension(&self, dim: usize) -> RunConfig {
        let base = AISParams::for_metric(self.metric).mutation_scale;
        RunConfig {
            mutation_scale: Some(
                self.mutation_scale
                    .unwrap_or(base / (dim.max(1) as f64).sqrt()),
            ),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.allow_any_n {
            if self.n == 0 {
                return invalid("n must be at least 1".into());
            }
        } else if !(2..=5).contains(&self.n) {
            return invalid(format!(
                "n = {} is outside 2..=5 (set allow_any_n=true to override)",
                self.n
            ));
        }
        if self.k_per_doc == 0 {
            return invalid("k_per_doc must be at least 1".into());
        }
        if self.per_source == Some(0) {
            return invalid("per_source must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return invalid(format!("beta must be positive, got {}", self.beta));
        }
        match self.method {
            Method::KMeans if self.kmeans_k == 0 => invalid("kmeans_k must be at least 1".into()),
            Method::KMeans if self.kmeans_max_iter == 0 => {
                invalid("kmeans_max_iter must be at least 1".into())
            }
            _ => self
                .ais_params()
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }
}
