//! Pipeline configuration: a flat `key = value` file with `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{HierarchyParams, KMeansParams};
use crate::featurize::LdaParams;
use crate::summarize::{DEFAULT_BINS, DEFAULT_TOP_N};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{key}': cannot parse '{value}': {message}")]
    InvalidValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Featurizer {
    Lda,
    Extractions,
}

impl FromStr for Featurizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lda" => Ok(Featurizer::Lda),
            "extractions" | "extraction" => Ok(Featurizer::Extractions),
            other => Err(format!("expected lda or extractions, got '{other}'")),
        }
    }
}

impl fmt::Display for Featurizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Featurizer::Lda => "lda",
            Featurizer::Extractions => "extractions",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub reviews: Option<PathBuf>,
    pub entities: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub extractions: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub featurizer: Featurizer,
    pub n_topics: usize,
    /// `None` means 50 / n_topics.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub min_df: usize,
    pub k1: usize,
    pub k2: usize,
    pub depth: usize,
    pub min_cluster_size: Option<usize>,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub n_top: usize,
    pub bins: usize,
    pub entity_precompute_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let lda = LdaParams::default();
        let h = HierarchyParams::default();
        PipelineConfig {
            reviews: None,
            entities: None,
            schema: None,
            extractions: None,
            lexicon: None,
            index_dir: None,
            featurizer: Featurizer::Extractions,
            n_topics: lda.n_topics,
            alpha: lda.alpha,
            beta: lda.beta,
            iterations: lda.iterations,
            min_df: lda.min_df,
            k1: h.k1,
            k2: h.k2,
            depth: h.depth,
            min_cluster_size: h.min_cluster_size,
            kmeans_max_iter: h.kmeans.max_iter,
            kmeans_tol: h.kmeans.tol,
            kmeans_restarts: h.kmeans.restarts,
            seed: 0,
            n_top: DEFAULT_TOP_N,
            bins: DEFAULT_BINS,
            entity_precompute_limit: 50,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "reviews",
    "entities",
    "schema",
    "extractions",
    "lexicon",
    "index_dir",
    "featurizer",
    "n_topics",
    "alpha",
    "beta",
    "iterations",
    "min_df",
    "k1",
    "k2",
    "depth",
    "min_cluster_size",
    "kmeans_max_iter",
    "kmeans_tol",
    "kmeans_restarts",
    "seed",
    "n_top",
    "bins",
    "entity_precompute_limit",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            message: e.to_string(),
        })
}

/// `none`, `auto` and the empty string clear an optional setting.
fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    match value.to_ascii_lowercase().as_str() {
        "" | "none" | "auto" => Ok(None),
        _ => parse_value(key, value).map(Some),
    }
}

impl PipelineConfig {
    /// Parses config text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            config.set(key.trim(), value.trim(), base_dir)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Sets one key. Paths are resolved against `base_dir` unless absolute.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let path = |v: &str| -> Option<PathBuf> {
            if v.is_empty() || v.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(base_dir.join(v))
            }
        };
        match key {
            "reviews" => self.reviews = path(value),
            "entities" => self.entities = path(value),
            "schema" => self.schema = path(value),
            "extractions" => self.extractions = path(value),
            "lexicon" => self.lexicon = path(value),
            "index_dir" => self.index_dir = path(value),
            "featurizer" => self.featurizer = parse_value(key, value)?,
            "n_topics" => self.n_topics = parse_value(key, value)?,
            "alpha" => self.alpha = parse_optional(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "iterations" => self.iterations = parse_value(key, value)?,
            "min_df" => self.min_df = parse_value(key, value)?,
            "k1" => self.k1 = parse_value(key, value)?,
            "k2" => self.k2 = parse_value(key, value)?,
            "depth" => self.depth = parse_value(key, value)?,
            "min_cluster_size" => self.min_cluster_size = parse_optional(key, value)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse_value(key, value)?,
            "kmeans_tol" => self.kmeans_tol = parse_value(key, value)?,
            "kmeans_restarts" => self.kmeans_restarts = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "n_top" => self.n_top = parse_value(key, value)?,
            "bins" => self.bins = parse_value(key, value)?,
            "entity_precompute_limit" => self.entity_precompute_limit = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Checks cross-key constraints. Input files are not opened here.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.reviews.is_none() {
            return invalid("reviews path is required");
        }
        if self.index_dir.is_none() {
            return invalid("index_dir is required");
        }
        match self.featurizer {
            Featurizer::Extractions => {
                if self.schema.is_none() {
                    return invalid("featurizer=extractions requires a schema path");
                }
                if self.extractions.is_none() {
                    return invalid("featurizer=extractions requires an extractions path");
                }
            }
            Featurizer::Lda => {
                if self.n_topics < 2 {
                    return invalid("featurizer=lda requires n_topics >= 2");
                }
                if self.iterations == 0 {
                    return invalid("iterations must be at least 1");
                }
                let positive = |x: f64| x > 0.0;
                if !positive(self.beta) || self.alpha.is_some_and(|a| !positive(a)) {
                    return invalid("alpha and beta must be positive");
                }
            }
        }
        if self.k1 < 1 || self.k2 < 1 || self.depth < 1 {
            return invalid("k1, k2 and depth must be at least 1");
        }
        if self.kmeans_max_iter == 0 || self.kmeans_restarts == 0 {
            return invalid("kmeans_max_iter and kmeans_restarts must be at least 1");
        }
        if self.kmeans_tol.is_nan() || self.kmeans_tol < 0.0 {
            return invalid("kmeans_tol must be non-negative");
        }
        if self.bins == 0 {
            return invalid("bins must be at least 1");
        }
        Ok(())
    }

    pub fn lda_params(&self) -> LdaParams {
        LdaParams {
            n_topics: self.n_topics,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            seed: self.seed,
            min_df: self.min_df,
            ..LdaParams::default()
        }
    }

    pub fn hierarchy_params(&self) -> HierarchyParams {
        HierarchyParams {
            k1: self.k1,
            k2: self.k2,
            depth: self.depth,
            min_cluster_size: self.min_cluster_size,
            kmeans: KMeansParams {
                max_iter: self.kmeans_max_iter,
                tol: self.kmeans_tol,
                restarts: self.kmeans_restarts,
            },
            seed: self.seed,
        }
    }

    pub fn index_dir(&self) -> Result<&Path, ConfigError> {
        self.index_dir
            .as_deref()
            .ok_or_else(|| ConfigError::Invalid("index_dir is required".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let text = "# pipeline\nreviews = data/reviews.jsonl\nfeaturizer=lda # topics\nn_topics = 12\nalpha = auto\nk1=4\n\n";
        let c = PipelineConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.reviews, Some(PathBuf::from("/base/data/reviews.jsonl")));
        assert_eq!(c.featurizer, Featurizer::Lda);
        assert_eq!(c.n_topics, 12);
        assert_eq!(c.alpha, None);
        assert_eq!(c.k1, 4);
        assert_eq!(c.k2, 3);
    }

    #[test]
    fn absolute_paths_are_kept() {
        let c = PipelineConfig::parse("index_dir=/tmp/idx", Path::new("/base")).unwrap();
        assert_eq!(c.index_dir, Some(PathBuf::from("/tmp/idx")));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(
            PipelineConfig::parse("k1 5", Path::new(".")),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("colour=red", Path::new(".")),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            PipelineConfig::parse("k1=five", Path::new(".")),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn extractions_requires_paths() {
        let c = PipelineConfig::parse(
            "reviews=r.jsonl\nindex_dir=idx\nfeaturizer=extractions\nschema=s.txt",
            Path::new("."),
        )
        .unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("extractions path"), "{err}");
    }

    #[test]
    fn lda_requires_two_topics() {
        let c = PipelineConfig::parse(
            "reviews=r.jsonl\nindex_dir=idx\nfeaturizer=lda\nn_topics=1",
            Path::new("."),
        )
        .unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn fanout_must_be_positive() {
        let mut c = PipelineConfig::parse(
            "reviews=r.jsonl\nindex_dir=idx\nfeaturizer=lda",
            Path::new("."),
        )
        .unwrap();
        c.validate().unwrap();
        c.k2 = 0;
        assert!(c.validate().is_err());
    }
}
