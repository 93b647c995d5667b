//! Offline preprocessing: featurize → cluster → summarize → index.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::{apply_labels, build_hierarchy, HierarchyParams, LabelScheme};
use crate::config::{ConfigError, Featurizer, PipelineConfig};
use crate::corpus::{self, Corpus, CorpusError, ReviewFormat, Schema, UNKNOWN_ENTITY};
use crate::featurize::{
    extraction_sentiment, fit_lda, lexicon_sentiment, topic_schema, vectors_from_extractions,
    FeatureMatrix, FeaturizeError, LdaModel, SentimentLexicon, VectorMode,
};
use crate::index::{
    self, entity_tree_key, IndexArtifacts, IndexError, Manifest, TreeArtifact, ALL_TREE,
};
use crate::seeding;
use crate::summarize::{summarize_cluster, SummaryInputs, TextIndex};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Bad input data: the user has to fix a file.
    #[error("{stage}: {message}")]
    Invalid {
        stage: &'static str,
        message: String,
    },
    #[error("{stage}: {message}")]
    Runtime {
        stage: &'static str,
        message: String,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
}

impl PipelineError {
    /// True for errors caused by invalid configuration or input records.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_) | PipelineError::Invalid { .. }
        )
    }

    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Invalid { stage, .. } | PipelineError::Runtime { stage, .. } => stage,
            PipelineError::Index(_) => "index",
        }
    }
}

fn corpus_err(stage: &'static str) -> impl Fn(CorpusError) -> PipelineError {
    move |e| match e {
        CorpusError::Io { .. } => PipelineError::Runtime {
            stage,
            message: e.to_string(),
        },
        other => PipelineError::Invalid {
            stage,
            message: other.to_string(),
        },
    }
}

fn featurize_err(e: FeaturizeError) -> PipelineError {
    match e {
        FeaturizeError::Io { .. } => PipelineError::Runtime {
            stage: "featurize",
            message: e.to_string(),
        },
        other => PipelineError::Invalid {
            stage: "featurize",
            message: other.to_string(),
        },
    }
}

/// Corpus plus per-review features and sentiment.
#[derive(Debug, Clone)]
pub struct Featurized {
    pub corpus: Corpus,
    pub schema: Schema,
    pub lexicon: SentimentLexicon,
    pub features: FeatureMatrix,
    pub sentiments: Vec<f64>,
    pub lda: Option<LdaModel>,
    /// Schema attributes that no extraction record mentions.
    pub missing_attributes: Vec<String>,
}

pub fn load_corpus(config: &PipelineConfig) -> Result<Corpus, PipelineError> {
    let reviews = config
        .reviews
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("reviews path is required".into()))?;
    corpus::load_corpus(
        reviews,
        ReviewFormat::from_path(reviews),
        config.entities.as_deref(),
    )
    .map_err(corpus_err("ingest"))
}

pub fn featurize(config: &PipelineConfig, corpus: Corpus) -> Result<Featurized, PipelineError> {
    let lexicon = match &config.lexicon {
        Some(p) => SentimentLexicon::load(p).map_err(featurize_err)?,
        None => SentimentLexicon::embedded(),
    };
    if corpus.is_empty() {
        return Err(featurize_err(FeaturizeError::EmptyCorpus));
    }
    match config.featurizer {
        Featurizer::Extractions => {
            let schema_path = config
                .schema
                .as_deref()
                .ok_or_else(|| ConfigError::Invalid("schema path is required".into()))?;
            let extractions_path = config
                .extractions
                .as_deref()
                .ok_or_else(|| ConfigError::Invalid("extractions path is required".into()))?;
            let schema = corpus::load_schema(schema_path).map_err(corpus_err("schema"))?;
            let records = corpus::load_extractions(extractions_path, &schema, &corpus)
                .map_err(corpus_err("extractions"))?;
            let mut mentioned = vec![false; schema.len()];
            for r in &records {
                if let Some(a) = schema.position(&r.attribute) {
                    mentioned[a] = true;
                }
            }
            let missing_attributes: Vec<String> = schema
                .attributes
                .iter()
                .zip(&mentioned)
                .filter(|(_, &m)| !m)
                .map(|(a, _)| a.clone())
                .collect();
            for a in &missing_attributes {
                tracing::warn!(attribute = %a, "no extraction records; every review marks it absent");
            }
            let vectors = vectors_from_extractions(&records, &schema, &corpus);
            let features =
                FeatureMatrix::from_vectors(VectorMode::Extraction, schema.len(), &vectors);
            let sentiments = (0..corpus.len())
                .map(|i| extraction_sentiment(features.row(i), features.present_row(i)))
                .collect();
            Ok(Featurized {
                corpus,
                schema,
                lexicon,
                features,
                sentiments,
                lda: None,
                missing_attributes,
            })
        }
        Featurizer::Lda => {
            let fit = fit_lda(&corpus, &config.lda_params()).map_err(featurize_err)?;
            let k = config.n_topics;
            let features = FeatureMatrix::from_topic_rows(&fit.doc_topics, k);
            let sentiments = corpus
                .reviews()
                .par_iter()
                .map(|r| lexicon_sentiment(&r.text, &lexicon))
                .collect();
            Ok(Featurized {
                corpus,
                schema: topic_schema(k),
                lexicon,
                features,
                sentiments,
                lda: Some(fit.model),
                missing_attributes: Vec::new(),
            })
        }
    }
}

pub fn label_scheme(schema: &Schema, lda: Option<&LdaModel>) -> LabelScheme {
    match lda {
        Some(m) => LabelScheme::Topics(m.representative_terms()),
        None => LabelScheme::Attributes(schema.attributes.clone()),
    }
}

/// Shared inputs for building any cluster tree over one corpus.
pub struct TreeBuilder<'a> {
    pub features: &'a FeatureMatrix,
    pub sentiments: &'a [f64],
    pub text: &'a TextIndex,
    pub attributes: &'a [String],
    pub scheme: &'a LabelScheme,
    pub params: HierarchyParams,
    pub n_top: usize,
    pub bins: usize,
}

impl TreeBuilder<'_> {
    /// Builds, labels and summarizes a tree over `members`.
    pub fn build(&self, members: &[u32], seed: u64) -> TreeArtifact {
        let params = HierarchyParams {
            seed,
            ..self.params.clone()
        };
        let mut tree = build_hierarchy(self.features, self.sentiments, members, &params);
        apply_labels(&mut tree, self.features, self.scheme);
        let inputs = SummaryInputs {
            text: self.text,
            features: self.features,
            sentiments: self.sentiments,
            attributes: self.attributes,
            n_top: self.n_top,
            bins: self.bins,
        };
        let nodes = tree.nodes();
        let computed: Vec<_> = nodes
            .par_iter()
            .map(|n| (n.path_string(), summarize_cluster(&n.members, &inputs)))
            .collect();
        let summaries: IndexMap<String, _> = computed.into_iter().collect();
        TreeArtifact { tree, summaries }
    }

    pub fn build_all(&self, n_reviews: usize, seed: u64) -> TreeArtifact {
        let members: Vec<u32> = (0..n_reviews as u32).collect();
        self.build(&members, seed)
    }

    pub fn build_entity(&self, corpus: &Corpus, entity_id: &str, seed: u64) -> TreeArtifact {
        let members: Vec<u32> = corpus
            .reviews_of(entity_id)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        self.build(&members, entity_seed(seed, entity_id))
    }
}

/// Seed for an entity tree, independent of which other entities exist.
pub fn entity_seed(seed: u64, entity_id: &str) -> u64 {
    seeding::combine(seed, seeding::hash_str(entity_id))
}

/// Entities whose trees are built at preprocessing time: the `limit` with the
/// most reviews (ties by id), excluding the `unknown` pseudo-entity.
pub fn precomputed_entities(corpus: &Corpus, limit: usize) -> Vec<String> {
    if !corpus.has_entity_info() {
        return Vec::new();
    }
    let mut ents: Vec<(&str, usize)> = corpus
        .entities()
        .iter()
        .filter(|e| e.id != UNKNOWN_ENTITY && e.review_count > 0)
        .map(|e| (e.id.as_str(), e.review_count))
        .collect();
    ents.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ents.into_iter()
        .take(limit)
        .map(|(id, _)| id.to_string())
        .collect()
}

/// Runs every stage and returns the artifacts without writing them.
pub fn build_artifacts(
    config: &PipelineConfig,
) -> Result<(IndexArtifacts, Vec<String>), PipelineError> {
    config.validate()?;
    let corpus = load_corpus(config)?;
    let f = featurize(config, corpus)?;
    let text = TextIndex::build(&f.corpus);
    let scheme = label_scheme(&f.schema, f.lda.as_ref());
    let builder = TreeBuilder {
        features: &f.features,
        sentiments: &f.sentiments,
        text: &text,
        attributes: &f.schema.attributes,
        scheme: &scheme,
        params: config.hierarchy_params(),
        n_top: config.n_top,
        bins: config.bins,
    };
    let mut trees = BTreeMap::new();
    trees.insert(
        ALL_TREE.to_string(),
        builder.build_all(f.corpus.len(), config.seed),
    );
    for id in precomputed_entities(&f.corpus, config.entity_precompute_limit) {
        let t = builder.build_entity(&f.corpus, &id, config.seed);
        trees.insert(entity_tree_key(&id), t);
    }
    let artifacts = IndexArtifacts {
        config: config.clone(),
        corpus: f.corpus,
        schema: f.schema,
        lexicon: f.lexicon,
        features: f.features,
        sentiments: f.sentiments,
        lda: f.lda,
        trees,
    };
    Ok((artifacts, f.missing_attributes))
}

#[derive(Debug, Clone)]
pub struct PreprocessOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// Schema attributes without any extraction record.
    pub missing_attributes: Vec<String>,
}

/// Runs the pipeline and writes a new index version under `index_dir`.
pub fn preprocess(config: &PipelineConfig) -> Result<PreprocessOutcome, PipelineError> {
    let (artifacts, missing_attributes) = build_artifacts(config)?;
    let (dir, manifest) = index::save_new_version(config.index_dir()?, &artifacts)?;
    Ok(PreprocessOutcome {
        dir,
        manifest,
        missing_attributes,
    })
}

/// Re-runs the pipeline with a new schema, writing the next index version
/// next to the existing ones.
pub fn iterate(
    config: &PipelineConfig,
    new_schema: &Path,
) -> Result<PreprocessOutcome, PipelineError> {
    if config.featurizer != Featurizer::Extractions {
        return Err(ConfigError::Invalid("iterate requires featurizer=extractions".into()).into());
    }
    let mut config = config.clone();
    config.schema = Some(new_schema.to_path_buf());
    preprocess(&config)
}
