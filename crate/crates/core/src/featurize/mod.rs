//! Per-review feature vectors: extraction scores or LDA topic mixtures.

mod lda;
mod lexicon;
pub mod text;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, ExtractionRecord, Schema};

pub use lda::{
    build_vocabulary, fit_lda, fit_lda_texts, infer_doc_topics, infer_doc_topics_with,
    InferenceParams, LdaFit, LdaModel, LdaParams, TopicInference,
};
pub use lexicon::{extraction_sentiment, lexicon_sentiment, SentimentLexicon};
pub use text::{char_count, sentence_count, tokenize, tokenize_with, word_count};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary is empty after pruning terms below min_df={min_df}; lower the pruning threshold or add documents")]
    EmptyVocabulary { min_df: usize },
    #[error("{0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    Extraction,
    Topic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub review_id: String,
    pub values: Vec<f64>,
    pub present: Vec<bool>,
    pub mode: VectorMode,
}

/// Builds one vector per corpus review, one dimension per schema attribute.
///
/// Absent attributes hold 0 with `present = false`. Records must already be
/// validated (see [`crate::corpus::load_extractions`]); duplicate pairs are
/// averaged here as well so unvalidated input stays well defined.
pub fn vectors_from_extractions(
    records: &[ExtractionRecord],
    schema: &Schema,
    corpus: &Corpus,
) -> Vec<FeatureVector> {
    let n = schema.len();
    let mut sums = vec![vec![(0.0f64, 0u32); n]; corpus.len()];
    for rec in records {
        if let (Some(r), Some(a)) = (
            corpus.index_of(&rec.review_id),
            schema.position(&rec.attribute),
        ) {
            sums[r][a].0 += rec.score;
            sums[r][a].1 += 1;
        }
    }
    corpus
        .reviews()
        .iter()
        .zip(sums)
        .map(|(review, row)| {
            let present: Vec<bool> = row.iter().map(|&(_, c)| c > 0).collect();
            let values = row
                .iter()
                .map(|&(s, c)| if c > 0 { s / f64::from(c) } else { 0.0 })
                .collect();
            FeatureVector {
                review_id: review.id.clone(),
                values,
                present,
                mode: VectorMode::Extraction,
            }
        })
        .collect()
}

/// Row-major feature storage for a whole corpus, aligned with corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub mode: VectorMode,
    pub dims: usize,
    pub values: Vec<f64>,
    pub present: Vec<bool>,
}

impl FeatureMatrix {
    pub fn from_vectors(mode: VectorMode, dims: usize, vectors: &[FeatureVector]) -> Self {
        let mut values = Vec::with_capacity(vectors.len() * dims);
        let mut present = Vec::with_capacity(vectors.len() * dims);
        for v in vectors {
            debug_assert_eq!(v.values.len(), dims);
            values.extend_from_slice(&v.values);
            present.extend_from_slice(&v.present);
        }
        FeatureMatrix {
            mode,
            dims,
            values,
            present,
        }
    }

    pub fn from_topic_rows(rows: &[Vec<f64>], dims: usize) -> Self {
        FeatureMatrix {
            mode: VectorMode::Topic,
            dims,
            values: rows.iter().flatten().copied().collect(),
            present: vec![true; rows.len() * dims],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.dims).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn present_row(&self, i: usize) -> &[bool] {
        &self.present[i * self.dims..(i + 1) * self.dims]
    }

    pub fn get(&self, i: usize, attr: usize) -> Option<f64> {
        let k = i * self.dims + attr;
        self.present[k].then(|| self.values[k])
    }

    pub fn vector(&self, i: usize, corpus: &Corpus) -> FeatureVector {
        FeatureVector {
            review_id: corpus.review(i).id.clone(),
            values: self.row(i).to_vec(),
            present: self.present_row(i).to_vec(),
            mode: self.mode,
        }
    }
}

/// Attribute names for topic-mode vectors: `topic-1`, `topic-2`, ...
pub fn topic_schema(n_topics: usize) -> Schema {
    Schema::new((1..=n_topics).map(|i| format!("topic-{i}"))).expect("topic names are valid")
}
