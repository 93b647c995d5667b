//! Latent Dirichlet allocation fitted with a collapsed Gibbs sampler.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::text::tokenize_with;
use super::{FeatureVector, FeaturizeError, VectorMode};
use crate::corpus::{Corpus, Review};
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub n_topics: usize,
    /// Document-topic prior. `None` means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Number of final sweeps averaged into the document-topic estimate.
    pub average_last: usize,
    /// Minimum number of documents a term must occur in to enter the vocabulary.
    pub min_df: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            n_topics: 10,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed: 0,
            average_last: 50,
            min_df: 2,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.n_topics.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    /// K × V, rows sum to one.
    pub topic_word: Vec<Vec<f64>>,
    /// K × V raw assignment counts at the end of sampling.
    pub topic_word_counts: Vec<Vec<u32>>,
    pub vocabulary: Vec<String>,
    pub seed: u64,
}

impl LdaModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Terms of `topic` ordered by probability, ties by term.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<(&str, f64)> {
        let mut terms: Vec<(&str, f64)> = self
            .vocabulary
            .iter()
            .map(String::as_str)
            .zip(self.topic_word[topic].iter().copied())
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.truncate(n);
        terms
    }

    /// One label term per topic: the term maximizing φ(t,w)² / Σ_s φ(s,w),
    /// which favors terms both frequent in `t` and specific to it. Ties go to
    /// the alphabetically first term.
    pub fn representative_terms(&self) -> Vec<String> {
        let v = self.vocab_size();
        let totals: Vec<f64> = (0..v)
            .map(|w| self.topic_word.iter().map(|row| row[w]).sum())
            .collect();
        self.topic_word
            .iter()
            .map(|row| {
                let mut best: Option<(usize, f64)> = None;
                for w in 0..v {
                    let score = if totals[w] > 0.0 {
                        row[w] * row[w] / totals[w]
                    } else {
                        0.0
                    };
                    if best.is_none_or(|(_, b)| score > b) {
                        best = Some((w, score));
                    }
                }
                best.map(|(w, _)| self.vocabulary[w].clone())
                    .unwrap_or_default()
            })
            .collect()
    }

    fn word_index(&self) -> HashMap<&str, usize> {
        self.vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect()
    }
}

/// A fitted model together with the training documents' topic mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaFit {
    pub model: LdaModel,
    /// One K-dim mixture per training document, in input order.
    pub doc_topics: Vec<Vec<f64>>,
    /// Documents without a single in-vocabulary token; their mixture is uniform.
    pub uniform_fallback: Vec<bool>,
}

pub fn fit_lda(corpus: &Corpus, params: &LdaParams) -> Result<LdaFit, FeaturizeError> {
    let texts: Vec<&str> = corpus.reviews().iter().map(|r| r.text.as_str()).collect();
    fit_lda_texts(&texts, params)
}

/// Builds the sorted vocabulary of non-stopword terms with document frequency ≥ `min_df`.
pub fn build_vocabulary(docs: &[Vec<String>], min_df: usize) -> Vec<String> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    df.into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, _)| t.to_string())
        .collect()
}

pub fn fit_lda_texts(texts: &[&str], params: &LdaParams) -> Result<LdaFit, FeaturizeError> {
    let k = params.n_topics;
    if k == 0 {
        return Err(FeaturizeError::InvalidParameter(
            "n_topics must be at least 1".into(),
        ));
    }
    if texts.is_empty() {
        return Err(FeaturizeError::EmptyCorpus);
    }
    let alpha = params.alpha();
    let beta = params.beta;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(FeaturizeError::InvalidParameter(
            "alpha and beta must be positive".into(),
        ));
    }

    let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize_with(t, true)).collect();
    let vocabulary = build_vocabulary(&tokens, params.min_df);
    if vocabulary.is_empty() {
        return Err(FeaturizeError::EmptyVocabulary {
            min_df: params.min_df,
        });
    }
    let index: HashMap<&str, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();
    let docs: Vec<Vec<u32>> = tokens
        .iter()
        .map(|doc| {
            doc.iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let v = vocabulary.len();
    let v_beta = v as f64 * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut doc_topic = vec![vec![0u32; k]; docs.len()];
    let mut topic_word = vec![vec![0u32; v]; k];
    let mut topic_total = vec![0u64; k];
    let mut assignments: Vec<Vec<u32>> = Vec::with_capacity(docs.len());
    for (d, doc) in docs.iter().enumerate() {
        let mut z = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.random_range(0..k);
            z.push(t as u32);
            doc_topic[d][t] += 1;
            topic_word[t][w as usize] += 1;
            topic_total[t] += 1;
        }
        assignments.push(z);
    }

    let averaged = params.average_last.min(params.iterations).max(1);
    let first_averaged = params.iterations.saturating_sub(averaged);
    let mut theta_sum = vec![vec![0.0f64; k]; docs.len()];
    let mut weights = vec![0.0f64; k];
    let accumulate = |theta_sum: &mut Vec<Vec<f64>>, doc_topic: &Vec<Vec<u32>>| {
        for (d, doc) in docs.iter().enumerate() {
            let denom = doc.len() as f64 + k as f64 * alpha;
            for t in 0..k {
                theta_sum[d][t] += (doc_topic[d][t] as f64 + alpha) / denom;
            }
        }
    };

    for sweep in 0..params.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = assignments[d][i] as usize;
                doc_topic[d][old] -= 1;
                topic_word[old][w] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (doc_topic[d][t] as f64 + alpha) * (topic_word[t][w] as f64 + beta)
                        / (topic_total[t] as f64 + v_beta);
                    total += p;
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                assignments[d][i] = new as u32;
                doc_topic[d][new] += 1;
                topic_word[new][w] += 1;
                topic_total[new] += 1;
            }
        }
        if sweep >= first_averaged {
            accumulate(&mut theta_sum, &doc_topic);
        }
    }
    if params.iterations == 0 {
        accumulate(&mut theta_sum, &doc_topic);
    }

    let uniform_fallback: Vec<bool> = docs.iter().map(Vec::is_empty).collect();
    let doc_topics = theta_sum
        .into_iter()
        .zip(&uniform_fallback)
        .map(|(row, &oov)| if oov { uniform(k) } else { normalized(row) })
        .collect();

    let phi = topic_word
        .iter()
        .zip(&topic_total)
        .map(|(row, &total)| {
            let denom = total as f64 + v_beta;
            normalized(row.iter().map(|&c| (c as f64 + beta) / denom).collect())
        })
        .collect();

    Ok(LdaFit {
        model: LdaModel {
            n_topics: k,
            alpha,
            beta,
            topic_word: phi,
            topic_word_counts: topic_word,
            vocabulary,
            seed: params.seed,
        },
        doc_topics,
        uniform_fallback,
    })
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn normalized(mut row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|x| *x /= s);
    }
    row
}

/// Held-out inference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceParams {
    pub iterations: usize,
    pub average_last: usize,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams {
            iterations: 100,
            average_last: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicInference {
    pub vector: FeatureVector,
    /// Set when the review had no in-vocabulary token and got the uniform mixture.
    pub uniform_fallback: bool,
}

pub fn infer_doc_topics(model: &LdaModel, review: &Review) -> TopicInference {
    infer_doc_topics_with(model, review, InferenceParams::default())
}

/// Gibbs passes over one document with the topic-word distribution held fixed.
///
/// The sampler seed depends only on the model seed and the review id, so
/// reviews can be inferred in any order or in parallel.
pub fn infer_doc_topics_with(
    model: &LdaModel,
    review: &Review,
    params: InferenceParams,
) -> TopicInference {
    let k = model.n_topics;
    let index = model.word_index();
    let doc: Vec<usize> = tokenize_with(&review.text, true)
        .iter()
        .filter_map(|t| index.get(t.as_str()).copied())
        .collect();
    let make = |values: Vec<f64>, uniform_fallback| TopicInference {
        vector: FeatureVector {
            review_id: review.id.clone(),
            present: vec![true; k],
            values,
            mode: VectorMode::Topic,
        },
        uniform_fallback,
    };
    if doc.is_empty() {
        return make(uniform(k), true);
    }

    let mut rng =
        ChaCha8Rng::seed_from_u64(seeding::combine(model.seed, seeding::hash_str(&review.id)));
    let alpha = model.alpha;
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = doc
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();

    let averaged = params.average_last.min(params.iterations).max(1);
    let first_averaged = params.iterations.saturating_sub(averaged);
    let denom = doc.len() as f64 + k as f64 * alpha;
    let mut theta = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for sweep in 0..params.iterations.max(1) {
        for (i, &w) in doc.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (counts[t] as f64 + alpha) * model.topic_word[t][w];
                weights[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let t = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = t;
            counts[t] += 1;
        }
        if sweep >= first_averaged {
            for t in 0..k {
                theta[t] += (counts[t] as f64 + alpha) / denom;
            }
        }
    }
    make(normalized(theta), false)
}
