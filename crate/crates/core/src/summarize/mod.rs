//! Per-cluster statistics and cluster-vs-cluster comparison.

mod histogram;
mod text_index;

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::FeatureMatrix;

pub use histogram::{histogram_distance, Histogram, DEFAULT_BINS};
pub use text_index::{Gram, TextIndex};

pub const DEFAULT_TOP_N: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum SummarizeError {
    #[error("histogram binning mismatch ({left} vs {right} bins)")]
    BinningMismatch { left: usize, right: usize },
    #[error("unknown attribute {0}")]
    UnknownAttribute(String),
    #[error("summaries do not share a schema")]
    SchemaMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub size: usize,
    pub avg_chars: f64,
    pub avg_words: f64,
    pub avg_sentences: f64,
    pub avg_sentiment: f64,
    pub top_words: Vec<TermScore>,
    pub top_bigrams: Vec<TermScore>,
    /// Schema order.
    pub attr_histograms: IndexMap<String, Histogram>,
    /// Only attributes present in at least one member.
    pub attr_means: IndexMap<String, f64>,
}

/// Everything a summary is computed from.
#[derive(Debug, Clone, Copy)]
pub struct SummaryInputs<'a> {
    pub text: &'a TextIndex,
    pub features: &'a FeatureMatrix,
    pub sentiments: &'a [f64],
    pub attributes: &'a [String],
    pub n_top: usize,
    pub bins: usize,
}

/// Top-`n` TF-IDF terms of the concatenated member reviews.
///
/// tf is the term's count over the total number of grams in the cluster; idf
/// comes from [`TextIndex::idf`]. Ties are broken by term, ascending.
pub fn tfidf_top_terms(text: &TextIndex, members: &[u32], n: usize, gram: Gram) -> Vec<TermScore> {
    if n == 0 {
        return Vec::new();
    }
    let mut counts: HashMap<u32, u32> = HashMap::new();
    let mut total = 0u64;
    for &m in members {
        let grams = text.grams(m as usize, gram);
        total += grams.len() as u64;
        for &g in grams {
            *counts.entry(g).or_default() += 1;
        }
    }
    if total == 0 {
        return Vec::new();
    }
    let total = total as f64;
    let mut scored: Vec<TermScore> = counts
        .into_iter()
        .map(|(id, c)| TermScore {
            term: text.term(id).to_string(),
            score: f64::from(c) / total * text.idf(id),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.term.cmp(&b.term))
    });
    scored.truncate(n);
    scored
}

/// The `n` most frequent non-stopword terms over `members`, with counts.
/// Ties are broken by term, ascending.
pub fn frequent_terms(
    text: &TextIndex,
    members: &[u32],
    n: usize,
    gram: Gram,
) -> Vec<(String, u32)> {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for &m in members {
        for &g in text.grams(m as usize, gram) {
            *counts.entry(g).or_default() += 1;
        }
    }
    let mut out: Vec<(String, u32)> = counts
        .into_iter()
        .map(|(id, c)| (text.term(id).to_string(), c))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(n);
    out
}

/// Histogram of the present scores of one attribute over `members`.
pub fn attribute_histogram(
    members: &[u32],
    features: &FeatureMatrix,
    attributes: &[String],
    attribute: &str,
    bins: usize,
) -> Result<Histogram, SummarizeError> {
    let a = attributes
        .iter()
        .position(|x| x == attribute)
        .ok_or_else(|| SummarizeError::UnknownAttribute(attribute.to_string()))?;
    Ok(Histogram::from_scores(
        bins,
        members.iter().filter_map(|&m| features.get(m as usize, a)),
    ))
}

pub fn summarize_cluster(members: &[u32], inputs: &SummaryInputs<'_>) -> ClusterSummary {
    let n = members.len();
    let mean = |xs: &[u32]| {
        if n == 0 {
            0.0
        } else {
            members
                .iter()
                .map(|&m| f64::from(xs[m as usize]))
                .sum::<f64>()
                / n as f64
        }
    };
    let avg_sentiment = if n == 0 {
        0.0
    } else {
        members
            .iter()
            .map(|&m| inputs.sentiments[m as usize])
            .sum::<f64>()
            / n as f64
    };

    let dims = inputs.features.dims;
    let mut hists: Vec<Histogram> = (0..dims).map(|_| Histogram::new(inputs.bins)).collect();
    let mut sums = vec![0.0; dims];
    for &m in members {
        for a in 0..dims {
            if let Some(v) = inputs.features.get(m as usize, a) {
                hists[a].add(v);
                sums[a] += v;
            }
        }
    }
    let mut attr_means = IndexMap::new();
    let mut attr_histograms = IndexMap::new();
    for ((name, h), s) in inputs.attributes.iter().zip(hists).zip(sums) {
        if h.total > 0 {
            attr_means.insert(name.clone(), s / f64::from(h.total));
        }
        attr_histograms.insert(name.clone(), h);
    }

    ClusterSummary {
        size: n,
        avg_chars: mean(&inputs.text.chars),
        avg_words: mean(&inputs.text.words),
        avg_sentences: mean(&inputs.text.sentences),
        avg_sentiment,
        top_words: tfidf_top_terms(inputs.text, members, inputs.n_top, Gram::Unigram),
        top_bigrams: tfidf_top_terms(inputs.text, members, inputs.n_top, Gram::Bigram),
        attr_histograms,
        attr_means,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDistance {
    pub attribute: String,
    pub distance: f64,
}

/// Attributes ordered by histogram distance, largest first; ties keep schema order.
pub fn top_divergent_attributes(
    a: &ClusterSummary,
    b: &ClusterSummary,
    m: usize,
) -> Result<Vec<AttributeDistance>, SummarizeError> {
    if a.attr_histograms.len() != b.attr_histograms.len() {
        return Err(SummarizeError::SchemaMismatch);
    }
    let mut out = Vec::with_capacity(a.attr_histograms.len());
    for (name, ha) in &a.attr_histograms {
        let hb = b
            .attr_histograms
            .get(name)
            .ok_or(SummarizeError::SchemaMismatch)?;
        out.push(AttributeDistance {
            attribute: name.clone(),
            distance: histogram_distance(ha, hb)?,
        });
    }
    // Stable sort keeps schema order among equal distances.
    out.sort_by(|x, y| y.distance.total_cmp(&x.distance));
    out.truncate(m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::VectorMode;

    fn inputs_for<'a>(
        text: &'a TextIndex,
        features: &'a FeatureMatrix,
        sentiments: &'a [f64],
        attributes: &'a [String],
    ) -> SummaryInputs<'a> {
        SummaryInputs {
            text,
            features,
            sentiments,
            attributes,
            n_top: 5,
            bins: 8,
        }
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let text = TextIndex::from_texts(&["hotel room", "hotel pool", "hotel bar"]);
        assert_eq!(text.idf_of("hotel"), Some(1.0));
        assert!(text.idf_of("pool").unwrap() > 1.0);
    }

    #[test]
    fn tfidf_hand_computed() {
        // Review 0 alone; "carpet" occurs only there.
        let text = TextIndex::from_texts(&[
            "carpet hotel hotel",
            "hotel breakfast",
            "hotel breakfast pool",
        ]);
        let top = tfidf_top_terms(&text, &[0], 5, Gram::Unigram);
        // Hand-computed: tf(hotel) = 2/3, idf = ln(4/4) + 1 = 1.
        assert_eq!(top[0].term, "hotel");
        assert!((top[0].score - 2.0 / 3.0).abs() < 1e-12);
        // tf(carpet) = 1/3, idf = ln(4/2) + 1.
        assert_eq!(top[1].term, "carpet");
        assert!((top[1].score - (2.0f64.ln() + 1.0) / 3.0).abs() < 1e-12);
        assert!(tfidf_top_terms(&text, &[0], 0, Gram::Unigram).is_empty());
        let bi = tfidf_top_terms(&text, &[0], 5, Gram::Bigram);
        assert_eq!(bi[0].term, "carpet hotel");
    }

    fn schema_features(rows: &[(Vec<f64>, Vec<bool>)]) -> FeatureMatrix {
        FeatureMatrix {
            mode: VectorMode::Extraction,
            dims: rows[0].0.len(),
            values: rows.iter().flat_map(|r| r.0.clone()).collect(),
            present: rows.iter().flat_map(|r| r.1.clone()).collect(),
        }
    }

    #[test]
    fn frequency_ranking() {
        let text = TextIndex::from_texts(&["slow service", "great service and pool", "pool"]);
        let top = frequent_terms(&text, &[0, 1, 2], 2, Gram::Unigram);
        assert_eq!(
            top,
            vec![("pool".to_string(), 2), ("service".to_string(), 2)]
        );
    }

    #[test]
    fn summary_fields() {
        let text = TextIndex::from_texts(&["Short one.", "A longer review text."]);
        let features = schema_features(&[
            (vec![0.05, 0.0], vec![true, false]),
            (vec![0.05, 0.0], vec![true, false]),
        ]);
        let attrs = vec!["location".to_string(), "staff".to_string()];
        let sentiments = [0.05, 0.05];
        let s = summarize_cluster(&[0, 1], &inputs_for(&text, &features, &sentiments, &attrs));
        assert_eq!(s.size, 2);
        assert_eq!(s.avg_chars, (10.0 + 21.0) / 2.0);
        assert_eq!(s.attr_means.get("location"), Some(&0.05));
        assert!(!s.attr_means.contains_key("staff"));
        assert_eq!(s.attr_histograms["staff"].total, 0);
        assert_eq!(s.attr_histograms["location"].total, 2);
        let keys: Vec<&String> = s.attr_histograms.keys().collect();
        assert_eq!(keys, vec!["location", "staff"]);
    }

    #[test]
    fn divergence_ranking() {
        let text = TextIndex::from_texts(&["a", "b", "c", "d"]);
        let features = schema_features(&[
            (vec![0.5, 0.9], vec![true, true]),
            (vec![0.5, 0.8], vec![true, true]),
            (vec![0.5, -0.9], vec![true, true]),
            (vec![0.5, -0.8], vec![true, true]),
        ]);
        let attrs = vec!["food".to_string(), "service".to_string()];
        let sentiments = [0.0; 4];
        let inputs = inputs_for(&text, &features, &sentiments, &attrs);
        let s1 = summarize_cluster(&[0, 1], &inputs);
        let s2 = summarize_cluster(&[2, 3], &inputs);
        let d = top_divergent_attributes(&s1, &s2, 1).unwrap();
        assert_eq!(d[0].attribute, "service");
        assert_eq!(d[0].distance, 2.0);

        let same = top_divergent_attributes(&s1, &s1, 5).unwrap();
        assert_eq!(
            same.iter()
                .map(|d| d.attribute.as_str())
                .collect::<Vec<_>>(),
            vec!["food", "service"]
        );
        assert!(same.iter().all(|d| d.distance == 0.0));
    }

    #[test]
    fn histogram_requires_known_attribute() {
        let features = schema_features(&[(vec![-1.0], vec![true])]);
        let attrs = vec!["a".to_string()];
        assert!(attribute_histogram(&[0], &features, &attrs, "b", 8).is_err());
        let h = attribute_histogram(&[0], &features, &attrs, "a", 8).unwrap();
        assert_eq!(h.counts[0], 1);
    }
}
