use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::featurize::text::{char_count, sentence_count, tokenize, tokenize_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gram {
    Unigram,
    Bigram,
}

impl Gram {
    pub fn from_n(n: u8) -> Option<Self> {
        match n {
            1 => Some(Gram::Unigram),
            2 => Some(Gram::Bigram),
            _ => None,
        }
    }
}

/// Tokenized reviews, interned n-grams and corpus-wide document frequencies.
///
/// Document frequencies are counted over individual reviews, so idf is a
/// corpus constant shared by every cluster.
#[derive(Debug, Clone)]
pub struct TextIndex {
    n_reviews: usize,
    terms: Vec<String>,
    unigrams: Vec<Vec<u32>>,
    bigrams: Vec<Vec<u32>>,
    df: Vec<u32>,
    pub chars: Vec<u32>,
    pub words: Vec<u32>,
    pub sentences: Vec<u32>,
}

impl TextIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let texts: Vec<&str> = corpus.reviews().iter().map(|r| r.text.as_str()).collect();
        Self::from_texts(&texts)
    }

    pub fn from_texts(texts: &[&str]) -> Self {
        let per_review: Vec<(Vec<String>, u32, u32, u32)> = texts
            .par_iter()
            .map(|t| {
                (
                    tokenize_with(t, true),
                    char_count(t) as u32,
                    tokenize(t).len() as u32,
                    sentence_count(t) as u32,
                )
            })
            .collect();

        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut terms: Vec<String> = Vec::new();
        let mut intern = |s: String| -> u32 {
            if let Some(&id) = ids.get(&s) {
                return id;
            }
            let id = terms.len() as u32;
            terms.push(s.clone());
            ids.insert(s, id);
            id
        };

        let mut unigrams = Vec::with_capacity(texts.len());
        let mut bigrams = Vec::with_capacity(texts.len());
        let mut chars = Vec::with_capacity(texts.len());
        let mut words = Vec::with_capacity(texts.len());
        let mut sentences = Vec::with_capacity(texts.len());
        for (tokens, c, w, s) in per_review {
            let bi: Vec<u32> = tokens
                .windows(2)
                .map(|p| intern(format!("{} {}", p[0], p[1])))
                .collect();
            let uni: Vec<u32> = tokens.into_iter().map(&mut intern).collect();
            unigrams.push(uni);
            bigrams.push(bi);
            chars.push(c);
            words.push(w);
            sentences.push(s);
        }

        let mut df = vec![0u32; terms.len()];
        for grams in unigrams.iter().chain(bigrams.iter()) {
            let unique: HashSet<u32> = grams.iter().copied().collect();
            for id in unique {
                df[id as usize] += 1;
            }
        }

        TextIndex {
            n_reviews: texts.len(),
            terms,
            unigrams,
            bigrams,
            df,
            chars,
            words,
            sentences,
        }
    }

    pub fn n_reviews(&self) -> usize {
        self.n_reviews
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn grams(&self, review: usize, gram: Gram) -> &[u32] {
        match gram {
            Gram::Unigram => &self.unigrams[review],
            Gram::Bigram => &self.bigrams[review],
        }
    }

    pub fn df(&self, id: u32) -> u32 {
        self.df[id as usize]
    }

    /// Smoothed inverse document frequency: ln((1 + R) / (1 + df)) + 1.
    pub fn idf(&self, id: u32) -> f64 {
        let r = self.n_reviews as f64;
        ((1.0 + r) / (1.0 + f64::from(self.df(id)))).ln() + 1.0
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.idf(i as u32))
    }

    /// Term lookup table, for callers that need many idf lookups by string.
    pub fn term_ids(&self) -> HashMap<&str, u32> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect()
    }
}
