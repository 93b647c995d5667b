use std::collections::BTreeMap;
use std::path::Path;

use super::text::tokenize;
use super::FeaturizeError;

static DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Term → valence map used for review sentiment when topics are the features.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    terms: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    /// The small English lexicon shipped with the crate.
    pub fn embedded() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("embedded lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, FeaturizeError> {
        let text = std::fs::read_to_string(path).map_err(|source| FeaturizeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `term<TAB>valence` lines. `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, FeaturizeError> {
        let mut terms = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: &str| FeaturizeError::Lexicon {
                line: i + 1,
                message: message.to_string(),
            };
            let (term, value) = line
                .split_once('\t')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| bad("expected `term<TAB>valence`"))?;
            let term = term.trim().to_lowercase();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad("valence is not a number"))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(bad("valence outside [-1, 1]"));
            }
            if terms.insert(term, value).is_some() {
                return Err(bad("duplicate term"));
            }
        }
        Ok(SentimentLexicon { terms })
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.terms.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn to_tsv(&self) -> String {
        self.terms
            .iter()
            .map(|(k, v)| format!("{k}\t{v}\n"))
            .collect()
    }
}

impl FromIterator<(String, f64)> for SentimentLexicon {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        SentimentLexicon {
            terms: iter
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v.clamp(-1.0, 1.0)))
                .collect(),
        }
    }
}

/// Mean valence of the tokens found in the lexicon, or 0 when none match.
pub fn lexicon_sentiment(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let (sum, n) = tokenize(text)
        .iter()
        .filter_map(|t| lexicon.get(t))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).clamp(-1.0, 1.0)
    }
}

/// Review sentiment when features are extraction scores: mean of the present scores.
pub fn extraction_sentiment(values: &[f64], present: &[bool]) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(present)
        .filter(|(_, &p)| p)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn good_bad() -> SentimentLexicon {
        [("good".to_string(), 1.0), ("bad".to_string(), -1.0)]
            .into_iter()
            .collect()
    }

    #[test]
    fn mean_of_hits() {
        let s = lexicon_sentiment("good good bad", &good_bad());
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(lexicon_sentiment("nothing here", &good_bad()), 0.0);
        assert_eq!(lexicon_sentiment("", &good_bad()), 0.0);
    }

    #[test]
    fn extraction_mode_mean() {
        let s = extraction_sentiment(&[0.05, 0.0, 0.75], &[true, false, true]);
        assert!((s - 0.4).abs() < 1e-12);
        assert_eq!(extraction_sentiment(&[0.0, 0.0], &[false, false]), 0.0);
    }

    #[test]
    fn embedded_lexicon_parses() {
        let lex = SentimentLexicon::embedded();
        assert!(lex.len() > 50);
        assert_eq!(lex.get("filthy"), Some(-0.9));
        assert!(lex.iter().all(|(_, v)| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn parse_rejects_bad_lines() {
        assert!(SentimentLexicon::parse("good\t2.0").is_err());
        assert!(SentimentLexicon::parse("good\tx").is_err());
        assert!(SentimentLexicon::parse("good\t0.5\ngood\t0.1").is_err());
    }

    proptest! {
        #[test]
        fn bounded(text in "\\PC{0,60}") {
            let s = lexicon_sentiment(&text, &SentimentLexicon::embedded());
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
