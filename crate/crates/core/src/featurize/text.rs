//! Tokenization and length statistics.

use std::collections::HashSet;
use std::sync::OnceLock;

static STOPWORDS_TXT: &str = include_str!("../../data/stopwords.txt");

/// The embedded English stopword list.
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Lowercase tokens split on non-alphanumeric boundaries; tokens shorter than
/// two characters are dropped. Stopwords are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    // Lowercase before splitting: some case mappings emit combining marks.
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .map(str::to_string)
        .collect()
}

/// Like [`tokenize`], with stopwords removed when `drop_stopwords` is set.
pub fn tokenize_with(text: &str, drop_stopwords: bool) -> Vec<String> {
    let mut tokens = tokenize(text);
    if drop_stopwords {
        tokens.retain(|t| !is_stopword(t));
    }
    tokens
}

/// Unicode scalar count.
pub fn char_count(text: &str) -> usize {
    text.chars().count()
}

/// Token count before stopword removal.
pub fn word_count(text: &str) -> usize {
    tokenize(text).len()
}

/// Sentences end at a run of `.`, `!` or `?` followed by whitespace or the end
/// of the text. Trailing text without a terminator counts as one more
/// sentence. Non-empty text has at least one sentence.
pub fn sentence_count(text: &str) -> usize {
    if text.trim().is_empty() {
        return 0;
    }
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut pending = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let start = i;
            while i < chars.len() && matches!(chars[i], '.' | '!' | '?') {
                i += 1;
            }
            let at_boundary = i == chars.len() || chars[i].is_whitespace();
            if at_boundary {
                count += 1;
                pending = false;
            } else if start < i {
                pending = true;
            }
            continue;
        }
        if !c.is_whitespace() {
            pending = true;
        }
        i += 1;
    }
    if pending {
        count += 1;
    }
    count.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("The rooms aren't huge"),
            vec!["the", "rooms", "aren", "huge"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Wi-Fi  WI-FI"), vec!["wi", "fi", "wi", "fi"]);
        assert_eq!(
            tokenize("Café crème, 5 étoiles"),
            vec!["café", "crème", "étoiles"]
        );
    }

    #[test]
    fn stopword_removal_is_opt_in() {
        assert_eq!(
            tokenize_with("The rooms are huge", true),
            vec!["rooms", "huge"]
        );
        assert_eq!(tokenize_with("The rooms", false), vec!["the", "rooms"]);
    }

    #[test]
    fn counts() {
        assert_eq!(sentence_count("Good. Bad!"), 2);
        assert_eq!(word_count("Good. Bad!"), 2);
        assert_eq!(char_count("Good. Bad!"), 10);
        assert_eq!(sentence_count("no punctuation"), 1);
        assert_eq!(sentence_count("A? B? C?"), 3);
        assert_eq!(sentence_count("Wait... what?! Really"), 3);
        assert_eq!(sentence_count("Price was $3.50 total."), 1);
        assert_eq!(sentence_count(""), 0);
        assert_eq!(sentence_count("!!!"), 1);
        assert_eq!(char_count("héllo"), 5);
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn sentence_count_positive_for_nonblank(text in "\\PC{1,80}") {
            prop_assume!(!text.trim().is_empty());
            prop_assert!(sentence_count(&text) >= 1);
        }
    }
}
