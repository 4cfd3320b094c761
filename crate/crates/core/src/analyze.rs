//! Text analysis: tokenization, stopping, and a light plural stemmer.

use serde::{Deserialize, Serialize};

/// A standard short English stopword list.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub stopwords: bool,
    pub stemming: bool,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            stopwords: true,
            stemming: true,
        }
    }
}

/// Lowercases, splits on non-alphanumeric characters, then applies the
/// configured stopword filter and stemmer.
pub fn analyze(text: &str, cfg: &AnalyzerConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut token = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                token.push(lower);
            }
        } else if !token.is_empty() {
            push_token(&mut out, std::mem::take(&mut token), cfg);
        }
    }
    if !token.is_empty() {
        push_token(&mut out, token, cfg);
    }
    out
}

fn push_token(out: &mut Vec<String>, token: String, cfg: &AnalyzerConfig) {
    if cfg.stopwords && STOPWORDS.contains(&token.as_str()) {
        return;
    }
    let token = if cfg.stemming { s_stem(token) } else { token };
    out.push(token);
}

/// Plural-only "S" stemmer: `-ies` to `-y`, `-es` to `-e`, strip final `-s`.
/// Each rule carries the usual exception suffixes; only the first matching
/// rule fires.
fn s_stem(token: String) -> String {
    let bytes = token.as_bytes();
    let n = bytes.len();
    if n < 4 || !token.is_ascii() {
        return token;
    }
    if token.ends_with("ies") {
        if token.ends_with("eies") || token.ends_with("aies") {
            return token;
        }
        let mut t = token;
        t.truncate(n - 3);
        t.push('y');
        return t;
    }
    if token.ends_with("es") {
        if token.ends_with("aes") || token.ends_with("ees") || token.ends_with("oes") {
            return token;
        }
        let mut t = token;
        t.truncate(n - 1);
        return t;
    }
    if token.ends_with('s') {
        if token.ends_with("us") || token.ends_with("ss") {
            return token;
        }
        let mut t = token;
        t.truncate(n - 1);
        return t;
    }
    token
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> AnalyzerConfig {
        AnalyzerConfig {
            stopwords: false,
            stemming: false,
        }
    }

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(
            analyze("Hello, WORLD-42!", &raw()),
            vec!["hello", "world", "42"]
        );
    }

    #[test]
    fn stopwords_removed_when_enabled() {
        let cfg = AnalyzerConfig {
            stopwords: true,
            stemming: false,
        };
        assert_eq!(analyze("the cat and the hat", &cfg), vec!["cat", "hat"]);
    }

    #[test]
    fn stemmer_rules() {
        assert_eq!(s_stem("queries".into()), "query");
        assert_eq!(s_stem("parties".into()), "party");
        assert_eq!(s_stem("phases".into()), "phase");
        assert_eq!(s_stem("shoes".into()), "shoes");
        assert_eq!(s_stem("cats".into()), "cat");
        assert_eq!(s_stem("glass".into()), "glass");
        assert_eq!(s_stem("corpus".into()), "corpus");
        // too short to touch
        assert_eq!(s_stem("its".into()), "its");
    }

    #[test]
    fn empty_text_yields_no_tokens() {
        assert!(analyze("", &AnalyzerConfig::default()).is_empty());
        assert!(analyze("  \t\n ", &AnalyzerConfig::default()).is_empty());
    }
}
