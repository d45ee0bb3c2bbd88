//! Marker vocabulary, tokenization and stem matching.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DEFAULT_VOCABULARY: &str = include_str!("../../data/vocabulary.txt");

/// Lowercases `text` and splits it into maximal runs of alphabetic characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A stem that matches any token starting with it, or an exact token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StemPattern {
    pub stem: String,
    pub prefix_match: bool,
}

impl StemPattern {
    pub fn new(stem: &str, prefix_match: bool) -> Result<Self> {
        if stem.is_empty() {
            return Err(Error::InvalidVocabulary {
                line: 0,
                reason: "empty stem".into(),
            });
        }
        if !stem.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(Error::InvalidVocabulary {
                line: 0,
                reason: format!("stem {stem:?} must be lowercase ASCII letters"),
            });
        }
        Ok(StemPattern {
            stem: stem.to_string(),
            prefix_match,
        })
    }

    /// Parses `delv*` (prefix) or `while` (exact).
    pub fn parse(entry: &str) -> Result<Self> {
        let entry = entry.trim();
        match entry.strip_suffix('*') {
            Some(stem) => Self::new(stem, true),
            None => Self::new(entry, false),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        if self.prefix_match {
            token.starts_with(&self.stem)
        } else {
            token == self.stem
        }
    }
}

impl fmt::Display for StemPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefix_match {
            write!(f, "{}*", self.stem)
        } else {
            f.write_str(&self.stem)
        }
    }
}

/// Ordered list of unique marker patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    patterns: Vec<StemPattern>,
}

impl Default for Vocabulary {
    /// The 65-entry marker list shipped with the crate.
    fn default() -> Self {
        Self::parse(DEFAULT_VOCABULARY).expect("bundled vocabulary is valid")
    }
}

impl Vocabulary {
    pub fn new(patterns: Vec<StemPattern>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for p in &patterns {
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidVocabulary {
                    line: 0,
                    reason: format!("duplicate pattern {p}"),
                });
            }
        }
        Ok(Vocabulary { patterns })
    }

    /// One pattern per line; `#` starts a comment line, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = StemPattern::parse(line).map_err(|e| match e {
                Error::InvalidVocabulary { reason, .. } => Error::InvalidVocabulary { line: i + 1, reason },
                other => other,
            })?;
            patterns.push(p);
        }
        Self::new(patterns)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn patterns(&self) -> &[StemPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.patterns.iter().map(|p| format!("{p}\n")).collect()
    }
}

/// Hash-indexed matcher: a token is checked against every one of its
/// prefixes instead of against every pattern.
#[derive(Debug, Clone)]
pub struct Matcher {
    patterns: Vec<StemPattern>,
    prefix: HashMap<String, Vec<usize>>,
    exact: HashMap<String, Vec<usize>>,
    max_prefix: usize,
}

impl Matcher {
    pub fn new(patterns: &[StemPattern]) -> Self {
        let mut prefix: HashMap<String, Vec<usize>> = HashMap::new();
        let mut exact: HashMap<String, Vec<usize>> = HashMap::new();
        let mut max_prefix = 0;
        for (i, p) in patterns.iter().enumerate() {
            if p.prefix_match {
                max_prefix = max_prefix.max(p.stem.len());
                prefix.entry(p.stem.clone()).or_default().push(i);
            } else {
                exact.entry(p.stem.clone()).or_default().push(i);
            }
        }
        Matcher {
            patterns: patterns.to_vec(),
            prefix,
            exact,
            max_prefix,
        }
    }

    pub fn patterns(&self) -> &[StemPattern] {
        &self.patterns
    }

    /// Calls `f` with the index of every pattern matching `token`.
    pub fn for_each_match(&self, token: &str, mut f: impl FnMut(usize)) {
        if let Some(ids) = self.exact.get(token) {
            ids.iter().for_each(|&i| f(i));
        }
        let upto = token.len().min(self.max_prefix);
        for l in 1..=upto {
            if !token.is_char_boundary(l) {
                continue;
            }
            if let Some(ids) = self.prefix.get(&token[..l]) {
                ids.iter().for_each(|&i| f(i));
            }
        }
    }
}

/// Set of stems (rendered as patterns, e.g. `delv*`) matched by any token.
pub fn match_stems(tokens: &[String], patterns: &[StemPattern]) -> BTreeSet<String> {
    let m = Matcher::new(patterns);
    let mut out = BTreeSet::new();
    for t in tokens {
        m.for_each_match(t, |i| {
            out.insert(patterns[i].stem.clone());
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pats(xs: &[&str]) -> Vec<StemPattern> {
        xs.iter().map(|x| StemPattern::parse(x).unwrap()).collect()
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("Delving into AI-driven methods"), vec!["delving", "into", "ai", "driven", "methods"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("state-of-the-art"), vec!["state", "of", "the", "art"]);
        assert_eq!(tokenize("CO2 levels, 3x"), vec!["co", "levels", "x"]);
    }

    #[test]
    fn stem_matching_examples() {
        assert_eq!(match_stems(&tokenize("delved"), &pats(&["delv*"])), set(&["delv"]));
        assert_eq!(match_stems(&tokenize("while"), &pats(&["while"])), set(&["while"]));
        assert!(match_stems(&tokenize("whilest"), &pats(&["while"])).is_empty());
        assert_eq!(
            match_stems(&tokenize("showcased showcasing"), &pats(&["showcas*"])),
            set(&["showcas"])
        );
    }

    #[test]
    fn matcher_agrees_with_linear_scan() {
        let v = Vocabulary::default();
        let m = Matcher::new(v.patterns());
        for tok in ["delve", "enlightening", "embarked", "embarking", "invaluable", "valuable", "while", "level", "x"] {
            let mut fast = Vec::new();
            m.for_each_match(tok, |i| fast.push(i));
            fast.sort();
            let slow: Vec<usize> = v.patterns().iter().enumerate().filter(|(_, p)| p.matches(tok)).map(|(i, _)| i).collect();
            assert_eq!(fast, slow, "{tok}");
        }
    }

    #[test]
    fn bundled_vocabulary_has_65_entries() {
        let v = Vocabulary::default();
        assert_eq!(v.len(), 65);
        assert_eq!(v.patterns()[0], StemPattern { stem: "delv".into(), prefix_match: true });
        assert!(v.patterns().contains(&StemPattern { stem: "while".into(), prefix_match: false }));
        assert_eq!(Vocabulary::parse(&v.to_text()).unwrap(), v);
    }

    #[test]
    fn vocabulary_rejects_bad_lines() {
        assert!(matches!(Vocabulary::parse("ok*\nBad*\n"), Err(Error::InvalidVocabulary { line: 2, .. })));
        assert!(Vocabulary::parse("two words\n").is_err());
        assert!(Vocabulary::parse("*\n").is_err());
        assert!(Vocabulary::parse("a*\na*\n").is_err());
    }
}
