use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::cmudict::lookup;
use super::AnalysisError;

const DEFAULT_TABLE: &str = include_str!("../../data/similarity.txt");

/// Named classes of mutually substitutable base phonemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityTable {
    classes: Vec<(String, Vec<&'static str>)>,
}

impl SimilarityTable {
    /// Lines of `name: PH PH ...`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut classes: Vec<(String, Vec<&'static str>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| AnalysisError::Similarity { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (name, members) = body
                .split_once(':')
                .ok_or_else(|| err("expected `name: PH PH ...`".into()))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(err("empty class name".into()));
            }
            if classes.iter().any(|(n, _)| n == name) {
                return Err(err(format!("duplicate class {name:?}")));
            }
            let mut phonemes = Vec::new();
            for sym in members.split_whitespace() {
                let p = lookup(sym).ok_or_else(|| err(format!("unknown base phoneme {sym:?}")))?;
                if !phonemes.contains(&p) {
                    phonemes.push(p);
                }
            }
            if phonemes.len() < 2 {
                return Err(err(format!("class {name:?} needs at least two phonemes")));
            }
            classes.push((name.into(), phonemes));
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &[&'static str])> {
        self.classes.iter().map(|(n, p)| (n.as_str(), p.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// First class, in table order, listing both `a` and `b`.
    pub fn class_of(&self, a: &str, b: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(_, p)| p.contains(&a) && p.contains(&b))
            .map(|(n, _)| n.as_str())
    }
}

impl Default for SimilarityTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled similarity table is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_covers_named_examples() {
        let t = SimilarityTable::default();
        assert_eq!(t.class_of("IY", "IH"), Some("vowel_front_high"));
        assert_eq!(t.class_of("IH", "IY"), Some("vowel_front_high"));
        assert_eq!(t.class_of("T", "D"), Some("voicing_alveolar"));
        assert_eq!(t.class_of("P", "B"), Some("voicing_bilabial"));
        assert_eq!(t.class_of("K", "T"), Some("stop_voiceless"));
        assert_eq!(t.class_of("IY", "P"), None);
        assert_eq!(t.class_of("M", "B"), None);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            SimilarityTable::parse("a: IY IH\nb IY"),
            Err(AnalysisError::Similarity { line: 2, .. })
        ));
        assert!(SimilarityTable::parse("a: IY XX").is_err());
        assert!(SimilarityTable::parse("a: IY1 IH").is_err());
        assert!(SimilarityTable::parse("a: IY").is_err());
        assert!(SimilarityTable::parse(": IY IH").is_err());
        assert!(SimilarityTable::parse("a: IY IH\na: P B").is_err());
        assert!(SimilarityTable::parse("# only comments\n\n").unwrap().is_empty());
    }
}
