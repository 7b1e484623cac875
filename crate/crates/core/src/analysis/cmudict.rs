use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::AnalysisError;

/// The 39 base ARPAbet phonemes used by the CMU dictionary.
pub const ARPABET: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

pub const VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phoneme {
    base: &'static str,
    stress: Option<u8>,
}

impl Phoneme {
    /// Parses `IH1`, `SH`, ... Stress digits are only accepted on vowels.
    pub fn parse(symbol: &str) -> Result<Self, String> {
        let (base, stress) = match symbol.as_bytes().last() {
            Some(&d @ b'0'..=b'9') => (&symbol[..symbol.len() - 1], Some(d - b'0')),
            _ => (symbol, None),
        };
        let base = lookup(base).ok_or_else(|| format!("unknown phoneme {symbol:?}"))?;
        if let Some(s) = stress {
            if s > 2 {
                return Err(format!("invalid stress digit in {symbol:?}"));
            }
            if !VOWELS.contains(&base) {
                return Err(format!("stress digit on consonant {symbol:?}"));
            }
        }
        Ok(Self { base, stress })
    }

    pub fn base(&self) -> &'static str {
        self.base
    }

    pub fn stress(&self) -> Option<u8> {
        self.stress
    }

    pub fn is_vowel(&self) -> bool {
        VOWELS.contains(&self.base)
    }
}

pub(crate) fn lookup(base: &str) -> Option<&'static str> {
    ARPABET.iter().copied().find(|p| *p == base)
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stress {
            Some(s) => write!(f, "{}{}", self.base, s),
            None => f.write_str(self.base),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPronunciation {
    /// Uppercase headword.
    pub word: String,
    /// 0 for the primary pronunciation, `n` for a `WORD(n)` line.
    pub variant: u32,
    pub phonemes: Vec<Phoneme>,
}

impl WordPronunciation {
    pub fn stripped(&self) -> Vec<&'static str> {
        self.phonemes.iter().map(Phoneme::base).collect()
    }
}

/// Parses cmudict text. Blank lines and `;;;` comments are skipped; a
/// trailing `# ...` comment on an entry line is ignored.
pub fn parse_cmudict(text: &str) -> Result<Vec<WordPronunciation>, AnalysisError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| AnalysisError::Dictionary { line, message };
        let body = match raw.find(" #") {
            Some(p) => &raw[..p],
            None => raw,
        };
        let body = body.trim();
        if body.is_empty() || body.starts_with(";;;") {
            continue;
        }
        let mut fields = body.split_whitespace();
        let head = fields.next().ok_or_else(|| err("missing headword".into()))?;
        let (word, variant) = parse_head(head).map_err(err)?;
        let phonemes = fields
            .map(Phoneme::parse)
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        if phonemes.is_empty() {
            return Err(err(format!("{head:?} has no phonemes")));
        }
        out.push(WordPronunciation {
            word,
            variant,
            phonemes,
        });
    }
    Ok(out)
}

fn parse_head(head: &str) -> Result<(String, u32), String> {
    let Some(open) = head.find('(') else {
        if head.contains(')') {
            return Err(format!("malformed variant marker in {head:?}"));
        }
        return Ok((head.to_uppercase(), 0));
    };
    let rest = &head[open + 1..];
    let digits = rest
        .strip_suffix(')')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| format!("malformed variant marker in {head:?}"))?;
    if open == 0 {
        return Err(format!("malformed variant marker in {head:?}"));
    }
    let variant = digits
        .parse()
        .map_err(|_| format!("malformed variant marker in {head:?}"))?;
    Ok((head[..open].to_uppercase(), variant))
}

/// Entries whose headword is in `vocab` (case-insensitive), and the vocabulary
/// words that have no entry, in vocabulary order.
pub fn restrict_to_vocab<'e, S: AsRef<str>>(
    entries: &'e [WordPronunciation],
    vocab: &[S],
) -> (Vec<&'e WordPronunciation>, Vec<String>) {
    let wanted: BTreeSet<String> = vocab.iter().map(|w| w.as_ref().trim().to_uppercase()).collect();
    let present: BTreeSet<&str> = entries.iter().map(|e| e.word.as_str()).collect();
    let kept = entries.iter().filter(|e| wanted.contains(&e.word)).collect();
    let mut seen = BTreeSet::new();
    let skipped = vocab
        .iter()
        .map(|w| w.as_ref().trim().to_uppercase())
        .filter(|w| !w.is_empty() && !present.contains(w.as_str()))
        .filter(|w| seen.insert(w.clone()))
        .collect();
    (kept, skipped)
}

impl WordPronunciation {
    /// Formats back to a dictionary line.
    pub fn to_line(&self) -> String {
        let mut s = self.word.to_string();
        if self.variant > 0 {
            s.push_str(&format!("({})", self.variant));
        }
        s.push(' ');
        for p in &self.phonemes {
            s.push(' ');
            s.push_str(&p.to_string());
        }
        s
    }
}
