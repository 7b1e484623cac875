use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::cmudict::WordPronunciation;
use super::similarity::SimilarityTable;
use super::AnalysisError;

pub const HOMOPHONE_CLASS: &str = "homophone";
pub const MANUAL_CLASS: &str = "manual";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Edit {
    /// Same stress-stripped phoneme sequence.
    Identical,
    Substitute {
        position: usize,
        from: &'static str,
        to: &'static str,
    },
    /// Added by a curation list, not by the rule.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NearHomophonePair {
    pub word_a: String,
    pub word_b: String,
    pub variant_a: u32,
    pub variant_b: u32,
    /// Edit turning `word_a`'s pronunciation into `word_b`'s.
    pub edit: Edit,
    pub similarity_class: String,
}

fn relate(a: &[&'static str], b: &[&'static str], table: &SimilarityTable) -> Option<(Edit, String)> {
    if a.len() != b.len() {
        return None;
    }
    let mut diff = a.iter().zip(b).enumerate().filter(|(_, (x, y))| x != y);
    match (diff.next(), diff.next()) {
        (None, _) => Some((Edit::Identical, HOMOPHONE_CLASS.into())),
        (Some((position, (&from, &to))), None) => table.class_of(from, to).map(|class| {
            (Edit::Substitute { position, from, to }, class.into())
        }),
        _ => None,
    }
}

/// All unordered word pairs with a pronunciation pair that is identical after
/// stress stripping, or differs by one substitution inside a similarity
/// class. When several pronunciation pairs qualify, a homophone wins, then
/// the lowest variant numbers. Output is sorted with `word_a < word_b`.
pub fn mine_pairs<'e>(
    entries: impl IntoIterator<Item = &'e WordPronunciation>,
    table: &SimilarityTable,
) -> Vec<NearHomophonePair> {
    let mut by_word: BTreeMap<&str, Vec<(u32, Vec<&'static str>)>> = BTreeMap::new();
    for e in entries {
        by_word.entry(e.word.as_str()).or_default().push((e.variant, e.stripped()));
    }
    for prons in by_word.values_mut() {
        prons.sort();
        prons.dedup_by_key(|p| p.0);
    }
    let words: Vec<_> = by_word.iter().collect();
    let mut out = Vec::new();
    for (i, (wa, pa)) in words.iter().enumerate() {
        for (wb, pb) in &words[i + 1..] {
            let mut best: Option<(bool, u32, u32, Edit, String)> = None;
            for (va, sa) in pa.iter() {
                for (vb, sb) in pb.iter() {
                    if let Some((edit, class)) = relate(sa, sb, table) {
                        let key = (edit != Edit::Identical, *va, *vb, edit, class);
                        if best.as_ref().is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                            best = Some(key);
                        }
                    }
                }
            }
            if let Some((_, variant_a, variant_b, edit, similarity_class)) = best {
                out.push(NearHomophonePair {
                    word_a: String::from(**wa),
                    word_b: String::from(**wb),
                    variant_a,
                    variant_b,
                    edit,
                    similarity_class,
                });
            }
        }
    }
    out
}

/// Manual include/exclude list applied after mining.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Curation {
    include: Vec<(String, String)>,
    exclude: Vec<(String, String)>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.to_uppercase(), b.to_uppercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Curation {
    /// Lines of `+ WORD WORD` or `- WORD WORD`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let pair = match f.as_slice() {
                [_, a, b] if a.eq_ignore_ascii_case(b) => {
                    return Err(AnalysisError::Curation {
                        line,
                        message: format!("pair of identical words {a:?}"),
                    })
                }
                [_, a, b] => ordered(a, b),
                _ => {
                    return Err(AnalysisError::Curation {
                        line,
                        message: "expected `+ WORD WORD` or `- WORD WORD`".into(),
                    })
                }
            };
            match f[0] {
                "+" => c.include.push(pair),
                "-" => c.exclude.push(pair),
                op => {
                    return Err(AnalysisError::Curation {
                        line,
                        message: format!("unknown operation {op:?}"),
                    })
                }
            }
        }
        Ok(c)
    }

    pub fn apply(&self, mut pairs: Vec<NearHomophonePair>) -> Vec<NearHomophonePair> {
        pairs.retain(|p| {
            !self
                .exclude
                .iter()
                .any(|(a, b)| *a == p.word_a && *b == p.word_b)
        });
        for (a, b) in &self.include {
            let present = pairs.iter().any(|p| p.word_a == *a && p.word_b == *b);
            let excluded = self.exclude.iter().any(|e| e.0 == *a && e.1 == *b);
            if !present && !excluded {
                pairs.push(NearHomophonePair {
                    word_a: a.clone(),
                    word_b: b.clone(),
                    variant_a: 0,
                    variant_b: 0,
                    edit: Edit::Manual,
                    similarity_class: MANUAL_CLASS.into(),
                });
            }
        }
        pairs.sort_by(|x, y| (&x.word_a, &x.word_b).cmp(&(&y.word_a, &y.word_b)));
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::parse_cmudict;

    fn mine(text: &str) -> Vec<NearHomophonePair> {
        mine_pairs(&parse_cmudict(text).unwrap(), &SimilarityTable::default())
    }

    #[test]
    fn sheep_ship() {
        let p = mine("SHIP  SH IH1 P\nSHEEP  SH IY1 P\n");
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].word_a.as_str(), p[0].word_b.as_str()), ("SHEEP", "SHIP"));
        assert_eq!(
            p[0].edit,
            Edit::Substitute {
                position: 1,
                from: "IY",
                to: "IH"
            }
        );
        assert_eq!(p[0].similarity_class, "vowel_front_high");
    }

    #[test]
    fn homophones_ignore_stress_and_prefer_identity() {
        let p = mine("READ  R IY1 D\nREAD(2)  R EH1 D\nRED  R EH0 D\nREED  R IY1 D\n");
        let names: Vec<_> = p.iter().map(|p| (p.word_a.as_str(), p.word_b.as_str(), p.edit)).collect();
        assert!(names.contains(&("READ", "RED", Edit::Identical)));
        assert!(names.contains(&("READ", "REED", Edit::Identical)));
        // RED/REED differ by EH/IY, which share no class
        assert!(!names.iter().any(|n| n.0 == "RED" && n.1 == "REED"));
        let rr = p.iter().find(|p| p.word_a == "READ" && p.word_b == "RED").unwrap();
        assert_eq!((rr.variant_a, rr.variant_b), (2, 0));
    }

    #[test]
    fn rejects_two_substitutions_and_length_changes() {
        assert!(mine("TIP  T IH1 P\nDEEP  D IY1 P\n").is_empty());
        assert!(mine("AT  AE1 T\nCAT  K AE1 T\n").is_empty());
    }

    #[test]
    fn curation() {
        let p = mine("SHIP  SH IH1 P\nSHEEP  SH IY1 P\nTIP  T IH1 P\nDIP  D IH1 P\n");
        assert_eq!(p.len(), 2);
        let c = Curation::parse("# c\n- ship sheep\n+ TIP SHIP\n").unwrap();
        let q = c.apply(p);
        let names: Vec<_> = q.iter().map(|p| (p.word_a.as_str(), p.word_b.as_str())).collect();
        assert_eq!(names, [("DIP", "TIP"), ("SHIP", "TIP")]);
        assert_eq!(q[1].edit, Edit::Manual);
        assert!(Curation::parse("* A B").is_err());
        assert!(Curation::parse("+ A").is_err());
        assert!(Curation::parse("+ A a").is_err());
    }
}
