use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::miner::NearHomophonePair;
use super::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct PairDistance {
    pub word_a: String,
    pub word_b: String,
    pub similarity_class: String,
    pub raw: f64,
    pub fused: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport {
    pub encoder: String,
    pub rows: Vec<PairDistance>,
    /// Arithmetic means over pairs; `None` when there are no pairs.
    pub mean_raw: Option<f64>,
    pub mean_fused: Option<f64>,
}

/// Published word-level distances for pretrained encoders, before and after
/// semantic fusion. Context only; not reproducible here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub encoder: &'static str,
    pub without_fusion: f64,
    pub with_fusion: f64,
}

pub const REFERENCE_DECOUPLING: [ReferenceRow; 2] = [
    ReferenceRow {
        encoder: "Wav2Vec 2.0",
        without_fusion: 0.0397,
        with_fusion: 0.0701,
    },
    ReferenceRow {
        encoder: "HuBERT",
        without_fusion: 0.2689,
        with_fusion: 0.2909,
    },
];

fn lookup<'f>(
    features: &'f BTreeMap<String, Vec<f64>>,
    word: &str,
) -> Result<&'f [f64], AnalysisError> {
    features
        .get(word)
        .map(Vec::as_slice)
        .ok_or_else(|| AnalysisError::MissingFeature(word.into()))
}

fn distance(word: &str, a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::FeatureDim {
            word: word.into(),
            got: b.len(),
            expected: a.len(),
        });
    }
    let d = libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
    if d.is_finite() {
        Ok(d)
    } else {
        Err(AnalysisError::NonFinite)
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

/// Euclidean distance per pair in both feature sets, plus their means.
pub fn decoupling_report(
    encoder: &str,
    pairs: &[NearHomophonePair],
    raw: &BTreeMap<String, Vec<f64>>,
    fused: &BTreeMap<String, Vec<f64>>,
) -> Result<DecouplingReport, AnalysisError> {
    let mut rows = Vec::with_capacity(pairs.len());
    for p in pairs {
        let ra = lookup(raw, &p.word_a)?;
        let rb = lookup(raw, &p.word_b)?;
        let fa = lookup(fused, &p.word_a)?;
        let fb = lookup(fused, &p.word_b)?;
        rows.push(PairDistance {
            word_a: p.word_a.clone(),
            word_b: p.word_b.clone(),
            similarity_class: p.similarity_class.clone(),
            raw: distance(&p.word_b, ra, rb)?,
            fused: distance(&p.word_b, fa, fb)?,
        });
    }
    Ok(DecouplingReport {
        encoder: encoder.into(),
        mean_raw: mean(rows.iter().map(|r| r.raw)),
        mean_fused: mean(rows.iter().map(|r| r.fused)),
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| String::from("n/a"), |v| format!("{v:.6e}"))
}

/// Plain-text table: pairs, means, then the published reference block.
pub fn render_text(report: &DecouplingReport, skipped: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "encoder: {}", report.encoder);
    let _ = writeln!(s, "pairs: {}", report.rows.len());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16} {:<16} {:<22} {:>14} {:>14}",
        "word_a", "word_b", "class", "raw_l2", "fused_l2"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:<16} {:<16} {:<22} {:>14.6e} {:>14.6e}",
            r.word_a, r.word_b, r.similarity_class, r.raw, r.fused
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "mean raw distance (over pairs):   {}", opt(report.mean_raw));
    let _ = writeln!(s, "mean fused distance (over pairs): {}", opt(report.mean_fused));
    let _ = writeln!(s);
    let _ = writeln!(s, "published reference, pretrained encoders (not computed here):");
    for r in REFERENCE_DECOUPLING {
        let _ = writeln!(
            s,
            "  {:<12} without fusion {:.4}  with fusion {:.4}",
            r.encoder, r.without_fusion, r.with_fusion
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "skipped words (not in dictionary): {}", skipped.len());
    for w in skipped {
        let _ = writeln!(s, "  {w}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Edit;
    use alloc::vec;

    fn pair(a: &str, b: &str) -> NearHomophonePair {
        NearHomophonePair {
            word_a: a.into(),
            word_b: b.into(),
            variant_a: 0,
            variant_b: 0,
            edit: Edit::Identical,
            similarity_class: "homophone".into(),
        }
    }

    fn feats(items: &[(&str, Vec<f64>)]) -> BTreeMap<String, Vec<f64>> {
        items.iter().map(|(w, v)| (String::from(*w), v.clone())).collect()
    }

    #[test]
    fn hand_distance() {
        let raw = feats(&[("A", vec![1.0, 1.0]), ("B", vec![1.0, 1.0])]);
        let fused = feats(&[("A", vec![0.0, 0.0]), ("B", vec![3.0, 4.0])]);
        let r = decoupling_report("test", &[pair("A", "B")], &raw, &fused).unwrap();
        assert_eq!(r.rows[0].raw, 0.0);
        assert_eq!(r.rows[0].fused, 5.0);
        assert_eq!(r.mean_fused, Some(5.0));
    }

    #[test]
    fn identical_sets_give_identical_columns() {
        let raw = feats(&[("A", vec![1.0, 2.0]), ("B", vec![0.5, -1.0]), ("C", vec![3.0, 0.0])]);
        let r = decoupling_report("t", &[pair("A", "B"), pair("B", "C")], &raw, &raw).unwrap();
        assert!(r.rows.iter().all(|x| x.raw == x.fused));
        assert_eq!(r.mean_raw, r.mean_fused);
    }

    #[test]
    fn missing_word_is_named() {
        let raw = feats(&[("A", vec![1.0])]);
        assert_eq!(
            decoupling_report("t", &[pair("A", "B")], &raw, &raw),
            Err(AnalysisError::MissingFeature("B".into()))
        );
    }

    #[test]
    fn empty_report_renders() {
        let empty = BTreeMap::new();
        let r = decoupling_report("t", &[], &empty, &empty).unwrap();
        assert_eq!(r.mean_raw, None);
        let text = render_text(&r, &["ZEBRA".into()]);
        assert!(text.contains("pairs: 0"));
        assert!(text.contains("0.0397"));
        assert!(text.contains("ZEBRA"));
    }
}
