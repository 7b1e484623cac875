//! Small line-oriented text formats: region masks, vocabularies and the
//! training log.

use std::path::Path;

use wav2sem_core::metrics::RegionMask;
use wav2sem_core::training::StepRecord;

use crate::error::{read_text, write_bytes, Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// One vertex index per line; `#` starts a comment.
pub fn parse_mask(name: &str, text: &str) -> Result<RegionMask, String> {
    let mut indices = Vec::new();
    for (line, body) in content_lines(text) {
        let i = body
            .parse::<usize>()
            .map_err(|_| format!("line {line}: {body:?} is not a vertex index"))?;
        indices.push(i);
    }
    RegionMask::new(name, indices).map_err(|e| e.to_string())
}

pub fn read_mask(path: &Path, name: &str) -> Result<RegionMask> {
    parse_mask(name, &read_text(path)?).map_err(|m| Error::parse(path, m))
}

pub fn mask_text(mask: &RegionMask) -> String {
    let mut s = format!("# {} region, one vertex index per line\n", mask.name());
    for i in mask.indices() {
        s.push_str(&format!("{i}\n"));
    }
    s
}

/// One word per line; `#` starts a comment.
pub fn parse_vocab(text: &str) -> Vec<String> {
    content_lines(text).map(|(_, w)| w.to_uppercase()).collect()
}

pub fn read_vocab(path: &Path) -> Result<Vec<String>> {
    Ok(parse_vocab(&read_text(path)?))
}

/// Tab-separated `step epoch sample_id loss`, with a header row. Losses use
/// the shortest representation that round-trips.
pub fn train_log_text(records: &[StepRecord]) -> String {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    w.write_record(["step", "epoch", "sample_id", "loss"]).unwrap();
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.epoch.to_string(),
            r.sample_id.to_string(),
            r.loss.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn parse_train_log(text: &str) -> Result<Vec<StepRecord>, String> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let field = |k: usize| row.get(k).ok_or_else(|| format!("row {}: missing column {k}", i + 1));
        let bad = |k: usize| format!("row {}: bad value in column {k}", i + 1);
        out.push(StepRecord {
            step: field(0)?.parse().map_err(|_| bad(0))?,
            epoch: field(1)?.parse().map_err(|_| bad(1))?,
            sample_id: field(2)?.parse().map_err(|_| bad(2))?,
            loss: field(3)?.parse().map_err(|_| bad(3))?,
        });
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_parsing() {
        let m = parse_mask("lip", "# lips\n3\n1 # corner\n\n3\n").unwrap();
        assert_eq!(m.indices(), &[1, 3]);
        assert_eq!(parse_mask("lip", &mask_text(&m)).unwrap(), m);
        assert!(parse_mask("lip", "1\nx\n").unwrap_err().contains("line 2"));
        assert!(parse_mask("lip", "# nothing\n").is_err());
    }

    #[test]
    fn vocab_parsing() {
        assert_eq!(parse_vocab("# v\nsheep\n ship \n\n"), ["SHEEP", "SHIP"]);
    }

    #[test]
    fn train_log_round_trip() {
        let recs = vec![
            StepRecord { step: 1, epoch: 0, sample_id: 3, loss: 0.1 + 0.2 },
            StepRecord { step: 2, epoch: 1, sample_id: 0, loss: 1e-300 },
        ];
        let text = train_log_text(&recs);
        assert!(text.starts_with("step\tepoch\tsample_id\tloss\n"));
        assert_eq!(parse_train_log(&text).unwrap(), recs);
    }
}
