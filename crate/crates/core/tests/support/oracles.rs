//! Brute-force references for the vertex metrics and the pair miner.

use wav2sem_core::analysis::{parse_cmudict, SimilarityTable};
use wav2sem_core::metrics::VertexSequence;

pub fn oracle_region(gt: &VertexSequence, pred: &VertexSequence, idx: &[usize]) -> f64 {
    let t_n = gt.frames();
    let mut per_frame = Vec::new();
    for t in 0..t_n {
        let flat_g: Vec<f64> = idx.iter().flat_map(|&v| gt.vertex(t, v)).collect();
        let flat_p: Vec<f64> = idx.iter().flat_map(|&v| pred.vertex(t, v)).collect();
        let sq: f64 = flat_g.iter().zip(&flat_p).map(|(a, b)| (a - b).powi(2)).sum();
        per_frame.push(sq.sqrt());
    }
    per_frame.iter().sum::<f64>() / t_n as f64
}

pub fn oracle_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn oracle_fdd(gt: &VertexSequence, pred: &VertexSequence, idx: &[usize]) -> f64 {
    let norm = |p: [f64; 3]| p.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut acc = 0.0;
    for &v in idx {
        let g: Vec<f64> = (0..gt.frames()).map(|t| norm(gt.vertex(t, v))).collect();
        let p: Vec<f64> = (0..pred.frames()).map(|t| norm(pred.vertex(t, v))).collect();
        acc += oracle_std(&g) - oracle_std(&p);
    }
    acc / idx.len() as f64
}

pub fn levenshtein(a: &[&str], b: &[&str]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn oracle_pairs(dict: &str, table: &SimilarityTable) -> Vec<(String, String)> {
    let entries = parse_cmudict(dict).unwrap();
    let mut out = Vec::new();
    for a in &entries {
        for b in &entries {
            if a.word >= b.word {
                continue;
            }
            let (sa, sb) = (a.stripped(), b.stripped());
            let ok = match levenshtein(&sa, &sb) {
                0 => true,
                1 if sa.len() == sb.len() => {
                    let i = (0..sa.len()).find(|&i| sa[i] != sb[i]).unwrap();
                    table.class_of(sa[i], sb[i]).is_some()
                }
                _ => false,
            };
            if ok {
                out.push((a.word.clone(), b.word.clone()));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
