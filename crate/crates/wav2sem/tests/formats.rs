use std::path::Path;

use proptest::prelude::*;
use wav2sem::io::embedding::{decode_embedding, encode_embedding};
use wav2sem::io::frames::{decode_frames, encode_frames};
use wav2sem::io::manifest::{parse_manifest, record_line, ManifestRecord};
use wav2sem::io::vertex::{decode_vertices, encode_vertices};
use wav2sem::io::wav::{encode_wav, parse_wav};
use wav2sem_core::metrics::VertexSequence;
use wav2sem_core::{AudioClip, EmbeddingKind, SemanticEmbedding, Tensor};

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn wav_round_trip_on_16_bit_grid(q in prop::collection::vec(any::<i16>(), 0..400), rate in 1u32..96_000) {
        let clip = AudioClip::new(q.iter().map(|&v| v as f64 / 32768.0).collect(), rate).unwrap();
        let back = parse_wav(&encode_wav(&clip)).unwrap();
        prop_assert_eq!(back.sample_rate(), rate);
        prop_assert_eq!(bits(back.samples()), bits(clip.samples()));
    }

    #[test]
    fn wav_truncation_never_panics(q in prop::collection::vec(any::<i16>(), 1..50), cut in 0usize..200) {
        let clip = AudioClip::new(q.iter().map(|&v| v as f64 / 32768.0).collect(), 16_000).unwrap();
        let bytes = encode_wav(&clip);
        let cut = cut.min(bytes.len());
        let _ = parse_wav(&bytes[..cut]);
    }

    #[test]
    fn embedding_round_trip(values in prop::collection::vec(finite(), 1..64), mean in any::<bool>()) {
        let kind = if mean { EmbeddingKind::Mean } else { EmbeddingKind::Cls };
        let e = SemanticEmbedding::new(values, kind).unwrap();
        let back = decode_embedding(&encode_embedding(&e)).unwrap();
        prop_assert_eq!(back.kind(), kind);
        prop_assert_eq!(bits(back.values()), bits(e.values()));
    }

    #[test]
    fn frames_round_trip((n, c, data) in (1usize..8, 1usize..8).prop_flat_map(|(n, c)| {
        (Just(n), Just(c), prop::collection::vec(finite(), n * c))
    })) {
        let t = Tensor::new(vec![n, c], data).unwrap();
        let back = decode_frames(&encode_frames(&t).unwrap()).unwrap();
        prop_assert_eq!(back.shape(), t.shape());
        prop_assert_eq!(bits(back.data()), bits(t.data()));
    }

    #[test]
    fn vertices_round_trip((t, v, data) in (1usize..6, 1usize..6).prop_flat_map(|(t, v)| {
        (Just(t), Just(v), prop::collection::vec(-10.0f64..10.0, t * v * 3))
    }), fps in 1.0f32..120.0) {
        let s = VertexSequence::new(t, v, fps, data).unwrap();
        prop_assert_eq!(decode_vertices(&encode_vertices(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn manifest_record_round_trip(
        transcript in "[a-z ]{0,20}",
        spans in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 0..4),
    ) {
        // consecutive, non-overlapping spans
        let mut t = 0.0;
        let words: Vec<(String, f64, f64)> = spans
            .iter()
            .enumerate()
            .map(|(i, (gap, len))| {
                let start = t + gap;
                t = start + len;
                (format!("W{i}"), start, t)
            })
            .collect();
        let rec = ManifestRecord {
            audio_path: "a.wav".into(),
            embedding_path: "a.emb".into(),
            transcript: transcript.clone(),
            words: Some(words.clone()),
        };
        let m = parse_manifest(&record_line(&rec), Path::new("/base")).unwrap();
        prop_assert_eq!(m.len(), 1);
        prop_assert_eq!(&m[0].transcript, &transcript);
        let got: Vec<(String, f64, f64)> = m[0].words.iter().map(|w| (w.word.clone(), w.start_s, w.end_s)).collect();
        prop_assert_eq!(got, words);
    }
}
