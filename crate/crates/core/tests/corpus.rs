use proptest::prelude::*;

use prosody_coref::corpus::{
    corpus_to_string, parse_corpus, parse_corpus_str, serialize_corpus, word_frame_range, Document,
    NounPhrase, Token,
};
use prosody_coref::synth::{corrupt_labels, generate_documents, GenConfig};

#[test]
fn hundred_synthetic_documents_round_trip() {
    let cfg = GenConfig {
        n_docs: 100,
        seed: 11,
        ..GenConfig::default()
    };
    let mut docs = generate_documents(&cfg).unwrap();
    corrupt_labels(&mut docs[..50], 0.2, 0.2, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    serialize_corpus(&docs, &path).unwrap();
    let back = parse_corpus(&path).unwrap();
    assert_eq!(back, docs);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(corpus_to_string(&back), text);
}

#[test]
fn empty_list_gives_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.tsv");
    serialize_corpus(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
}

fn token(sent: usize, tok: usize, t: f64, d: f64, bits: u8) -> Token {
    Token {
        sent_idx: sent,
        tok_idx: tok,
        form: format!("w{tok}"),
        pos: if bits & 1 == 1 { "NN" } else { "DT" }.to_string(),
        start_time: t,
        end_time: t + d,
        gold_accent: bits & 2 != 0,
        gold_boundary: bits & 4 != 0,
        pred_accent: if bits & 8 != 0 {
            Some(bits & 16 != 0)
        } else {
            None
        },
        pred_boundary: if bits & 8 != 0 {
            Some(bits & 32 != 0)
        } else {
            None
        },
    }
}

/// Builds a valid document from raw random choices: sentence lengths,
/// per-token bits, and candidate NP spans kept only when they nest.
fn build(sent_lens: &[usize], bits: &[u8], spans: &[(usize, usize, u8)]) -> Document {
    let mut tokens = Vec::new();
    let mut sent_of = Vec::new();
    let mut t = 0.0;
    for (s, &len) in sent_lens.iter().enumerate() {
        for k in 0..len {
            let b = bits[tokens.len() % bits.len()];
            // millisecond grid so that times print and parse exactly
            let d = f64::from(20 + b as u32 % 50) / 1000.0;
            tokens.push(token(s, k, (t * 1000.0f64).round() / 1000.0, d, b));
            t = (t + d + 0.005) * 1.0;
            sent_of.push(s);
        }
    }
    for tok in &mut tokens {
        tok.end_time = ((tok.end_time) * 1000.0).round() / 1000.0;
    }
    let n = tokens.len();
    let mut nps: Vec<NounPhrase> = Vec::new();
    for &(a, l, c) in spans {
        let start = a % n;
        let end = (start + l % 4).min(n - 1);
        if sent_of[start] != sent_of[end] {
            continue;
        }
        let crosses = nps.iter().any(|p| {
            (p.start, p.end) == (start, end)
                || (p.start < start && start <= p.end && p.end < end)
                || (start < p.start && p.start <= end && end < p.end)
        });
        if !crosses {
            nps.push(NounPhrase {
                start,
                end,
                chain_id: if c % 5 == 0 {
                    None
                } else {
                    Some(u32::from(c % 4))
                },
            });
        }
    }
    nps.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    Document {
        doc_id: "doc".into(),
        tokens,
        nps,
        audio_path: None,
    }
}

proptest! {
    #[test]
    fn random_documents_round_trip(
        sent_lens in prop::collection::vec(1usize..8, 1..5),
        bits in prop::collection::vec(any::<u8>(), 1..40),
        spans in prop::collection::vec((0usize..100, 0usize..8, any::<u8>()), 0..12),
    ) {
        let doc = build(&sent_lens, &bits, &spans);
        doc.validate().unwrap();
        let text = corpus_to_string(std::slice::from_ref(&doc));
        let back = parse_corpus_str(&text).unwrap();
        prop_assert_eq!(&back[0], &doc);
        prop_assert_eq!(corpus_to_string(&back), text);
    }

    #[test]
    fn frame_ranges_are_non_empty_and_monotone(
        durations in prop::collection::vec(0.001f64..0.5, 1..30),
        gaps in prop::collection::vec(0.0f64..0.2, 1..30),
        n_frames in 1usize..400,
        hop in prop::sample::select(vec![0.005, 0.01, 0.02]),
    ) {
        let mut t = 0.0;
        let mut prev: Option<std::ops::Range<usize>> = None;
        for (i, d) in durations.iter().enumerate() {
            let tok = token(0, i, t, *d, 0);
            let r = word_frame_range(&tok, hop, n_frames);
            prop_assert!(!r.is_empty());
            prop_assert!(r.end <= n_frames);
            if let Some(p) = &prev {
                prop_assert!(r.start >= p.start && r.end >= p.end);
            }
            prev = Some(r);
            t += d + gaps[i % gaps.len()];
        }
    }
}
