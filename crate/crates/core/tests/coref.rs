use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prosody_coref::coref::{
    apply_chains, chains_from_tree, decode, decode_coref_model, encode_coref_model, mentions,
    train_coref, AntecedentTree, FeatureConfig,
};
use prosody_coref::corpus::{Document, NounPhrase, Token};
use prosody_coref::metrics::{conll, Partition};

const NOUNS: [&str; 8] = [
    "dog", "house", "river", "teacher", "car", "garden", "letter", "city",
];

fn tok(i: usize, form: &str, pos: &str) -> Token {
    Token {
        sent_idx: 0,
        tok_idx: i,
        form: form.into(),
        pos: pos.into(),
        start_time: i as f64 * 0.3,
        end_time: i as f64 * 0.3 + 0.25,
        gold_accent: false,
        gold_boundary: false,
        pred_accent: None,
        pred_boundary: None,
    }
}

/// Documents of `the NOUN sat` clauses where two NPs corefer exactly when
/// they share their noun.
fn toy_doc(rng: &mut ChaCha8Rng, id: usize) -> Document {
    let mut tokens = Vec::new();
    let mut nps = Vec::new();
    for _ in 0..rng.gen_range(4..10) {
        let k = rng.gen_range(0..4);
        let noun = NOUNS[(id + k) % NOUNS.len()];
        let i = tokens.len();
        tokens.push(tok(i, "the", "DT"));
        tokens.push(tok(i + 1, noun, "NN"));
        tokens.push(tok(i + 2, "sat", "VBD"));
        nps.push(NounPhrase {
            start: i,
            end: i + 1,
            chain_id: Some(((id + k) % NOUNS.len()) as u32),
        });
    }
    let mut doc = Document {
        doc_id: format!("toy{id}"),
        tokens,
        nps,
        audio_path: None,
    };
    // nouns used once are singletons
    let chains = doc.gold_chains();
    for c in chains.iter().filter(|c| c.len() == 1) {
        doc.nps[c[0]].chain_id = None;
    }
    doc.validate().unwrap();
    doc
}

fn toy_corpus(n: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| toy_doc(&mut rng, i)).collect()
}

#[test]
fn separable_toy_corpus_is_fitted_within_five_epochs() {
    let docs = toy_corpus(30, 1);
    let views = vec![None; docs.len()];
    let report = train_coref(&docs, &views, &FeatureConfig::baseline(), 5, 0).unwrap();
    assert!(
        report.tree_errors_per_epoch.contains(&0),
        "{:?}",
        report.tree_errors_per_epoch
    );
    assert_eq!(*report.updates_per_epoch.last().unwrap(), 0);

    for doc in toy_corpus(10, 2) {
        let tree = decode(&report.model, &doc, None);
        assert!(tree.is_valid());
        let mut out = doc.clone();
        apply_chains(&mut out, &chains_from_tree(&tree));
        let r = conll(
            &Partition::from_document(&doc),
            &Partition::from_document(&out),
        );
        // B3 F = 1 only for identical partitions; MUC is 0 on all-singleton documents
        assert!((r.b3.f1 - 1.0).abs() < 1e-12, "{}", doc.doc_id);
    }
}

#[test]
fn training_is_deterministic_and_models_round_trip() {
    let docs = toy_corpus(20, 3);
    let views = vec![None; docs.len()];
    let cfg = FeatureConfig::baseline();
    let a = train_coref(&docs, &views, &cfg, 3, 7).unwrap().model;
    let b = train_coref(&docs, &views, &cfg, 3, 7).unwrap().model;
    assert_eq!(encode_coref_model(&a), encode_coref_model(&b));
    let back = decode_coref_model(&encode_coref_model(&a)).unwrap();
    for doc in &docs {
        assert_eq!(decode(&a, doc, None), decode(&back, doc, None));
    }
    assert!(train_coref(&docs, &views, &cfg, 0, 7).is_err());
}

#[test]
fn tree_readout() {
    let all_root = AntecedentTree {
        parent: vec![None; 4],
    };
    assert_eq!(chains_from_tree(&all_root).len(), 4);
    let path = AntecedentTree {
        parent: vec![None, Some(0), Some(1)],
    };
    assert_eq!(chains_from_tree(&path), vec![vec![0, 1, 2]]);
    let doc = toy_corpus(1, 4).remove(0);
    let ranks: Vec<usize> = mentions(&doc).iter().map(|m| m.rank).collect();
    assert_eq!(ranks, (0..doc.nps.len()).collect::<Vec<_>>());
}
