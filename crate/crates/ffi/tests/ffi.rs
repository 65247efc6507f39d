use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use prosody_coref::acoustic::extract_features;
use prosody_coref::detector::{labelled_windows, save_model, train, EventKind, TrainConfig, W_MAX};
use prosody_coref::synth::{generate, write_corpus, GenConfig, CORPUS_FILE, MANIFEST_FILE};
use prosody_coref_ffi::*;

fn c(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn small_corpus(dir: &Path) -> GenConfig {
    let cfg = GenConfig {
        n_docs: 8,
        tokens_per_doc: 20..=30,
        seed: 5,
        ..GenConfig::default()
    };
    let mut corpus = generate(&cfg).unwrap();
    write_corpus(&mut corpus, dir).unwrap();
    cfg
}

#[test]
fn null_and_bad_arguments_are_reported() {
    let mut corpus: *mut PcCorpus = ptr::null_mut();
    let st = unsafe { pc_corpus_load(ptr::null(), ptr::null(), &mut corpus) };
    assert_eq!(st, PcStatus::NullArgument);
    assert!(last_error().contains("path"));
    assert!(corpus.is_null());

    let missing = CString::new("/nonexistent/corpus.tsv").unwrap();
    assert_eq!(
        unsafe { pc_corpus_load(missing.as_ptr(), ptr::null(), &mut corpus) },
        PcStatus::Io
    );
    assert_eq!(unsafe { pc_corpus_document_count(ptr::null()) }, 0);
    unsafe {
        pc_corpus_free(ptr::null_mut());
        pc_coref_model_free(ptr::null_mut());
        pc_prosody_model_free(ptr::null_mut());
    }
    let mut score = PcScore::default();
    assert_eq!(
        unsafe { pc_score(ptr::null(), ptr::null(), &mut score) },
        PcStatus::NullArgument
    );
    let v = unsafe { CStr::from_ptr(pc_version()) }.to_str().unwrap();
    assert!(!v.is_empty());
}

#[test]
fn malformed_corpus_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tsv");
    std::fs::write(&path, "#begin document d\nd\t0\t0\tx\n#end document\n").unwrap();
    let mut corpus = ptr::null_mut();
    assert_eq!(
        unsafe { pc_corpus_load(c(&path).as_ptr(), ptr::null(), &mut corpus) },
        PcStatus::Parse
    );
    assert!(last_error().contains("line 2"), "{}", last_error());
}

#[test]
fn coref_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let tsv = c(&dir.path().join(CORPUS_FILE));
    unsafe {
        let mut key = ptr::null_mut();
        assert_eq!(
            pc_corpus_load(tsv.as_ptr(), ptr::null(), &mut key),
            PcStatus::Ok
        );
        assert_eq!(last_error(), "");
        assert_eq!(pc_corpus_document_count(key), 8);
        let mut n = 0usize;
        assert_eq!(pc_corpus_token_count(key, 0, &mut n), PcStatus::Ok);
        assert!(n >= 20);
        assert_eq!(
            pc_corpus_token_count(key, 8, &mut n),
            PcStatus::InvalidArgument
        );

        let mut model = ptr::null_mut();
        let st = pc_coref_train(key, 3, 0, 0, 3, 0, &mut model);
        assert_eq!(st, PcStatus::InvalidArgument);
        let st = pc_coref_train(
            key,
            PcProsodyFeature::Accent as i32,
            PcScope::Short as i32,
            PcLabelSource::Gold as i32,
            5,
            1,
            &mut model,
        );
        assert_eq!(st, PcStatus::Ok, "{}", last_error());

        let crm = c(&dir.path().join("m.crm"));
        assert_eq!(pc_coref_model_save(model, crm.as_ptr()), PcStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(pc_coref_model_load(crm.as_ptr(), &mut loaded), PcStatus::Ok);

        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        pc_corpus_load(tsv.as_ptr(), ptr::null(), &mut a);
        pc_corpus_load(tsv.as_ptr(), ptr::null(), &mut b);
        assert_eq!(
            pc_coref_predict(model, a, PcLabelSource::Gold as i32),
            PcStatus::Ok
        );
        assert_eq!(
            pc_coref_predict(loaded, b, PcLabelSource::Gold as i32),
            PcStatus::Ok
        );

        let mut s1 = PcScore::default();
        let mut s2 = PcScore::default();
        assert_eq!(pc_score(key, a, &mut s1), PcStatus::Ok);
        assert_eq!(pc_score(key, b, &mut s2), PcStatus::Ok);
        assert_eq!(s1, s2);
        assert!(s1.conll > 0.0 && s1.conll <= 100.0);
        let mut same = PcScore::default();
        assert_eq!(pc_score(key, key, &mut same), PcStatus::Ok);
        assert!((same.conll - 100.0).abs() < 1e-9);

        let out = c(&dir.path().join("resp.tsv"));
        assert_eq!(pc_corpus_save(a, out.as_ptr()), PcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(
            pc_corpus_load(out.as_ptr(), ptr::null(), &mut back),
            PcStatus::Ok
        );
        let mut s3 = PcScore::default();
        assert_eq!(pc_score(key, back, &mut s3), PcStatus::Ok);
        assert_eq!(s1, s3);

        for p in [key, a, b, back] {
            pc_corpus_free(p);
        }
        pc_coref_model_free(model);
        pc_coref_model_free(loaded);
    }
}

#[test]
fn detector_annotates_from_audio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_corpus(dir.path());
    let docs = prosody_coref::corpus::parse_corpus(dir.path().join(CORPUS_FILE)).unwrap();
    let audio = generate(&cfg).unwrap().audio;
    let mut data = Vec::new();
    for (d, a) in docs.iter().zip(&audio) {
        data.extend(
            labelled_windows(d, &extract_features(a).unwrap(), EventKind::Accent, W_MAX).unwrap(),
        );
    }
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let pmd = dir.path().join("acc.pmd");
    save_model(&train(&data, EventKind::Accent, &cfg).unwrap(), &pmd).unwrap();

    let tsv = c(&dir.path().join(CORPUS_FILE));
    let manifest = c(&dir.path().join(MANIFEST_FILE));
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(
            pc_prosody_model_load(c(&pmd).as_ptr(), &mut model),
            PcStatus::Ok
        );
        let mut bad = ptr::null_mut();
        assert_eq!(
            pc_prosody_model_load(tsv.as_ptr(), &mut bad),
            PcStatus::ModelFormat
        );

        let mut no_audio = ptr::null_mut();
        pc_corpus_load(tsv.as_ptr(), ptr::null(), &mut no_audio);
        assert_eq!(pc_prosody_annotate(model, no_audio), PcStatus::Audio);

        let mut corpus = ptr::null_mut();
        assert_eq!(
            pc_corpus_load(tsv.as_ptr(), manifest.as_ptr(), &mut corpus),
            PcStatus::Ok
        );
        assert_eq!(
            pc_prosody_annotate(model, corpus),
            PcStatus::Ok,
            "{}",
            last_error()
        );
        let out = dir.path().join("pred.tsv");
        assert_eq!(pc_corpus_save(corpus, c(&out).as_ptr()), PcStatus::Ok);
        let pred = prosody_coref::corpus::parse_corpus(&out).unwrap();
        assert!(pred
            .iter()
            .flat_map(|d| &d.tokens)
            .all(|t| t.pred_accent.is_some()));

        pc_corpus_free(no_audio);
        pc_corpus_free(corpus);
        pc_prosody_model_free(model);
    }
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/prosody_coref.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pc_last_error",
        "pc_corpus_load",
        "pc_corpus_free",
        "pc_prosody_annotate",
        "pc_coref_train",
        "pc_coref_predict",
        "pc_score",
        "typedef struct PcCorpus PcCorpus",
        "PC_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"prosody_coref.h\"\nint main(void) { PcCorpus *c = 0; PcStatus s = pc_corpus_load(\"x\", 0, &c); \
         pc_corpus_free(c); return s == PC_STATUS_OK; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(_) => eprintln!("no C compiler found; skipped the compile check"),
    }
}
