//! C ABI over the prosody-coref library.
//!
//! Objects are opaque handles created by `*_load` / `*_train` functions and
//! released with the matching `*_free`. Every fallible function returns a
//! `PcStatus`; on failure `pc_last_error` describes the error of the most
//! recent failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use prosody_coref::annotation::{select_view, LabelSource};
use prosody_coref::cache::document_frames;
use prosody_coref::coref::{
    apply_chains, chains_from_tree, decode, load_coref_model, save_coref_model, train_coref,
    CorefModel, FeatureConfig, ProsodyFeature, Scope,
};
use prosody_coref::corpus::{
    attach_audio, parse_corpus, read_manifest, serialize_corpus, Document,
};
use prosody_coref::detector::{annotate_document, load_model, ProsodyModel};
use prosody_coref::metrics::score_documents;
use prosody_coref::Error;

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Audio = 5,
    ModelFormat = 6,
    InvalidArgument = 7,
    MissingData = 8,
    Panic = 9,
}

/// Values accepted for `prosody_feature` arguments.
#[repr(i32)]
pub enum PcProsodyFeature {
    None = 0,
    Accent = 1,
    Nuclear = 2,
}

/// Values accepted for `scope` arguments.
#[repr(i32)]
pub enum PcScope {
    Short = 0,
    All = 1,
}

/// Values accepted for `source` arguments.
#[repr(i32)]
pub enum PcLabelSource {
    Gold = 0,
    Pred = 1,
}

/// Corpus documents with their annotations.
pub struct PcCorpus {
    docs: Vec<Document>,
}

/// A trained pitch-accent or boundary detector.
pub struct PcProsodyModel {
    model: ProsodyModel,
}

/// A trained coreference model.
pub struct PcCorefModel {
    model: CorefModel,
}

/// Corpus-level scores; precision, recall and F1 in [0, 1], conll in [0, 100].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PcScore {
    pub muc_p: f64,
    pub muc_r: f64,
    pub muc_f: f64,
    pub b3_p: f64,
    pub b3_r: f64,
    pub b3_f: f64,
    pub ceafe_p: f64,
    pub ceafe_r: f64,
    pub ceafe_f: f64,
    pub conll: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => PcStatus::Io,
            Error::Parse { .. } | Error::Timing { .. } | Error::CrossingSpans { .. } => {
                PcStatus::Parse
            }
            Error::WavNotMono(_)
            | Error::WavNotPcm16 { .. }
            | Error::WavTruncated(_)
            | Error::WavMalformed(_)
            | Error::EmptySignal
            | Error::SampleRateTooLow(_)
            | Error::MissingAudio(_) => PcStatus::Audio,
            Error::ModelFormat(_) => PcStatus::ModelFormat,
            Error::ShapeMismatch { .. }
            | Error::OutOfRange { .. }
            | Error::LengthMismatch(..)
            | Error::Config(_) => PcStatus::InvalidArgument,
            Error::EmptyCorpus
            | Error::SingleClass
            | Error::MissingPrediction { .. }
            | Error::NoGoldChains => PcStatus::MissingData,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: PcStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            PcStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return fail(PcStatus::NullArgument, format!("{name} is null"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(PcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")),
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(
        || fail(PcStatus::NullArgument, format!("{name} is null")),
        Ok,
    )
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(
        || fail(PcStatus::NullArgument, format!("{name} is null")),
        Ok,
    )
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(PcStatus::NullArgument, "output pointer is null");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn feature_arg(v: i32) -> Result<ProsodyFeature, Failure> {
    match v {
        0 => Ok(ProsodyFeature::None),
        1 => Ok(ProsodyFeature::AccentPresence),
        2 => Ok(ProsodyFeature::NuclearPresence),
        _ => fail(
            PcStatus::InvalidArgument,
            format!("unknown prosodic feature code {v}"),
        ),
    }
}

fn scope_arg(v: i32) -> Result<Scope, Failure> {
    match v {
        0 => Ok(Scope::ShortNp),
        1 => Ok(Scope::AllNp),
        _ => fail(PcStatus::InvalidArgument, format!("unknown scope code {v}")),
    }
}

fn source_arg(v: i32) -> Result<LabelSource, Failure> {
    match v {
        0 => Ok(LabelSource::Gold),
        1 => Ok(LabelSource::Predicted),
        _ => fail(
            PcStatus::InvalidArgument,
            format!("unknown label source code {v}"),
        ),
    }
}

/// Message for the last failing call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a corpus TSV. `manifest` may be null; otherwise it maps document
/// ids to WAV files for the detector.
///
/// # Safety
/// `path` and a non-null `manifest` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_corpus_load(
    path: *const c_char,
    manifest: *const c_char,
    out: *mut *mut PcCorpus,
) -> PcStatus {
    guard(|| {
        let mut docs = parse_corpus(path_arg(path, "path")?)?;
        if !manifest.is_null() {
            attach_audio(&mut docs, &read_manifest(path_arg(manifest, "manifest")?)?);
        }
        put(out, PcCorpus { docs })
    })
}

/// Writes the corpus in canonical TSV form.
///
/// # Safety
/// `corpus` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pc_corpus_save(corpus: *const PcCorpus, path: *const c_char) -> PcStatus {
    guard(|| {
        let c = handle(corpus, "corpus")?;
        Ok(serialize_corpus(&c.docs, path_arg(path, "path")?)?)
    })
}

/// Number of documents; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_corpus_document_count(corpus: *const PcCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.docs.len())
}

/// Number of tokens in document `doc`.
///
/// # Safety
/// `corpus` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_corpus_token_count(
    corpus: *const PcCorpus,
    doc: usize,
    out: *mut usize,
) -> PcStatus {
    guard(|| {
        let c = handle(corpus, "corpus")?;
        let d = c.docs.get(doc).map_or_else(
            || {
                fail(
                    PcStatus::InvalidArgument,
                    format!("document {doc} out of range ({} documents)", c.docs.len()),
                )
            },
            Ok,
        )?;
        *handle_mut(out, "out")? = d.tokens.len();
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_corpus_free(corpus: *mut PcCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Loads a detector model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_prosody_model_load(
    path: *const c_char,
    out: *mut *mut PcProsodyModel,
) -> PcStatus {
    guard(|| {
        let model = load_model(path_arg(path, "path")?)?;
        put(out, PcProsodyModel { model })
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_prosody_model_free(model: *mut PcProsodyModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the detector over every document's audio and stores the decisions
/// in the prediction column of the model's event kind.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn pc_prosody_annotate(
    model: *const PcProsodyModel,
    corpus: *mut PcCorpus,
) -> PcStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let c = handle_mut(corpus, "corpus")?;
        let frames = document_frames(&c.docs)?;
        for (d, f) in c.docs.iter_mut().zip(&frames) {
            annotate_document(&m.model, d, f)?;
        }
        Ok(())
    })
}

/// Trains a coreference model on the corpus's gold chains.
/// `prosody_feature`, `scope` and `source` take `PcProsodyFeature`,
/// `PcScope` and `PcLabelSource` values.
///
/// # Safety
/// `corpus` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_coref_train(
    corpus: *const PcCorpus,
    prosody_feature: i32,
    scope: i32,
    source: i32,
    epochs: u32,
    seed: u64,
    out: *mut *mut PcCorefModel,
) -> PcStatus {
    guard(|| {
        let c = handle(corpus, "corpus")?;
        let cfg = FeatureConfig {
            prosody_feature: feature_arg(prosody_feature)?,
            scope: scope_arg(scope)?,
            label_source: source_arg(source)?,
        };
        let views = c
            .docs
            .iter()
            .map(|d| match cfg.prosody_feature {
                ProsodyFeature::None => Ok(None),
                _ => select_view(d, cfg.label_source).map(Some),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let report = train_coref(&c.docs, &views, &cfg, epochs as usize, seed)?;
        put(
            out,
            PcCorefModel {
                model: report.model,
            },
        )
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_coref_model_load(
    path: *const c_char,
    out: *mut *mut PcCorefModel,
) -> PcStatus {
    guard(|| {
        let model = load_coref_model(path_arg(path, "path")?)?;
        put(out, PcCorefModel { model })
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pc_coref_model_save(
    model: *const PcCorefModel,
    path: *const c_char,
) -> PcStatus {
    guard(|| {
        let m = handle(model, "model")?;
        Ok(save_coref_model(&m.model, path_arg(path, "path")?)?)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_coref_model_free(model: *mut PcCorefModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Replaces the corpus's chains with the model's predictions. `source`
/// selects the labels feeding the prosodic feature (`PcLabelSource`).
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn pc_coref_predict(
    model: *const PcCorefModel,
    corpus: *mut PcCorpus,
    source: i32,
) -> PcStatus {
    guard(|| {
        let m = &handle(model, "model")?.model;
        let c = handle_mut(corpus, "corpus")?;
        let source = source_arg(source)?;
        for d in &mut c.docs {
            let view = match m.config.prosody_feature {
                ProsodyFeature::None => None,
                _ => Some(select_view(d, source)?),
            };
            let tree = decode(m, d, view.as_ref());
            apply_chains(d, &chains_from_tree(&tree));
        }
        Ok(())
    })
}

/// Scores `response` chains against `key` chains.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_score(
    key: *const PcCorpus,
    response: *const PcCorpus,
    out: *mut PcScore,
) -> PcStatus {
    guard(|| {
        let k = handle(key, "key")?;
        let r = handle(response, "response")?;
        let m = score_documents(&k.docs, &r.docs)?;
        *handle_mut(out, "out")? = PcScore {
            muc_p: m.muc.precision,
            muc_r: m.muc.recall,
            muc_f: m.muc.f1,
            b3_p: m.b3.precision,
            b3_r: m.b3.recall,
            b3_f: m.b3.f1,
            ceafe_p: m.ceafe.precision,
            ceafe_r: m.ceafe.recall,
            ceafe_f: m.ceafe.f1,
            conll: m.conll,
        };
        Ok(())
    })
}
