//! Synthetic corpora with audio in which discourse-given NPs tend to be
//! deaccented.
//!
//! Sentences follow `SUBJ VERB OBJ [PREP NP] ADV`. Heads come from a small
//! noun list, so a definite short NP often matches an earlier, unrelated
//! entity; only its accent tells given and new apart. Long NPs always carry
//! an accent, but a new long NP is usually closed by a phrase boundary and
//! so carries the nuclear accent, while a given long NP is followed by an
//! accented word in the same phrase.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{serialize_corpus, write_manifest, Document, NounPhrase, Token};
use crate::error::{Error, Result};
use crate::wav::{write_wav, AudioSignal};

const HEADS: &[&str] = &[
    "shed", "house", "garden", "letter", "minister", "report", "river", "bridge", "council",
    "village",
];
const ADJECTIVES: &[&str] = &[
    "old", "new", "big", "small", "red", "green", "quiet", "famous", "local", "wooden", "northern",
    "strange",
];
const DEGREE: &[&str] = &["very", "rather", "quite"];
const VERBS: &[&str] = &[
    "saw",
    "visited",
    "praised",
    "described",
    "left",
    "found",
    "mentioned",
    "reached",
];
const PREPOSITIONS: &[&str] = &["near", "behind", "with", "after"];
const ADVERBS: &[&str] = &["today", "again", "later", "there", "yesterday"];

/// Share of given mentions realised as a pronoun, short NP, long NP.
const GIVEN_FORMS: [f64; 3] = [0.1, 0.6, 0.3];
const NEW_LONG_RATE: f64 = 0.3;
const PP_RATE: f64 = 0.5;
const VERB_ACCENT_RATE: f64 = 0.4;
const ADVERB_ACCENT_RATE: f64 = 0.5;
const NEW_LONG_BOUNDARY_RATE: f64 = 0.9;
const OTHER_NP_BOUNDARY_RATE: f64 = 0.2;
/// Given mentions refer to one of the most recently mentioned entities.
const RECENT_ENTITIES: usize = 4;
/// Chance that a new entity reuses the head noun of an earlier entity.
const COLLISION_RATE: f64 = 0.6;

pub const LEAD_SILENCE: f64 = 0.1;
pub const PAUSE: f64 = 0.08;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_docs: usize,
    pub tokens_per_doc: RangeInclusive<usize>,
    pub chain_rate: f64,
    pub deaccent_given: f64,
    pub accent_new: f64,
    pub accent_flip_noise: f64,
    pub boundary_flip_noise: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_docs: 200,
            tokens_per_doc: 30..=60,
            chain_rate: 0.5,
            deaccent_given: 0.9,
            accent_new: 0.9,
            accent_flip_noise: 0.181,
            boundary_flip_noise: 0.145,
            sample_rate: 16000,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("chain_rate", self.chain_rate),
            ("deaccent_given", self.deaccent_given),
            ("accent_new", self.accent_new),
            ("accent_flip_noise", self.accent_flip_noise),
            ("boundary_flip_noise", self.boundary_flip_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.n_docs == 0 {
            return Err(Error::Config("n_docs must be at least 1".into()));
        }
        if self.tokens_per_doc.is_empty() || *self.tokens_per_doc.start() < 1 {
            return Err(Error::Config(
                "tokens_per_doc must be a non-empty range of positive counts".into(),
            ));
        }
        if self.sample_rate < 8000 {
            return Err(Error::SampleRateTooLow(self.sample_rate));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults. `tokens_per_doc` is written `min..max` (inclusive).
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = GenConfig::default();
        for (key, value, line) in key_values(text)? {
            let bad = |e: String| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            };
            let float = || value.parse::<f64>().map_err(|e| bad(e.to_string()));
            match key.as_str() {
                "n_docs" => {
                    cfg.n_docs = value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "tokens_per_doc" => cfg.tokens_per_doc = parse_range(&value).map_err(bad)?,
                "chain_rate" => cfg.chain_rate = float()?,
                "deaccent_given" => cfg.deaccent_given = float()?,
                "accent_new" => cfg.accent_new = float()?,
                "accent_flip_noise" => cfg.accent_flip_noise = float()?,
                "boundary_flip_noise" => cfg.boundary_flip_noise = float()?,
                "sample_rate" => {
                    cfg.sample_rate = value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "n_docs = {}\ntokens_per_doc = {}..{}\nchain_rate = {}\ndeaccent_given = {}\naccent_new = {}\n\
             accent_flip_noise = {}\nboundary_flip_noise = {}\nsample_rate = {}\nseed = {}\n",
            self.n_docs,
            self.tokens_per_doc.start(),
            self.tokens_per_doc.end(),
            self.chain_rate,
            self.deaccent_given,
            self.accent_new,
            self.accent_flip_noise,
            self.boundary_flip_noise,
            self.sample_rate,
            self.seed
        )
    }
}

/// `(key, value, line number)` triples of a flat `key = value` file.
pub(crate) fn key_values(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key = value, got {raw:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected min..max, got {s:?}"))?;
    let b = b.trim_start_matches('=');
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(a..=b)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Function,
    Content,
}

struct Word {
    form: String,
    pos: &'static str,
    role: Role,
    accent: bool,
    boundary: bool,
}

impl Word {
    fn new(form: &str, pos: &'static str, role: Role) -> Self {
        Word {
            form: form.to_string(),
            pos,
            role,
            accent: false,
            boundary: false,
        }
    }
}

struct DocBuilder<'a> {
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
    words: Vec<Word>,
    sent_of: Vec<usize>,
    nps: Vec<NounPhrase>,
    /// Head noun per entity; entity ids are 1-based chain ids.
    entities: Vec<&'static str>,
    recent: Vec<usize>,
    sent: usize,
    /// The next word carries an accent, keeping the nuclear accent of the
    /// phrase off a given long NP.
    force_accent: bool,
}

impl<'a> DocBuilder<'a> {
    fn push(&mut self, mut w: Word) {
        if self.force_accent {
            w.accent = true;
            self.force_accent = false;
        }
        self.words.push(w);
        self.sent_of.push(self.sent);
    }

    fn mention(&mut self) {
        let rng = &mut self.rng;
        let given = !self.recent.is_empty() && rng.gen_bool(self.cfg.chain_rate);
        let (entity, head) = if given {
            let k = self.recent.len().min(RECENT_ENTITIES);
            let e = self.recent[self.recent.len() - k + rng.gen_range(0..k)];
            (e, self.entities[e])
        } else {
            let head = if !self.entities.is_empty() && rng.gen_bool(COLLISION_RATE) {
                *self.entities.choose(rng).unwrap()
            } else {
                let active: Vec<&str> = self.recent.iter().map(|&e| self.entities[e]).collect();
                let fresh: Vec<&str> = HEADS
                    .iter()
                    .copied()
                    .filter(|h| !active.contains(h))
                    .collect();
                *fresh.choose(rng).unwrap_or(&HEADS[0])
            };
            // an older entity with the same head leaves the focus
            let entities = &self.entities;
            self.recent.retain(|&e| entities[e] != head);
            self.entities.push(head);
            (self.entities.len() - 1, head)
        };
        self.recent.retain(|&e| e != entity);
        self.recent.push(entity);

        let start = self.words.len();
        let r: f64 = self.rng.gen();
        let long;
        if given && r < GIVEN_FORMS[0] {
            long = false;
            let mut w = Word::new("it", "PRP", Role::Content);
            w.accent = !self.rng.gen_bool(self.cfg.deaccent_given);
            self.push(w);
        } else if (given && r < GIVEN_FORMS[0] + GIVEN_FORMS[1]) || (!given && r >= NEW_LONG_RATE) {
            long = false;
            let det = if given || self.rng.gen_bool(0.7) {
                "the"
            } else {
                "a"
            };
            self.push(Word::new(det, "DT", Role::Function));
            let mut w = Word::new(head, "NN", Role::Content);
            w.accent = if given {
                !self.rng.gen_bool(self.cfg.deaccent_given)
            } else {
                self.rng.gen_bool(self.cfg.accent_new)
            };
            self.push(w);
        } else {
            long = true;
            let det = if given || self.rng.gen_bool(0.7) {
                "the"
            } else {
                "a"
            };
            self.push(Word::new(det, "DT", Role::Function));
            if self.rng.gen_bool(0.3) {
                let d = *DEGREE.choose(&mut self.rng).unwrap();
                self.push(Word::new(d, "RB", Role::Function));
            }
            let adjs: Vec<&str> = ADJECTIVES
                .choose_multiple(&mut self.rng, 2)
                .copied()
                .collect();
            let head_accent = if given {
                !self.rng.gen_bool(self.cfg.deaccent_given)
            } else {
                self.rng.gen_bool(self.cfg.accent_new)
            };
            for (i, a) in adjs.iter().enumerate() {
                let mut w = Word::new(a, "JJ", Role::Content);
                w.accent = i == 0 && given;
                self.push(w);
            }
            let mut w = Word::new(head, "NN", Role::Content);
            w.accent = head_accent;
            self.push(w);
        }
        let end = self.words.len() - 1;
        self.nps.push(NounPhrase {
            start,
            end,
            chain_id: Some(entity as u32 + 1),
        });

        let boundary_rate = match (long, given) {
            (true, false) => NEW_LONG_BOUNDARY_RATE,
            (true, true) => 0.0,
            _ => OTHER_NP_BOUNDARY_RATE,
        };
        self.words[end].boundary = self.rng.gen_bool(boundary_rate);
        self.force_accent = long && given;
    }

    fn word(&mut self, list: &[&'static str], pos: &'static str, role: Role, accent_rate: f64) {
        let mut w = Word::new(list.choose(&mut self.rng).unwrap(), pos, role);
        w.accent = self.rng.gen_bool(accent_rate);
        self.push(w);
    }

    fn sentence(&mut self) {
        self.mention();
        self.word(VERBS, "VBD", Role::Content, VERB_ACCENT_RATE);
        self.mention();
        if self.rng.gen_bool(PP_RATE) {
            self.word(PREPOSITIONS, "IN", Role::Function, 0.0);
            self.mention();
        }
        self.word(ADVERBS, "RB", Role::Content, ADVERB_ACCENT_RATE);
        self.words.last_mut().unwrap().boundary = true;
        self.force_accent = false;
        self.sent += 1;
    }
}

/// Word durations in seconds from the labels; timings start after a short
/// lead-in and a pause follows every phrase boundary.
fn timings(words: &[Word], rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mut t = LEAD_SILENCE;
    words
        .iter()
        .map(|w| {
            let base = match w.role {
                Role::Function => rng.gen_range(0.12..0.18),
                Role::Content => rng.gen_range(0.22..0.32),
            };
            let mut d = base;
            if w.accent {
                d *= 1.15;
            }
            if w.boundary {
                d *= 1.3;
            }
            // round to whole milliseconds so the TSV round-trips exactly
            let start = (t * 1000.0).round() / 1000.0;
            let end = ((t + d) * 1000.0).round() / 1000.0;
            t = end + if w.boundary { PAUSE } else { 0.0 };
            (start, end)
        })
        .collect()
}

/// Text, timings, NPs and gold labels of document `index`; no audio.
pub fn generate_document(cfg: &GenConfig, index: usize) -> Document {
    let mut rng = rng_for(cfg.seed, 2 * index as u64);
    let target = rng.gen_range(cfg.tokens_per_doc.clone());
    let mut b = DocBuilder {
        cfg,
        rng,
        words: Vec::new(),
        sent_of: Vec::new(),
        nps: Vec::new(),
        entities: Vec::new(),
        recent: Vec::new(),
        sent: 0,
        force_accent: false,
    };
    while b.words.len() < target {
        b.sentence();
    }
    let times = timings(&b.words, &mut b.rng);
    let doc_id = format!("syn_{index:04}");
    let mut tok_in_sent = 0usize;
    let mut tokens = Vec::with_capacity(b.words.len());
    for (i, w) in b.words.iter().enumerate() {
        if i > 0 && b.sent_of[i] != b.sent_of[i - 1] {
            tok_in_sent = 0;
        }
        tokens.push(Token {
            sent_idx: b.sent_of[i],
            tok_idx: tok_in_sent,
            form: w.form.clone(),
            pos: w.pos.to_string(),
            start_time: times[i].0,
            end_time: times[i].1,
            gold_accent: w.accent,
            gold_boundary: w.boundary,
            pred_accent: None,
            pred_boundary: None,
        });
        tok_in_sent += 1;
    }
    let mut nps = b.nps;
    nps.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    Document {
        doc_id,
        tokens,
        nps,
        audio_path: None,
    }
}

pub fn generate_documents(cfg: &GenConfig) -> Result<Vec<Document>> {
    cfg.validate()?;
    Ok((0..cfg.n_docs).map(|i| generate_document(cfg, i)).collect())
}

/// Schematic speech for a document: a three-harmonic tone per word whose
/// f0 and level rise on accented words and fall and fade before a phrase
/// boundary, with silence between phrases.
pub fn synthesize_audio(doc: &Document, cfg: &GenConfig, index: usize) -> AudioSignal {
    let mut rng = rng_for(cfg.seed, 2 * index as u64 + 1);
    let sr = cfg.sample_rate as f64;
    let total = doc.tokens.last().map_or(0.0, |t| t.end_time) + LEAD_SILENCE + PAUSE;
    let n = (total * sr).ceil() as usize;
    let noise = Normal::new(0.0, 0.004).unwrap();
    let mut samples: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    let base_f0 = rng.gen_range(110.0..170.0);
    let ramp = (0.005 * sr) as usize;
    for t in &doc.tokens {
        let a = (t.start_time * sr).round() as usize;
        let b = ((t.end_time * sr).round() as usize).min(n);
        let len = b.saturating_sub(a).max(1);
        let declination = 1.0 - 0.1 * t.start_time / total;
        let level = if t.gold_accent {
            0.5
        } else if t.pos == "DT" || t.pos == "IN" || t.pos == "RB" && t.form.len() < 6 {
            0.15
        } else {
            0.2
        };
        let wobble = rng.gen_range(0.97..1.03);
        let mut phase = rng.gen_range(0.0..2.0 * PI);
        for (k, s) in samples[a..b].iter_mut().enumerate() {
            let u = k as f64 / len as f64;
            let mut f0 = base_f0 * declination * wobble;
            let mut amp = level;
            if t.gold_accent {
                f0 *= 1.0 + 0.35 * (PI * u).sin();
            }
            if t.gold_boundary {
                f0 *= 1.0 - 0.25 * ((u - 0.4) / 0.6).max(0.0);
                amp *= 1.0 - 0.6 * ((u - 0.5) / 0.5).max(0.0);
            }
            let edge = (k.min(len - 1 - k.min(len - 1)) as f64 / ramp.max(1) as f64).min(1.0);
            phase += 2.0 * PI * f0 / sr;
            let tone = phase.sin() + 0.5 * (2.0 * phase).sin() + 0.25 * (3.0 * phase).sin();
            *s += amp * edge * tone / 1.75;
        }
    }
    AudioSignal {
        samples: samples
            .into_iter()
            .map(|v| v.clamp(-1.0, 1.0) as f32)
            .collect(),
        sample_rate: cfg.sample_rate,
    }
}

/// Flips each gold label independently into the prediction columns.
pub fn corrupt_labels(
    docs: &mut [Document],
    accent_flip: f64,
    boundary_flip: f64,
    seed: u64,
) -> Result<()> {
    for p in [accent_flip, boundary_flip] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "flip probability must be in [0, 1], got {p}"
            )));
        }
    }
    for (i, doc) in docs.iter_mut().enumerate() {
        let mut rng = rng_for(seed, i as u64);
        for t in &mut doc.tokens {
            let fa = rng.gen::<f64>() < accent_flip;
            let fb = rng.gen::<f64>() < boundary_flip;
            t.pred_accent = Some(t.gold_accent ^ fa);
            t.pred_boundary = Some(t.gold_boundary ^ fb);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    pub audio: Vec<AudioSignal>,
}

/// Documents with audio; prediction columns hold gold labels corrupted at
/// the configured flip rates.
pub fn generate(cfg: &GenConfig) -> Result<SyntheticCorpus> {
    let mut docs = generate_documents(cfg)?;
    let audio = docs
        .iter()
        .enumerate()
        .map(|(i, d)| synthesize_audio(d, cfg, i))
        .collect();
    corrupt_labels(
        &mut docs,
        cfg.accent_flip_noise,
        cfg.boundary_flip_noise,
        cfg.seed,
    )?;
    Ok(SyntheticCorpus { docs, audio })
}

pub const CORPUS_FILE: &str = "corpus.tsv";
pub const MANIFEST_FILE: &str = "audio.manifest";
pub const WAV_DIR: &str = "wav";

/// Writes `corpus.tsv`, `audio.manifest` and `wav/<doc_id>.wav` under `dir`.
pub fn write_corpus(corpus: &mut SyntheticCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let wav_dir = dir.join(WAV_DIR);
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let mut manifest = HashMap::new();
    for (doc, audio) in corpus.docs.iter_mut().zip(&corpus.audio) {
        let rel = Path::new(WAV_DIR).join(format!("{}.wav", doc.doc_id));
        write_wav(audio, dir.join(&rel))?;
        doc.audio_path = Some(dir.join(&rel));
        manifest.insert(doc.doc_id.clone(), rel);
    }
    serialize_corpus(&corpus.docs, dir.join(CORPUS_FILE))?;
    let entries = corpus
        .docs
        .iter()
        .map(|d| (d.doc_id.as_str(), manifest[&d.doc_id].as_path()));
    write_manifest(entries, dir.join(MANIFEST_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_to_string, parse_corpus_str};

    fn small() -> GenConfig {
        GenConfig {
            n_docs: 5,
            ..GenConfig::default()
        }
    }

    #[test]
    fn documents_are_valid_and_round_trip() {
        let docs = generate_documents(&small()).unwrap();
        for d in &docs {
            d.validate().unwrap();
            assert!(small().tokens_per_doc.start() <= &d.tokens.len());
        }
        let text = corpus_to_string(&docs);
        assert_eq!(parse_corpus_str(&text).unwrap(), docs);
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.audio, b.audio);
        let c = generate(&GenConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.docs, c.docs);
    }

    #[test]
    fn degenerate_config_is_categorical() {
        let cfg = GenConfig {
            deaccent_given: 1.0,
            accent_new: 1.0,
            n_docs: 20,
            ..GenConfig::default()
        };
        for d in generate_documents(&cfg).unwrap() {
            let mut seen = std::collections::HashSet::new();
            for np in &d.nps {
                let given = !seen.insert(np.chain_id);
                let accented = d.tokens[np.start..=np.end].iter().any(|t| t.gold_accent);
                if given && np.len() <= 3 {
                    assert!(!accented);
                }
                if !given {
                    assert!(accented);
                }
            }
        }
    }

    #[test]
    fn flip_extremes() {
        let mut docs = generate_documents(&small()).unwrap();
        corrupt_labels(&mut docs, 0.0, 0.0, 3).unwrap();
        assert!(docs
            .iter()
            .flat_map(|d| &d.tokens)
            .all(|t| t.pred_accent == Some(t.gold_accent)
                && t.pred_boundary == Some(t.gold_boundary)));
        corrupt_labels(&mut docs, 1.0, 1.0, 3).unwrap();
        assert!(docs
            .iter()
            .flat_map(|d| &d.tokens)
            .all(|t| t.pred_accent == Some(!t.gold_accent)
                && t.pred_boundary == Some(!t.gold_boundary)));
        assert!(corrupt_labels(&mut docs, 1.5, 0.0, 3).is_err());
    }

    #[test]
    fn audio_covers_every_token() {
        let cfg = small();
        let c = generate(&cfg).unwrap();
        for (d, a) in c.docs.iter().zip(&c.audio) {
            assert_eq!(a.sample_rate, cfg.sample_rate);
            assert!(a.duration() > d.tokens.last().unwrap().end_time);
            assert!(a.samples.iter().all(|s| s.abs() <= 1.0));
        }
    }

    #[test]
    fn config_file_round_trip() {
        let cfg = GenConfig {
            n_docs: 7,
            tokens_per_doc: 10..=20,
            seed: 99,
            chain_rate: 0.25,
            ..GenConfig::default()
        };
        assert_eq!(GenConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let cfg = GenConfig::parse("# comment\nn_docs = 3  # inline\n").unwrap();
        assert_eq!(cfg.n_docs, 3);
        assert!(GenConfig::parse("bogus = 1").is_err());
        assert!(GenConfig::parse("accent_new = 1.5").is_err());
        assert!(GenConfig::parse("n_docs 3").is_err());
    }
}
