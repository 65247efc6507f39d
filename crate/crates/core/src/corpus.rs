//! Token-level corpus format: one token per line, tab separated, CoNLL-2012
//! style coreference brackets, word timings and binary prosodic labels.
//!
//! ```text
//! #begin document d001
//! d001  0  0  the  DT  0  0.21  (3  0  0  -  -
//! d001  0  1  shed NN  0.21  0.5  3)  1  1  -  -
//!
//! #end document
//! ```
//!
//! Columns: doc_id, sent_idx, tok_idx, form, pos, start_time, end_time,
//! np_coref, gold_accent, gold_boundary, pred_accent, pred_boundary.
//! An NP that belongs to no chain is written with the id `_`, e.g. `(_)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const N_COLUMNS: usize = 12;
/// Slack allowed between the end of one token and the start of the next.
pub const TIMING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub sent_idx: usize,
    pub tok_idx: usize,
    pub form: String,
    pub pos: String,
    pub start_time: f64,
    pub end_time: f64,
    pub gold_accent: bool,
    /// Word-final intonational phrase boundary.
    pub gold_boundary: bool,
    pub pred_accent: Option<bool>,
    pub pred_boundary: Option<bool>,
}

/// Inclusive token span `(start, end)` in document token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NounPhrase {
    pub start: usize,
    pub end: usize,
    pub chain_id: Option<u32>,
}

impl NounPhrase {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn contains(&self, other: &NounPhrase) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    fn crosses(&self, other: &NounPhrase) -> bool {
        let disjoint = self.end < other.start || other.end < self.start;
        !disjoint && !self.contains(other) && !other.contains(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<Token>,
    /// Sorted by start token, longer span first.
    pub nps: Vec<NounPhrase>,
    pub audio_path: Option<PathBuf>,
}

impl Document {
    /// Checks every invariant the corpus format guarantees.
    pub fn validate(&self) -> Result<()> {
        for (i, pair) in self.tokens.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if (a.sent_idx, a.tok_idx) >= (b.sent_idx, b.tok_idx) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("{}: tokens not ordered by (sentence, token)", self.doc_id),
                });
            }
            if a.end_time > b.start_time + TIMING_TOLERANCE {
                return Err(Error::Timing {
                    line: i + 1,
                    msg: format!("{}: token {} overlaps token {}", self.doc_id, i, i + 1),
                });
            }
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if !(t.start_time >= 0.0 && t.end_time > t.start_time && t.end_time.is_finite()) {
                return Err(Error::Timing {
                    line: i,
                    msg: format!(
                        "{}: token {} has start {} end {}",
                        self.doc_id, i, t.start_time, t.end_time
                    ),
                });
            }
        }
        for np in &self.nps {
            if np.start > np.end || np.end >= self.tokens.len() {
                return Err(Error::OutOfRange {
                    index: np.end,
                    len: self.tokens.len(),
                });
            }
            if self.tokens[np.start].sent_idx != self.tokens[np.end].sent_idx {
                return Err(Error::Config(format!(
                    "{}: NP {:?} crosses a sentence boundary",
                    self.doc_id,
                    np.span()
                )));
            }
        }
        check_nesting(&self.doc_id, &self.nps)
    }

    pub fn has_predictions(&self) -> bool {
        self.tokens
            .iter()
            .all(|t| t.pred_accent.is_some() && t.pred_boundary.is_some())
    }

    /// Gold chains as lists of NP indices, ordered by first mention.
    /// NPs without a chain id, and ids seen once, form singletons.
    pub fn gold_chains(&self) -> Vec<Vec<usize>> {
        let mut by_id: HashMap<u32, usize> = HashMap::new();
        let mut chains: Vec<Vec<usize>> = Vec::new();
        for (i, np) in self.nps.iter().enumerate() {
            match np.chain_id {
                Some(id) => match by_id.get(&id) {
                    Some(&c) => chains[c].push(i),
                    None => {
                        by_id.insert(id, chains.len());
                        chains.push(vec![i]);
                    }
                },
                None => chains.push(vec![i]),
            }
        }
        chains
    }

    /// Mean token duration in frames of `hop` seconds, at least 1.
    pub fn mean_word_frames(&self, hop: f64) -> usize {
        if self.tokens.is_empty() {
            return 1;
        }
        let total: f64 = self.tokens.iter().map(|t| t.end_time - t.start_time).sum();
        ((total / self.tokens.len() as f64 / hop).round() as usize).max(1)
    }
}

fn check_nesting(doc_id: &str, nps: &[NounPhrase]) -> Result<()> {
    for (i, a) in nps.iter().enumerate() {
        for b in &nps[i + 1..] {
            if b.start > a.end {
                break;
            }
            if a.span() == b.span() {
                return Err(Error::Config(format!(
                    "{doc_id}: duplicate NP span {:?}",
                    a.span()
                )));
            }
            if a.crosses(b) {
                return Err(Error::CrossingSpans {
                    doc_id: doc_id.to_string(),
                    a: a.span(),
                    b: b.span(),
                });
            }
        }
    }
    Ok(())
}

fn sort_nps(nps: &mut [NounPhrase]) {
    nps.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
}

/// Frame indices covered by `token` for frames spaced `hop` seconds apart.
///
/// The range is `[floor(start/hop), floor(end/hop))` clipped to the signal.
/// A token that would get no frame is given the single nearest one.
pub fn word_frame_range(token: &Token, hop: f64, n_frames_total: usize) -> Range<usize> {
    debug_assert!(hop > 0.0);
    let n = n_frames_total.max(1);
    // 1e-6 absorbs representation error such as 0.3 / 0.01 = 29.999999999999996
    let to_frame = |t: f64| ((t / hop) + 1e-6).floor().max(0.0) as usize;
    let start = to_frame(token.start_time).min(n);
    let end = to_frame(token.end_time).min(n);
    if start < end {
        start..end
    } else if start >= n {
        n - 1..n
    } else {
        start..start + 1
    }
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_str(&text)
}

struct OpenNp {
    id: Option<u32>,
    start: usize,
}

struct DocBuilder {
    doc: Document,
    open: Vec<OpenNp>,
    block_sent: Option<usize>,
    begin_line: usize,
}

pub fn parse_corpus_str(text: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut cur: Option<DocBuilder> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(id) = line.strip_prefix("#begin document") {
            if cur.is_some() {
                return Err(perr(line_no, "nested #begin document"));
            }
            let id = id.trim();
            if id.is_empty() {
                return Err(perr(line_no, "missing document id"));
            }
            cur = Some(DocBuilder {
                doc: Document {
                    doc_id: id.to_string(),
                    tokens: Vec::new(),
                    nps: Vec::new(),
                    audio_path: None,
                },
                open: Vec::new(),
                block_sent: None,
                begin_line: line_no,
            });
            continue;
        }
        if line.starts_with("#end document") {
            let b = cur
                .take()
                .ok_or_else(|| perr(line_no, "#end document without #begin"))?;
            if !b.open.is_empty() {
                return Err(perr(line_no, "unclosed NP bracket at end of document"));
            }
            let mut doc = b.doc;
            sort_nps(&mut doc.nps);
            check_nesting(&doc.doc_id, &doc.nps)?;
            docs.push(doc);
            continue;
        }
        if line.trim().is_empty() {
            if let Some(b) = cur.as_mut() {
                if !b.open.is_empty() {
                    return Err(perr(
                        line_no,
                        "NP bracket left open across a sentence break",
                    ));
                }
                b.block_sent = None;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let b = cur
            .as_mut()
            .ok_or_else(|| perr(line_no, "token line outside of a document"))?;
        parse_token_line(b, line, line_no)?;
    }
    if let Some(b) = cur {
        return Err(perr(
            b.begin_line,
            &format!("document {} is never closed", b.doc.doc_id),
        ));
    }
    Ok(docs)
}

fn perr(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_flag(s: &str, line: usize, name: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(perr(line, &format!("{name} must be 0 or 1, got {s:?}"))),
    }
}

fn parse_opt_flag(s: &str, line: usize, name: &str) -> Result<Option<bool>> {
    if s == "-" {
        Ok(None)
    } else {
        parse_flag(s, line, name).map(Some)
    }
}

fn parse_time(s: &str, line: usize, name: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| perr(line, &format!("{name} is not a number: {s:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Timing {
            line,
            msg: format!("{name} must be finite and non-negative, got {s}"),
        });
    }
    Ok(v)
}

fn parse_chain_id(s: &str, line: usize) -> Result<Option<u32>> {
    if s == "_" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| perr(line, &format!("bad chain id {s:?}")))
}

fn parse_token_line(b: &mut DocBuilder, line: &str, line_no: usize) -> Result<()> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != N_COLUMNS {
        return Err(perr(
            line_no,
            &format!(
                "expected {N_COLUMNS} tab-separated columns, found {}",
                cols.len()
            ),
        ));
    }
    if cols[0] != b.doc.doc_id {
        return Err(perr(
            line_no,
            &format!(
                "doc_id {:?} does not match document {:?}",
                cols[0], b.doc.doc_id
            ),
        ));
    }
    let sent_idx: usize = cols[1]
        .parse()
        .map_err(|_| perr(line_no, "sent_idx is not a non-negative integer"))?;
    let tok_idx: usize = cols[2]
        .parse()
        .map_err(|_| perr(line_no, "tok_idx is not a non-negative integer"))?;
    let start_time = parse_time(cols[5], line_no, "start_time")?;
    let end_time = parse_time(cols[6], line_no, "end_time")?;
    if end_time <= start_time {
        return Err(Error::Timing {
            line: line_no,
            msg: format!("end_time {end_time} is not after start_time {start_time}"),
        });
    }
    match b.block_sent {
        Some(s) if s != sent_idx => {
            return Err(perr(line_no, "sent_idx changes without a blank line"));
        }
        _ => b.block_sent = Some(sent_idx),
    }
    if let Some(prev) = b.doc.tokens.last() {
        if (prev.sent_idx, prev.tok_idx) >= (sent_idx, tok_idx) {
            return Err(perr(
                line_no,
                "tokens are not strictly ordered by (sent_idx, tok_idx)",
            ));
        }
        if prev.end_time > start_time + TIMING_TOLERANCE {
            return Err(Error::Timing {
                line: line_no,
                msg: format!(
                    "start_time {start_time} precedes the previous token's end_time {}",
                    prev.end_time
                ),
            });
        }
    }

    let form = cols[3];
    let pos = cols[4];
    if form.is_empty() || pos.is_empty() {
        return Err(perr(line_no, "empty form or POS"));
    }
    let tok_pos = b.doc.tokens.len();
    if cols[7] != "-" {
        for part in cols[7].split('|') {
            let opens = part.starts_with('(');
            let closes = part.ends_with(')');
            let inner = part.trim_start_matches('(').trim_end_matches(')');
            if (!opens && !closes) || inner.is_empty() || part.len() - inner.len() > 2 {
                return Err(perr(line_no, &format!("bad coreference bracket {part:?}")));
            }
            let id = parse_chain_id(inner, line_no)?;
            match (opens, closes) {
                (true, true) => b.doc.nps.push(NounPhrase {
                    start: tok_pos,
                    end: tok_pos,
                    chain_id: id,
                }),
                (true, false) => b.open.push(OpenNp { id, start: tok_pos }),
                (false, true) => {
                    let at = b.open.iter().rposition(|o| o.id == id).ok_or_else(|| {
                        perr(line_no, &format!("closing bracket {part:?} has no opening"))
                    })?;
                    let o = b.open.remove(at);
                    b.doc.nps.push(NounPhrase {
                        start: o.start,
                        end: tok_pos,
                        chain_id: id,
                    });
                }
                (false, false) => unreachable!(),
            }
        }
    }

    b.doc.tokens.push(Token {
        sent_idx,
        tok_idx,
        form: form.to_string(),
        pos: pos.to_string(),
        start_time,
        end_time,
        gold_accent: parse_flag(cols[8], line_no, "gold_accent")?,
        gold_boundary: parse_flag(cols[9], line_no, "gold_boundary")?,
        pred_accent: parse_opt_flag(cols[10], line_no, "pred_accent")?,
        pred_boundary: parse_opt_flag(cols[11], line_no, "pred_boundary")?,
    });
    Ok(())
}

fn chain_label(id: Option<u32>) -> String {
    match id {
        Some(id) => id.to_string(),
        None => "_".to_string(),
    }
}

fn coref_column(doc: &Document) -> Vec<String> {
    let n = doc.tokens.len();
    let mut opens: Vec<Vec<&NounPhrase>> = vec![Vec::new(); n];
    let mut singles: Vec<Vec<&NounPhrase>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<&NounPhrase>> = vec![Vec::new(); n];
    for np in &doc.nps {
        if np.start == np.end {
            singles[np.start].push(np);
        } else {
            opens[np.start].push(np);
            closes[np.end].push(np);
        }
    }
    (0..n)
        .map(|i| {
            // outer spans open first and close last
            opens[i].sort_by_key(|np| std::cmp::Reverse(np.end));
            closes[i].sort_by_key(|np| std::cmp::Reverse(np.start));
            let parts: Vec<String> = opens[i]
                .iter()
                .map(|np| format!("({}", chain_label(np.chain_id)))
                .chain(
                    singles[i]
                        .iter()
                        .map(|np| format!("({})", chain_label(np.chain_id))),
                )
                .chain(
                    closes[i]
                        .iter()
                        .map(|np| format!("{})", chain_label(np.chain_id))),
                )
                .collect();
            if parts.is_empty() {
                "-".to_string()
            } else {
                parts.join("|")
            }
        })
        .collect()
}

fn flag(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

fn opt_flag(b: Option<bool>) -> char {
    b.map_or('-', flag)
}

/// Canonical text form of a corpus.
pub fn corpus_to_string(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        let coref = coref_column(doc);
        writeln!(out, "#begin document {}", doc.doc_id).unwrap();
        for (i, t) in doc.tokens.iter().enumerate() {
            if i > 0 && doc.tokens[i - 1].sent_idx != t.sent_idx {
                out.push('\n');
            }
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                doc.doc_id,
                t.sent_idx,
                t.tok_idx,
                t.form,
                t.pos,
                t.start_time,
                t.end_time,
                coref[i],
                flag(t.gold_accent),
                flag(t.gold_boundary),
                opt_flag(t.pred_accent),
                opt_flag(t.pred_boundary),
            )
            .unwrap();
        }
        if !doc.tokens.is_empty() {
            out.push('\n');
        }
        out.push_str("#end document\n");
    }
    out
}

pub fn serialize_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus_to_string(docs)).map_err(|e| Error::io(path, e))
}

/// Reads a `doc_id<TAB>wav path` manifest. Relative paths are resolved
/// against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<HashMap<String, PathBuf>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, wav) = line
            .split_once('\t')
            .ok_or_else(|| perr(i + 1, "manifest line must be doc_id<TAB>path"))?;
        let wav = PathBuf::from(wav.trim());
        let wav = if wav.is_absolute() {
            wav
        } else {
            base.join(wav)
        };
        map.insert(id.trim().to_string(), wav);
    }
    Ok(map)
}

pub fn write_manifest<'a>(
    entries: impl IntoIterator<Item = (&'a str, &'a Path)>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (id, wav) in entries {
        writeln!(out, "{id}\t{}", wav.display()).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sets `audio_path` on every document listed in the manifest.
pub fn attach_audio(docs: &mut [Document], manifest: &HashMap<String, PathBuf>) {
    for doc in docs {
        if let Some(p) = manifest.get(&doc.doc_id) {
            doc.audio_path = Some(p.clone());
        }
    }
}
