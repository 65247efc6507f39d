//! NP-level prosodic features derived from word-level accent and boundary
//! labels.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{corpus_to_string, Document, NounPhrase};
use crate::error::{Error, Result};

/// NPs of at most this many tokens count as short.
pub const SHORT_NP_MAX_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSource {
    Gold,
    Predicted,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Gold => "gold",
            LabelSource::Predicted => "pred",
        })
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(LabelSource::Gold),
            "pred" | "predicted" | "auto" => Ok(LabelSource::Predicted),
            _ => Err(Error::Config(format!("unknown label source {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsodyView {
    pub source: LabelSource,
    pub accent: Vec<bool>,
    pub boundary: Vec<bool>,
    pub nuclear: Vec<bool>,
}

impl ProsodyView {
    pub fn new(source: LabelSource, accent: Vec<bool>, boundary: Vec<bool>) -> Result<Self> {
        let nuclear = derive_nuclear(&accent, &boundary)?;
        Ok(ProsodyView {
            source,
            accent,
            boundary,
            nuclear,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NpFeatures {
    pub accent_presence: bool,
    pub nuclear_presence: bool,
    pub is_short: bool,
}

/// Marks the last accented token of every intonation phrase. A phrase ends
/// at a boundary-marked token (inclusive) or at the end of the sequence.
pub fn derive_nuclear(accent: &[bool], boundary: &[bool]) -> Result<Vec<bool>> {
    if accent.len() != boundary.len() {
        return Err(Error::LengthMismatch(accent.len(), boundary.len()));
    }
    let mut nuclear = vec![false; accent.len()];
    let mut last: Option<usize> = None;
    for i in 0..accent.len() {
        if accent[i] {
            last = Some(i);
        }
        if boundary[i] || i + 1 == accent.len() {
            if let Some(j) = last.take() {
                nuclear[j] = true;
            }
        }
    }
    Ok(nuclear)
}

pub fn np_features(np: &NounPhrase, view: &ProsodyView) -> NpFeatures {
    np_features_with(np, view, SHORT_NP_MAX_LEN)
}

pub fn np_features_with(np: &NounPhrase, view: &ProsodyView, short_max_len: usize) -> NpFeatures {
    let span = np.start..=np.end;
    NpFeatures {
        accent_presence: view.accent[span.clone()].iter().any(|&a| a),
        nuclear_presence: view.nuclear[span].iter().any(|&a| a),
        is_short: np.len() <= short_max_len,
    }
}

pub fn select_view(doc: &Document, source: LabelSource) -> Result<ProsodyView> {
    let (accent, boundary) = match source {
        LabelSource::Gold => (
            doc.tokens.iter().map(|t| t.gold_accent).collect(),
            doc.tokens.iter().map(|t| t.gold_boundary).collect(),
        ),
        LabelSource::Predicted => {
            let mut a = Vec::with_capacity(doc.tokens.len());
            let mut b = Vec::with_capacity(doc.tokens.len());
            for (i, t) in doc.tokens.iter().enumerate() {
                let missing = |column| Error::MissingPrediction {
                    doc_id: doc.doc_id.clone(),
                    token: i,
                    column,
                };
                a.push(t.pred_accent.ok_or_else(|| missing("accent"))?);
                b.push(t.pred_boundary.ok_or_else(|| missing("boundary"))?);
            }
            (a, b)
        }
    };
    ProsodyView::new(source, accent, boundary)
}

/// The corpus text with a thirteenth column holding the derived nuclear flag.
pub fn nuclear_table(docs: &[Document], source: LabelSource) -> Result<String> {
    let views: Vec<ProsodyView> = docs
        .iter()
        .map(|d| select_view(d, source))
        .collect::<Result<_>>()?;
    let text = corpus_to_string(docs);
    let mut out = String::with_capacity(text.len() + text.len() / 20);
    let mut doc_i = 0usize;
    let mut tok_i = 0usize;
    for line in text.lines() {
        out.push_str(line);
        if line.starts_with("#end document") {
            doc_i += 1;
            tok_i = 0;
        } else if !line.is_empty() && !line.starts_with('#') {
            out.push('\t');
            out.push(if views[doc_i].nuclear[tok_i] {
                '1'
            } else {
                '0'
            });
            tok_i += 1;
        }
        out.push('\n');
    }
    Ok(out)
}
