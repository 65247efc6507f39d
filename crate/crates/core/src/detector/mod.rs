//! Word-level prosodic event detection (pitch accents, phrase boundaries).

pub mod cnn;
mod io;
pub mod train;
pub mod window;

use std::fmt;
use std::str::FromStr;

use crate::acoustic::FrameSequence;
use crate::corpus::{Document, Token};
use crate::error::{Error, Result};

pub use cnn::{CnnParams, CnnShape, ProsodyModel};
pub use io::{decode_model, encode_model, load_model, save_model};
pub use train::{train, train_with_report, TrainConfig, TrainReport};
pub use window::{build_window, build_window_with_width, WordWindowMatrix, W_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Accent,
    Boundary,
}

impl EventKind {
    pub fn gold(self, t: &Token) -> bool {
        match self {
            EventKind::Accent => t.gold_accent,
            EventKind::Boundary => t.gold_boundary,
        }
    }

    pub fn set_pred(self, t: &mut Token, v: bool) {
        match self {
            EventKind::Accent => t.pred_accent = Some(v),
            EventKind::Boundary => t.pred_boundary = Some(v),
        }
    }

    pub fn pred(self, t: &Token) -> Option<bool> {
        match self {
            EventKind::Accent => t.pred_accent,
            EventKind::Boundary => t.pred_boundary,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Accent => "accent",
            EventKind::Boundary => "boundary",
        })
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accent" => Ok(EventKind::Accent),
            "boundary" => Ok(EventKind::Boundary),
            _ => Err(Error::Config(format!("unknown event kind {s:?}"))),
        }
    }
}

/// Windows and gold labels for every token of a document.
pub fn labelled_windows(
    doc: &Document,
    frames: &FrameSequence,
    kind: EventKind,
    width: usize,
) -> Result<Vec<(WordWindowMatrix, bool)>> {
    (0..doc.tokens.len())
        .map(|i| {
            Ok((
                build_window_with_width(doc, frames, i, width)?,
                kind.gold(&doc.tokens[i]),
            ))
        })
        .collect()
}

/// One decision per token: event iff `p_event >= 0.5`.
pub fn predict_document(
    model: &ProsodyModel,
    doc: &Document,
    frames: &FrameSequence,
) -> Result<Vec<bool>> {
    if frames.is_empty() {
        return Err(Error::MissingAudio(doc.doc_id.clone()));
    }
    (0..doc.tokens.len())
        .map(|i| {
            let w = build_window_with_width(doc, frames, i, model.shape.width)?;
            Ok(model.forward(&w)?.1 >= 0.5)
        })
        .collect()
}

/// Runs [`predict_document`] and stores the result in the model's prediction column.
pub fn annotate_document(
    model: &ProsodyModel,
    doc: &mut Document,
    frames: &FrameSequence,
) -> Result<()> {
    let preds = predict_document(model, doc, frames)?;
    for (t, p) in doc.tokens.iter_mut().zip(preds) {
        model.event_kind.set_pred(t, p);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorScore {
    pub accuracy: f64,
    /// Recall of the event class.
    pub positive: f64,
    /// Recall of the no-event class.
    pub negative: f64,
    pub n: usize,
}

impl DetectorScore {
    /// Mean of the two per-class recalls.
    pub fn per_class_mean(&self) -> f64 {
        (self.positive + self.negative) / 2.0
    }
}

/// Overall accuracy and per-class recall. A class absent from `gold` gets a
/// recall of 1.0.
pub fn evaluate_detector(pred: &[bool], gold: &[bool]) -> Result<DetectorScore> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    let mut counts = [[0usize; 2]; 2]; // [gold][pred]
    for (&p, &g) in pred.iter().zip(gold) {
        counts[g as usize][p as usize] += 1;
    }
    let recall = |c: usize| {
        let total = counts[c][0] + counts[c][1];
        if total == 0 {
            1.0
        } else {
            counts[c][c] as f64 / total as f64
        }
    };
    let n = pred.len();
    let correct = counts[0][0] + counts[1][1];
    Ok(DetectorScore {
        accuracy: if n == 0 {
            1.0
        } else {
            correct as f64 / n as f64
        },
        positive: recall(1),
        negative: recall(0),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let g = [true, false, true];
        let s = evaluate_detector(&g, &g).unwrap();
        assert_eq!((s.accuracy, s.positive, s.negative), (1.0, 1.0, 1.0));
    }

    #[test]
    fn mixed_prediction() {
        let s =
            evaluate_detector(&[true, false, false, false], &[true, true, false, false]).unwrap();
        assert_eq!((s.accuracy, s.positive, s.negative), (0.75, 0.5, 1.0));
    }

    #[test]
    fn all_negative_prediction() {
        let gold: Vec<bool> = (0..10).map(|i| i < 2).collect();
        let s = evaluate_detector(&[false; 10], &gold).unwrap();
        assert!((s.accuracy - 0.8).abs() < 1e-12);
        assert_eq!(s.positive, 0.0);
        assert_eq!(s.negative, 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            evaluate_detector(&[true], &[true, false]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }
}
