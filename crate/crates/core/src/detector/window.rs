use std::ops::Range;

use crate::acoustic::{FrameSequence, N_ACOUSTIC};
use crate::corpus::{word_frame_range, Document};
use crate::error::{Error, Result};

/// Acoustic rows plus the position indicator row.
pub const N_ROWS: usize = N_ACOUSTIC + 1;
pub const INDICATOR_ROW: usize = N_ACOUSTIC;
pub const W_MAX: usize = 120;

/// Frames of a word and its two neighbours, stored feature-major
/// (`values[row * width + column]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WordWindowMatrix {
    pub values: Vec<f64>,
    pub width: usize,
    /// Columns that belong to the current word.
    pub current_span: Range<usize>,
}

impl WordWindowMatrix {
    pub fn zeros(width: usize) -> Self {
        WordWindowMatrix {
            values: vec![0.0; N_ROWS * width],
            width,
            current_span: 0..0,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }
}

enum Segment {
    Frames(Range<usize>),
    Blank(usize),
}

impl Segment {
    fn len(&self) -> usize {
        match self {
            Segment::Frames(r) => r.len(),
            Segment::Blank(n) => *n,
        }
    }
}

/// Builds the fixed-width input for token `tok_idx` with the default width.
pub fn build_window(
    doc: &Document,
    frames: &FrameSequence,
    tok_idx: usize,
) -> Result<WordWindowMatrix> {
    build_window_with_width(doc, frames, tok_idx, W_MAX)
}

/// Concatenates the frames of the previous, current and next token. A
/// missing neighbour contributes blank columns as wide as the document's mean
/// word. The result is centred in `width` columns: shorter inputs are zero
/// padded on both sides, longer ones lose columns from the outer edges, never
/// from the current word unless it alone exceeds `width`.
pub fn build_window_with_width(
    doc: &Document,
    frames: &FrameSequence,
    tok_idx: usize,
    width: usize,
) -> Result<WordWindowMatrix> {
    let n_tok = doc.tokens.len();
    if tok_idx >= n_tok {
        return Err(Error::OutOfRange {
            index: tok_idx,
            len: n_tok,
        });
    }
    if frames.is_empty() {
        return Err(Error::MissingAudio(doc.doc_id.clone()));
    }
    let n_frames = frames.len();
    let hop = frames.hop;
    let blank = doc.mean_word_frames(hop);
    let seg = |i: Option<usize>| match i {
        Some(i) if i < n_tok => Segment::Frames(word_frame_range(&doc.tokens[i], hop, n_frames)),
        _ => Segment::Blank(blank),
    };
    let left = seg(tok_idx.checked_sub(1));
    let cur = word_frame_range(&doc.tokens[tok_idx], hop, n_frames);
    let right = seg(Some(tok_idx + 1));

    let (lw, cw, rw) = (left.len(), cur.len(), right.len());
    let total = lw + cw + rw;

    // Columns of the concatenation [left | current | right] that survive,
    // and the zero padding placed before them.
    let (keep, pad) = if total <= width {
        (0..total, (width - total) / 2)
    } else if cw >= width {
        let skip = lw + (cw - width) / 2;
        (skip..skip + width, 0)
    } else {
        let excess = total - width;
        let mut cut_left = excess / 2;
        let mut cut_right = excess - cut_left;
        if cut_left > lw {
            cut_right += cut_left - lw;
            cut_left = lw;
        }
        if cut_right > rw {
            cut_left += cut_right - rw;
            cut_right = rw;
        }
        (cut_left..total - cut_right, 0)
    };

    let mut m = WordWindowMatrix::zeros(width);
    let write_segment = |m: &mut WordWindowMatrix, s: &Segment, offset: usize, is_current: bool| {
        for j in 0..s.len() {
            let src = offset + j;
            if !keep.contains(&src) {
                continue;
            }
            let col = pad + src - keep.start;
            if let Segment::Frames(r) = s {
                let feats = &frames.features[r.start + j];
                for (row, &v) in feats.iter().enumerate() {
                    m.set(row, col, v as f64);
                }
            }
            if is_current {
                m.set(INDICATOR_ROW, col, 1.0);
            }
        }
    };
    write_segment(&mut m, &left, 0, false);
    write_segment(&mut m, &Segment::Frames(cur.clone()), lw, true);
    write_segment(&mut m, &right, lw + cw, false);

    let cur_start = lw.max(keep.start);
    let cur_end = (lw + cw).min(keep.end);
    m.current_span = (pad + cur_start - keep.start)..(pad + cur_end - keep.start);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn doc_with_words(frames_per_word: &[usize]) -> (Document, FrameSequence) {
        let mut tokens = Vec::new();
        let mut t = 0usize;
        for (i, &n) in frames_per_word.iter().enumerate() {
            tokens.push(Token {
                sent_idx: 0,
                tok_idx: i,
                form: format!("w{i}"),
                pos: "NN".into(),
                start_time: t as f64 * 0.01,
                end_time: (t + n) as f64 * 0.01,
                gold_accent: false,
                gold_boundary: false,
                pred_accent: None,
                pred_boundary: None,
            });
            t += n;
        }
        // each frame's first feature is its word index + 1
        let mut feats = Vec::new();
        for (i, &n) in frames_per_word.iter().enumerate() {
            feats.extend(std::iter::repeat([(i + 1) as f32, 0.5, 0.5, 0.5, 0.5]).take(n));
        }
        let doc = Document {
            doc_id: "d".into(),
            tokens,
            nps: vec![],
            audio_path: None,
        };
        (doc, FrameSequence::new(feats))
    }

    fn indicator_matches_span(m: &WordWindowMatrix) -> bool {
        (0..m.width).all(|c| (m.get(INDICATOR_ROW, c) == 1.0) == m.current_span.contains(&c))
    }

    #[test]
    fn three_short_words_are_centred() {
        let (doc, frames) = doc_with_words(&[30, 30, 30]);
        let m = build_window(&doc, &frames, 1).unwrap();
        assert_eq!(m.current_span, 45..75);
        assert!((0..15).all(|c| m.get(0, c) == 0.0));
        assert!((105..120).all(|c| m.get(0, c) == 0.0));
        assert_eq!(m.get(0, 15), 1.0);
        assert_eq!(m.get(0, 45), 2.0);
        assert_eq!(m.get(0, 104), 3.0);
        assert!(indicator_matches_span(&m));
    }

    #[test]
    fn long_words_lose_outer_columns() {
        let (doc, frames) = doc_with_words(&[50, 50, 50]);
        let m = build_window(&doc, &frames, 1).unwrap();
        assert_eq!(m.current_span, 35..85);
        assert!((0..35).all(|c| m.get(0, c) == 1.0));
        assert!((35..85).all(|c| m.get(0, c) == 2.0));
        assert!((85..120).all(|c| m.get(0, c) == 3.0));
        assert!(indicator_matches_span(&m));
    }

    #[test]
    fn first_token_has_blank_left_context() {
        let (doc, frames) = doc_with_words(&[20, 20, 20]);
        let m = build_window(&doc, &frames, 0).unwrap();
        // blank (20) + current (20) + right (20) = 60, padded by 30 each side
        assert_eq!(m.current_span, 50..70);
        assert!((0..50).all(|c| m.get(0, c) == 0.0 && m.get(INDICATOR_ROW, c) == 0.0));
        assert!(indicator_matches_span(&m));
    }

    #[test]
    fn oversized_current_word_keeps_its_centre() {
        let (doc, frames) = doc_with_words(&[10, 200, 10]);
        let m = build_window(&doc, &frames, 1).unwrap();
        assert_eq!(m.current_span, 0..120);
        assert!((0..120).all(|c| m.get(0, c) == 2.0));
    }

    #[test]
    fn asymmetric_truncation_spares_the_current_word() {
        let (doc, frames) = doc_with_words(&[4, 100, 60]);
        let m = build_window(&doc, &frames, 1).unwrap();
        // excess 44: left context (4) is dropped, the rest comes off the right
        assert_eq!(m.current_span, 0..100);
        assert!((100..120).all(|c| m.get(0, c) == 3.0));
    }

    #[test]
    fn out_of_range_token() {
        let (doc, frames) = doc_with_words(&[10]);
        assert!(matches!(
            build_window(&doc, &frames, 1),
            Err(Error::OutOfRange { .. })
        ));
    }
}
