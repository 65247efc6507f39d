//! Feature cache: `PCF1`, document count, then per document a
//! length-prefixed id, a rows/columns header and row-major f32 values.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::acoustic::{extract_features, FrameSequence, N_ACOUSTIC};
use crate::binio::{ByteReader, ByteWriter};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::wav::read_wav;

const MAGIC: &[u8; 4] = b"PCF1";

pub fn encode_feature_cache(entries: &[(String, FrameSequence)]) -> Vec<u8> {
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u32(entries.len() as u32);
    for (id, seq) in entries {
        w.str(id);
        w.u32(seq.len() as u32);
        w.u32(N_ACOUSTIC as u32);
        for row in &seq.features {
            for &v in row {
                w.f32(v);
            }
        }
    }
    w.buf
}

pub fn decode_feature_cache(bytes: &[u8]) -> Result<Vec<(String, FrameSequence)>> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(MAGIC)?;
    let n = r.u32()? as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let id = r.str()?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if cols != N_ACOUSTIC {
            return Err(Error::ModelFormat(format!(
                "feature cache has {cols} columns, expected {N_ACOUSTIC}"
            )));
        }
        let mut features = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = [0.0f32; N_ACOUSTIC];
            for v in row.iter_mut() {
                *v = r.f32()?;
            }
            features.push(row);
        }
        out.push((id, FrameSequence::new(features)));
    }
    r.finish()?;
    Ok(out)
}

pub fn write_feature_cache(
    entries: &[(String, FrameSequence)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_feature_cache(entries)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_cache(path: impl AsRef<Path>) -> Result<Vec<(String, FrameSequence)>> {
    let path = path.as_ref();
    decode_feature_cache(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Frames for each document, read from its `audio_path`.
pub fn document_frames(docs: &[Document]) -> Result<Vec<FrameSequence>> {
    docs.iter()
        .map(|d| {
            let path = d
                .audio_path
                .as_ref()
                .ok_or_else(|| Error::MissingAudio(d.doc_id.clone()))?;
            extract_features(&read_wav(path)?)
        })
        .collect()
}

/// Like [`document_frames`], but served from `cache` when it holds every
/// document, and written to `cache` otherwise.
pub fn cached_document_frames(
    docs: &[Document],
    cache: Option<&Path>,
) -> Result<Vec<FrameSequence>> {
    let Some(path) = cache else {
        return document_frames(docs);
    };
    if path.exists() {
        let mut by_id: HashMap<String, FrameSequence> =
            read_feature_cache(path)?.into_iter().collect();
        let hit: Option<Vec<FrameSequence>> =
            docs.iter().map(|d| by_id.remove(&d.doc_id)).collect();
        if let Some(frames) = hit {
            return Ok(frames);
        }
    }
    let frames = document_frames(docs)?;
    let entries: Vec<(String, FrameSequence)> = docs
        .iter()
        .map(|d| d.doc_id.clone())
        .zip(frames.iter().cloned())
        .collect();
    write_feature_cache(&entries, path)?;
    Ok(frames)
}
