//! `PMD1` model files: magic, event kind byte, format version, the CNN shape,
//! then each tensor as a dimension count, dimensions and little-endian f32s.

use std::fs;
use std::path::Path;

use super::cnn::{CnnParams, CnnShape, ProsodyModel, MODEL_VERSION};
use super::EventKind;
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PMD1";

fn tensor_dims(s: &CnnShape) -> [Vec<usize>; 6] {
    [
        vec![s.k1, s.rows, s.kw1],
        vec![s.k1],
        vec![s.k2, s.k1, s.kw2],
        vec![s.k2],
        vec![2, s.k2],
        vec![2],
    ]
}

pub fn encode_model(model: &ProsodyModel) -> Vec<u8> {
    let s = &model.shape;
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u8(match model.event_kind {
        EventKind::Accent => 0,
        EventKind::Boundary => 1,
    });
    w.u32(model.version);
    for v in [s.rows, s.width, s.k1, s.kw1, s.k2, s.kw2] {
        w.u32(v as u32);
    }
    for (dims, t) in tensor_dims(s).iter().zip(model.params.tensors()) {
        w.u32(dims.len() as u32);
        for &d in dims {
            w.u32(d as u32);
        }
        for &v in t {
            w.f32(v as f32);
        }
    }
    w.buf
}

pub fn decode_model(bytes: &[u8]) -> Result<ProsodyModel> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(MAGIC)?;
    let event_kind = match r.u8()? {
        0 => EventKind::Accent,
        1 => EventKind::Boundary,
        k => return Err(Error::ModelFormat(format!("unknown event kind byte {k}"))),
    };
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {version}"
        )));
    }
    let mut dims = [0usize; 6];
    for d in dims.iter_mut() {
        *d = r.u32()? as usize;
    }
    let shape = CnnShape {
        rows: dims[0],
        width: dims[1],
        k1: dims[2],
        kw1: dims[3],
        k2: dims[4],
        kw2: dims[5],
    };
    shape
        .validate()
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let mut params = CnnParams::zeros(&shape);
    for (expected, t) in tensor_dims(&shape).iter().zip(params.tensors_mut()) {
        let ndim = r.u32()? as usize;
        let got: Vec<usize> = (0..ndim)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<_>>()?;
        if &got != expected {
            return Err(Error::ModelFormat(format!(
                "tensor shape {got:?}, expected {expected:?}"
            )));
        }
        for v in t.iter_mut() {
            *v = r.f32()? as f64;
        }
    }
    r.finish()?;
    let model = ProsodyModel {
        event_kind,
        version,
        shape,
        params,
    };
    if !model.params.is_finite() {
        return Err(Error::ModelFormat("non-finite weights".into()));
    }
    Ok(model)
}

pub fn save_model(model: &ProsodyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ProsodyModel> {
    let path = path.as_ref();
    decode_model(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
