//! `CRM1` model files: magic, a three-byte config block (prosodic feature,
//! scope, label source), the feature registry as length-prefixed strings,
//! then raw and averaged weights as little-endian f64 arrays.

use std::fs;
use std::path::Path;

use super::model::{CorefModel, FeatureRegistry};
use super::{FeatureConfig, ProsodyFeature, Scope};
use crate::annotation::LabelSource;
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CRM1";

pub fn encode_coref_model(model: &CorefModel) -> Vec<u8> {
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    let c = &model.config;
    w.u8(match c.prosody_feature {
        ProsodyFeature::None => 0,
        ProsodyFeature::AccentPresence => 1,
        ProsodyFeature::NuclearPresence => 2,
    });
    w.u8(match c.scope {
        Scope::ShortNp => 0,
        Scope::AllNp => 1,
    });
    w.u8(match c.label_source {
        LabelSource::Gold => 0,
        LabelSource::Predicted => 1,
    });
    w.u32(model.registry.len() as u32);
    for name in model.registry.names() {
        w.str(name);
    }
    for arr in [&model.weights, &model.averaged_weights] {
        w.u64(arr.len() as u64);
        for &v in arr {
            w.f64(v);
        }
    }
    w.buf
}

pub fn decode_coref_model(bytes: &[u8]) -> Result<CorefModel> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(MAGIC)?;
    let prosody_feature = match r.u8()? {
        0 => ProsodyFeature::None,
        1 => ProsodyFeature::AccentPresence,
        2 => ProsodyFeature::NuclearPresence,
        v => return Err(Error::ModelFormat(format!("bad prosodic feature code {v}"))),
    };
    let scope = match r.u8()? {
        0 => Scope::ShortNp,
        1 => Scope::AllNp,
        v => return Err(Error::ModelFormat(format!("bad scope code {v}"))),
    };
    let label_source = match r.u8()? {
        0 => LabelSource::Gold,
        1 => LabelSource::Predicted,
        v => return Err(Error::ModelFormat(format!("bad label source code {v}"))),
    };
    let n = r.u32()? as usize;
    let names = (0..n).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    let registry = FeatureRegistry::from_names(names)?;
    let mut arrays = Vec::with_capacity(2);
    for _ in 0..2 {
        let len = r.u64()? as usize;
        if len != n {
            return Err(Error::ModelFormat(format!(
                "{len} weights for {n} features"
            )));
        }
        let arr = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelFormat("non-finite weight".into()));
        }
        arrays.push(arr);
    }
    r.finish()?;
    let averaged_weights = arrays.pop().unwrap();
    let weights = arrays.pop().unwrap();
    Ok(CorefModel {
        config: FeatureConfig {
            prosody_feature,
            scope,
            label_source,
        },
        registry,
        weights,
        averaged_weights,
    })
}

pub fn save_coref_model(model: &CorefModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_coref_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_coref_model(path: impl AsRef<Path>) -> Result<CorefModel> {
    let path = path.as_ref();
    decode_coref_model(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
