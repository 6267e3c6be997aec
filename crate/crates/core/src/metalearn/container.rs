//! Versioned file format for fitted meta-learners: the magic bytes `MSEL`,
//! a little-endian u32 format version, then the model as JSON (schemas,
//! standardization statistics, grid and fitted state).

use std::path::Path;

use super::MetaLearnerModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MSEL";
pub const FORMAT_VERSION: u32 = 1;

pub fn model_to_bytes(model: &MetaLearnerModel) -> Result<Vec<u8>> {
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend(serde_json::to_vec(model)?);
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<MetaLearnerModel> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Container("not a meta-learner model file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Container(format!(
            "format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let model: MetaLearnerModel =
        serde_json::from_slice(&bytes[8..]).map_err(|e| Error::Container(format!("corrupt model: {e}")))?;
    if model.standardizer.means.len() != model.feature_schema.len() {
        return Err(Error::Container("standardization does not match the feature schema".into()));
    }
    if let Some(g) = &model.grid {
        model.check_grid(g)?;
    }
    Ok(model)
}

pub fn save_model(model: &MetaLearnerModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MetaLearnerModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
