//! Trained-model persistence.
//!
//! A model is stored as one JSON document:
//!
//! ```text
//! { "format_version": 1, "checksum": "<fnv1a64 hex>", "artifact": { ... } }
//! ```
//!
//! The artifact body carries the algorithm tag, its hyperparameters, a
//! feature-space descriptor (opaque JSON owned by the pipeline layer) and all
//! learned parameters as named row-major arrays with explicit shapes. Values
//! are printed in shortest round-trip form, so a load-save cycle reproduces
//! scores bit-identically. The checksum is recomputed on load and guards
//! against silent corruption.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// One learned parameter tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        let p = ParamArray {
            name: name.into(),
            shape,
            data,
        };
        assert_eq!(
            p.shape.iter().product::<usize>(),
            p.data.len(),
            "shape/data mismatch for {}",
            p.name
        );
        p
    }
}

/// Serialized trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub algorithm: String,
    pub hyperparameters: serde_json::Value,
    pub feature_descriptor: serde_json::Value,
    pub fingerprint: String,
    pub params: Vec<ParamArray>,
}

impl ModelArtifact {
    pub fn param(&self, name: &str) -> Result<&ParamArray> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::data(format!("artifact is missing parameter array {name:?}")))
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    checksum: String,
    artifact: ModelArtifact,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn artifact_checksum(artifact: &ModelArtifact) -> Result<String> {
    let canonical = serde_json::to_string(artifact)
        .map_err(|e| Error::data(format!("artifact serialization failed: {e}")))?;
    Ok(format!("{:016x}", fnv1a64(canonical.as_bytes())))
}

pub fn save_model(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        checksum: artifact_checksum(artifact)?,
        artifact: artifact.clone(),
    };
    let text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::data(format!("artifact serialization failed: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path.to_path_buf(), e))
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;

    // Version is checked before full decoding so that future formats get a
    // version error rather than a generic parse failure.
    let probe: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::data_at(format!("malformed model document: {e}"), path, None))?;
    match probe.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::data_at(
                format!("unsupported model format version {v}, this build reads version {FORMAT_VERSION}"),
                path,
                None,
            ))
        }
        None => {
            return Err(Error::data_at(
                "model document has no format_version field",
                path,
                None,
            ))
        }
    }

    let envelope: Envelope = serde_json::from_str(&text)
        .map_err(|e| Error::data_at(format!("malformed model document: {e}"), path, None))?;
    let expect = artifact_checksum(&envelope.artifact)?;
    if expect != envelope.checksum {
        return Err(Error::data_at(
            format!(
                "checksum mismatch: stored {}, recomputed {expect}",
                envelope.checksum
            ),
            path,
            None,
        ));
    }
    Ok(envelope.artifact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample_artifact() -> ModelArtifact {
        ModelArtifact {
            algorithm: "lda".into(),
            hyperparameters: json!({"ridge": 1e-3}),
            feature_descriptor: json!({"feature_set": "fnc_all"}),
            fingerprint: "deadbeef".into(),
            params: vec![
                ParamArray::new("weights", vec![2, 3], vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7.25, -0.0]),
                ParamArray::new("bias", vec![1], vec![0.42424242424242425]),
            ],
        }
    }

    fn temp_path(tag: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("icnflow-artifact-{}-{tag}.json", std::process::id()))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let art = sample_artifact();
        let p = temp_path("roundtrip");
        save_model(&art, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(art, back);
        for (a, b) in art.params.iter().zip(&back.params) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let _ = std::fs::remove_file(&p);
    }

    #[test]
    fn version_mismatch_is_reported() {
        let art = sample_artifact();
        let p = temp_path("version");
        save_model(&art, &p).unwrap();
        let text = std::fs::read_to_string(&p)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&p, text).unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("version 99"), "{err}");
        let _ = std::fs::remove_file(&p);
    }

    #[test]
    fn tampered_value_fails_checksum() {
        let art = sample_artifact();
        let p = temp_path("tamper");
        save_model(&art, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap().replace("7.25", "7.26");
        std::fs::write(&p, text).unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
        let _ = std::fs::remove_file(&p);
    }

    #[test]
    fn malformed_document_is_reported() {
        let p = temp_path("malformed");
        std::fs::write(&p, "{ not json").unwrap();
        let err = load_model(&p).unwrap_err();
        assert!(err.to_string().contains("malformed"), "{err}");
        let _ = std::fs::remove_file(&p);
    }

    #[test]
    fn missing_param_lookup_errors() {
        let art = sample_artifact();
        assert!(art.param("weights").is_ok());
        assert!(art.param("no-such").is_err());
    }
}
