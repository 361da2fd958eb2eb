use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coopreg_core::GainSet;

/// Everything needed to reproduce a synthesis or run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Input file name to SHA-256 of its bytes.
    pub inputs: Vec<(String, String)>,
    pub law: String,
    pub observer_path: Option<String>,
    pub provenance: Vec<String>,
    pub gains: GainSet,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl RunManifest {
    pub fn new(inputs: Vec<(String, &[u8])>, gains: &GainSet) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: inputs
                .into_iter()
                .map(|(n, d)| (n, sha256_hex(d)))
                .collect(),
            law: gains.kind.as_str().into(),
            observer_path: gains.observer.as_ref().map(|o| o.describe()),
            provenance: gains.provenance.clone(),
            gains: gains.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
