//! Packed bit files with a TOML sidecar.
//!
//! `<name>` holds the bits little-endian within bytes (bit `i` in byte
//! `i / 8`, position `i % 8`). `<name>.meta.toml` records the bit count, the
//! SHA-256 of the packed bytes and optional extraction parameters.

use std::path::{Path, PathBuf};

use cvqrng_core::BitString;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExtractError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BitFileMeta {
    pub n_bits: usize,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_out: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_smooth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_hash: Option<f64>,
}

/// Hex SHA-256 of the packed little-endian bytes.
pub fn digest_hex(bits: &BitString) -> String {
    sha256_hex(&bits.to_bytes_le())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// Writes bits and sidecar; `n_bits` and `sha256` of `meta` are filled in.
pub fn write_bits(path: &Path, bits: &BitString, mut meta: BitFileMeta) -> Result<BitFileMeta> {
    meta.n_bits = bits.len();
    meta.sha256 = digest_hex(bits);
    std::fs::write(path, bits.to_bytes_le())?;
    let text = toml::to_string(&meta).map_err(|e| ExtractError::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), text)?;
    Ok(meta)
}

/// Reads a bit file. Without a sidecar every byte counts as 8 bits; with
/// one, the length and digest are checked.
pub fn read_bits(path: &Path) -> Result<(BitString, Option<BitFileMeta>)> {
    let bytes = std::fs::read(path)?;
    let side = sidecar_path(path);
    if !side.exists() {
        let bits = BitString::from_bytes_le(&bytes, bytes.len() * 8).expect("length fits");
        return Ok((bits, None));
    }
    let meta: BitFileMeta = toml::from_str(&std::fs::read_to_string(side)?)
        .map_err(|e| ExtractError::Format(e.to_string()))?;
    if bytes.len() != meta.n_bits.div_ceil(8) {
        return Err(ExtractError::Format(format!(
            "{} bytes on disk, sidecar says {} bits",
            bytes.len(),
            meta.n_bits
        )));
    }
    let bits = BitString::from_bytes_le(&bytes, meta.n_bits).expect("length checked");
    if digest_hex(&bits) != meta.sha256 {
        return Err(ExtractError::Format("digest mismatch".into()));
    }
    Ok((bits, Some(meta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        // SHA-256 of the single byte 0x01.
        let bits = BitString::from_str01("1").unwrap();
        assert_eq!(
            digest_hex(&bits),
            "4bf5122f344554c53bde2ebb8cd2b7e3d1600ad631c385a5d7cce23c7785459a"
        );
    }

    #[test]
    fn round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.bin");
        let bits = BitString::from_str01("1101001110101").unwrap();
        let meta = write_bits(&path, &bits, BitFileMeta { m_out: Some(13), ..Default::default() }).unwrap();
        let (back, m) = read_bits(&path).unwrap();
        assert_eq!(back, bits);
        assert_eq!(m.unwrap(), meta);

        std::fs::write(&path, [0xff, 0x00]).unwrap();
        assert!(matches!(read_bits(&path), Err(ExtractError::Format(_))));
    }
}
