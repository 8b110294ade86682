//! Content digests for reports: files are hashed git-style, with a
//! `blob {len}\0` prefix ahead of the raw bytes, then SHA-256.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex SHA-256 of `blob {len}\0` followed by the content bytes.
pub fn blob_digest(content: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", content.len()).as_bytes());
    hasher.update(content);
    hex_string(&hasher.finalize())
}

/// Digest of a file's bytes, for pinning dataset inputs in reports.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(blob_digest(&std::fs::read(path)?))
}

/// Plain hex SHA-256 of raw bytes, used for checkpoint blob checksums.
pub fn sha256_hex(content: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content);
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
