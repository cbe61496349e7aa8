//! Canonical JSON: lexicographically sorted keys, no insignificant whitespace.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Serializes through `serde_json::Value`, whose object map keeps keys sorted.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

pub fn value_to_string(v: &serde_json::Value) -> String {
    // Value's Display is compact and, without preserve_order, key-sorted.
    v.to_string()
}

/// Hex SHA-256 of the bytes.
pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
