//! Prefixed base64url text armor shared by every file format.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;

use crate::error::{Error, Result};

pub const CAPABILITY_PREFIX: &str = "dcap1:";
pub const KEY_PREFIX: &str = "dcapk1:";
pub const ENDOWMENT_PREFIX: &str = "dcape1:";

pub fn b64url(bytes: &[u8]) -> String {
    URL_SAFE_NO_PAD.encode(bytes)
}

pub fn from_b64url(text: &str) -> Result<Vec<u8>> {
    URL_SAFE_NO_PAD
        .decode(text.trim())
        .map_err(|e| Error::Malformed(format!("base64url: {e}")))
}

/// `prefix` followed by unpadded base64url of `bytes`.
pub fn armor(prefix: &str, bytes: &[u8]) -> String {
    format!("{prefix}{}", b64url(bytes))
}

/// Inverse of [`armor`]; surrounding whitespace is ignored.
pub fn dearmor(prefix: &str, text: &str) -> Result<Vec<u8>> {
    let body = text
        .trim()
        .strip_prefix(prefix)
        .ok_or_else(|| Error::Malformed(format!("expected `{prefix}` prefix")))?;
    from_b64url(body)
}
