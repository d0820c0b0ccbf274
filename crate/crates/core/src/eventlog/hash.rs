//! Event tamper detection.
//!
//! The digest covers every schema field except `hash` itself, in collector
//! order, joined by `|`. Absent fields serialize as the empty string and
//! timestamps use the `YYYY-MM-DD HH:MM:SS.mmm` form. Unknown extra fields
//! are not covered.

use md5::Md5;
use sha2::{Digest, Sha256};

use super::{Field, RawEvent};

/// A 128-bit digest function used to seal events.
pub trait EventDigest: Send + Sync {
    fn name(&self) -> &'static str;
    fn digest(&self, bytes: &[u8]) -> [u8; 16];
}

/// MD5, the default. Not collision resistant; it guards against accidental
/// or casual edits only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Md5Digest;

impl EventDigest for Md5Digest {
    fn name(&self) -> &'static str {
        "md5"
    }

    fn digest(&self, bytes: &[u8]) -> [u8; 16] {
        Md5::digest(bytes).into()
    }
}

/// First 16 bytes of SHA-256.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Truncated;

impl EventDigest for Sha256Truncated {
    fn name(&self) -> &'static str {
        "sha256-128"
    }

    fn digest(&self, bytes: &[u8]) -> [u8; 16] {
        let full = Sha256::digest(bytes);
        let mut out = [0u8; 16];
        out.copy_from_slice(&full[..16]);
        out
    }
}

pub const DEFAULT_DIGEST: Md5Digest = Md5Digest;

pub fn canonical_serialization(event: &RawEvent) -> String {
    Field::ALL.iter().filter(|f| **f != Field::Hash).map(|f| event.get(*f)).collect::<Vec<_>>().join("|")
}

/// Lowercase hex digest of the event's canonical serialization.
pub fn compute_hash(event: &RawEvent, digest: &dyn EventDigest) -> String {
    let bytes = digest.digest(canonical_serialization(event).as_bytes());
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Byte-exact comparison of the stored hash with the recomputed default
/// digest. An uppercase rendering of the correct digest does not verify.
pub fn verify_event_hash(event: &RawEvent) -> bool {
    verify_event_hash_with(event, &DEFAULT_DIGEST)
}

pub fn verify_event_hash_with(event: &RawEvent, digest: &dyn EventDigest) -> bool {
    event.hash == compute_hash(event, digest)
}
