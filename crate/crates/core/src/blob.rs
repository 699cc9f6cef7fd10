//! Content-addressed storage for client-memory data captured at record time.
//!
//! Every entry is keyed by the SHA-256 of its bytes, so identical uploads
//! collapse into one entry and a corrupted entry is detectable on load.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use sha2::{Digest as _, Sha256};

use crate::error::BlobError;

/// A 256-bit SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Digest {
        Digest(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(Digest(out))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Reference to a blob: its digest plus its length in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlobRef {
    pub digest: Digest,
    pub len: u64,
}

impl BlobRef {
    pub fn for_bytes(bytes: &[u8]) -> BlobRef {
        BlobRef {
            digest: Digest::of(bytes),
            len: bytes.len() as u64,
        }
    }
}

/// Deduplicating blob store. Cloning is cheap: entries are shared.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlobStore {
    entries: BTreeMap<Digest, Arc<[u8]>>,
    total_bytes: u64,
}

impl BlobStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Copies `bytes` into the store. Inserting the same bytes again returns
    /// the same reference and leaves the store unchanged.
    pub fn put(&mut self, bytes: &[u8]) -> BlobRef {
        let blob = BlobRef::for_bytes(bytes);
        self.entries.entry(blob.digest).or_insert_with(|| {
            self.total_bytes += bytes.len() as u64;
            Arc::from(bytes)
        });
        blob
    }

    /// Inserts bytes that are claimed to hash to `digest`, verifying the claim.
    pub fn put_verified(&mut self, digest: Digest, bytes: &[u8]) -> Result<(), BlobError> {
        if Digest::of(bytes) != digest {
            return Err(BlobError::DigestMismatch(digest));
        }
        self.put(bytes);
        Ok(())
    }

    pub fn get(&self, digest: &Digest) -> Result<&[u8], BlobError> {
        self.entries
            .get(digest)
            .map(|b| &b[..])
            .ok_or(BlobError::MissingBlob(*digest))
    }

    pub fn contains(&self, digest: &Digest) -> bool {
        self.entries.contains_key(digest)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_bytes
    }

    /// Entries in ascending digest order.
    pub fn iter(&self) -> impl Iterator<Item = (&Digest, &[u8])> {
        self.entries.iter().map(|(d, b)| (d, &b[..]))
    }

    /// A new store holding only the entries whose digests are listed.
    pub fn restricted_to<'a>(&self, keep: impl IntoIterator<Item = &'a Digest>) -> BlobStore {
        let mut out = BlobStore::new();
        for digest in keep {
            if let Some(bytes) = self.entries.get(digest) {
                if !out.entries.contains_key(digest) {
                    out.total_bytes += bytes.len() as u64;
                    out.entries.insert(*digest, Arc::clone(bytes));
                }
            }
        }
        out
    }
}
