//! The trace log: recorded calls plus the data they reference.

use std::collections::BTreeMap;

use crate::blob::BlobStore;
use crate::call::{check_signature, CallRecord, ResourceKind};
use crate::error::LogError;

/// Per-kind "next virtual id" counters. Missing kinds default to 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Counters(BTreeMap<ResourceKind, u64>);

impl Counters {
    pub fn get(&self, kind: ResourceKind) -> u64 {
        self.0.get(&kind).copied().unwrap_or(1)
    }

    pub fn set(&mut self, kind: ResourceKind, next: u64) {
        if next <= 1 {
            self.0.remove(&kind);
        } else {
            self.0.insert(kind, next);
        }
    }

    /// Counters that differ from the default, in kind order.
    pub fn non_default(&self) -> impl Iterator<Item = (ResourceKind, u64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

/// Ordered call records, their blob store, and the virtual-id counters in
/// effect after the last record.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceLog {
    pub records: Vec<CallRecord>,
    pub blobs: BlobStore,
    pub counters: Counters,
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks the structural invariants of the log: catalog signatures,
    /// strictly increasing seq, non-decreasing frame index, consistent
    /// frame numbering, returned ids only on Gen/Create calls, and every
    /// blob reference resolving in the store.
    pub fn validate(&self) -> Result<(), LogError> {
        let mut prev: Option<&CallRecord> = None;
        for (index, rec) in self.records.iter().enumerate() {
            check_signature(rec.func, &rec.args)
                .map_err(|detail| LogError::Signature { seq: rec.seq, detail })?;
            if let Some(p) = prev {
                if rec.seq <= p.seq {
                    return Err(LogError::SeqOrder { index });
                }
                let min_frame = p.frame + u64::from(p.func.is_frame_root());
                if rec.frame < min_frame {
                    return Err(LogError::FrameOrder { index });
                }
            }
            let gen = rec.func.role() == crate::call::RoleTag::ResourceGen;
            if !gen && !rec.returned.is_empty() {
                return Err(LogError::UnexpectedReturn { seq: rec.seq });
            }
            if let Some(kind) = rec.func.resource_kind().filter(|_| gen) {
                if rec.returned.iter().any(|r| r.kind != kind || r.id.is_none()) {
                    return Err(LogError::UnexpectedReturn { seq: rec.seq });
                }
            }
            for blob in rec.blobs() {
                if !self.blobs.contains(&blob.digest) {
                    return Err(LogError::MissingBlob {
                        seq: rec.seq,
                        digest: blob.digest,
                    });
                }
            }
            prev = Some(rec);
        }
        Ok(())
    }

    /// Number of frame roots covered by the log, counting from the first
    /// frame of the original recording.
    pub fn frame_count(&self) -> u64 {
        self.records
            .iter()
            .map(|r| r.frame + u64::from(r.func.is_frame_root()))
            .max()
            .unwrap_or(0)
    }

    pub fn next_seq(&self) -> u64 {
        self.records.last().map_or(0, |r| r.seq + 1)
    }

    /// The same log with the blob store trimmed to referenced entries.
    pub fn with_referenced_blobs(mut self) -> TraceLog {
        let digests: Vec<_> = self
            .records
            .iter()
            .flat_map(|r| r.blobs().map(|b| b.digest))
            .collect();
        self.blobs = self.blobs.restricted_to(digests.iter());
        self
    }
}
