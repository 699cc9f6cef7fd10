//! Checkpoint container (`.rpck`).

use sha2::{Digest as _, Sha256};

use super::binary::{check_header, put_var, read_log, Reader};
use crate::blob::Digest;
use crate::call::{RealId, ResourceKind, VirtualId};
use crate::error::CodecError;
use crate::ids::TranslationTable;
use crate::log::{Counters, TraceLog};

pub const MAGIC: &[u8; 4] = b"RPCK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImageMeta {
    pub frame_count: u64,
    /// Seq the restored session assigns to its next recorded call.
    pub next_seq: u64,
    pub wall_clock_ms: u64,
    pub state_digest: Digest,
    pub last_frame: Digest,
}

/// Everything needed to restart a session: the pruned log with its blobs,
/// the live translation table at checkpoint time, and the virtual-id
/// counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointImage {
    pub pruned_log: TraceLog,
    pub table: TranslationTable,
    pub counters: Counters,
    pub meta: ImageMeta,
}

pub fn encode_image(image: &CheckpointImage) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());

    let log = super::encode_binary(&image.pruned_log);
    put_var(&mut out, log.len() as u64);
    out.extend_from_slice(&log);

    let triples = image.table.triples();
    put_var(&mut out, triples.len() as u64);
    for (kind, vid, real) in triples {
        out.push(kind.code());
        put_var(&mut out, vid.0);
        put_var(&mut out, real.0);
    }

    for kind in ResourceKind::ALL {
        put_var(&mut out, image.counters.get(kind));
    }

    let m = &image.meta;
    put_var(&mut out, m.frame_count);
    put_var(&mut out, m.next_seq);
    out.extend_from_slice(&m.wall_clock_ms.to_le_bytes());
    out.extend_from_slice(&m.state_digest.0);
    out.extend_from_slice(&m.last_frame.0);

    let check: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&check);
    out
}

/// Parses a checkpoint image. Any structural problem, including a failed
/// trailing checksum, is reported as `BadImage`.
pub fn parse_image(buf: &[u8]) -> Result<CheckpointImage, CodecError> {
    let bad = |e: CodecError| match e {
        CodecError::BadImage(_) => e,
        other => CodecError::BadImage(other.to_string()),
    };
    if buf.len() < 32 {
        return Err(CodecError::BadImage("file too short".into()));
    }
    let (body, check) = buf.split_at(buf.len() - 32);
    let mut r = Reader::new(body);
    check_header(&mut r, MAGIC, VERSION).map_err(bad)?;
    let expected: [u8; 32] = Sha256::digest(body).into();
    if expected != check {
        return Err(CodecError::BadImage("checksum mismatch".into()));
    }
    parse_body(&mut r).map_err(bad)
}

fn parse_body(r: &mut Reader) -> Result<CheckpointImage, CodecError> {
    let len = r.len()?;
    let mut log_reader = Reader::new(r.bytes(len)?);
    let pruned_log = read_log(&mut log_reader)?;
    if !log_reader.at_end() {
        return Err(CodecError::BadImage("trailing bytes after log".into()));
    }

    let n = r.len()?;
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let code = r.u8()?;
        let kind = ResourceKind::from_code(code).ok_or_else(|| r.malformed("resource kind"))?;
        let vid = VirtualId(r.var()?);
        let real = RealId(r.var()?);
        triples.push((kind, vid, real));
    }

    let mut counters = Counters::default();
    for kind in ResourceKind::ALL {
        counters.set(kind, r.var()?);
    }
    let table = TranslationTable::from_triples(&triples, &counters)
        .map_err(|e| CodecError::BadImage(format!("translation table: {e}")))?;

    let meta = ImageMeta {
        frame_count: r.var()?,
        next_seq: r.var()?,
        wall_clock_ms: u64::from_le_bytes(r.array()?),
        state_digest: Digest(r.array()?),
        last_frame: Digest(r.array()?),
    };
    if !r.at_end() {
        return Err(CodecError::BadImage("trailing bytes".into()));
    }
    Ok(CheckpointImage {
        pruned_log,
        table,
        counters,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image() -> CheckpointImage {
        let mut counters = Counters::default();
        counters.set(ResourceKind::Texture, 4);
        counters.set(ResourceKind::Context, 2);
        let triples = vec![
            (ResourceKind::Texture, VirtualId(3), RealId(17)),
            (ResourceKind::Context, VirtualId(1), RealId(1)),
        ];
        CheckpointImage {
            pruned_log: TraceLog::new(),
            table: TranslationTable::from_triples(&triples, &counters).unwrap(),
            counters,
            meta: ImageMeta {
                frame_count: 12,
                next_seq: 400,
                wall_clock_ms: 1_700_000_000_000,
                state_digest: Digest::of(b"s"),
                last_frame: Digest::of(b"f"),
            },
        }
    }

    #[test]
    fn round_trip() {
        let img = image();
        let bytes = encode_image(&img);
        assert_eq!(parse_image(&bytes).unwrap(), img);
        assert_eq!(encode_image(&img), bytes);
    }

    #[test]
    fn any_flipped_byte_is_rejected() {
        let bytes = encode_image(&image());
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x40;
            assert!(matches!(parse_image(&b), Err(CodecError::BadImage(_))), "byte {i}");
        }
        assert!(matches!(parse_image(&bytes[..10]), Err(CodecError::BadImage(_))));
    }
}
