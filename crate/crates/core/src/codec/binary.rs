//! Binary log (`.rprb`). Layout is described in `docs/formats.md`.

use integer_encoding::VarInt;

use crate::blob::{BlobRef, Digest};
use crate::call::{ArgValue, CallRecord, FunctionId, IdRef, ResourceKind, VirtualId};
use crate::error::CodecError;
use crate::gl::GlEnum;
use crate::log::{Counters, TraceLog};

pub const MAGIC: &[u8; 4] = b"RPRL";
pub const VERSION: u16 = 1;

const TAG_INT: u8 = 0;
const TAG_FLOAT: u8 = 1;
const TAG_ENUM: u8 = 2;
const TAG_ID: u8 = 3;
const TAG_BLOB: u8 = 4;

pub(crate) fn put_var<T: VarInt>(out: &mut Vec<u8>, v: T) {
    out.extend_from_slice(&v.encode_var_vec());
}

pub fn encode_binary(log: &TraceLog) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + log.len() * 24 + log.blobs.total_bytes() as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());

    let counters: Vec<_> = log.counters.non_default().collect();
    put_var(&mut out, counters.len() as u64);
    for (kind, next) in counters {
        out.push(kind.code());
        put_var(&mut out, next);
    }

    put_var(&mut out, log.records.len() as u64);
    let mut payload = Vec::new();
    for rec in &log.records {
        payload.clear();
        encode_record(&mut payload, rec);
        put_var(&mut out, payload.len() as u64);
        out.extend_from_slice(&payload);
    }

    put_var(&mut out, log.blobs.len() as u64);
    for (digest, bytes) in log.blobs.iter() {
        out.extend_from_slice(&digest.0);
        put_var(&mut out, bytes.len() as u64);
        out.extend_from_slice(bytes);
    }
    out
}

fn encode_record(out: &mut Vec<u8>, rec: &CallRecord) {
    put_var(out, rec.seq);
    out.push(rec.func.code());
    put_var(out, rec.frame);
    put_var(out, rec.args.len() as u64);
    for arg in &rec.args {
        match arg {
            ArgValue::Int(v) => {
                out.push(TAG_INT);
                put_var(out, *v);
            }
            ArgValue::Float(v) => {
                out.push(TAG_FLOAT);
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            ArgValue::Enum(e) => {
                out.push(TAG_ENUM);
                put_var(out, e.value());
            }
            ArgValue::Id(r) => {
                out.push(TAG_ID);
                encode_id(out, r);
            }
            ArgValue::Blob(b) => {
                out.push(TAG_BLOB);
                out.extend_from_slice(&b.digest.0);
                put_var(out, b.len);
            }
        }
    }
    put_var(out, rec.returned.len() as u64);
    for r in &rec.returned {
        encode_id(out, r);
    }
}

fn encode_id(out: &mut Vec<u8>, r: &IdRef) {
    out.push(r.kind.code());
    put_var(out, r.id.0);
}

/// Bounds-checked cursor. Offsets in errors are absolute within the
/// outermost buffer.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0, base: 0 }
    }

    /// A reader over the next `n` bytes, which are consumed.
    fn sub(&mut self, n: usize) -> Result<Reader<'a>, CodecError> {
        let base = self.offset();
        let buf = self.bytes(n)?;
        Ok(Reader { buf, pos: 0, base })
    }

    pub(crate) fn offset(&self) -> usize {
        self.base + self.pos
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }

    fn truncated(&self) -> CodecError {
        CodecError::TruncatedRecord {
            offset: self.offset(),
        }
    }

    pub(crate) fn malformed(&self, detail: impl Into<String>) -> CodecError {
        CodecError::Malformed {
            offset: self.offset(),
            detail: detail.into(),
        }
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(self.truncated());
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.bytes(1)?[0])
    }

    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.bytes(N)?.try_into().expect("length checked"))
    }

    pub(crate) fn var<T: VarInt>(&mut self) -> Result<T, CodecError> {
        match T::decode_var(&self.buf[self.pos..]) {
            Some((v, n)) => {
                self.pos += n;
                Ok(v)
            }
            None if self.buf[self.pos..].iter().all(|b| b & 0x80 != 0) => Err(self.truncated()),
            None => Err(self.malformed("varint out of range")),
        }
    }

    /// A count or length that must fit in the remaining input.
    pub(crate) fn len(&mut self) -> Result<usize, CodecError> {
        let n: u64 = self.var()?;
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(self.truncated());
        }
        Ok(n as usize)
    }

    fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest(self.array()?))
    }

    fn kind(&mut self) -> Result<ResourceKind, CodecError> {
        let code = self.u8()?;
        ResourceKind::from_code(code).ok_or_else(|| self.malformed(format!("resource kind {code}")))
    }

    fn id(&mut self) -> Result<IdRef, CodecError> {
        let kind = self.kind()?;
        Ok(IdRef {
            kind,
            id: VirtualId(self.var()?),
        })
    }
}

pub(crate) fn check_header(r: &mut Reader, magic: &[u8; 4], version: u16) -> Result<(), CodecError> {
    let found = r.bytes(4.min(r.buf.len()))?;
    if found != magic {
        return Err(CodecError::BadMagic {
            found: found.to_vec(),
        });
    }
    let v = u16::from_le_bytes(r.array()?);
    if v != version {
        return Err(CodecError::VersionMismatch {
            found: v.to_string(),
        });
    }
    let flags = u16::from_le_bytes(r.array()?);
    if flags != 0 {
        return Err(r.malformed(format!("unknown flags {flags:#x}")));
    }
    Ok(())
}

pub fn parse_binary(buf: &[u8]) -> Result<TraceLog, CodecError> {
    let mut r = Reader::new(buf);
    let log = read_log(&mut r)?;
    if !r.at_end() {
        return Err(r.malformed("trailing bytes"));
    }
    Ok(log)
}

pub(crate) fn read_log(r: &mut Reader) -> Result<TraceLog, CodecError> {
    check_header(r, MAGIC, VERSION)?;
    let mut log = TraceLog::new();

    let n = r.len()?;
    let mut counters = Counters::default();
    let mut last = None;
    for _ in 0..n {
        let kind = r.kind()?;
        let next: u64 = r.var()?;
        if last >= Some(kind) || next <= 1 {
            return Err(r.malformed("counters not canonical"));
        }
        last = Some(kind);
        counters.set(kind, next);
    }
    log.counters = counters;

    let n = r.len()?;
    log.records.reserve(n);
    for _ in 0..n {
        let len = r.len()?;
        let mut rec = r.sub(len)?;
        log.records.push(read_record(&mut rec)?);
        if !rec.at_end() {
            return Err(rec.malformed("trailing bytes in record"));
        }
    }

    let n = r.len()?;
    let mut prev = None;
    for _ in 0..n {
        let digest = r.digest()?;
        if prev >= Some(digest) {
            return Err(r.malformed("blob section not sorted"));
        }
        prev = Some(digest);
        let len = r.len()?;
        let bytes = r.bytes(len)?;
        log.blobs
            .put_verified(digest, bytes)
            .map_err(|_| CodecError::DigestMismatch(digest))?;
    }
    log.validate()?;
    Ok(log)
}

fn read_record(r: &mut Reader) -> Result<CallRecord, CodecError> {
    let seq = r.var()?;
    let code = r.u8()?;
    let func = FunctionId::from_code(code).ok_or_else(|| r.malformed(format!("function code {code}")))?;
    let frame = r.var()?;
    let argc = r.len()?;
    let mut args = Vec::with_capacity(argc);
    for _ in 0..argc {
        let tag = r.u8()?;
        args.push(match tag {
            TAG_INT => ArgValue::Int(r.var()?),
            TAG_FLOAT => ArgValue::Float(f64::from_bits(u64::from_le_bytes(r.array()?))),
            TAG_ENUM => {
                let v: u32 = r.var()?;
                ArgValue::Enum(GlEnum::from_value(v).ok_or_else(|| r.malformed(format!("enum {v:#x}")))?)
            }
            TAG_ID => ArgValue::Id(r.id()?),
            TAG_BLOB => ArgValue::Blob(BlobRef {
                digest: r.digest()?,
                len: r.var()?,
            }),
            _ => return Err(r.malformed(format!("argument tag {tag}"))),
        });
    }
    let n = r.len()?;
    let mut returned = Vec::with_capacity(n);
    for _ in 0..n {
        returned.push(r.id()?);
    }
    crate::call::check_signature(func, &args).map_err(|d| r.malformed(d))?;
    Ok(CallRecord {
        seq,
        func,
        args,
        returned,
        frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blob::BlobStore;

    fn small_log() -> TraceLog {
        let mut blobs = BlobStore::new();
        let b = blobs.put(b"some pixels");
        let mut counters = Counters::default();
        counters.set(ResourceKind::Texture, 2);
        counters.set(ResourceKind::Context, 2);
        TraceLog {
            records: vec![
                CallRecord {
                    seq: 0,
                    func: FunctionId::CreateContext,
                    args: vec![],
                    returned: vec![IdRef::new(ResourceKind::Context, 1)],
                    frame: 0,
                },
                CallRecord {
                    seq: 1,
                    func: FunctionId::GenTextures,
                    args: vec![ArgValue::Int(1)],
                    returned: vec![IdRef::new(ResourceKind::Texture, 1)],
                    frame: 0,
                },
                CallRecord {
                    seq: 2,
                    func: FunctionId::TexImage,
                    args: vec![
                        ArgValue::Enum(GlEnum::GL_TEXTURE_2D),
                        ArgValue::Int(0),
                        ArgValue::Enum(GlEnum::GL_RGBA),
                        ArgValue::Int(-3),
                        ArgValue::Int(1),
                        ArgValue::Blob(b),
                    ],
                    returned: vec![],
                    frame: 0,
                },
                CallRecord {
                    seq: 5,
                    func: FunctionId::Draw,
                    args: vec![
                        ArgValue::Enum(GlEnum::GL_TRIANGLES),
                        ArgValue::Int(0),
                        ArgValue::Int(3),
                    ],
                    returned: vec![],
                    frame: 0,
                },
            ],
            blobs,
            counters,
        }
    }

    #[test]
    fn empty_log_layout() {
        let bytes = encode_binary(&TraceLog::new());
        assert_eq!(bytes, b"RPRL\x01\x00\x00\x00\x00\x00\x00");
        assert_eq!(parse_binary(&bytes).unwrap(), TraceLog::new());
    }

    #[test]
    fn round_trip_and_determinism() {
        let log = small_log();
        let a = encode_binary(&log);
        assert_eq!(a, encode_binary(&log.clone()));
        assert_eq!(parse_binary(&a).unwrap(), log);
    }

    #[test]
    fn corrupt_blob_byte() {
        let mut bytes = encode_binary(&small_log());
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert!(matches!(parse_binary(&bytes), Err(CodecError::DigestMismatch(_))));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_binary(&small_log());
        bytes[0] = b'X';
        assert!(matches!(parse_binary(&bytes), Err(CodecError::BadMagic { .. })));
        let mut bytes = encode_binary(&small_log());
        bytes[4] = 9;
        assert!(matches!(parse_binary(&bytes), Err(CodecError::VersionMismatch { .. })));
        assert!(matches!(parse_binary(b"RP"), Err(CodecError::BadMagic { .. })));
    }

    #[test]
    fn every_truncation_is_an_error() {
        let bytes = encode_binary(&small_log());
        for cut in 0..bytes.len() {
            let err = parse_binary(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(
                    err,
                    CodecError::TruncatedRecord { .. } | CodecError::BadMagic { .. }
                ),
                "cut {cut}: {err:?}"
            );
        }
    }
}
