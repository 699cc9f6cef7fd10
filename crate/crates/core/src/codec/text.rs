//! Line-oriented text log (`.rprt`).
//!
//! ```text
//! RPRT 1 next=Texture:3
//! 0 CreateContext() -> Context#1 @f0
//! 1 GenTextures(2) -> Texture#1,Texture#2 @f0
//! 2 ClearColor(0.5,0.5,0.5,1.0) @f0
//! %blob <hex64-digest> <hex bytes>
//! ```

use std::fmt::Write as _;

use crate::blob::{BlobRef, Digest};
use crate::call::{ArgValue, CallRecord, FunctionId, IdRef, ResourceKind, VirtualId};
use crate::error::CodecError;
use crate::gl::GlEnum;
use crate::log::{Counters, TraceLog};

pub const MAGIC: &str = "RPRT";
pub const VERSION: u32 = 1;

pub fn encode_text(log: &TraceLog) -> String {
    let mut out = format!("{MAGIC} {VERSION}");
    let counters: Vec<String> = log
        .counters
        .non_default()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    if !counters.is_empty() {
        let _ = write!(out, " next={}", counters.join(","));
    }
    out.push('\n');
    for rec in &log.records {
        encode_record(&mut out, rec);
        out.push('\n');
    }
    for (digest, bytes) in log.blobs.iter() {
        let _ = writeln!(out, "%blob {digest} {}", hex::encode(bytes));
    }
    out
}

fn encode_record(out: &mut String, rec: &CallRecord) {
    let _ = write!(out, "{} {}(", rec.seq, rec.func);
    for (i, arg) in rec.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        encode_arg(out, arg);
    }
    out.push(')');
    if !rec.returned.is_empty() {
        out.push_str(" -> ");
        let ids: Vec<String> = rec.returned.iter().map(IdRef::to_string).collect();
        out.push_str(&ids.join(","));
    }
    let _ = write!(out, " @f{}", rec.frame);
}

fn encode_arg(out: &mut String, arg: &ArgValue) {
    let _ = match arg {
        ArgValue::Int(v) => write!(out, "{v}"),
        ArgValue::Float(v) if v.is_nan() => write!(out, "nan:{:016x}", v.to_bits()),
        ArgValue::Float(v) => write!(out, "{v:?}"),
        ArgValue::Enum(e) => write!(out, "{e}"),
        ArgValue::Id(r) => write!(out, "{r}"),
        ArgValue::Blob(b) => write!(out, "blob:{}:{}", b.digest, b.len),
    };
}

pub fn parse_text(doc: &str) -> Result<TraceLog, CodecError> {
    let mut lines = doc.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| CodecError::VersionMismatch {
        found: "empty document".into(),
    })?;
    let mut log = TraceLog::new();
    log.counters = parse_header(header)?;
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("%blob ") {
            let (digest, bytes) = rest.split_once(' ').ok_or_else(|| syntax(line, "blob line"))?;
            let digest = Digest::from_hex(digest).ok_or_else(|| syntax(line, "blob digest"))?;
            let bytes = hex::decode(bytes).map_err(|_| syntax(line, "blob bytes"))?;
            log.blobs
                .put_verified(digest, &bytes)
                .map_err(|_| CodecError::DigestMismatch(digest))?;
        } else {
            log.records.push(parse_record(line, text)?);
        }
    }
    log.validate()?;
    Ok(log)
}

fn syntax(line: usize, detail: impl Into<String>) -> CodecError {
    CodecError::Syntax {
        line,
        detail: detail.into(),
    }
}

fn parse_header(header: &str) -> Result<Counters, CodecError> {
    let mut parts = header.split(' ');
    let magic = parts.next().unwrap_or("");
    let version = parts.next().unwrap_or("");
    if magic != MAGIC || version != VERSION.to_string() {
        return Err(CodecError::VersionMismatch {
            found: header.chars().take(32).collect(),
        });
    }
    let mut counters = Counters::default();
    match (parts.next(), parts.next()) {
        (None, _) => {}
        (Some(next), None) => {
            let list = next
                .strip_prefix("next=")
                .ok_or_else(|| syntax(1, "expected next=<counters>"))?;
            for item in list.split(',') {
                let (kind, value) = item.split_once(':').ok_or_else(|| syntax(1, "counter"))?;
                let kind = ResourceKind::from_name(kind).ok_or_else(|| syntax(1, "counter kind"))?;
                let value = value.parse().map_err(|_| syntax(1, "counter value"))?;
                counters.set(kind, value);
            }
        }
        _ => return Err(syntax(1, "trailing header fields")),
    }
    Ok(counters)
}

fn parse_record(line: usize, text: &str) -> Result<CallRecord, CodecError> {
    let (seq, rest) = text.split_once(' ').ok_or_else(|| syntax(line, "expected `<seq> <call>`"))?;
    let seq = seq.parse().map_err(|_| syntax(line, format!("bad seq `{seq}`")))?;
    let open = rest.find('(').ok_or_else(|| syntax(line, "expected `(`"))?;
    let name = &rest[..open];
    let func = FunctionId::from_name(name).ok_or_else(|| CodecError::UnknownFunction {
        line,
        name: name.to_string(),
    })?;
    let close = rest.find(')').ok_or_else(|| syntax(line, "expected `)`"))?;
    let inner = &rest[open + 1..close];
    let args = if inner.is_empty() {
        vec![]
    } else {
        inner
            .split(',')
            .map(|tok| parse_arg(tok).ok_or_else(|| syntax(line, format!("bad argument `{tok}`"))))
            .collect::<Result<Vec<_>, _>>()?
    };

    let mut tail = &rest[close + 1..];
    let mut returned = vec![];
    if let Some(after) = tail.strip_prefix(" -> ") {
        let (ids, remainder) = after.split_once(' ').ok_or_else(|| syntax(line, "expected frame"))?;
        for tok in ids.split(',') {
            returned.push(parse_id(tok).ok_or_else(|| syntax(line, format!("bad id `{tok}`")))?);
        }
        tail = remainder;
    } else {
        tail = tail.strip_prefix(' ').ok_or_else(|| syntax(line, "expected frame"))?;
    }
    let frame = tail
        .strip_prefix("@f")
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| syntax(line, format!("bad frame `{tail}`")))?;
    crate::call::check_signature(func, &args).map_err(|d| syntax(line, d))?;
    Ok(CallRecord {
        seq,
        func,
        args,
        returned,
        frame,
    })
}

fn parse_id(tok: &str) -> Option<IdRef> {
    let (kind, vid) = tok.split_once('#')?;
    Some(IdRef {
        kind: ResourceKind::from_name(kind)?,
        id: VirtualId(vid.parse().ok()?),
    })
}

fn parse_arg(tok: &str) -> Option<ArgValue> {
    if let Some(rest) = tok.strip_prefix("blob:") {
        let (digest, len) = rest.split_once(':')?;
        return Some(ArgValue::Blob(BlobRef {
            digest: Digest::from_hex(digest)?,
            len: len.parse().ok()?,
        }));
    }
    if let Some(bits) = tok.strip_prefix("nan:") {
        return Some(ArgValue::Float(f64::from_bits(u64::from_str_radix(bits, 16).ok()?)));
    }
    if tok.starts_with("GL_") {
        return GlEnum::from_name(tok).map(ArgValue::Enum);
    }
    if tok.contains('#') {
        return parse_id(tok).map(ArgValue::Id);
    }
    if tok.contains(['.', 'e', 'E']) || tok.ends_with("inf") {
        // Only the shortest round-trip rendering is accepted.
        let v: f64 = tok.parse().ok()?;
        return (format!("{v:?}") == tok).then_some(ArgValue::Float(v));
    }
    let v: i64 = tok.parse().ok()?;
    (v.to_string() == tok).then_some(ArgValue::Int(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seq: u64, func: FunctionId, args: Vec<ArgValue>, frame: u64) -> CallRecord {
        CallRecord {
            seq,
            func,
            args,
            returned: vec![],
            frame,
        }
    }

    #[test]
    fn clear_color_line() {
        let mut s = String::new();
        encode_record(
            &mut s,
            &rec(
                7,
                FunctionId::ClearColor,
                vec![
                    ArgValue::Float(0.5),
                    ArgValue::Float(0.5),
                    ArgValue::Float(0.5),
                    ArgValue::Float(1.0),
                ],
                2,
            ),
        );
        assert_eq!(s, "7 ClearColor(0.5,0.5,0.5,1.0) @f2");
    }

    #[test]
    fn gen_textures_line() {
        let mut r = rec(3, FunctionId::GenTextures, vec![ArgValue::Int(2)], 0);
        r.returned = vec![
            IdRef::new(ResourceKind::Texture, 1),
            IdRef::new(ResourceKind::Texture, 2),
        ];
        let mut s = String::new();
        encode_record(&mut s, &r);
        assert_eq!(s, "3 GenTextures(2) -> Texture#1,Texture#2 @f0");
        assert_eq!(parse_record(1, &s).unwrap(), r);
    }

    #[test]
    fn empty_log_is_header_only() {
        assert_eq!(encode_text(&TraceLog::new()), "RPRT 1\n");
        assert_eq!(parse_text("RPRT 1\n").unwrap(), TraceLog::new());
    }

    #[test]
    fn unknown_function_reports_line() {
        let doc = "RPRT 1\n0 CreateContext() -> Context#1 @f0\n\n\n\n\n\n\n9 Frobnicate(1)\n";
        match parse_text(doc) {
            Err(CodecError::UnknownFunction { line, name }) => {
                assert_eq!((line, name.as_str()), (9, "Frobnicate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_and_syntax_errors() {
        assert!(matches!(parse_text("RPRT 2\n"), Err(CodecError::VersionMismatch { .. })));
        assert!(matches!(parse_text("hello\n"), Err(CodecError::VersionMismatch { .. })));
        assert!(matches!(parse_text(""), Err(CodecError::VersionMismatch { .. })));
        assert!(matches!(
            parse_text("RPRT 1\n0 Enable(GL_BLEND\n"),
            Err(CodecError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_text("RPRT 1\n0 Enable(GL_MODELVIEW) @f0\n"),
            Err(CodecError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_text("RPRT 1\n0 Clear(01) @f0\n"),
            Err(CodecError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn float_rendering_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1e-7,
            1e300,
            -2.5e-300,
            f64::MIN_POSITIVE,
            f64::MAX,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NAN,
            f64::from_bits(0x7ff8_0000_0000_0123),
        ] {
            let mut s = String::new();
            encode_arg(&mut s, &ArgValue::Float(v));
            assert_eq!(parse_arg(&s), Some(ArgValue::Float(v)), "{s}");
        }
        for v in [0i64, -1, i64::MIN, i64::MAX] {
            let mut s = String::new();
            encode_arg(&mut s, &ArgValue::Int(v));
            assert_eq!(parse_arg(&s), Some(ArgValue::Int(v)));
        }
    }

    #[test]
    fn corrupt_blob_line_is_detected() {
        let bytes = b"pixels";
        let d = Digest::of(bytes);
        let doc = format!("RPRT 1\n%blob {d} {}\n", hex::encode(b"pixelz"));
        assert!(matches!(parse_text(&doc), Err(CodecError::DigestMismatch(_))));
    }
}
