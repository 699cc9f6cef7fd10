//! Serialization of trace logs and checkpoint images.

mod binary;
mod image;
mod text;

use std::fs;
use std::path::Path;

pub use binary::{encode_binary, parse_binary};
pub use image::{encode_image, parse_image, CheckpointImage, ImageMeta};
pub use text::{encode_text, parse_text};

use crate::error::CodecError;
use crate::log::TraceLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    /// Picks a format from a file extension (`.rprt` / `.rprb`).
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "rprt" => Some(Format::Text),
            "rprb" => Some(Format::Binary),
            _ => None,
        }
    }

    /// Recognizes a document by its leading magic bytes.
    pub fn sniff(bytes: &[u8]) -> Option<Format> {
        if bytes.starts_with(text::MAGIC.as_bytes()) {
            Some(Format::Text)
        } else if bytes.starts_with(binary::MAGIC) {
            Some(Format::Binary)
        } else {
            None
        }
    }
}

pub fn encode(log: &TraceLog, format: Format) -> Vec<u8> {
    match format {
        Format::Text => encode_text(log).into_bytes(),
        Format::Binary => encode_binary(log),
    }
}

/// Decodes a log in either format, recognized by its magic.
pub fn decode(bytes: &[u8]) -> Result<TraceLog, CodecError> {
    match Format::sniff(bytes) {
        Some(Format::Text) => {
            let doc = std::str::from_utf8(bytes).map_err(|e| CodecError::Syntax {
                line: 1 + bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
                detail: "invalid UTF-8".into(),
            })?;
            parse_text(doc)
        }
        Some(Format::Binary) => parse_binary(bytes),
        None => Err(CodecError::BadMagic {
            found: bytes.iter().take(4).copied().collect(),
        }),
    }
}

pub fn read_log(path: &Path) -> Result<TraceLog, CodecError> {
    decode(&fs::read(path)?)
}

pub fn write_log(path: &Path, log: &TraceLog, format: Format) -> Result<(), CodecError> {
    fs::write(path, encode(log, format))?;
    Ok(())
}
