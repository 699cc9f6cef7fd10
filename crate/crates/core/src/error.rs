use std::io;

use thiserror::Error;

use crate::blob::Digest;
use crate::call::{FunctionId, ResourceKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlobError {
    #[error("blob {0} is not in the store")]
    MissingBlob(Digest),
    #[error("blob {0} does not hash to its key")]
    DigestMismatch(Digest),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("unknown virtual id {kind}#{vid}")]
    UnknownVirtualId { kind: ResourceKind, vid: u64 },
    #[error("real id {real} of kind {kind} is already mapped")]
    DuplicateReal { kind: ResourceKind, real: u64 },
    #[error("virtual id {kind}#{vid} is already mapped")]
    DuplicateVirtual { kind: ResourceKind, vid: u64 },
    #[error("virtual id 0 of kind {kind} is reserved")]
    ReservedId { kind: ResourceKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("record {seq}: {detail}")]
    Signature { seq: u64, detail: String },
    #[error("record #{index}: seq does not increase")]
    SeqOrder { index: usize },
    #[error("record #{index}: frame index goes backwards")]
    FrameOrder { index: usize },
    #[error("record {seq}: returned ids do not match the function")]
    UnexpectedReturn { seq: u64 },
    #[error("record {seq}: blob {digest} missing from the store")]
    MissingBlob { seq: u64, digest: Digest },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DriverError {
    #[error("no current context")]
    NoContext,
    #[error("a context is already current")]
    ContextAlive,
    #[error("{kind}#{vid} used after deletion")]
    UseAfterDelete { kind: ResourceKind, vid: u64 },
    #[error("unknown virtual id {kind}#{vid}")]
    UnknownVirtualId { kind: ResourceKind, vid: u64 },
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("{func}: {detail}")]
    InvalidValue { func: FunctionId, detail: String },
    #[error("real id {real} of kind {kind} has no virtual name")]
    UntranslatableRealId { kind: ResourceKind, real: u64 },
    #[error(transparent)]
    Id(#[from] IdError),
}

/// Errors from the text and binary log codecs and the checkpoint container.
#[derive(Debug, Error)]
pub enum CodecError {
    #[error("line {line}: syntax error: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("line {line}: unknown function `{name}`")]
    UnknownFunction { line: usize, name: String },
    #[error("unsupported format version {found}")]
    VersionMismatch { found: String },
    #[error("bad magic {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("truncated record at byte offset {offset}")]
    TruncatedRecord { offset: usize },
    #[error("malformed data at byte offset {offset}: {detail}")]
    Malformed { offset: usize, detail: String },
    #[error("blob {0} does not match its digest")]
    DigestMismatch(Digest),
    #[error("invalid log: {0}")]
    Log(#[from] LogError),
    #[error("bad checkpoint image: {0}")]
    BadImage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A recorded call that the driver rejected on replay.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay failed at seq {seq}: {source}")]
pub struct ReplayError {
    pub seq: u64,
    pub source: DriverError,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session is closed")]
    Closed,
    #[error("call rejected: {0}")]
    Call(String),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("replay diverged: {0}")]
    ReplayMismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
