//! Record-prune-replay checkpointing for stateful graphics call streams.
//!
//! Calls are recorded in virtual-id space against a simulated driver,
//! pruned down to what is needed to reproduce the state at the last frame
//! boundary, and replayed into a fresh driver on restart.

pub mod bench;
pub mod blob;
pub mod call;
pub mod codec;
pub mod driver;
pub mod error;
pub mod gl;
pub mod ids;
pub mod key;
pub mod log;
pub mod prune;
pub mod replay;
pub mod session;
pub mod workload;

pub use blob::{BlobRef, BlobStore, Digest};
pub use call::{ArgValue, Call, CallArg, CallRecord, FunctionId, IdRef, RealId, ResourceKind, RoleTag, VirtualId};
pub use driver::DriverState;
pub use gl::GlEnum;
pub use ids::TranslationTable;
pub use log::{Counters, TraceLog};
