//! Recording calls into a log, and replaying a log into a fresh driver.

use crate::blob::{BlobRef, Digest};
use crate::call::{ArgValue, Call, CallArg, CallRecord, IdRef};
use crate::driver::DriverState;
use crate::error::{DriverError, ReplayError};
use crate::ids::TranslationTable;
use crate::log::TraceLog;

/// The two digests that define replay equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Digests {
    pub state: Digest,
    pub frame: Digest,
}

/// A driver plus its translation table.
#[derive(Debug, Clone, Default)]
pub struct Machine {
    pub driver: DriverState,
    pub table: TranslationTable,
}

impl Machine {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh driver that hands out real ids starting at `base`.
    pub fn with_real_id_base(base: u64) -> Self {
        Machine {
            driver: DriverState::with_real_id_base(base),
            table: TranslationTable::new(),
        }
    }

    /// Applies every record in order, attaching recorded virtual ids to the
    /// new real ids. Stops at the first rejected call.
    pub fn replay(&mut self, log: &TraceLog) -> Result<(), ReplayError> {
        for rec in &log.records {
            self.driver
                .apply(rec, &mut self.table)
                .map_err(|source| ReplayError { seq: rec.seq, source })?;
        }
        Ok(())
    }

    pub fn digests(&self) -> Result<Digests, DriverError> {
        Ok(Digests {
            state: self.driver.state_digest(&self.table)?,
            frame: self.driver.last_frame,
        })
    }
}

/// Replays `log` into a fresh driver and returns the resulting digests.
pub fn replay_digests(log: &TraceLog, real_id_base: u64) -> Result<Digests, ReplayError> {
    let mut m = Machine::with_real_id_base(real_id_base);
    m.replay(log)?;
    m.digests().map_err(|source| ReplayError {
        seq: log.records.last().map_or(0, |r| r.seq),
        source,
    })
}

/// Records application calls: applies them to a live driver and appends
/// them, in virtual-id space, to a log.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub machine: Machine,
    pub log: TraceLog,
    pub next_seq: u64,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Converts client-memory arguments to blob references without storing
    /// anything.
    pub fn prepare(&self, call: &Call) -> CallRecord {
        let args = call
            .args
            .iter()
            .map(|a| match a {
                CallArg::Value(v) => *v,
                CallArg::Data(bytes) => ArgValue::Blob(BlobRef::for_bytes(bytes)),
            })
            .collect();
        CallRecord {
            seq: self.next_seq,
            func: call.func,
            args,
            returned: vec![],
            frame: self.machine.driver.frame_count,
        }
    }

    /// Applies and logs one call. A rejected call leaves the driver, the
    /// table and the log untouched.
    pub fn record(&mut self, call: &Call) -> Result<Vec<IdRef>, DriverError> {
        let mut rec = self.prepare(call);
        let ids = self.machine.driver.apply(&rec, &mut self.machine.table)?;
        for arg in &call.args {
            if let CallArg::Data(bytes) = arg {
                self.log.blobs.put(bytes);
            }
        }
        rec.returned = ids.clone();
        if !ids.is_empty() {
            self.log.counters = self.machine.table.counters();
        }
        self.log.records.push(rec);
        self.next_seq += 1;
        Ok(ids)
    }
}
