//! Recording sessions: checkpoint, restore and background pruning.

use std::fs;
use std::path::Path;
use std::sync::mpsc::{self, Receiver, TryRecvError};
use std::thread::{self, JoinHandle};
use std::time::{SystemTime, UNIX_EPOCH};

use ::log::{debug, info};

use crate::call::{Call, IdRef, ResourceKind, VirtualId};
use crate::codec::{encode_image, parse_image, CheckpointImage, ImageMeta};
use crate::error::{CodecError, SessionError};
use crate::ids::TranslationTable;
use crate::log::TraceLog;
use crate::prune::prune;
use crate::replay::{Digests, Machine, Recorder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneSchedule {
    pub every_n_frames: u64,
    pub max_pending_prunes: usize,
}

impl Default for PruneSchedule {
    fn default() -> Self {
        PruneSchedule {
            every_n_frames: 64,
            max_pending_prunes: 1,
        }
    }
}

impl PruneSchedule {
    pub fn every(n: u64) -> Self {
        PruneSchedule {
            every_n_frames: n.max(1),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleOutcome {
    Launched,
    SkippedPending,
    NotAtBoundary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub prunes_launched: u64,
    pub prunes_skipped: u64,
    pub prunes_applied: u64,
    /// Prunes run on the recorder thread by `checkpoint`.
    pub sync_prunes: u64,
    pub max_log_len: usize,
    /// Length of the largest pruned prefix swapped in so far.
    pub max_pruned_len: usize,
}

struct PendingPrune {
    prefix_len: usize,
    rx: Receiver<TraceLog>,
    handle: JoinHandle<()>,
}

/// A recording session: a live driver, its translation table and the log.
pub struct Session {
    rec: Recorder,
    open: bool,
    schedule: Option<PruneSchedule>,
    pending: Option<PendingPrune>,
    /// Pruned version of the live log, valid while the log has this length.
    fresh: Option<(usize, TraceLog)>,
    wall_clock_ms: u64,
    stats: SessionStats,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Self::from_recorder(Recorder::new())
    }

    fn from_recorder(rec: Recorder) -> Self {
        let len = rec.log.len();
        Session {
            rec,
            open: true,
            schedule: None,
            pending: None,
            fresh: None,
            wall_clock_ms: now_ms(),
            stats: SessionStats {
                max_log_len: len,
                ..Default::default()
            },
        }
    }

    /// Rebuilds a live session by replaying a recorded log.
    pub fn from_log(log: TraceLog) -> Result<Self, SessionError> {
        log.validate().map_err(CodecError::from)?;
        let mut machine = Machine {
            driver: Default::default(),
            table: TranslationTable::with_counters(&log.counters),
        };
        machine.replay(&log)?;
        machine.driver.set_frame_count(log.frame_count());
        let next_seq = log.next_seq();
        Ok(Self::from_recorder(Recorder {
            machine,
            log,
            next_seq,
        }))
    }

    pub fn with_schedule(mut self, schedule: PruneSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn log(&self) -> &TraceLog {
        &self.rec.log
    }

    pub fn table(&self) -> &TranslationTable {
        &self.rec.machine.table
    }

    pub fn frame_count(&self) -> u64 {
        self.rec.machine.driver.frame_count
    }

    pub fn next_seq(&self) -> u64 {
        self.rec.next_seq
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn prune_pending(&self) -> bool {
        self.pending.is_some()
    }

    pub fn digests(&self) -> Result<Digests, SessionError> {
        Ok(self.rec.machine.digests()?)
    }

    /// Applies `call` to the live driver and appends it to the log. Returns
    /// the virtual ids of any objects the call created.
    pub fn record(&mut self, call: &Call) -> Result<Vec<IdRef>, SessionError> {
        if !self.open {
            return Err(SessionError::Closed);
        }
        let ids = self.rec.record(call)?;
        self.stats.max_log_len = self.stats.max_log_len.max(self.rec.log.len());
        if call.func.is_frame_root() {
            self.on_boundary();
        }
        Ok(ids)
    }

    fn at_boundary(&self) -> bool {
        self.rec.log.records.last().is_some_and(|r| r.func.is_frame_root())
    }

    fn on_boundary(&mut self) {
        self.wall_clock_ms = now_ms();
        self.poll_prune();
        let Some(schedule) = self.schedule else {
            return;
        };
        if self.frame_count() % schedule.every_n_frames != 0 {
            return;
        }
        if self.pending.is_some() {
            debug!("previous prune is overdue at frame {}", self.frame_count());
            self.wait_for_prune();
        }
        self.schedule_prune();
    }

    /// Hands a snapshot of the log to a background pruner. Only one prune
    /// may be pending at a time.
    pub fn schedule_prune(&mut self) -> ScheduleOutcome {
        if self.pending.is_some() {
            self.stats.prunes_skipped += 1;
            return ScheduleOutcome::SkippedPending;
        }
        if !self.at_boundary() {
            return ScheduleOutcome::NotAtBoundary;
        }
        let snapshot = self.rec.log.clone();
        let prefix_len = snapshot.len();
        let (tx, rx) = mpsc::channel();
        let handle = thread::spawn(move || {
            let _ = tx.send(prune(&snapshot));
        });
        debug!("launched prune of {prefix_len} records");
        self.stats.prunes_launched += 1;
        self.pending = Some(PendingPrune {
            prefix_len,
            rx,
            handle,
        });
        ScheduleOutcome::Launched
    }

    /// Swaps in a finished background prune, if there is one.
    pub fn poll_prune(&mut self) -> bool {
        let Some(p) = &self.pending else {
            return false;
        };
        match p.rx.try_recv() {
            Ok(pruned) => {
                self.finish_prune(pruned);
                true
            }
            Err(TryRecvError::Empty) => false,
            Err(TryRecvError::Disconnected) => self.wait_for_prune(),
        }
    }

    /// Blocks until the pending prune finishes and swaps it in.
    pub fn wait_for_prune(&mut self) -> bool {
        let Some(p) = &self.pending else {
            return false;
        };
        match p.rx.recv() {
            Ok(pruned) => {
                self.finish_prune(pruned);
                true
            }
            Err(_) => {
                let p = self.pending.take().expect("pending prune");
                if let Err(panic) = p.handle.join() {
                    std::panic::resume_unwind(panic);
                }
                false
            }
        }
    }

    fn finish_prune(&mut self, pruned: TraceLog) {
        let p = self.pending.take().expect("pending prune");
        let _ = p.handle.join();
        let log = &mut self.rec.log;
        let before = log.len();
        let mut records = pruned.records;
        self.stats.max_pruned_len = self.stats.max_pruned_len.max(records.len());
        records.extend(log.records.drain(p.prefix_len..));
        let blobs = std::mem::take(&mut log.blobs);
        let counters = std::mem::take(&mut log.counters);
        *log = TraceLog {
            records,
            blobs,
            counters,
        }
        .with_referenced_blobs();
        if p.prefix_len == before {
            self.fresh = Some((log.len(), log.clone()));
        }
        self.stats.prunes_applied += 1;
        debug!("swapped in pruned prefix: {before} -> {} records", log.len());
    }

    fn pruned_log(&mut self) -> TraceLog {
        if let Some((len, log)) = &self.fresh {
            if *len == self.rec.log.len() {
                return log.clone();
            }
        }
        self.stats.sync_prunes += 1;
        let pruned = prune(&self.rec.log);
        self.fresh = Some((self.rec.log.len(), pruned.clone()));
        pruned
    }

    /// Builds the checkpoint image for the current state.
    pub fn image(&mut self) -> Result<CheckpointImage, SessionError> {
        if !self.open {
            return Err(SessionError::Closed);
        }
        self.wait_for_prune();
        let pruned_log = self.pruned_log();
        let digests = self.digests()?;
        Ok(CheckpointImage {
            pruned_log,
            table: self.rec.machine.table.clone(),
            counters: self.rec.machine.table.counters(),
            meta: ImageMeta {
                frame_count: self.frame_count(),
                next_seq: self.rec.next_seq,
                wall_clock_ms: self.wall_clock_ms,
                state_digest: digests.state,
                last_frame: digests.frame,
            },
        })
    }

    /// Writes a `.rpck` checkpoint. The session keeps running unchanged.
    pub fn checkpoint(&mut self, path: &Path) -> Result<CheckpointImage, SessionError> {
        let image = self.image()?;
        fs::write(path, encode_image(&image))?;
        info!(
            "checkpoint {}: {} records at frame {}",
            path.display(),
            image.pruned_log.len(),
            image.meta.frame_count
        );
        Ok(image)
    }

    /// Starts a new session from a checkpoint file.
    pub fn restore(path: &Path) -> Result<Self, SessionError> {
        Self::restore_with_base(path, 1)
    }

    /// Like `restore`, on a driver that hands out real ids from `real_id_base`.
    pub fn restore_with_base(path: &Path, real_id_base: u64) -> Result<Self, SessionError> {
        let bytes = fs::read(path)?;
        let image = parse_image(&bytes)?;
        Self::from_image(image, real_id_base)
    }

    pub fn from_image(image: CheckpointImage, real_id_base: u64) -> Result<Self, SessionError> {
        let mut machine = Machine::with_real_id_base(real_id_base);
        machine.table = TranslationTable::with_counters(&image.counters);
        machine.replay(&image.pruned_log)?;
        machine.driver.set_frame_count(image.meta.frame_count);
        let digests = machine.digests()?;
        if digests.state != image.meta.state_digest {
            return Err(SessionError::ReplayMismatch(format!(
                "state digest {} != recorded {}",
                digests.state, image.meta.state_digest
            )));
        }
        if digests.frame != image.meta.last_frame {
            return Err(SessionError::ReplayMismatch(format!(
                "frame digest {} != recorded {}",
                digests.frame, image.meta.last_frame
            )));
        }
        if visible_ids(&machine.table) != visible_ids(&image.table) {
            return Err(SessionError::ReplayMismatch(
                "restored virtual ids differ from the checkpoint".into(),
            ));
        }
        let mut session = Self::from_recorder(Recorder {
            machine,
            log: image.pruned_log,
            next_seq: image.meta.next_seq,
        });
        session.wall_clock_ms = image.meta.wall_clock_ms;
        Ok(session)
    }

    /// Resets the driver and replays the current log, as a restarted
    /// process would after the window was deleted.
    pub fn simulate_resume(&mut self) -> Result<(), SessionError> {
        self.wait_for_prune();
        let before = self.digests()?;
        let mut machine = Machine::new();
        machine.table = TranslationTable::with_counters(&self.rec.machine.table.counters());
        machine.replay(&self.rec.log)?;
        machine.driver.set_frame_count(self.frame_count());
        if machine.digests()? != before {
            return Err(SessionError::ReplayMismatch("resume replay diverged".into()));
        }
        self.rec.machine = machine;
        Ok(())
    }

    /// Finishes any pending prune and closes the session.
    pub fn close(&mut self) {
        self.wait_for_prune();
        self.open = false;
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(p) = self.pending.take() {
            let _ = p.handle.join();
        }
    }
}

/// Application-visible virtual ids of a table.
pub fn visible_ids(table: &TranslationTable) -> Vec<(ResourceKind, VirtualId)> {
    table.triples().into_iter().map(|(k, v, _)| (k, v)).collect()
}
