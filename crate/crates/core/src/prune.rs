//! Log pruning: keep only the calls needed to reproduce the driver state at
//! the last frame root.
//!
//! The analysis runs over the current context epoch (everything after the
//! last `CreateContext` or `ResetContext` before the root). Each state write
//! has a category key; only the last write per key survives, and only if
//! the object it landed on is still alive. Writes through a target also
//! need the bind that made the target point at their object, and every
//! target needs whatever established its final binding.
//!
//! Bindings are tracked as registers (one per texture target, per buffer
//! target, the matrix mode and the current program). A register changes on
//! a bind, and on a delete of the object it points at. Keeping the last
//! register event before every reader reproduces the reader's view. A
//! delete that cleared a register can be dropped together with the binds
//! leading up to it when the register was empty before those binds; this is
//! what lets a texture that was created, used and deleted within the epoch
//! vanish from the pruned log entirely.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::call::{CallRecord, FunctionId, IdRef, ResourceKind, RoleTag, VirtualId};
use crate::gl::GlEnum;
use crate::key::{category_key, CategoryKey, Keyed, SelectorContext};
use crate::log::TraceLog;

/// Why a call was retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    LastWriteOf(CategoryKey),
    /// A selector call needed by the call with the given seq.
    SelectorFor(u64),
    LifecycleOf(IdRef),
    GenOf(IdRef),
    /// Deletion of an object that had to be recreated.
    DeleteOf(IdRef),
    FinalRoot,
    SuffixAfterRoot,
    CurrentBinding,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiveSet {
    pub keep: BTreeSet<u64>,
    pub reasons: BTreeMap<u64, Reason>,
}

/// Seq of the last frame root, if any.
pub fn find_last_root(log: &TraceLog) -> Option<u64> {
    last_root_index(&log.records).map(|i| log.records[i].seq)
}

fn last_root_index(records: &[CallRecord]) -> Option<usize> {
    records.iter().rposition(|r| r.func.is_frame_root())
}

/// Category key of every keyed call with seq ≤ `up_to`, resolved against
/// the bindings in effect at that call. Target-addressed writes carry their
/// owner in the key and the seq of the selector in `via`.
pub fn resolve_selectors(log: &TraceLog, up_to: u64) -> Vec<(u64, Option<Keyed>)> {
    let mut ctx = SelectorContext::new();
    let mut out = Vec::new();
    for rec in log.records.iter().take_while(|r| r.seq <= up_to) {
        out.push((rec.seq, category_key(rec, &ctx)));
        ctx.observe(rec);
    }
    out
}

/// Computes the live set of `log` relative to the root with seq `up_to`.
pub fn compute_live_set(log: &TraceLog, up_to: u64) -> LiveSet {
    let Some(root) = log.records.iter().position(|r| r.seq == up_to) else {
        return LiveSet::default();
    };
    let mut analysis = Analysis::new(&log.records, root);
    analysis.run();
    let mut live = LiveSet::default();
    for (idx, reason) in analysis.reasons {
        let seq = log.records[idx].seq;
        live.keep.insert(seq);
        live.reasons.insert(seq, reason);
    }
    for rec in &log.records[root + 1..] {
        live.keep.insert(rec.seq);
        live.reasons.insert(rec.seq, Reason::SuffixAfterRoot);
    }
    live
}

/// Prunes `log` to the calls needed to reproduce the driver state and the
/// frame digest at its last frame root. Calls after that root are kept
/// verbatim. A log without frame roots is returned unchanged.
pub fn prune(log: &TraceLog) -> TraceLog {
    let Some(up_to) = find_last_root(log) else {
        return log.clone();
    };
    let live = compute_live_set(log, up_to);
    let records: Vec<CallRecord> = log
        .records
        .iter()
        .filter(|r| live.keep.contains(&r.seq))
        .cloned()
        .collect();
    TraceLog {
        records,
        blobs: log.blobs.clone(),
        counters: log.counters.clone(),
    }
    .with_referenced_blobs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Reg {
    Texture(GlEnum),
    Buffer(GlEnum),
    MatrixMode,
    Program,
}

impl Reg {
    fn kind(self) -> Option<ResourceKind> {
        match self {
            Reg::Texture(_) => Some(ResourceKind::Texture),
            Reg::Buffer(_) => Some(ResourceKind::Buffer),
            Reg::Program => Some(ResourceKind::Program),
            Reg::MatrixMode => None,
        }
    }

    fn initial(self) -> u64 {
        match self {
            Reg::MatrixMode => GlEnum::GL_MODELVIEW.value() as u64,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    idx: usize,
    /// Set to `value`, or (for a delete) clear from `value` to 0.
    clear: bool,
    value: u64,
    /// Event index where the run of identical sets containing (or, for a
    /// clear, preceding) this event starts.
    run_start: usize,
    /// Register value just before `run_start`.
    before_run: u64,
}

#[derive(Debug, Default)]
struct Object {
    gen: Option<usize>,
    delete: Option<usize>,
    /// Every call naming the object (shaders and programs only).
    refs: Vec<usize>,
}

enum Task {
    Keep(usize, Reason),
    Require(Reg, usize, Reason),
    Need(IdRef),
}

struct Analysis<'a> {
    records: &'a [CallRecord],
    root: usize,
    epoch: usize,
    context_gen: Option<usize>,
    objects: HashMap<IdRef, Object>,
    history: BTreeMap<Reg, Vec<Event>>,
    /// Set events by call index.
    setter: HashMap<usize, (Reg, usize)>,
    /// For set events in a run that ends in a clear: that clear.
    run_end: HashMap<(Reg, usize), usize>,
    last_write: BTreeMap<CategoryKey, (usize, Option<Reg>)>,

    kept: Vec<bool>,
    reasons: BTreeMap<usize, Reason>,
    needed: HashSet<IdRef>,
    satisfied: HashSet<(Reg, usize)>,
    skipped: HashSet<(Reg, usize)>,
    tasks: Vec<Task>,
}

impl<'a> Analysis<'a> {
    fn new(records: &'a [CallRecord], root: usize) -> Self {
        let mut context_gen = None;
        let mut epoch = 0;
        for (i, rec) in records[..=root].iter().enumerate() {
            match rec.func {
                FunctionId::CreateContext => {
                    context_gen = Some(i);
                    epoch = i;
                }
                FunctionId::ResetContext => epoch = i,
                _ => {}
            }
        }
        let mut a = Analysis {
            records,
            root,
            epoch,
            context_gen,
            objects: HashMap::new(),
            history: BTreeMap::new(),
            setter: HashMap::new(),
            run_end: HashMap::new(),
            last_write: BTreeMap::new(),
            kept: vec![false; root + 1],
            reasons: BTreeMap::new(),
            needed: HashSet::new(),
            satisfied: HashSet::new(),
            skipped: HashSet::new(),
            tasks: Vec::new(),
        };
        a.scan();
        a
    }

    /// Single forward pass over the epoch collecting objects, register
    /// histories and the last write per category.
    fn scan(&mut self) {
        let mut ctx = SelectorContext::new();
        let mut current: BTreeMap<Reg, u64> = BTreeMap::new();
        for idx in self.epoch + 1..self.root {
            let rec = &self.records[idx];
            if rec.func.role() == RoleTag::StateSet && rec.func != FunctionId::ResetContext {
                if let Some(k) = category_key(rec, &ctx) {
                    let reg = match rec.func {
                        FunctionId::TexParameter | FunctionId::TexImage => {
                            rec.args[0].as_enum().map(Reg::Texture)
                        }
                        FunctionId::BufferData => rec.args[0].as_enum().map(Reg::Buffer),
                        FunctionId::LoadMatrix => Some(Reg::MatrixMode),
                        _ => None,
                    };
                    self.last_write.insert(k.key, (idx, reg));
                }
            }
            ctx.observe(rec);
            self.scan_objects(idx, rec);
            self.scan_registers(idx, rec, &mut current);
        }
    }

    fn scan_objects(&mut self, idx: usize, rec: &CallRecord) {
        for r in &rec.returned {
            self.objects.entry(*r).or_default().gen = Some(idx);
        }
        if rec.func.role() == RoleTag::ResourceDelete {
            for r in rec.id_args() {
                self.objects.entry(r).or_default().delete = Some(idx);
            }
        }
        let named = rec.id_args().chain(rec.returned.iter().copied());
        for r in named {
            if matches!(r.kind, ResourceKind::Shader | ResourceKind::Program) && !r.id.is_none() {
                let refs = &mut self.objects.entry(r).or_default().refs;
                if refs.last() != Some(&idx) {
                    refs.push(idx);
                }
            }
        }
    }

    fn scan_registers(&mut self, idx: usize, rec: &CallRecord, current: &mut BTreeMap<Reg, u64>) {
        let id_value = |i: usize| rec.args[i].as_id().map_or(0, |r| r.id.0);
        let set = match rec.func {
            FunctionId::BindTexture => rec.args[0].as_enum().map(|t| (Reg::Texture(t), id_value(1))),
            FunctionId::BindBuffer => rec.args[0].as_enum().map(|t| (Reg::Buffer(t), id_value(1))),
            FunctionId::MatrixMode => rec.args[0].as_enum().map(|m| (Reg::MatrixMode, m.value() as u64)),
            FunctionId::UseProgram => Some((Reg::Program, id_value(0))),
            _ => None,
        };
        if let Some((reg, value)) = set {
            let j = self.push_event(reg, idx, false, value);
            self.setter.insert(idx, (reg, j));
            current.insert(reg, value);
            return;
        }
        let kind = match rec.func {
            FunctionId::DeleteTextures => ResourceKind::Texture,
            FunctionId::DeleteBuffers => ResourceKind::Buffer,
            FunctionId::DeleteProgram => ResourceKind::Program,
            _ => return,
        };
        for r in rec.id_args() {
            let cleared: Vec<Reg> = current
                .iter()
                .filter(|(reg, v)| reg.kind() == Some(kind) && **v == r.id.0)
                .map(|(reg, _)| *reg)
                .collect();
            for reg in cleared {
                current.insert(reg, 0);
                self.push_event(reg, idx, true, r.id.0);
            }
        }
    }

    fn push_event(&mut self, reg: Reg, idx: usize, clear: bool, value: u64) -> usize {
        let events = self.history.entry(reg).or_default();
        let j = events.len();
        let (run_start, before_run) = match events.last() {
            Some(prev) if !prev.clear && (clear || prev.value == value) => {
                (prev.run_start, prev.before_run)
            }
            Some(prev) => (j, if prev.clear { 0 } else { prev.value }),
            None => (j, reg.initial()),
        };
        events.push(Event {
            idx,
            clear,
            value,
            run_start,
            before_run,
        });
        if clear {
            for k in run_start..j {
                self.run_end.insert((reg, k), j);
            }
        }
        j
    }

    fn run(&mut self) {
        if let Some(c) = self.context_gen {
            let ctx = self.records[c].returned.first().copied();
            let ctx = ctx.unwrap_or(IdRef::new(ResourceKind::Context, 0));
            self.tasks.push(Task::Keep(c, Reason::GenOf(ctx)));
        }
        self.tasks.push(Task::Keep(self.root, Reason::FinalRoot));

        let writes: Vec<_> = self
            .last_write
            .iter()
            .map(|(k, (idx, reg))| (k.clone(), *idx, *reg))
            .collect();
        for (key, idx, reg) in writes {
            let live = match key.owner() {
                None => true,
                Some(owner) => owner.id.is_none() || self.is_live(owner),
            };
            if live {
                let seq = self.records[idx].seq;
                self.tasks.push(Task::Keep(idx, Reason::LastWriteOf(key)));
                if let Some(reg) = reg {
                    self.tasks.push(Task::Require(reg, idx, Reason::SelectorFor(seq)));
                }
            }
        }
        let regs: Vec<Reg> = self.history.keys().copied().collect();
        for reg in regs {
            self.tasks.push(Task::Require(reg, self.root, Reason::CurrentBinding));
        }
        let mut live: Vec<IdRef> = self
            .objects
            .keys()
            .filter(|r| r.kind != ResourceKind::Context && self.is_live(**r))
            .copied()
            .collect();
        live.sort();
        for r in live {
            self.tasks.push(Task::Need(r));
        }

        while let Some(task) = self.tasks.pop() {
            match task {
                Task::Keep(idx, reason) => self.keep(idx, reason),
                Task::Require(reg, pos, reason) => self.require(reg, pos, reason),
                Task::Need(r) => self.need(r),
            }
        }
    }

    fn is_live(&self, r: IdRef) -> bool {
        self.objects
            .get(&r)
            .is_some_and(|o| o.gen.is_some() && o.delete.is_none())
    }

    fn keep(&mut self, idx: usize, reason: Reason) {
        if self.kept[idx] {
            return;
        }
        self.kept[idx] = true;
        self.reasons.insert(idx, reason);
        let Some(&(reg, j)) = self.setter.get(&idx) else {
            return;
        };
        if let Some(&end) = self.run_end.get(&(reg, j)) {
            if self.skipped.remove(&(reg, end)) {
                self.keep_clear(reg, end);
            }
        }
    }

    /// Ensures the register holds the same value at call index `pos` in the
    /// pruned log as in the original.
    fn require(&mut self, reg: Reg, pos: usize, reason: Reason) {
        let Some(events) = self.history.get(&reg) else {
            return;
        };
        let j = events.partition_point(|e| e.idx < pos);
        if j == 0 {
            return;
        }
        let j = j - 1;
        let e = events[j];
        let first = events[e.run_start].idx;
        let run_kept = events[e.run_start..j].iter().any(|s| self.kept[s.idx]);
        if !self.satisfied.insert((reg, j)) {
            return;
        }
        if !e.clear {
            self.tasks.push(Task::Keep(e.idx, reason));
            if let Some(kind) = reg.kind().filter(|_| e.value != 0) {
                self.tasks.push(Task::Need(IdRef::new(kind, e.value)));
            }
        } else if e.before_run == 0 && !run_kept {
            // The register was empty before the run of binds that this
            // delete undid; drop the whole run.
            self.skipped.insert((reg, j));
            self.tasks.push(Task::Require(reg, first, reason));
        } else {
            self.keep_clear(reg, j);
        }
    }

    fn keep_clear(&mut self, reg: Reg, j: usize) {
        let e = self.history[&reg][j];
        let kind = reg.kind().expect("only object registers are cleared");
        let obj = IdRef::new(kind, e.value);
        let seq = self.records[e.idx].seq;
        let first = self.history[&reg][e.run_start].idx;
        self.tasks.push(Task::Keep(e.idx, Reason::DeleteOf(obj)));
        self.tasks.push(Task::Need(obj));
        self.tasks.push(Task::Require(reg, e.idx, Reason::SelectorFor(seq)));
        if e.before_run != 0 {
            self.tasks.push(Task::Require(reg, first, Reason::SelectorFor(seq)));
        }
    }

    fn need(&mut self, r: IdRef) {
        if r.id == VirtualId::NONE || !self.needed.insert(r) {
            return;
        }
        let Some(obj) = self.objects.get(&r) else {
            return;
        };
        let (gen, delete) = (obj.gen, obj.delete);
        let refs = obj.refs.clone();
        for idx in gen.into_iter().chain(delete) {
            let reason = if Some(idx) == gen {
                Reason::GenOf(r)
            } else {
                Reason::DeleteOf(r)
            };
            self.tasks.push(Task::Keep(idx, reason));
            let rec = &self.records[idx];
            for other in rec.returned.iter().copied().chain(rec.id_args()) {
                self.tasks.push(Task::Need(other));
            }
        }
        for idx in refs {
            self.tasks.push(Task::Keep(idx, Reason::LifecycleOf(r)));
            let rec = &self.records[idx];
            for other in rec.id_args().chain(rec.returned.iter().copied()) {
                self.tasks.push(Task::Need(other));
            }
        }
    }
}
