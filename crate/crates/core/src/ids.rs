//! Virtual/real object-name translation.
//!
//! The application only ever sees virtual ids. They are handed out from a
//! per-kind counter that never goes backwards, so the ids an application
//! observes depend only on its call sequence and not on how a particular
//! driver session allocates names.

use std::collections::BTreeMap;

use crate::call::{ResourceKind, RealId, VirtualId};
use crate::error::IdError;
use crate::log::Counters;

#[derive(Debug, Clone, PartialEq, Eq)]
struct KindTable {
    to_real: BTreeMap<VirtualId, RealId>,
    to_virtual: BTreeMap<RealId, VirtualId>,
    next_virtual: u64,
}

impl Default for KindTable {
    fn default() -> Self {
        KindTable {
            to_real: BTreeMap::new(),
            to_virtual: BTreeMap::new(),
            next_virtual: 1,
        }
    }
}

/// Per-kind bijection between virtual and real ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranslationTable {
    kinds: BTreeMap<ResourceKind, KindTable>,
}

impl TranslationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty table whose counters continue from `counters`.
    pub fn with_counters(counters: &Counters) -> Self {
        let mut table = Self::new();
        for kind in ResourceKind::ALL {
            table.kind_mut(kind).next_virtual = counters.get(kind);
        }
        table
    }

    fn kind(&self, kind: ResourceKind) -> Option<&KindTable> {
        self.kinds.get(&kind)
    }

    fn kind_mut(&mut self, kind: ResourceKind) -> &mut KindTable {
        self.kinds.entry(kind).or_default()
    }

    /// Maps a freshly created real id to the next virtual id.
    pub fn assign_virtual(&mut self, kind: ResourceKind, real: RealId) -> Result<VirtualId, IdError> {
        let t = self.kind_mut(kind);
        if t.to_virtual.contains_key(&real) {
            return Err(IdError::DuplicateReal { kind, real: real.0 });
        }
        let vid = VirtualId(t.next_virtual);
        t.next_virtual += 1;
        t.to_real.insert(vid, real);
        t.to_virtual.insert(real, vid);
        Ok(vid)
    }

    /// Installs a mapping for a specific virtual id, as needed when a
    /// recorded creation call is replayed. The counter is advanced past
    /// `vid` so later assignments never reuse it.
    pub fn attach(&mut self, kind: ResourceKind, vid: VirtualId, real: RealId) -> Result<(), IdError> {
        if vid.is_none() {
            return Err(IdError::ReservedId { kind });
        }
        let t = self.kind_mut(kind);
        if t.to_real.contains_key(&vid) {
            return Err(IdError::DuplicateVirtual { kind, vid: vid.0 });
        }
        if t.to_virtual.contains_key(&real) {
            return Err(IdError::DuplicateReal { kind, real: real.0 });
        }
        t.to_real.insert(vid, real);
        t.to_virtual.insert(real, vid);
        t.next_virtual = t.next_virtual.max(vid.0 + 1);
        Ok(())
    }

    pub fn to_real(&self, kind: ResourceKind, vid: VirtualId) -> Result<RealId, IdError> {
        if vid.is_none() {
            return Ok(RealId::DEFAULT);
        }
        self.kind(kind)
            .and_then(|t| t.to_real.get(&vid).copied())
            .ok_or(IdError::UnknownVirtualId { kind, vid: vid.0 })
    }

    pub fn to_virtual(&self, kind: ResourceKind, real: RealId) -> Option<VirtualId> {
        if real == RealId::DEFAULT {
            return Some(VirtualId::NONE);
        }
        self.kind(kind).and_then(|t| t.to_virtual.get(&real).copied())
    }

    /// Points an existing virtual id at a new real id (restart path).
    pub fn rebind(&mut self, kind: ResourceKind, vid: VirtualId, new_real: RealId) -> Result<(), IdError> {
        let t = self.kind_mut(kind);
        let Some(&old) = t.to_real.get(&vid) else {
            return Err(IdError::UnknownVirtualId { kind, vid: vid.0 });
        };
        if old == new_real {
            return Ok(());
        }
        if t.to_virtual.contains_key(&new_real) {
            return Err(IdError::DuplicateReal { kind, real: new_real.0 });
        }
        t.to_virtual.remove(&old);
        t.to_real.insert(vid, new_real);
        t.to_virtual.insert(new_real, vid);
        Ok(())
    }

    /// Drops the mapping for a deleted object. The virtual id stays retired.
    pub fn release(&mut self, kind: ResourceKind, vid: VirtualId) -> Result<RealId, IdError> {
        let t = self.kind_mut(kind);
        let real = t
            .to_real
            .remove(&vid)
            .ok_or(IdError::UnknownVirtualId { kind, vid: vid.0 })?;
        t.to_virtual.remove(&real);
        Ok(real)
    }

    /// Drops every mapping of one kind (context reset).
    pub fn release_all(&mut self, kind: ResourceKind) {
        let t = self.kind_mut(kind);
        t.to_real.clear();
        t.to_virtual.clear();
    }

    /// True when `vid` was handed out at some point but is no longer mapped.
    pub fn is_retired(&self, kind: ResourceKind, vid: VirtualId) -> bool {
        self.kind(kind).is_some_and(|t| {
            !vid.is_none() && vid.0 < t.next_virtual && !t.to_real.contains_key(&vid)
        })
    }

    pub fn next_virtual(&self, kind: ResourceKind) -> u64 {
        self.kind(kind).map_or(1, |t| t.next_virtual)
    }

    pub fn counters(&self) -> Counters {
        let mut c = Counters::default();
        for kind in ResourceKind::ALL {
            c.set(kind, self.next_virtual(kind));
        }
        c
    }

    pub fn live(&self, kind: ResourceKind) -> impl Iterator<Item = (VirtualId, RealId)> + '_ {
        self.kind(kind)
            .into_iter()
            .flat_map(|t| t.to_real.iter().map(|(v, r)| (*v, *r)))
    }

    /// All mappings as sorted (kind, virtual, real) triples.
    pub fn triples(&self) -> Vec<(ResourceKind, VirtualId, RealId)> {
        let mut out = Vec::new();
        for kind in ResourceKind::ALL {
            out.extend(self.live(kind).map(|(v, r)| (kind, v, r)));
        }
        out
    }

    /// Rebuilds a table from triples and counters.
    pub fn from_triples(
        triples: &[(ResourceKind, VirtualId, RealId)],
        counters: &Counters,
    ) -> Result<Self, IdError> {
        let mut table = Self::with_counters(counters);
        for &(kind, vid, real) in triples {
            table.attach(kind, vid, real)?;
        }
        Ok(table)
    }

    /// Checks that both directions are mutual inverses and that every
    /// mapped virtual id is below the counter.
    pub fn check_bijection(&self) -> bool {
        self.kinds.values().all(|t| {
            t.to_real.len() == t.to_virtual.len()
                && t.to_real.iter().all(|(v, r)| t.to_virtual.get(r) == Some(v))
                && t.to_real.keys().all(|v| v.0 > 0 && v.0 < t.next_virtual)
        })
    }
}
