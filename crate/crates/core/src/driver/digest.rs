//! Canonical serialization of driver state.
//!
//! Two digests are defined here. The state digest covers all observable
//! state, with every object name translated to virtual-id space so that two
//! sessions which received different real ids compare equal. The frame
//! digest covers only what a draw call consumes and never mentions ids at
//! all. The byte layout is documented in `docs/formats.md`.

use sha2::{Digest as _, Sha256};

use super::{ArraySpec, DriverState, LinkedShader, TextureObject, MATRIX_MODES};
use crate::blob::{BlobRef, Digest};
use crate::call::{ArgValue, RealId, ResourceKind, VirtualId};
use crate::error::DriverError;
use crate::gl::{EnumClass, GlEnum};
use crate::ids::TranslationTable;

/// `state_digest` of `DriverState::fresh()` with an empty table, format 1.
pub const FRESH_STATE_DIGEST_HEX: &str =
    "e844bb5673b9b70653fee043be5eba1dbe03b216a1ac00e4179c338d52479b55";

const STATE_TAG: &[u8] = b"RPR-STATE-1\0";
const FRAME_TAG: &[u8] = b"RPR-FRAME-1\0";

struct Canon(Sha256);

impl Canon {
    fn new(tag: &[u8]) -> Self {
        let mut h = Sha256::new();
        h.update(tag);
        Canon(h)
    }

    fn u8(&mut self, v: u8) {
        self.0.update([v]);
    }

    fn u32(&mut self, v: u32) {
        self.0.update(v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.update(v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.0.update(v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.update(v.to_bits().to_le_bytes());
    }

    fn gl(&mut self, e: GlEnum) {
        self.u32(e.value());
    }

    fn blob(&mut self, b: &BlobRef) {
        self.0.update(b.digest.0);
        self.u64(b.len);
    }

    fn opt_blob(&mut self, b: &Option<BlobRef>) {
        match b {
            None => self.u8(0),
            Some(b) => {
                self.u8(1);
                self.blob(b);
            }
        }
    }

    fn scalar(&mut self, v: &ArgValue) {
        match v {
            ArgValue::Int(i) => {
                self.u8(0);
                self.i64(*i);
            }
            ArgValue::Float(f) => {
                self.u8(1);
                self.f64(*f);
            }
            ArgValue::Enum(e) => {
                self.u8(2);
                self.gl(*e);
            }
            // Texture parameters are scalars by signature.
            ArgValue::Id(_) | ArgValue::Blob(_) => unreachable!("non-scalar texture parameter"),
        }
    }

    fn enabled_set(&mut self, map: &std::collections::BTreeMap<GlEnum, bool>) {
        let on: Vec<_> = map.iter().filter(|(_, v)| **v).map(|(k, _)| *k).collect();
        self.u64(on.len() as u64);
        for e in on {
            self.gl(e);
        }
    }

    fn texture(&mut self, t: &TextureObject) {
        self.u64(t.params.len() as u64);
        for ((target, pname), value) in &t.params {
            self.gl(*target);
            self.gl(*pname);
            self.scalar(value);
        }
        self.u64(t.images.len() as u64);
        for ((target, level), img) in &t.images {
            self.gl(*target);
            self.i64(*level);
            self.gl(img.format);
            self.i64(img.width);
            self.i64(img.height);
            self.blob(&img.data);
        }
    }

    fn buffer(&mut self, data: &Option<(BlobRef, GlEnum)>) {
        match data {
            None => self.u8(0),
            Some((blob, usage)) => {
                self.u8(1);
                self.blob(blob);
                self.gl(*usage);
            }
        }
    }

    fn array(&mut self, a: &ArraySpec) {
        self.i64(a.size);
        self.gl(a.data_type);
        self.i64(a.stride);
        self.blob(&a.data);
    }

    fn linked(&mut self, linked: &Option<Vec<LinkedShader>>) {
        match linked {
            None => self.u8(0),
            Some(shaders) => {
                self.u8(1);
                self.u64(shaders.len() as u64);
                for s in shaders {
                    self.gl(s.shader_type);
                    self.opt_blob(&s.compiled);
                    self.u64(s.generation);
                }
            }
        }
    }

    /// Fixed-function state shared by both digests.
    fn common(&mut self, s: &DriverState) {
        self.enabled_set(&s.capabilities);
        self.enabled_set(&s.client_capabilities);
        for c in s.clear_color {
            self.f64(c);
        }
        self.i64(s.clear_mask);
        for v in s.viewport {
            self.i64(v);
        }
        for mode in MATRIX_MODES {
            self.gl(mode);
            for v in s.matrices[&mode] {
                self.f64(v);
            }
        }
    }

    fn finish(self) -> Digest {
        Digest(self.0.finalize().into())
    }
}

fn virt(table: &TranslationTable, kind: ResourceKind, real: RealId) -> Result<VirtualId, DriverError> {
    table
        .to_virtual(kind, real)
        .ok_or(DriverError::UntranslatableRealId { kind, real: real.0 })
}

/// Objects of one kind keyed by virtual id, in ascending virtual order.
fn by_virtual<'a, T>(
    table: &TranslationTable,
    kind: ResourceKind,
    objects: impl Iterator<Item = (&'a RealId, &'a T)>,
) -> Result<Vec<(VirtualId, &'a T)>, DriverError>
where
    T: 'a,
{
    let mut out = objects
        .map(|(r, o)| Ok((virt(table, kind, *r)?, o)))
        .collect::<Result<Vec<_>, DriverError>>()?;
    out.sort_by_key(|(v, _)| *v);
    Ok(out)
}

impl DriverState {
    /// Digest of all observable state, canonicalized in virtual-id space.
    ///
    /// The frame counter and real-id counters are not observable state and
    /// are excluded.
    pub fn state_digest(&self, table: &TranslationTable) -> Result<Digest, DriverError> {
        let mut c = Canon::new(STATE_TAG);
        match self.context {
            None => c.u64(0),
            Some(real) => c.u64(virt(table, ResourceKind::Context, real)?.0),
        }
        c.common(self);
        c.gl(self.matrix_mode);

        let textures = by_virtual(
            table,
            ResourceKind::Texture,
            self.textures
                .iter()
                .filter(|(r, t)| **r != RealId::DEFAULT || !t.is_empty()),
        )?;
        c.u64(textures.len() as u64);
        for (vid, t) in textures {
            c.u64(vid.0);
            c.texture(t);
        }
        c.u64(self.texture_bindings.len() as u64);
        for (target, real) in &self.texture_bindings {
            c.gl(*target);
            c.u64(virt(table, ResourceKind::Texture, *real)?.0);
        }

        let buffers = by_virtual(
            table,
            ResourceKind::Buffer,
            self.buffers
                .iter()
                .filter(|(r, b)| **r != RealId::DEFAULT || b.data.is_some()),
        )?;
        c.u64(buffers.len() as u64);
        for (vid, b) in buffers {
            c.u64(vid.0);
            c.buffer(&b.data);
        }
        c.u64(self.buffer_bindings.len() as u64);
        for (target, real) in &self.buffer_bindings {
            c.gl(*target);
            c.u64(virt(table, ResourceKind::Buffer, *real)?.0);
        }

        c.u64(self.client_arrays.len() as u64);
        for (kind, a) in &self.client_arrays {
            c.u8(*kind as u8);
            c.array(a);
        }

        let shaders = by_virtual(table, ResourceKind::Shader, self.shaders.iter())?;
        c.u64(shaders.len() as u64);
        for (vid, s) in shaders {
            c.u64(vid.0);
            c.gl(s.shader_type);
            c.opt_blob(&s.source);
            c.opt_blob(&s.compiled);
            c.u64(s.generation);
        }

        let programs = by_virtual(table, ResourceKind::Program, self.programs.iter())?;
        c.u64(programs.len() as u64);
        for (vid, p) in programs {
            c.u64(vid.0);
            let mut attached = p
                .attached
                .iter()
                .map(|r| virt(table, ResourceKind::Shader, *r))
                .collect::<Result<Vec<_>, _>>()?;
            attached.sort();
            c.u64(attached.len() as u64);
            for a in attached {
                c.u64(a.0);
            }
            c.linked(&p.linked);
        }
        c.u64(virt(table, ResourceKind::Program, self.current_program)?.0);
        c.0.update(self.last_frame.0);
        Ok(c.finish())
    }

    /// Digest of what a draw call would consume: fixed-function state, the
    /// contents of every bound object, the current program's link snapshot
    /// and the client arrays. Contains no object names.
    pub fn render(&self) -> Result<Digest, DriverError> {
        if !self.context_alive() {
            return Err(DriverError::NoContext);
        }
        let empty_texture = TextureObject::default();
        let mut c = Canon::new(FRAME_TAG);
        c.common(self);
        for target in GlEnum::members(EnumClass::TextureTarget) {
            let real = self.texture_bindings.get(&target).copied().unwrap_or_default();
            c.gl(target);
            c.texture(self.textures.get(&real).unwrap_or(&empty_texture));
        }
        for target in GlEnum::members(EnumClass::BufferTarget) {
            let real = self.buffer_bindings.get(&target).copied().unwrap_or_default();
            c.gl(target);
            c.buffer(&self.buffers.get(&real).and_then(|b| b.data));
        }
        match self.programs.get(&self.current_program) {
            Some(p) => c.linked(&p.linked),
            None => c.u8(0xff),
        }
        c.u64(self.client_arrays.len() as u64);
        for (kind, a) in &self.client_arrays {
            c.u8(*kind as u8);
            c.array(a);
        }
        Ok(c.finish())
    }
}
