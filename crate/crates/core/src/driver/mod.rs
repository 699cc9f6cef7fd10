//! A deterministic simulated driver for the call catalog.
//!
//! The simulated driver is the ground truth for replay correctness: a
//! pruned log is correct when replaying it produces the same
//! [`state_digest`](DriverState::state_digest) and the same last frame
//! digest as replaying the full log.
//!
//! State is kept in real-id space, exactly as a driver would see it. All
//! translation to and from virtual ids goes through the
//! [`TranslationTable`] passed to [`DriverState::apply`].

mod digest;

use std::collections::{BTreeMap, BTreeSet};

pub use digest::FRESH_STATE_DIGEST_HEX;

use crate::blob::{BlobRef, Digest};
use crate::call::{
    check_signature, ArgValue, CallRecord, FunctionId, IdRef, RealId, ResourceKind, VirtualId,
    MAX_GEN_COUNT,
};
use crate::error::{DriverError, IdError};
use crate::gl::GlEnum;
use crate::ids::TranslationTable;

pub const IDENTITY: [f64; 16] = [
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0, //
    0.0, 0.0, 0.0, 1.0,
];

const MATRIX_MODES: [GlEnum; 3] = [GlEnum::GL_MODELVIEW, GlEnum::GL_PROJECTION, GlEnum::GL_TEXTURE];
const CLEAR_MASK_BITS: i64 = 0x0100 | 0x0400 | 0x4000;

/// Client-side vertex array slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointerKind {
    Vertex,
    Color,
    TexCoord,
}

impl PointerKind {
    pub fn of(func: FunctionId) -> Option<PointerKind> {
        match func {
            FunctionId::VertexPointer => Some(PointerKind::Vertex),
            FunctionId::ColorPointer => Some(PointerKind::Color),
            FunctionId::TexCoordPointer => Some(PointerKind::TexCoord),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PointerKind::Vertex => "vertex",
            PointerKind::Color => "color",
            PointerKind::TexCoord => "texcoord",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySpec {
    pub size: i64,
    pub data_type: GlEnum,
    pub stride: i64,
    pub data: BlobRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TexImageSpec {
    pub format: GlEnum,
    pub width: i64,
    pub height: i64,
    pub data: BlobRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextureObject {
    pub params: BTreeMap<(GlEnum, GlEnum), ArgValue>,
    pub images: BTreeMap<(GlEnum, i64), TexImageSpec>,
}

impl TextureObject {
    fn is_empty(&self) -> bool {
        self.params.is_empty() && self.images.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BufferObject {
    pub data: Option<(BlobRef, GlEnum)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShaderObject {
    pub shader_type: GlEnum,
    pub source: Option<BlobRef>,
    /// Source captured by the most recent compile.
    pub compiled: Option<BlobRef>,
    pub generation: u64,
}

/// What a successful link captured from one attached shader.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkedShader {
    pub shader_type: GlEnum,
    pub compiled: Option<BlobRef>,
    pub generation: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramObject {
    pub attached: BTreeSet<RealId>,
    /// Snapshot taken at the last successful link; `None` when unlinked.
    pub linked: Option<Vec<LinkedShader>>,
}

/// Simulated driver state for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverState {
    pub context: Option<RealId>,
    pub capabilities: BTreeMap<GlEnum, bool>,
    pub client_capabilities: BTreeMap<GlEnum, bool>,
    pub clear_color: [f64; 4],
    pub clear_mask: i64,
    pub viewport: [i64; 4],
    pub matrix_mode: GlEnum,
    pub matrices: BTreeMap<GlEnum, [f64; 16]>,
    /// Real id 0 is the default ("sink") texture that receives writes
    /// through an unbound target.
    pub textures: BTreeMap<RealId, TextureObject>,
    pub texture_bindings: BTreeMap<GlEnum, RealId>,
    pub buffers: BTreeMap<RealId, BufferObject>,
    pub buffer_bindings: BTreeMap<GlEnum, RealId>,
    pub client_arrays: BTreeMap<PointerKind, ArraySpec>,
    pub shaders: BTreeMap<RealId, ShaderObject>,
    pub programs: BTreeMap<RealId, ProgramObject>,
    pub current_program: RealId,
    pub frame_count: u64,
    pub last_frame: Digest,
    next_real: BTreeMap<ResourceKind, u64>,
    real_id_base: u64,
}

impl Default for DriverState {
    fn default() -> Self {
        Self::fresh()
    }
}

impl DriverState {
    /// Initial driver state: no context, everything at its default.
    pub fn fresh() -> Self {
        Self::with_real_id_base(1)
    }

    /// A fresh driver whose real-id counters start at `base` for every kind.
    /// Different bases model driver sessions that hand out different names.
    pub fn with_real_id_base(base: u64) -> Self {
        let base = base.max(1);
        DriverState {
            context: None,
            capabilities: BTreeMap::new(),
            client_capabilities: BTreeMap::new(),
            clear_color: [0.0; 4],
            clear_mask: 0,
            viewport: [0; 4],
            matrix_mode: GlEnum::GL_MODELVIEW,
            matrices: MATRIX_MODES.iter().map(|m| (*m, IDENTITY)).collect(),
            textures: BTreeMap::new(),
            texture_bindings: BTreeMap::new(),
            buffers: BTreeMap::new(),
            buffer_bindings: BTreeMap::new(),
            client_arrays: BTreeMap::new(),
            shaders: BTreeMap::new(),
            programs: BTreeMap::new(),
            current_program: RealId::DEFAULT,
            frame_count: 0,
            last_frame: Digest::default(),
            next_real: BTreeMap::new(),
            real_id_base: base,
        }
    }

    pub fn context_alive(&self) -> bool {
        self.context.is_some()
    }

    pub fn capability(&self, cap: GlEnum) -> bool {
        self.capabilities.get(&cap).copied().unwrap_or(false)
    }

    /// Resets GL state to defaults. Real-id counters, the frame counter and
    /// the current context are kept.
    fn reset_gl_state(&mut self) {
        let keep = DriverState {
            context: self.context,
            frame_count: self.frame_count,
            next_real: std::mem::take(&mut self.next_real),
            ..DriverState::with_real_id_base(self.real_id_base)
        };
        *self = keep;
    }

    fn alloc_real(&mut self, kind: ResourceKind) -> RealId {
        let next = self.next_real.entry(kind).or_insert(self.real_id_base);
        let id = RealId(*next);
        *next += 1;
        id
    }

    fn object_exists(&self, kind: ResourceKind, real: RealId) -> bool {
        match kind {
            ResourceKind::Texture => self.textures.contains_key(&real),
            ResourceKind::Buffer => self.buffers.contains_key(&real),
            ResourceKind::Shader => self.shaders.contains_key(&real),
            ResourceKind::Program => self.programs.contains_key(&real),
            ResourceKind::Context => self.context == Some(real),
        }
    }

    /// Translates a live object reference.
    fn resolve(&self, table: &TranslationTable, r: IdRef) -> Result<RealId, DriverError> {
        let real = table.to_real(r.kind, r.id).map_err(|e| match e {
            IdError::UnknownVirtualId { kind, vid } if table.is_retired(kind, VirtualId(vid)) => {
                DriverError::UseAfterDelete { kind, vid }
            }
            IdError::UnknownVirtualId { kind, vid } => DriverError::UnknownVirtualId { kind, vid },
            other => DriverError::Id(other),
        })?;
        if real != RealId::DEFAULT && !self.object_exists(r.kind, real) {
            return Err(DriverError::UseAfterDelete {
                kind: r.kind,
                vid: r.id.0,
            });
        }
        Ok(real)
    }

    /// Applies one recorded call.
    ///
    /// Creation calls allocate fresh real ids. If the record already carries
    /// returned virtual ids (replay), those exact ids are attached to the new
    /// real ids; otherwise new virtual ids are assigned (recording). Either
    /// way the virtual ids are returned.
    ///
    /// On error the state and the table are left untouched.
    pub fn apply(
        &mut self,
        call: &CallRecord,
        table: &mut TranslationTable,
    ) -> Result<Vec<IdRef>, DriverError> {
        use FunctionId::*;

        check_signature(call.func, &call.args).map_err(DriverError::BadArguments)?;
        if call.func != CreateContext && !self.context_alive() {
            return Err(DriverError::NoContext);
        }
        let args = &call.args;
        let int = |i: usize| args[i].as_int().expect("checked signature");
        let float = |i: usize| args[i].as_float().expect("checked signature");
        let en = |i: usize| args[i].as_enum().expect("checked signature");
        let id = |i: usize| args[i].as_id().expect("checked signature");
        let blob = |i: usize| args[i].as_blob().expect("checked signature");
        let invalid = |detail: String| DriverError::InvalidValue {
            func: call.func,
            detail,
        };

        match call.func {
            CreateContext => {
                if self.context_alive() {
                    return Err(DriverError::ContextAlive);
                }
                let ids = self.create_objects(call, table, ResourceKind::Context, 1)?;
                self.context = Some(table.to_real(ResourceKind::Context, ids[0].id)?);
                Ok(ids)
            }
            ResetContext => {
                for kind in [
                    ResourceKind::Texture,
                    ResourceKind::Buffer,
                    ResourceKind::Shader,
                    ResourceKind::Program,
                ] {
                    table.release_all(kind);
                }
                self.reset_gl_state();
                Ok(vec![])
            }
            DestroyContext => {
                let real = self.resolve(table, id(0))?;
                if self.context != Some(real) {
                    return Err(invalid("not the current context".into()));
                }
                for kind in ResourceKind::ALL {
                    table.release_all(kind);
                }
                self.reset_gl_state();
                self.context = None;
                Ok(vec![])
            }
            ClearColor => {
                self.clear_color = [float(0), float(1), float(2), float(3)];
                Ok(vec![])
            }
            Clear => {
                let mask = int(0);
                if mask & !CLEAR_MASK_BITS != 0 {
                    return Err(invalid(format!("mask {mask:#x} has unknown bits")));
                }
                self.clear_mask = mask;
                Ok(vec![])
            }
            Viewport => {
                if int(2) < 0 || int(3) < 0 {
                    return Err(invalid("negative viewport size".into()));
                }
                self.viewport = [int(0), int(1), int(2), int(3)];
                Ok(vec![])
            }
            Enable | Disable => {
                self.capabilities.insert(en(0), call.func == Enable);
                Ok(vec![])
            }
            EnableClientState | DisableClientState => {
                self.client_capabilities
                    .insert(en(0), call.func == EnableClientState);
                Ok(vec![])
            }
            MatrixMode => {
                self.matrix_mode = en(0);
                Ok(vec![])
            }
            LoadMatrix => {
                let mut m = [0.0; 16];
                for (i, slot) in m.iter_mut().enumerate() {
                    *slot = float(i);
                }
                self.matrices.insert(self.matrix_mode, m);
                Ok(vec![])
            }
            GenTextures | GenBuffers => {
                let n = int(0);
                if !(1..=MAX_GEN_COUNT).contains(&n) {
                    return Err(invalid(format!("count {n} out of range")));
                }
                let kind = call.func.resource_kind().expect("gen has a kind");
                self.create_objects(call, table, kind, n as usize)
            }
            DeleteTextures | DeleteBuffers => {
                let kind = call.func.resource_kind().expect("delete has a kind");
                let reals = self.resolve_distinct(table, args, call.func)?;
                for (r, real) in args.iter().filter_map(ArgValue::as_id).zip(reals) {
                    if kind == ResourceKind::Texture {
                        self.textures.remove(&real);
                        self.texture_bindings.retain(|_, b| *b != real);
                    } else {
                        self.buffers.remove(&real);
                        self.buffer_bindings.retain(|_, b| *b != real);
                    }
                    table.release(kind, r.id)?;
                }
                Ok(vec![])
            }
            BindTexture => {
                let real = self.resolve(table, id(1))?;
                set_binding(&mut self.texture_bindings, en(0), real);
                Ok(vec![])
            }
            TexParameter => {
                let target = self.bound_texture(en(0));
                self.textures
                    .entry(target)
                    .or_default()
                    .params
                    .insert((en(0), en(1)), args[2]);
                Ok(vec![])
            }
            TexImage => {
                let (level, width, height) = (int(1), int(3), int(4));
                if level < 0 || width < 0 || height < 0 {
                    return Err(invalid("negative level or size".into()));
                }
                let target = self.bound_texture(en(0));
                self.textures.entry(target).or_default().images.insert(
                    (en(0), level),
                    TexImageSpec {
                        format: en(2),
                        width,
                        height,
                        data: blob(5),
                    },
                );
                Ok(vec![])
            }
            BindBuffer => {
                let real = self.resolve(table, id(1))?;
                set_binding(&mut self.buffer_bindings, en(0), real);
                Ok(vec![])
            }
            BufferData => {
                let target = self.buffer_bindings.get(&en(0)).copied().unwrap_or_default();
                self.buffers.entry(target).or_default().data = Some((blob(1), en(2)));
                Ok(vec![])
            }
            VertexPointer | ColorPointer | TexCoordPointer => {
                let (size, stride) = (int(0), int(2));
                if !(1..=4).contains(&size) || stride < 0 {
                    return Err(invalid(format!("size {size} / stride {stride}")));
                }
                let kind = PointerKind::of(call.func).expect("pointer function");
                self.client_arrays.insert(
                    kind,
                    ArraySpec {
                        size,
                        data_type: en(1),
                        stride,
                        data: blob(3),
                    },
                );
                Ok(vec![])
            }
            CreateShader => {
                let ids = self.create_objects(call, table, ResourceKind::Shader, 1)?;
                let real = table.to_real(ResourceKind::Shader, ids[0].id)?;
                self.shaders.insert(
                    real,
                    ShaderObject {
                        shader_type: en(0),
                        source: None,
                        compiled: None,
                        generation: 0,
                    },
                );
                Ok(ids)
            }
            ShaderSource => {
                let real = self.resolve(table, id(0))?;
                self.shaders.get_mut(&real).expect("resolved").source = Some(blob(1));
                Ok(vec![])
            }
            CompileShader => {
                let real = self.resolve(table, id(0))?;
                let shader = self.shaders.get_mut(&real).expect("resolved");
                shader.compiled = shader.source;
                shader.generation += 1;
                Ok(vec![])
            }
            DeleteShader => {
                let real = self.resolve(table, id(0))?;
                self.shaders.remove(&real);
                for program in self.programs.values_mut() {
                    program.attached.remove(&real);
                }
                table.release(ResourceKind::Shader, id(0).id)?;
                Ok(vec![])
            }
            CreateProgram => {
                let ids = self.create_objects(call, table, ResourceKind::Program, 1)?;
                let real = table.to_real(ResourceKind::Program, ids[0].id)?;
                self.programs.insert(real, ProgramObject::default());
                Ok(ids)
            }
            AttachShader => {
                let program = self.resolve(table, id(0))?;
                let shader = self.resolve(table, id(1))?;
                self.programs
                    .get_mut(&program)
                    .expect("resolved")
                    .attached
                    .insert(shader);
                Ok(vec![])
            }
            LinkProgram => {
                let real = self.resolve(table, id(0))?;
                let program = &self.programs[&real];
                let mut snapshot: Vec<LinkedShader> = program
                    .attached
                    .iter()
                    .map(|s| {
                        let shader = &self.shaders[s];
                        LinkedShader {
                            shader_type: shader.shader_type,
                            compiled: shader.compiled,
                            generation: shader.generation,
                        }
                    })
                    .collect();
                snapshot.sort();
                let linked = (!snapshot.is_empty()).then_some(snapshot);
                self.programs.get_mut(&real).expect("resolved").linked = linked;
                Ok(vec![])
            }
            UseProgram => {
                self.current_program = self.resolve(table, id(0))?;
                Ok(vec![])
            }
            DeleteProgram => {
                let real = self.resolve(table, id(0))?;
                self.programs.remove(&real);
                if self.current_program == real {
                    self.current_program = RealId::DEFAULT;
                }
                table.release(ResourceKind::Program, id(0).id)?;
                Ok(vec![])
            }
            Draw | Finish | SwapBuffers => {
                if call.func == Draw && (int(1) < 0 || int(2) < 0) {
                    return Err(invalid("negative first/count".into()));
                }
                let frame = self.render()?;
                self.frame_count += 1;
                self.last_frame = frame;
                Ok(vec![])
            }
        }
    }

    fn bound_texture(&self, target: GlEnum) -> RealId {
        self.texture_bindings.get(&target).copied().unwrap_or_default()
    }

    /// Resolves the id-list arguments of a Delete call, rejecting repeats.
    fn resolve_distinct(
        &self,
        table: &TranslationTable,
        args: &[ArgValue],
        func: FunctionId,
    ) -> Result<Vec<RealId>, DriverError> {
        let mut seen = BTreeSet::new();
        let mut reals = Vec::with_capacity(args.len());
        for r in args.iter().filter_map(ArgValue::as_id) {
            if !seen.insert(r.id) {
                return Err(DriverError::InvalidValue {
                    func,
                    detail: format!("{r} listed twice"),
                });
            }
            reals.push(self.resolve(table, r)?);
        }
        Ok(reals)
    }

    /// Allocates `n` real ids and names them in the table (see `apply`).
    fn create_objects(
        &mut self,
        call: &CallRecord,
        table: &mut TranslationTable,
        kind: ResourceKind,
        n: usize,
    ) -> Result<Vec<IdRef>, DriverError> {
        let replaying = !call.returned.is_empty();
        if replaying {
            if call.returned.len() != n {
                return Err(DriverError::BadArguments(format!(
                    "{} returned {} ids, expected {n}",
                    call.func,
                    call.returned.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for r in &call.returned {
                if r.kind != kind || r.id.is_none() || !seen.insert(r.id) {
                    return Err(DriverError::BadArguments(format!(
                        "{}: bad returned id {r}",
                        call.func
                    )));
                }
                if table.to_real(kind, r.id).is_ok() {
                    return Err(IdError::DuplicateVirtual { kind, vid: r.id.0 }.into());
                }
            }
        }
        let first = self.next_real.get(&kind).copied().unwrap_or(self.real_id_base);
        if (first..first + n as u64).any(|r| table.to_virtual(kind, RealId(r)).is_some()) {
            return Err(IdError::DuplicateReal { kind, real: first }.into());
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let real = self.alloc_real(kind);
            match kind {
                ResourceKind::Texture => {
                    self.textures.insert(real, TextureObject::default());
                }
                ResourceKind::Buffer => {
                    self.buffers.insert(real, BufferObject::default());
                }
                _ => {}
            }
            let vid = if replaying {
                let vid = call.returned[i].id;
                table.attach(kind, vid, real)?;
                vid
            } else {
                table.assign_virtual(kind, real)?
            };
            out.push(IdRef { kind, id: vid });
        }
        Ok(out)
    }

    /// Number of frame roots applied; used when a restored session resumes
    /// numbering where the checkpointed one stopped.
    pub fn set_frame_count(&mut self, frames: u64) {
        self.frame_count = frames;
    }
}

fn set_binding(bindings: &mut BTreeMap<GlEnum, RealId>, target: GlEnum, real: RealId) {
    if real == RealId::DEFAULT {
        bindings.remove(&target);
    } else {
        bindings.insert(target, real);
    }
}

#[cfg(test)]
mod tests;
