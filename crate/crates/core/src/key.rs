//! Category keys: the identity under which only the last write matters.

use std::collections::BTreeMap;
use std::fmt;

use crate::call::{CallRecord, FunctionId, IdRef, ResourceKind, RoleTag, VirtualId};
use crate::driver::PointerKind;
use crate::gl::GlEnum;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategoryKey {
    pub family: &'static str,
    pub discriminators: Vec<KeyPart>,
}

/// A discriminating argument. `ArgValue` minus the variants that can never
/// discriminate a category, so that keys are totally ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyPart {
    Enum(GlEnum),
    Id(IdRef),
    Level(i64),
    Pointer(PointerKind),
}

impl CategoryKey {
    fn new(family: &'static str, discriminators: Vec<KeyPart>) -> Self {
        CategoryKey {
            family,
            discriminators,
        }
    }

    /// The object the keyed write lands on, if it is object-addressed.
    pub fn owner(&self) -> Option<IdRef> {
        self.discriminators.iter().find_map(|p| match p {
            KeyPart::Id(r) => Some(*r),
            _ => None,
        })
    }
}

impl fmt::Display for CategoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.family)?;
        for p in &self.discriminators {
            match p {
                KeyPart::Enum(e) => write!(f, ", {e}")?,
                KeyPart::Id(r) => write!(f, ", {r}")?,
                KeyPart::Level(l) => write!(f, ", {l}")?,
                KeyPart::Pointer(k) => write!(f, ", {}", k.name())?,
            }
        }
        f.write_str(")")
    }
}

/// How a target-addressed write was resolved to its owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub owner: VirtualId,
    /// Seq of the call that established the current binding, if any.
    pub via: Option<u64>,
}

impl Resolution {
    const UNBOUND: Resolution = Resolution {
        owner: VirtualId::NONE,
        via: None,
    };
}

/// Tracks which object each selector currently designates, as established
/// by the calls observed so far.
#[derive(Debug, Clone, Default)]
pub struct SelectorContext {
    textures: BTreeMap<GlEnum, Resolution>,
    buffers: BTreeMap<GlEnum, Resolution>,
    matrix_mode: Option<(GlEnum, u64)>,
}

impl SelectorContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn texture(&self, target: GlEnum) -> Resolution {
        self.textures.get(&target).copied().unwrap_or(Resolution::UNBOUND)
    }

    pub fn buffer(&self, target: GlEnum) -> Resolution {
        self.buffers.get(&target).copied().unwrap_or(Resolution::UNBOUND)
    }

    /// Current matrix mode and the seq of the `MatrixMode` call that set it.
    pub fn matrix_mode(&self) -> (GlEnum, Option<u64>) {
        match self.matrix_mode {
            Some((m, seq)) => (m, Some(seq)),
            None => (GlEnum::GL_MODELVIEW, None),
        }
    }

    /// Updates the context with one call. Deleting a bound object resets
    /// the binding to "no object", established by the delete call; a context
    /// reset clears everything.
    pub fn observe(&mut self, call: &CallRecord) {
        use FunctionId::*;
        let bound = |rec: &CallRecord| Resolution {
            owner: rec.args[1].as_id().map_or(VirtualId::NONE, |r| r.id),
            via: Some(rec.seq),
        };
        match call.func {
            BindTexture => {
                if let Some(t) = call.args[0].as_enum() {
                    self.textures.insert(t, bound(call));
                }
            }
            BindBuffer => {
                if let Some(t) = call.args[0].as_enum() {
                    self.buffers.insert(t, bound(call));
                }
            }
            MatrixMode => {
                if let Some(m) = call.args[0].as_enum() {
                    self.matrix_mode = Some((m, call.seq));
                }
            }
            DeleteTextures | DeleteBuffers => {
                let map = if call.func == DeleteTextures {
                    &mut self.textures
                } else {
                    &mut self.buffers
                };
                for r in call.id_args() {
                    for res in map.values_mut() {
                        if res.owner == r.id {
                            *res = Resolution {
                                owner: VirtualId::NONE,
                                via: Some(call.seq),
                            };
                        }
                    }
                }
            }
            ResetContext | DestroyContext | CreateContext => *self = Self::default(),
            _ => {}
        }
    }
}

/// The key of a `StateSet` or `SelectorBind` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyed {
    pub key: CategoryKey,
    /// Seq of the selector call the key was resolved through, if any.
    pub via: Option<u64>,
    /// Set when a target-addressed write found nothing bound: the write
    /// resolved to the reserved "no object" id 0.
    pub unresolved: bool,
}

/// Computes the category key of `call` given the selector context in effect
/// just before it. Returns `None` for calls that are not keyed (roots,
/// creation, deletion and lifecycle calls).
pub fn category_key(call: &CallRecord, ctx: &SelectorContext) -> Option<Keyed> {
    use FunctionId::*;
    if !matches!(call.func.role(), RoleTag::StateSet | RoleTag::SelectorBind) {
        return None;
    }
    let en = |i: usize| KeyPart::Enum(call.args[i].as_enum().expect("enum argument"));
    let plain = |family, parts| {
        Some(Keyed {
            key: CategoryKey::new(family, parts),
            via: None,
            unresolved: false,
        })
    };
    let addressed = |family, kind: ResourceKind, res: Resolution, mut rest: Vec<KeyPart>| {
        let mut parts = vec![KeyPart::Id(IdRef {
            kind,
            id: res.owner,
        })];
        parts.append(&mut rest);
        Some(Keyed {
            key: CategoryKey::new(family, parts),
            via: res.via,
            unresolved: res.owner.is_none() && res.via.is_none(),
        })
    };
    match call.func {
        ClearColor => plain("ClearColor", vec![]),
        Clear => plain("clear", vec![]),
        Viewport => plain("viewport", vec![]),
        Enable | Disable => plain("capability", vec![en(0)]),
        EnableClientState | DisableClientState => plain("clientCapability", vec![en(0)]),
        LoadMatrix => {
            let (mode, via) = ctx.matrix_mode();
            Some(Keyed {
                key: CategoryKey::new("matrix", vec![KeyPart::Enum(mode)]),
                via,
                unresolved: false,
            })
        }
        MatrixMode => plain("matrixMode", vec![]),
        TexParameter => {
            let target = call.args[0].as_enum().expect("target");
            addressed(
                "texParam",
                ResourceKind::Texture,
                ctx.texture(target),
                vec![en(0), en(1)],
            )
        }
        TexImage => {
            let target = call.args[0].as_enum().expect("target");
            let level = KeyPart::Level(call.args[1].as_int().expect("level"));
            addressed(
                "texImage",
                ResourceKind::Texture,
                ctx.texture(target),
                vec![en(0), level],
            )
        }
        BufferData => {
            let target = call.args[0].as_enum().expect("target");
            addressed("bufferData", ResourceKind::Buffer, ctx.buffer(target), vec![])
        }
        VertexPointer | ColorPointer | TexCoordPointer => plain(
            "clientArray",
            vec![KeyPart::Pointer(PointerKind::of(call.func).expect("pointer"))],
        ),
        BindTexture => plain("bindTexture", vec![en(0)]),
        BindBuffer => plain("bindBuffer", vec![en(0)]),
        UseProgram => plain("useProgram", vec![]),
        ResetContext => plain("resetContext", vec![]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::call::ArgValue;

    fn rec(seq: u64, func: FunctionId, args: Vec<ArgValue>) -> CallRecord {
        CallRecord {
            seq,
            func,
            args,
            returned: vec![],
            frame: 0,
        }
    }

    fn e(v: GlEnum) -> ArgValue {
        ArgValue::Enum(v)
    }

    fn tex(v: u64) -> ArgValue {
        ArgValue::Id(IdRef::new(ResourceKind::Texture, v))
    }

    #[test]
    fn enable_key() {
        let call = rec(1, FunctionId::Enable, vec![e(GlEnum::GL_BLEND)]);
        let k = category_key(&call, &SelectorContext::new()).unwrap();
        assert_eq!(k.key.family, "capability");
        assert_eq!(k.key.discriminators, vec![KeyPart::Enum(GlEnum::GL_BLEND)]);
        assert_eq!(k.key.to_string(), "(capability, GL_BLEND)");
    }

    #[test]
    fn enable_and_disable_share_keys() {
        let ctx = SelectorContext::new();
        for cap in GlEnum::members(crate::gl::EnumClass::Capability) {
            let a = category_key(&rec(1, FunctionId::Enable, vec![e(cap)]), &ctx).unwrap();
            let b = category_key(&rec(2, FunctionId::Disable, vec![e(cap)]), &ctx).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tex_parameter_resolves_through_bind() {
        let mut ctx = SelectorContext::new();
        ctx.observe(&rec(1, FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(5)]));
        let call = rec(
            2,
            FunctionId::TexParameter,
            vec![
                e(GlEnum::GL_TEXTURE_2D),
                e(GlEnum::GL_TEXTURE_MIN_FILTER),
                e(GlEnum::GL_LINEAR),
            ],
        );
        let k = category_key(&call, &ctx).unwrap();
        assert_eq!(k.key.family, "texParam");
        assert_eq!(
            k.key.discriminators,
            vec![
                KeyPart::Id(IdRef::new(ResourceKind::Texture, 5)),
                KeyPart::Enum(GlEnum::GL_TEXTURE_2D),
                KeyPart::Enum(GlEnum::GL_TEXTURE_MIN_FILTER),
            ]
        );
        assert!(!k.unresolved);
        assert_eq!(k.via, Some(1));
        assert_eq!(ctx.texture(GlEnum::GL_TEXTURE_2D).via, Some(1));
    }

    #[test]
    fn unbound_write_resolves_to_zero_and_is_flagged() {
        let call = rec(
            1,
            FunctionId::TexParameter,
            vec![
                e(GlEnum::GL_TEXTURE_2D),
                e(GlEnum::GL_TEXTURE_MIN_FILTER),
                e(GlEnum::GL_LINEAR),
            ],
        );
        let k = category_key(&call, &SelectorContext::new()).unwrap();
        assert!(k.unresolved);
        assert_eq!(k.key.owner(), Some(IdRef::new(ResourceKind::Texture, 0)));
    }

    #[test]
    fn clear_color_has_no_discriminators() {
        let call = rec(1, FunctionId::ClearColor, vec![ArgValue::Float(0.0); 4]);
        let k = category_key(&call, &SelectorContext::new()).unwrap();
        assert_eq!(k.key.family, "ClearColor");
        assert!(k.key.discriminators.is_empty());
    }

    #[test]
    fn load_matrix_keys_on_current_mode() {
        let mut ctx = SelectorContext::new();
        let lm = rec(3, FunctionId::LoadMatrix, vec![ArgValue::Float(1.0); 16]);
        let k1 = category_key(&lm, &ctx).unwrap();
        ctx.observe(&rec(4, FunctionId::MatrixMode, vec![e(GlEnum::GL_PROJECTION)]));
        let k2 = category_key(&lm, &ctx).unwrap();
        assert_ne!(k1, k2);
        assert_eq!(ctx.matrix_mode(), (GlEnum::GL_PROJECTION, Some(4)));
    }

    #[test]
    fn delete_clears_binding() {
        let mut ctx = SelectorContext::new();
        ctx.observe(&rec(1, FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(5)]));
        ctx.observe(&rec(2, FunctionId::DeleteTextures, vec![tex(5)]));
        assert_eq!(
            ctx.texture(GlEnum::GL_TEXTURE_2D),
            Resolution {
                owner: VirtualId::NONE,
                via: Some(2)
            }
        );
    }

    #[test]
    fn non_keyed_calls() {
        let ctx = SelectorContext::new();
        assert!(category_key(&rec(1, FunctionId::Draw, vec![e(GlEnum::GL_TRIANGLES), ArgValue::Int(0), ArgValue::Int(3)]), &ctx).is_none());
        assert!(category_key(&rec(1, FunctionId::GenTextures, vec![ArgValue::Int(1)]), &ctx).is_none());
    }
}
