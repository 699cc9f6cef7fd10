//! The call catalog: supported functions, typed arguments, and recorded calls.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::blob::BlobRef;
use crate::gl::{EnumClass, GlEnum};

/// Kinds of driver objects whose names are virtualized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceKind {
    Texture,
    Buffer,
    Shader,
    Program,
    Context,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] = [
        ResourceKind::Texture,
        ResourceKind::Buffer,
        ResourceKind::Shader,
        ResourceKind::Program,
        ResourceKind::Context,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResourceKind::Texture => "Texture",
            ResourceKind::Buffer => "Buffer",
            ResourceKind::Shader => "Shader",
            ResourceKind::Program => "Program",
            ResourceKind::Context => "Context",
        }
    }

    pub fn from_name(name: &str) -> Option<ResourceKind> {
        ResourceKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<ResourceKind> {
        ResourceKind::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Application-visible object name. Zero means "no object".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VirtualId(pub u64);

/// Driver-session object name. Zero is the default object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RealId(pub u64);

impl VirtualId {
    pub const NONE: VirtualId = VirtualId(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl RealId {
    pub const DEFAULT: RealId = RealId(0);
}

/// A typed reference to an object in virtual-id space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdRef {
    pub kind: ResourceKind,
    pub id: VirtualId,
}

impl IdRef {
    pub fn new(kind: ResourceKind, id: u64) -> IdRef {
        IdRef {
            kind,
            id: VirtualId(id),
        }
    }
}

impl fmt::Display for IdRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.id.0)
    }
}

/// One argument of a recorded call.
#[derive(Debug, Clone, Copy)]
pub enum ArgValue {
    Int(i64),
    Float(f64),
    Enum(GlEnum),
    Id(IdRef),
    Blob(BlobRef),
}

// Floats compare by bit pattern so that logs are Eq and hashable and so that
// round-trip checks are exact.
impl PartialEq for ArgValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ArgValue::Int(a), ArgValue::Int(b)) => a == b,
            (ArgValue::Float(a), ArgValue::Float(b)) => a.to_bits() == b.to_bits(),
            (ArgValue::Enum(a), ArgValue::Enum(b)) => a == b,
            (ArgValue::Id(a), ArgValue::Id(b)) => a == b,
            (ArgValue::Blob(a), ArgValue::Blob(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for ArgValue {}

impl Hash for ArgValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            ArgValue::Int(v) => v.hash(state),
            ArgValue::Float(v) => v.to_bits().hash(state),
            ArgValue::Enum(v) => v.hash(state),
            ArgValue::Id(v) => v.hash(state),
            ArgValue::Blob(v) => v.hash(state),
        }
    }
}

impl ArgValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ArgValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            ArgValue::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<GlEnum> {
        match self {
            ArgValue::Enum(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_id(&self) -> Option<IdRef> {
        match self {
            ArgValue::Id(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_blob(&self) -> Option<BlobRef> {
        match self {
            ArgValue::Blob(v) => Some(*v),
            _ => None,
        }
    }
}

/// Role of a function in the pruning dependency tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoleTag {
    FrameRoot,
    StateSet,
    SelectorBind,
    ResourceGen,
    ResourceDelete,
    LifecycleStep,
}

/// Expected shape of one parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Int,
    Float,
    Enum(EnumClass),
    /// A live object of the given kind.
    Id(ResourceKind),
    /// Like `Id`, but zero ("no object") is accepted.
    IdOrNone(ResourceKind),
    /// One or more live objects; only valid as the last slot.
    IdList(ResourceKind),
    Blob,
    /// Any scalar: int, float or enum.
    Scalar,
}

macro_rules! catalog {
    ($($name:ident: $role:ident, [$($param:expr),*];)*) => {
        /// Every function the recorder understands. The set is closed.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum FunctionId {
            $($name,)*
        }

        impl FunctionId {
            pub const ALL: &'static [FunctionId] = &[$(FunctionId::$name,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(FunctionId::$name => stringify!($name),)*
                }
            }

            /// Parameter shapes, in order.
            pub fn params(self) -> &'static [Param] {
                use Param::*;
                #[allow(unused_imports)]
                use EnumClass::*;
                match self {
                    $(FunctionId::$name => &[$($param),*],)*
                }
            }

            pub fn role(self) -> RoleTag {
                match self {
                    $(FunctionId::$name => RoleTag::$role,)*
                }
            }
        }
    };
}

catalog! {
    CreateContext: ResourceGen, [];
    ResetContext: StateSet, [];
    DestroyContext: ResourceDelete, [Id(ResourceKind::Context)];
    ClearColor: StateSet, [Float, Float, Float, Float];
    Clear: StateSet, [Int];
    Viewport: StateSet, [Int, Int, Int, Int];
    Enable: StateSet, [Enum(Capability)];
    Disable: StateSet, [Enum(Capability)];
    EnableClientState: StateSet, [Enum(ClientState)];
    DisableClientState: StateSet, [Enum(ClientState)];
    MatrixMode: SelectorBind, [Enum(EnumClass::MatrixMode)];
    LoadMatrix: StateSet, [Float, Float, Float, Float, Float, Float, Float, Float,
                           Float, Float, Float, Float, Float, Float, Float, Float];
    GenTextures: ResourceGen, [Int];
    DeleteTextures: ResourceDelete, [IdList(ResourceKind::Texture)];
    BindTexture: SelectorBind, [Enum(TextureTarget), IdOrNone(ResourceKind::Texture)];
    TexParameter: StateSet, [Enum(TextureTarget), Enum(TexParamName), Scalar];
    TexImage: StateSet, [Enum(TextureTarget), Int, Enum(PixelFormat), Int, Int, Blob];
    GenBuffers: ResourceGen, [Int];
    DeleteBuffers: ResourceDelete, [IdList(ResourceKind::Buffer)];
    BindBuffer: SelectorBind, [Enum(BufferTarget), IdOrNone(ResourceKind::Buffer)];
    BufferData: StateSet, [Enum(BufferTarget), Blob, Enum(BufferUsage)];
    VertexPointer: StateSet, [Int, Enum(DataType), Int, Blob];
    ColorPointer: StateSet, [Int, Enum(DataType), Int, Blob];
    TexCoordPointer: StateSet, [Int, Enum(DataType), Int, Blob];
    CreateShader: ResourceGen, [Enum(ShaderType)];
    ShaderSource: LifecycleStep, [Id(ResourceKind::Shader), Blob];
    CompileShader: LifecycleStep, [Id(ResourceKind::Shader)];
    DeleteShader: ResourceDelete, [Id(ResourceKind::Shader)];
    CreateProgram: ResourceGen, [];
    AttachShader: LifecycleStep, [Id(ResourceKind::Program), Id(ResourceKind::Shader)];
    LinkProgram: LifecycleStep, [Id(ResourceKind::Program)];
    UseProgram: SelectorBind, [IdOrNone(ResourceKind::Program)];
    DeleteProgram: ResourceDelete, [Id(ResourceKind::Program)];
    Draw: FrameRoot, [Enum(PrimitiveMode), Int, Int];
    Finish: FrameRoot, [];
    SwapBuffers: FrameRoot, [];
}

/// Upper bound on the count argument of `GenTextures`/`GenBuffers`.
pub const MAX_GEN_COUNT: i64 = 4096;

impl FunctionId {
    pub fn from_name(name: &str) -> Option<FunctionId> {
        FunctionId::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Stable numeric code used by the binary codec.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<FunctionId> {
        FunctionId::ALL.get(code as usize).copied()
    }

    /// The resource kind a Gen/Create/Delete function operates on.
    pub fn resource_kind(self) -> Option<ResourceKind> {
        use FunctionId::*;
        match self {
            CreateContext | DestroyContext => Some(ResourceKind::Context),
            GenTextures | DeleteTextures => Some(ResourceKind::Texture),
            GenBuffers | DeleteBuffers => Some(ResourceKind::Buffer),
            CreateShader | DeleteShader => Some(ResourceKind::Shader),
            CreateProgram | DeleteProgram => Some(ResourceKind::Program),
            _ => None,
        }
    }

    pub fn is_frame_root(self) -> bool {
        self.role() == RoleTag::FrameRoot
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Total classification of catalog functions.
pub fn classify(func: FunctionId) -> RoleTag {
    func.role()
}

/// Checks `args` against the parameter shapes of `func`.
pub fn check_signature(func: FunctionId, args: &[ArgValue]) -> Result<(), String> {
    let params = func.params();
    let variadic = matches!(params.last(), Some(Param::IdList(_)));
    if variadic {
        if args.len() < params.len() {
            return Err(format!(
                "{func} expects at least {} argument(s), got {}",
                params.len(),
                args.len()
            ));
        }
    } else if args.len() != params.len() {
        return Err(format!(
            "{func} expects {} argument(s), got {}",
            params.len(),
            args.len()
        ));
    }
    for (i, arg) in args.iter().enumerate() {
        let param = params[i.min(params.len() - 1)];
        if !param_accepts(param, arg) {
            return Err(format!("{func}: argument {i} ({arg:?}) does not fit {param:?}"));
        }
    }
    Ok(())
}

fn param_accepts(param: Param, arg: &ArgValue) -> bool {
    match (param, arg) {
        (Param::Int, ArgValue::Int(_)) => true,
        (Param::Float, ArgValue::Float(_)) => true,
        (Param::Enum(class), ArgValue::Enum(e)) => e.is(class),
        (Param::Id(kind) | Param::IdList(kind), ArgValue::Id(r)) => r.kind == kind && !r.id.is_none(),
        (Param::IdOrNone(kind), ArgValue::Id(r)) => r.kind == kind,
        (Param::Blob, ArgValue::Blob(_)) => true,
        (Param::Scalar, ArgValue::Int(_) | ArgValue::Float(_) | ArgValue::Enum(_)) => true,
        _ => false,
    }
}

/// One recorded call, in virtual-id space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub seq: u64,
    pub func: FunctionId,
    pub args: Vec<ArgValue>,
    pub returned: Vec<IdRef>,
    /// Number of frame-root calls strictly before this one.
    pub frame: u64,
}

impl CallRecord {
    pub fn role(&self) -> RoleTag {
        self.func.role()
    }

    pub fn blobs(&self) -> impl Iterator<Item = BlobRef> + '_ {
        self.args.iter().filter_map(ArgValue::as_blob)
    }

    /// All object references among the arguments (including id lists).
    pub fn id_args(&self) -> impl Iterator<Item = IdRef> + '_ {
        self.args.iter().filter_map(ArgValue::as_id)
    }
}

/// An argument as passed by the application: client memory is given as
/// bytes and is copied into the blob store when the call is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum CallArg {
    Value(ArgValue),
    Data(Vec<u8>),
}

/// A call issued by the application, before recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub func: FunctionId,
    pub args: Vec<CallArg>,
}

impl Call {
    pub fn new(func: FunctionId, args: Vec<CallArg>) -> Call {
        Call { func, args }
    }

    pub fn int(v: i64) -> CallArg {
        CallArg::Value(ArgValue::Int(v))
    }

    pub fn float(v: f64) -> CallArg {
        CallArg::Value(ArgValue::Float(v))
    }

    pub fn gl(v: GlEnum) -> CallArg {
        CallArg::Value(ArgValue::Enum(v))
    }

    pub fn id(kind: ResourceKind, vid: u64) -> CallArg {
        CallArg::Value(ArgValue::Id(IdRef::new(kind, vid)))
    }

    pub fn data(bytes: impl Into<Vec<u8>>) -> CallArg {
        CallArg::Data(bytes.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_exactly_the_supported_set() {
        let names: Vec<_> = FunctionId::ALL.iter().map(|f| f.name()).collect();
        assert_eq!(
            names,
            [
                "CreateContext", "ResetContext", "DestroyContext", "ClearColor", "Clear",
                "Viewport", "Enable", "Disable", "EnableClientState", "DisableClientState",
                "MatrixMode", "LoadMatrix", "GenTextures", "DeleteTextures", "BindTexture",
                "TexParameter", "TexImage", "GenBuffers", "DeleteBuffers", "BindBuffer",
                "BufferData", "VertexPointer", "ColorPointer", "TexCoordPointer",
                "CreateShader", "ShaderSource", "CompileShader", "DeleteShader",
                "CreateProgram", "AttachShader", "LinkProgram", "UseProgram",
                "DeleteProgram", "Draw", "Finish", "SwapBuffers",
            ]
        );
        for f in FunctionId::ALL {
            assert_eq!(FunctionId::from_name(f.name()), Some(*f));
            assert_eq!(FunctionId::from_code(f.code()), Some(*f));
        }
        assert_eq!(FunctionId::from_name("Frobnicate"), None);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(FunctionId::Draw), RoleTag::FrameRoot);
        assert_eq!(classify(FunctionId::BindTexture), RoleTag::SelectorBind);
        assert_eq!(classify(FunctionId::ClearColor), RoleTag::StateSet);
    }

    #[test]
    fn role_table_matches_naming_rules() {
        use FunctionId::*;
        for &f in FunctionId::ALL {
            let expected = match f {
                Draw | Finish | SwapBuffers => RoleTag::FrameRoot,
                BindTexture | BindBuffer | MatrixMode | UseProgram => RoleTag::SelectorBind,
                ShaderSource | CompileShader | AttachShader | LinkProgram => RoleTag::LifecycleStep,
                DestroyContext => RoleTag::ResourceDelete,
                _ if f.name().starts_with("Gen") || f.name().starts_with("Create") => {
                    RoleTag::ResourceGen
                }
                _ if f.name().starts_with("Delete") => RoleTag::ResourceDelete,
                _ => RoleTag::StateSet,
            };
            assert_eq!(classify(f), expected, "{f}");
            // Deterministic.
            assert_eq!(classify(f), classify(f));
        }
    }

    #[test]
    fn gen_create_delete_map_to_one_kind() {
        for &f in FunctionId::ALL {
            let role = f.role();
            let has_kind = f.resource_kind().is_some();
            assert_eq!(
                has_kind,
                matches!(role, RoleTag::ResourceGen | RoleTag::ResourceDelete),
                "{f}"
            );
        }
    }

    #[test]
    fn signature_checks() {
        let tex = |v| ArgValue::Id(IdRef::new(ResourceKind::Texture, v));
        let e = |v| ArgValue::Enum(v);
        assert!(check_signature(FunctionId::BindTexture, &[e(GlEnum::GL_TEXTURE_2D), tex(0)]).is_ok());
        assert!(check_signature(FunctionId::DeleteTextures, &[tex(1), tex(2)]).is_ok());
        assert!(check_signature(FunctionId::DeleteTextures, &[]).is_err());
        assert!(check_signature(FunctionId::DeleteTextures, &[tex(0)]).is_err());
        assert!(check_signature(FunctionId::Enable, &[e(GlEnum::GL_TEXTURE_3D)]).is_err());
        assert!(check_signature(FunctionId::Enable, &[e(GlEnum::GL_BLEND)]).is_ok());
        assert!(check_signature(FunctionId::Finish, &[ArgValue::Int(1)]).is_err());
        assert!(check_signature(
            FunctionId::TexParameter,
            &[e(GlEnum::GL_TEXTURE_2D), e(GlEnum::GL_TEXTURE_MIN_FILTER), ArgValue::Float(1.5)]
        )
        .is_ok());
    }

    #[test]
    fn float_args_compare_bitwise() {
        assert_eq!(ArgValue::Float(f64::NAN), ArgValue::Float(f64::NAN));
        assert_ne!(ArgValue::Float(0.0), ArgValue::Float(-0.0));
        assert_ne!(ArgValue::Int(1), ArgValue::Float(1.0));
    }
}
