//! Symbolic GL constants understood by the call catalog.
//!
//! Every token has a fixed numeric value so that the text codec (which
//! prints names) and the binary codec (which writes numbers) agree. The
//! table is closed: values outside it are rejected by both codecs.

use std::fmt;

/// Argument families a token may be used in. A token can belong to more
/// than one family (`GL_TEXTURE_2D` is both a capability and a target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnumClass {
    Capability,
    ClientState,
    MatrixMode,
    TextureTarget,
    TexParamName,
    TexParamValue,
    PixelFormat,
    BufferTarget,
    BufferUsage,
    DataType,
    ShaderType,
    PrimitiveMode,
}

/// A GL enum token, stored by value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlEnum(u32);

struct Entry {
    name: &'static str,
    value: u32,
    classes: &'static [EnumClass],
}

macro_rules! gl_enums {
    ($($ident:ident = $value:expr => [$($class:ident),*];)*) => {
        impl GlEnum {
            $(pub const $ident: GlEnum = GlEnum($value);)*
        }

        static TABLE: &[Entry] = &[
            $(Entry {
                name: stringify!($ident),
                value: $value,
                classes: &[$(EnumClass::$class),*],
            },)*
        ];
    };
}

gl_enums! {
    GL_POINTS = 0x0000 => [PrimitiveMode];
    GL_LINES = 0x0001 => [PrimitiveMode];
    GL_LINE_STRIP = 0x0003 => [PrimitiveMode];
    GL_TRIANGLES = 0x0004 => [PrimitiveMode];
    GL_TRIANGLE_STRIP = 0x0005 => [PrimitiveMode];
    GL_TRIANGLE_FAN = 0x0006 => [PrimitiveMode];
    GL_QUADS = 0x0007 => [PrimitiveMode];
    GL_CULL_FACE = 0x0B44 => [Capability];
    GL_LIGHTING = 0x0B50 => [Capability];
    GL_FOG = 0x0B60 => [Capability];
    GL_DEPTH_TEST = 0x0B71 => [Capability];
    GL_STENCIL_TEST = 0x0B90 => [Capability];
    GL_ALPHA_TEST = 0x0BC0 => [Capability];
    GL_BLEND = 0x0BE2 => [Capability];
    GL_SCISSOR_TEST = 0x0C11 => [Capability];
    GL_TEXTURE_1D = 0x0DE0 => [TextureTarget];
    GL_TEXTURE_2D = 0x0DE1 => [Capability, TextureTarget];
    GL_BYTE = 0x1400 => [DataType];
    GL_UNSIGNED_BYTE = 0x1401 => [DataType];
    GL_SHORT = 0x1402 => [DataType];
    GL_UNSIGNED_SHORT = 0x1403 => [DataType];
    GL_INT = 0x1404 => [DataType];
    GL_FLOAT = 0x1406 => [DataType];
    GL_MODELVIEW = 0x1700 => [MatrixMode];
    GL_PROJECTION = 0x1701 => [MatrixMode];
    GL_TEXTURE = 0x1702 => [MatrixMode];
    GL_ALPHA = 0x1906 => [PixelFormat];
    GL_RGB = 0x1907 => [PixelFormat];
    GL_RGBA = 0x1908 => [PixelFormat];
    GL_LUMINANCE = 0x1909 => [PixelFormat];
    GL_NEAREST = 0x2600 => [TexParamValue];
    GL_LINEAR = 0x2601 => [TexParamValue];
    GL_NEAREST_MIPMAP_NEAREST = 0x2700 => [TexParamValue];
    GL_LINEAR_MIPMAP_LINEAR = 0x2703 => [TexParamValue];
    GL_TEXTURE_MAG_FILTER = 0x2800 => [TexParamName];
    GL_TEXTURE_MIN_FILTER = 0x2801 => [TexParamName];
    GL_TEXTURE_WRAP_S = 0x2802 => [TexParamName];
    GL_TEXTURE_WRAP_T = 0x2803 => [TexParamName];
    GL_REPEAT = 0x2901 => [TexParamValue];
    GL_TEXTURE_3D = 0x806F => [TextureTarget];
    GL_TEXTURE_WRAP_R = 0x8072 => [TexParamName];
    GL_VERTEX_ARRAY = 0x8074 => [ClientState];
    GL_NORMAL_ARRAY = 0x8075 => [ClientState];
    GL_COLOR_ARRAY = 0x8076 => [ClientState];
    GL_TEXTURE_COORD_ARRAY = 0x8078 => [ClientState];
    GL_CLAMP_TO_EDGE = 0x812F => [TexParamValue];
    GL_MIRRORED_REPEAT = 0x8370 => [TexParamValue];
    GL_TEXTURE_CUBE_MAP = 0x8513 => [TextureTarget];
    GL_ARRAY_BUFFER = 0x8892 => [BufferTarget];
    GL_ELEMENT_ARRAY_BUFFER = 0x8893 => [BufferTarget];
    GL_STREAM_DRAW = 0x88E0 => [BufferUsage];
    GL_STATIC_DRAW = 0x88E4 => [BufferUsage];
    GL_DYNAMIC_DRAW = 0x88E8 => [BufferUsage];
    GL_FRAGMENT_SHADER = 0x8B30 => [ShaderType];
    GL_VERTEX_SHADER = 0x8B31 => [ShaderType];
}

impl GlEnum {
    pub fn from_value(value: u32) -> Option<GlEnum> {
        TABLE.iter().find(|e| e.value == value).map(|e| GlEnum(e.value))
    }

    pub fn from_name(name: &str) -> Option<GlEnum> {
        TABLE.iter().find(|e| e.name == name).map(|e| GlEnum(e.value))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }

    pub fn is(self, class: EnumClass) -> bool {
        self.entry().classes.contains(&class)
    }

    /// All tokens of one family, in ascending numeric order.
    pub fn members(class: EnumClass) -> Vec<GlEnum> {
        TABLE
            .iter()
            .filter(|e| e.classes.contains(&class))
            .map(|e| GlEnum(e.value))
            .collect()
    }

    pub fn all() -> impl Iterator<Item = GlEnum> {
        TABLE.iter().map(|e| GlEnum(e.value))
    }

    fn entry(self) -> &'static Entry {
        // Construction is only possible through the table, so the lookup
        // cannot miss.
        TABLE
            .iter()
            .find(|e| e.value == self.0)
            .expect("GlEnum outside the catalog table")
    }
}

impl fmt::Debug for GlEnum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for GlEnum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
