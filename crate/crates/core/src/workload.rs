//! Seeded synthetic call streams.
//!
//! [`generate`] produces a game-like stream: a fixed set of textures,
//! buffers and shader programs, and per frame a burst of state writes,
//! texture and buffer updates, client-array uploads and draws. The stream
//! for `n` frames is a prefix of the stream for any larger frame count.
//!
//! [`fuzz_log`] produces small arbitrary logs for property tests: random
//! catalog calls over tiny value domains, so that binds, deletes, aliasing
//! and context resets collide often. Calls the driver rejects are skipped.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::call::{Call, CallArg, FunctionId, ResourceKind};
use crate::gl::GlEnum;
use crate::replay::Recorder;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct WorkloadProfile {
    pub seed: u64,
    pub frames: u64,
    pub textures_total: u64,
    pub textures_touched_per_frame: u64,
    pub state_writes_per_frame: u64,
    pub upload_bytes: u64,
    pub shader_programs: u64,
    pub churn: f64,
    pub draws_per_frame: u64,
    pub buffers_total: u64,
}

impl Default for WorkloadProfile {
    fn default() -> Self {
        WorkloadProfile {
            seed: 0,
            frames: 120,
            textures_total: 64,
            textures_touched_per_frame: 4,
            state_writes_per_frame: 24,
            upload_bytes: 4096,
            shader_programs: 4,
            churn: 0.01,
            draws_per_frame: 4,
            buffers_total: 4,
        }
    }
}

impl WorkloadProfile {
    /// Parses a flat `key = value` profile. Missing keys take defaults.
    pub fn parse(text: &str) -> Result<WorkloadProfile, String> {
        let profile: WorkloadProfile = toml::from_str(text).map_err(|e| e.to_string())?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.churn) {
            return Err(format!("churn {} is not a probability", self.churn));
        }
        if self.textures_touched_per_frame > 0 && self.textures_total == 0 {
            return Err("texturesTouchedPerFrame needs texturesTotal > 0".into());
        }
        if self.textures_total > crate::call::MAX_GEN_COUNT as u64
            || self.buffers_total > crate::call::MAX_GEN_COUNT as u64
        {
            return Err("object counts above the Gen limit".into());
        }
        Ok(())
    }
}

const CAPS: [GlEnum; 6] = [
    GlEnum::GL_BLEND,
    GlEnum::GL_DEPTH_TEST,
    GlEnum::GL_CULL_FACE,
    GlEnum::GL_FOG,
    GlEnum::GL_SCISSOR_TEST,
    GlEnum::GL_ALPHA_TEST,
];
const CLIENT_CAPS: [GlEnum; 3] = [
    GlEnum::GL_VERTEX_ARRAY,
    GlEnum::GL_COLOR_ARRAY,
    GlEnum::GL_TEXTURE_COORD_ARRAY,
];
const MODES: [GlEnum; 3] = [GlEnum::GL_MODELVIEW, GlEnum::GL_PROJECTION, GlEnum::GL_TEXTURE];
const PNAMES: [GlEnum; 4] = [
    GlEnum::GL_TEXTURE_MIN_FILTER,
    GlEnum::GL_TEXTURE_MAG_FILTER,
    GlEnum::GL_TEXTURE_WRAP_S,
    GlEnum::GL_TEXTURE_WRAP_T,
];

fn pvalue(pname: GlEnum, rng: &mut impl Rng) -> GlEnum {
    let choices: &[GlEnum] = match pname {
        GlEnum::GL_TEXTURE_MIN_FILTER => &[
            GlEnum::GL_NEAREST,
            GlEnum::GL_LINEAR,
            GlEnum::GL_LINEAR_MIPMAP_LINEAR,
        ],
        GlEnum::GL_TEXTURE_MAG_FILTER => &[GlEnum::GL_NEAREST, GlEnum::GL_LINEAR],
        _ => &[GlEnum::GL_REPEAT, GlEnum::GL_CLAMP_TO_EDGE, GlEnum::GL_MIRRORED_REPEAT],
    };
    *choices.choose(rng).expect("non-empty")
}

fn call(func: FunctionId, args: Vec<CallArg>) -> Call {
    Call::new(func, args)
}

fn bytes(rng: &mut impl RngCore, n: u64) -> CallArg {
    let mut buf = vec![0u8; n as usize];
    rng.fill_bytes(&mut buf);
    Call::data(buf)
}

fn small_float(rng: &mut impl Rng) -> f64 {
    f64::from(rng.random_range(0..=255u8)) / 255.0
}

/// Generates the call stream for `profile`. With `frames == 0` the stream
/// is just the context creation.
pub fn generate(profile: &WorkloadProfile) -> Vec<Call> {
    let mut out = vec![call(FunctionId::CreateContext, vec![])];
    let mut g = Generator::new(profile);
    for frame in 0..profile.frames {
        if frame == 0 {
            g.setup(&mut out);
        }
        g.frame(&mut out);
    }
    out
}

struct Generator<'a> {
    p: &'a WorkloadProfile,
    rng: ChaCha8Rng,
    next_texture: u64,
    textures: Vec<u64>,
    uploaded: Vec<bool>,
    buffers: Vec<u64>,
    programs: Vec<u64>,
}

impl<'a> Generator<'a> {
    fn new(p: &'a WorkloadProfile) -> Self {
        Generator {
            p,
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            next_texture: 1,
            textures: vec![],
            uploaded: vec![],
            buffers: vec![],
            programs: vec![],
        }
    }

    fn setup(&mut self, out: &mut Vec<Call>) {
        let p = self.p;
        out.push(call(FunctionId::Viewport, vec![Call::int(0), Call::int(0), Call::int(640), Call::int(480)]));
        if p.textures_total > 0 {
            out.push(call(FunctionId::GenTextures, vec![Call::int(p.textures_total as i64)]));
            self.textures = (1..=p.textures_total).collect();
            self.uploaded = vec![false; self.textures.len()];
            self.next_texture = p.textures_total + 1;
        }
        if p.buffers_total > 0 {
            out.push(call(FunctionId::GenBuffers, vec![Call::int(p.buffers_total as i64)]));
            self.buffers = (1..=p.buffers_total).collect();
        }
        let mut next_shader = 1;
        for program in 1..=p.shader_programs {
            let mut shaders = vec![];
            for ty in [GlEnum::GL_VERTEX_SHADER, GlEnum::GL_FRAGMENT_SHADER] {
                let s = next_shader;
                next_shader += 1;
                out.push(call(FunctionId::CreateShader, vec![Call::gl(ty)]));
                let src = format!("// {ty} {s}\nvoid main() {{ gl_Position = vec4({}); }}\n", self.rng.random::<u32>());
                out.push(call(
                    FunctionId::ShaderSource,
                    vec![Call::id(ResourceKind::Shader, s), Call::data(src.into_bytes())],
                ));
                out.push(call(FunctionId::CompileShader, vec![Call::id(ResourceKind::Shader, s)]));
                shaders.push(s);
            }
            out.push(call(FunctionId::CreateProgram, vec![]));
            for &s in &shaders {
                out.push(call(
                    FunctionId::AttachShader,
                    vec![Call::id(ResourceKind::Program, program), Call::id(ResourceKind::Shader, s)],
                ));
            }
            out.push(call(FunctionId::LinkProgram, vec![Call::id(ResourceKind::Program, program)]));
            if self.rng.random_bool(0.5) {
                for &s in &shaders {
                    out.push(call(FunctionId::DeleteShader, vec![Call::id(ResourceKind::Shader, s)]));
                }
            }
            self.programs.push(program);
        }
    }

    fn state_write(&mut self, out: &mut Vec<Call>) {
        let rng = &mut self.rng;
        match rng.random_range(0..8) {
            0 => out.push(call(
                FunctionId::ClearColor,
                (0..4).map(|_| Call::float(small_float(rng))).collect(),
            )),
            1 => out.push(call(FunctionId::Clear, vec![Call::int(*[0x4100i64, 0x4000, 0x4500].choose(rng).expect("non-empty"))])),
            2 => {
                let (w, h) = *[(640, 480), (320, 240), (800, 600)].choose(rng).expect("non-empty");
                out.push(call(FunctionId::Viewport, vec![Call::int(0), Call::int(0), Call::int(w), Call::int(h)]));
            }
            3 | 4 => {
                let cap = *CAPS.choose(rng).expect("non-empty");
                let f = if rng.random_bool(0.5) { FunctionId::Enable } else { FunctionId::Disable };
                out.push(call(f, vec![Call::gl(cap)]));
            }
            5 => {
                let cap = *CLIENT_CAPS.choose(rng).expect("non-empty");
                let f = if rng.random_bool(0.5) {
                    FunctionId::EnableClientState
                } else {
                    FunctionId::DisableClientState
                };
                out.push(call(f, vec![Call::gl(cap)]));
            }
            _ => {
                let mode = *MODES.choose(rng).expect("non-empty");
                out.push(call(FunctionId::MatrixMode, vec![Call::gl(mode)]));
                out.push(call(
                    FunctionId::LoadMatrix,
                    (0..16).map(|_| Call::float(small_float(rng))).collect(),
                ));
            }
        }
    }

    fn frame(&mut self, out: &mut Vec<Call>) {
        let p = self.p;
        for _ in 0..p.state_writes_per_frame {
            self.state_write(out);
        }

        let tex2d = Call::gl(GlEnum::GL_TEXTURE_2D);
        let mut touched = vec![];
        for _ in 0..p.textures_touched_per_frame {
            let slot = self.rng.random_range(0..self.textures.len());
            let vid = self.textures[slot];
            touched.push(vid);
            out.push(call(FunctionId::BindTexture, vec![tex2d.clone(), Call::id(ResourceKind::Texture, vid)]));
            let pname = *PNAMES.choose(&mut self.rng).expect("non-empty");
            let value = pvalue(pname, &mut self.rng);
            out.push(call(FunctionId::TexParameter, vec![tex2d.clone(), Call::gl(pname), Call::gl(value)]));
            if !self.uploaded[slot] || self.rng.random_bool(0.5) {
                self.uploaded[slot] = true;
                let side = ((p.upload_bytes / 4) as f64).sqrt().max(1.0) as i64;
                let data = bytes(&mut self.rng, p.upload_bytes);
                out.push(call(
                    FunctionId::TexImage,
                    vec![tex2d.clone(), Call::int(0), Call::gl(GlEnum::GL_RGBA), Call::int(side), Call::int(side), data],
                ));
            }
        }
        if !self.textures.is_empty() && self.rng.random_bool(p.churn) {
            let slot = self.rng.random_range(0..self.textures.len());
            out.push(call(FunctionId::DeleteTextures, vec![Call::id(ResourceKind::Texture, self.textures[slot])]));
            out.push(call(FunctionId::GenTextures, vec![Call::int(1)]));
            self.textures[slot] = self.next_texture;
            self.uploaded[slot] = false;
            self.next_texture += 1;
            touched.retain(|&t| self.textures.contains(&t));
        }

        let array = Call::gl(GlEnum::GL_ARRAY_BUFFER);
        for _ in 0..self.buffers.len().min(2) {
            let b = *self.buffers.choose(&mut self.rng).expect("non-empty");
            out.push(call(FunctionId::BindBuffer, vec![array.clone(), Call::id(ResourceKind::Buffer, b)]));
            let data = bytes(&mut self.rng, p.upload_bytes);
            out.push(call(FunctionId::BufferData, vec![array.clone(), data, Call::gl(GlEnum::GL_DYNAMIC_DRAW)]));
        }

        if let Some(&program) = self.programs.choose(&mut self.rng) {
            out.push(call(FunctionId::UseProgram, vec![Call::id(ResourceKind::Program, program)]));
        }

        for _ in 0..p.draws_per_frame {
            if let Some(&t) = touched.choose(&mut self.rng) {
                out.push(call(FunctionId::BindTexture, vec![tex2d.clone(), Call::id(ResourceKind::Texture, t)]));
            }
            for (f, size) in [
                (FunctionId::VertexPointer, 3),
                (FunctionId::ColorPointer, 4),
                (FunctionId::TexCoordPointer, 2),
            ] {
                let data = bytes(&mut self.rng, p.upload_bytes);
                out.push(call(f, vec![Call::int(size), Call::gl(GlEnum::GL_FLOAT), Call::int(0), data]));
            }
            let count = (p.upload_bytes / 12) as i64;
            out.push(call(FunctionId::Draw, vec![Call::gl(GlEnum::GL_TRIANGLES), Call::int(0), Call::int(count)]));
        }
        out.push(call(FunctionId::SwapBuffers, vec![]));
    }
}

/// Records `calls` into a fresh recorder. Generated streams are valid by
/// construction, so a rejected call is a generator bug.
pub fn record_all(calls: &[Call]) -> Recorder {
    let mut r = Recorder::new();
    for c in calls {
        if let Err(e) = r.record(c) {
            panic!("generated call {:?} rejected: {e}", c.func);
        }
    }
    r
}

/// Records a random log of between 1 and `max_calls` accepted calls.
pub fn fuzz_log(seed: u64, max_calls: usize) -> Recorder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.random_range(1..=max_calls.max(1));
    let mut r = Recorder::new();
    let mut attempts = 0;
    while r.log.len() < target && attempts < target * 8 {
        attempts += 1;
        let c = fuzz_call(&mut rng, &r);
        let _ = r.record(&c);
    }
    r
}

const DATA_POOL: [&[u8]; 3] = [b"\x00\x01", b"\xff", b"blob"];

fn pick_id(rng: &mut ChaCha8Rng, r: &Recorder, kind: ResourceKind, allow_zero: bool) -> CallArg {
    let next = r.machine.table.next_virtual(kind);
    let lo = if allow_zero { 0 } else { 1 };
    // Mostly recent ids, occasionally stale or not yet assigned ones.
    let hi = next.max(lo + 1);
    let vid = if rng.random_bool(0.7) && hi > lo + 1 {
        rng.random_range(hi.saturating_sub(3).max(lo)..hi)
    } else {
        rng.random_range(lo..=hi)
    };
    Call::id(kind, vid)
}

fn fuzz_call(rng: &mut ChaCha8Rng, r: &Recorder) -> Call {
    use FunctionId::*;
    if !r.machine.driver.context_alive() {
        return call(CreateContext, vec![]);
    }
    let data = |rng: &mut ChaCha8Rng| Call::data(DATA_POOL.choose(rng).expect("non-empty").to_vec());
    let targets = [GlEnum::GL_TEXTURE_2D, GlEnum::GL_TEXTURE_CUBE_MAP];
    let btargets = [GlEnum::GL_ARRAY_BUFFER, GlEnum::GL_ELEMENT_ARRAY_BUFFER];
    let f = |v: f64| Call::float(v);
    match rng.random_range(0..100) {
        0 => call(ResetContext, vec![]),
        1 => call(DestroyContext, vec![pick_id(rng, r, ResourceKind::Context, false)]),
        2..=4 => call(ClearColor, vec![f(*[0.0, 0.5].choose(rng).unwrap()), f(0.0), f(0.0), f(1.0)]),
        5 => call(Clear, vec![Call::int(*[0x4000, 0x4100].choose(rng).unwrap())]),
        6 => call(Viewport, vec![Call::int(0), Call::int(0), Call::int(*[1, 2].choose(rng).unwrap()), Call::int(1)]),
        7..=10 => {
            let cap = *[GlEnum::GL_BLEND, GlEnum::GL_DEPTH_TEST].choose(rng).unwrap();
            call(*[Enable, Disable].choose(rng).unwrap(), vec![Call::gl(cap)])
        }
        11 => call(
            *[EnableClientState, DisableClientState].choose(rng).unwrap(),
            vec![Call::gl(GlEnum::GL_VERTEX_ARRAY)],
        ),
        12..=14 => call(MatrixMode, vec![Call::gl(*MODES[..2].choose(rng).unwrap())]),
        15..=17 => {
            let v = *[0.0, 2.0].choose(rng).unwrap();
            call(LoadMatrix, (0..16).map(|i| f(if i == 0 { v } else { 1.0 })).collect())
        }
        18..=22 => call(GenTextures, vec![Call::int(rng.random_range(1..=2))]),
        23..=26 => {
            let n = rng.random_range(1..=2);
            call(DeleteTextures, (0..n).map(|_| pick_id(rng, r, ResourceKind::Texture, false)).collect())
        }
        27..=36 => call(
            BindTexture,
            vec![Call::gl(*targets.choose(rng).unwrap()), pick_id(rng, r, ResourceKind::Texture, true)],
        ),
        37..=42 => call(
            TexParameter,
            vec![
                Call::gl(*targets.choose(rng).unwrap()),
                Call::gl(*PNAMES[..2].choose(rng).unwrap()),
                Call::gl(*[GlEnum::GL_NEAREST, GlEnum::GL_LINEAR].choose(rng).unwrap()),
            ],
        ),
        43..=47 => call(
            TexImage,
            vec![
                Call::gl(*targets.choose(rng).unwrap()),
                Call::int(rng.random_range(0..=1)),
                Call::gl(GlEnum::GL_RGBA),
                Call::int(1),
                Call::int(1),
                data(rng),
            ],
        ),
        48..=49 => call(GenBuffers, vec![Call::int(rng.random_range(1..=2))]),
        50..=51 => call(DeleteBuffers, vec![pick_id(rng, r, ResourceKind::Buffer, false)]),
        52..=55 => call(
            BindBuffer,
            vec![Call::gl(*btargets.choose(rng).unwrap()), pick_id(rng, r, ResourceKind::Buffer, true)],
        ),
        56..=58 => call(
            BufferData,
            vec![Call::gl(*btargets.choose(rng).unwrap()), data(rng), Call::gl(GlEnum::GL_STATIC_DRAW)],
        ),
        59..=60 => call(
            *[VertexPointer, ColorPointer].choose(rng).unwrap(),
            vec![Call::int(3), Call::gl(GlEnum::GL_FLOAT), Call::int(0), data(rng)],
        ),
        61..=63 => call(
            CreateShader,
            vec![Call::gl(*[GlEnum::GL_VERTEX_SHADER, GlEnum::GL_FRAGMENT_SHADER].choose(rng).unwrap())],
        ),
        64..=66 => call(ShaderSource, vec![pick_id(rng, r, ResourceKind::Shader, false), data(rng)]),
        67..=68 => call(CompileShader, vec![pick_id(rng, r, ResourceKind::Shader, false)]),
        69 => call(DeleteShader, vec![pick_id(rng, r, ResourceKind::Shader, false)]),
        70..=71 => call(CreateProgram, vec![]),
        72..=74 => call(
            AttachShader,
            vec![pick_id(rng, r, ResourceKind::Program, false), pick_id(rng, r, ResourceKind::Shader, false)],
        ),
        75..=76 => call(LinkProgram, vec![pick_id(rng, r, ResourceKind::Program, false)]),
        77..=79 => call(UseProgram, vec![pick_id(rng, r, ResourceKind::Program, true)]),
        80 => call(DeleteProgram, vec![pick_id(rng, r, ResourceKind::Program, false)]),
        81..=90 => call(Draw, vec![Call::gl(GlEnum::GL_TRIANGLES), Call::int(0), Call::int(3)]),
        91..=94 => call(Finish, vec![]),
        _ => call(SwapBuffers, vec![]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frames_is_context_only() {
        let p = WorkloadProfile {
            frames: 0,
            ..Default::default()
        };
        let calls = generate(&p);
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].func, FunctionId::CreateContext);
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let p = WorkloadProfile {
            seed: 9,
            frames: 6,
            upload_bytes: 64,
            churn: 0.5,
            ..Default::default()
        };
        assert_eq!(generate(&p), generate(&p));
        let longer = generate(&WorkloadProfile { frames: 9, ..p.clone() });
        let short = generate(&p);
        assert_eq!(&longer[..short.len()], &short[..]);
        let other = generate(&WorkloadProfile { seed: 10, ..p.clone() });
        assert_ne!(other, short);
    }

    #[test]
    fn generated_streams_record_cleanly() {
        for seed in 0..5 {
            let p = WorkloadProfile {
                seed,
                frames: 20,
                upload_bytes: 32,
                churn: 0.3,
                ..Default::default()
            };
            let r = record_all(&generate(&p));
            assert_eq!(r.machine.driver.frame_count, 20 * (p.draws_per_frame + 1));
            r.log.validate().unwrap();
        }
    }

    #[test]
    fn profile_parsing() {
        let p = WorkloadProfile::parse("seed = 7\nframes = 10\nchurn = 0.5\n").unwrap();
        assert_eq!((p.seed, p.frames, p.churn, p.textures_total), (7, 10, 0.5, 64));
        assert!(WorkloadProfile::parse("churn = 1.5").is_err());
        assert!(WorkloadProfile::parse("bogus = 1").is_err());
        assert!(WorkloadProfile::parse("frames = -1").is_err());
        assert_eq!(WorkloadProfile::parse("").unwrap(), WorkloadProfile::default());
    }

    #[test]
    fn fuzz_logs_are_valid_and_bounded() {
        for seed in 0..50 {
            let r = fuzz_log(seed, 40);
            assert!(!r.log.is_empty() && r.log.len() <= 40);
            r.log.validate().unwrap();
        }
    }
}
