use super::*;
use crate::blob::BlobRef;
use crate::gl::EnumClass;

struct Rig {
    driver: DriverState,
    table: TranslationTable,
    seq: u64,
}

impl Rig {
    fn new() -> Rig {
        Rig::with_base(1)
    }

    fn with_base(base: u64) -> Rig {
        let mut rig = Rig {
            driver: DriverState::with_real_id_base(base),
            table: TranslationTable::new(),
            seq: 0,
        };
        rig.call(FunctionId::CreateContext, vec![]);
        rig
    }

    fn try_call(&mut self, func: FunctionId, args: Vec<ArgValue>) -> Result<Vec<IdRef>, DriverError> {
        self.seq += 1;
        let rec = CallRecord {
            seq: self.seq,
            func,
            args,
            returned: vec![],
            frame: self.driver.frame_count,
        };
        self.driver.apply(&rec, &mut self.table)
    }

    fn call(&mut self, func: FunctionId, args: Vec<ArgValue>) -> Vec<IdRef> {
        self.try_call(func, args).unwrap()
    }

    fn digest(&self) -> Digest {
        self.driver.state_digest(&self.table).unwrap()
    }
}

fn e(v: GlEnum) -> ArgValue {
    ArgValue::Enum(v)
}

fn i(v: i64) -> ArgValue {
    ArgValue::Int(v)
}

fn tex(v: u64) -> ArgValue {
    ArgValue::Id(IdRef::new(ResourceKind::Texture, v))
}

fn blob(bytes: &[u8]) -> ArgValue {
    ArgValue::Blob(BlobRef::for_bytes(bytes))
}

fn tex_param(rig: &mut Rig, value: GlEnum) {
    rig.call(
        FunctionId::TexParameter,
        vec![
            e(GlEnum::GL_TEXTURE_2D),
            e(GlEnum::GL_TEXTURE_MIN_FILTER),
            e(value),
        ],
    );
}

fn tex_image(rig: &mut Rig, bytes: &[u8]) {
    rig.call(
        FunctionId::TexImage,
        vec![
            e(GlEnum::GL_TEXTURE_2D),
            i(0),
            e(GlEnum::GL_RGBA),
            i(1),
            i(1),
            blob(bytes),
        ],
    );
}

fn real(rig: &Rig, kind: ResourceKind, vid: u64) -> RealId {
    rig.table.to_real(kind, VirtualId(vid)).unwrap()
}

#[test]
fn fresh_defaults() {
    let s = DriverState::fresh();
    assert!(!s.capability(GlEnum::GL_BLEND));
    assert!(!s.context_alive());
    assert_eq!(s.frame_count, 0);
    assert_eq!(s.clear_color, [0.0; 4]);
    assert_eq!(s.matrix_mode, GlEnum::GL_MODELVIEW);
    assert!(s.matrices.values().all(|m| *m == IDENTITY));
    assert_eq!(s.current_program, RealId::DEFAULT);
    assert!(s.textures.is_empty() && s.buffers.is_empty());
}

#[test]
fn fresh_digest_is_pinned() {
    let table = TranslationTable::new();
    let a = DriverState::fresh().state_digest(&table).unwrap();
    let b = DriverState::fresh().state_digest(&table).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_hex(), FRESH_STATE_DIGEST_HEX);
}

#[test]
fn every_capability_starts_disabled() {
    let s = DriverState::fresh();
    for cap in GlEnum::members(EnumClass::Capability) {
        assert!(!s.capability(cap), "{cap}");
    }
}

#[test]
fn tex_parameter_writes_through_binding() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(5)]);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(5)]);
    tex_param(&mut rig, GlEnum::GL_LINEAR);
    let obj = &rig.driver.textures[&real(&rig, ResourceKind::Texture, 5)];
    assert_eq!(
        obj.params[&(GlEnum::GL_TEXTURE_2D, GlEnum::GL_TEXTURE_MIN_FILTER)],
        e(GlEnum::GL_LINEAR)
    );
}

#[test]
fn last_enable_or_disable_wins() {
    let mut rig = Rig::new();
    rig.call(FunctionId::Enable, vec![e(GlEnum::GL_BLEND)]);
    rig.call(FunctionId::Disable, vec![e(GlEnum::GL_BLEND)]);
    assert!(!rig.driver.capability(GlEnum::GL_BLEND));
    rig.call(FunctionId::Enable, vec![e(GlEnum::GL_BLEND)]);
    assert!(rig.driver.capability(GlEnum::GL_BLEND));
}

#[test]
fn binding_aliasing() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(2)]);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(1)]);
    tex_param(&mut rig, GlEnum::GL_LINEAR);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(2)]);
    tex_param(&mut rig, GlEnum::GL_NEAREST);
    let key = (GlEnum::GL_TEXTURE_2D, GlEnum::GL_TEXTURE_MIN_FILTER);
    assert_eq!(
        rig.driver.textures[&real(&rig, ResourceKind::Texture, 1)].params[&key],
        e(GlEnum::GL_LINEAR)
    );
    assert_eq!(
        rig.driver.textures[&real(&rig, ResourceKind::Texture, 2)].params[&key],
        e(GlEnum::GL_NEAREST)
    );
}

#[test]
fn delete_clears_binding_and_writes_land_in_sink() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(5)]);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(5)]);
    let r5 = real(&rig, ResourceKind::Texture, 5);
    rig.call(FunctionId::DeleteTextures, vec![tex(5)]);
    assert!(!rig.driver.textures.contains_key(&r5));
    assert!(rig.driver.texture_bindings.get(&GlEnum::GL_TEXTURE_2D).is_none());
    tex_image(&mut rig, b"px");
    let sink = &rig.driver.textures[&RealId::DEFAULT];
    assert_eq!(sink.images.len(), 1);
    assert_eq!(
        rig.try_call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(5)]),
        Err(DriverError::UseAfterDelete {
            kind: ResourceKind::Texture,
            vid: 5
        })
    );
}

#[test]
fn bind_zero_unbinds() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(1)]);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(1)]);
    rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(0)]);
    assert!(rig.driver.texture_bindings.is_empty());
}

#[test]
fn errors() {
    let mut s = DriverState::fresh();
    let mut table = TranslationTable::new();
    let rec = CallRecord {
        seq: 1,
        func: FunctionId::Enable,
        args: vec![e(GlEnum::GL_BLEND)],
        returned: vec![],
        frame: 0,
    };
    assert_eq!(s.apply(&rec, &mut table), Err(DriverError::NoContext));
    assert_eq!(s.render(), Err(DriverError::NoContext));

    let mut rig = Rig::new();
    assert_eq!(
        rig.try_call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(9)]),
        Err(DriverError::UnknownVirtualId {
            kind: ResourceKind::Texture,
            vid: 9
        })
    );
    assert_eq!(rig.try_call(FunctionId::CreateContext, vec![]), Err(DriverError::ContextAlive));
    assert!(matches!(
        rig.try_call(FunctionId::Enable, vec![e(GlEnum::GL_MODELVIEW)]),
        Err(DriverError::BadArguments(_))
    ));
    assert!(matches!(
        rig.try_call(FunctionId::GenTextures, vec![i(0)]),
        Err(DriverError::InvalidValue { .. })
    ));
}

#[test]
fn failed_call_changes_nothing() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(2)]);
    let before = (rig.driver.clone(), rig.table.clone());
    assert!(rig
        .try_call(FunctionId::DeleteTextures, vec![tex(1), tex(7)])
        .is_err());
    assert!(rig.try_call(FunctionId::DeleteTextures, vec![tex(2), tex(2)]).is_err());
    assert_eq!((rig.driver.clone(), rig.table.clone()), before);
}

#[test]
fn shifted_real_ids_give_equal_digests() {
    let script = |rig: &mut Rig| {
        rig.call(FunctionId::GenTextures, vec![i(3)]);
        rig.call(FunctionId::BindTexture, vec![e(GlEnum::GL_TEXTURE_2D), tex(2)]);
        tex_image(rig, b"abc");
        rig.call(FunctionId::DeleteTextures, vec![tex(1)]);
        let sh = rig.call(FunctionId::CreateShader, vec![e(GlEnum::GL_VERTEX_SHADER)]);
        rig.call(FunctionId::ShaderSource, vec![ArgValue::Id(sh[0]), blob(b"void main(){}")]);
        rig.call(FunctionId::CompileShader, vec![ArgValue::Id(sh[0])]);
        let p = rig.call(FunctionId::CreateProgram, vec![]);
        rig.call(FunctionId::AttachShader, vec![ArgValue::Id(p[0]), ArgValue::Id(sh[0])]);
        rig.call(FunctionId::LinkProgram, vec![ArgValue::Id(p[0])]);
        rig.call(FunctionId::UseProgram, vec![ArgValue::Id(p[0])]);
        rig.call(FunctionId::Draw, vec![e(GlEnum::GL_TRIANGLES), i(0), i(3)]);
    };
    let mut a = Rig::with_base(1);
    let mut b = Rig::with_base(1000);
    script(&mut a);
    script(&mut b);
    assert_ne!(
        real(&a, ResourceKind::Texture, 2),
        real(&b, ResourceKind::Texture, 2)
    );
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.driver.last_frame, b.driver.last_frame);
}

#[test]
fn enable_changes_state_digest() {
    let mut rig = Rig::new();
    let before = rig.digest();
    rig.call(FunctionId::Enable, vec![e(GlEnum::GL_BLEND)]);
    assert_ne!(rig.digest(), before);
}

#[test]
fn clear_color_changes_frame_digest() {
    let mut rig = Rig::new();
    let a = rig.driver.render().unwrap();
    assert_eq!(a, rig.driver.render().unwrap());
    rig.call(FunctionId::ClearColor, vec![ArgValue::Float(0.5); 4]);
    assert_ne!(rig.driver.render().unwrap(), a);
}

#[test]
fn roots_count_frames() {
    let mut rig = Rig::new();
    rig.call(FunctionId::Draw, vec![e(GlEnum::GL_POINTS), i(0), i(1)]);
    rig.call(FunctionId::Finish, vec![]);
    rig.call(FunctionId::SwapBuffers, vec![]);
    assert_eq!(rig.driver.frame_count, 3);
    assert_eq!(rig.driver.last_frame, rig.driver.render().unwrap());
}

#[test]
fn shader_lifecycle() {
    let mut rig = Rig::new();
    let sh = rig.call(FunctionId::CreateShader, vec![e(GlEnum::GL_FRAGMENT_SHADER)])[0];
    let p = rig.call(FunctionId::CreateProgram, vec![])[0];
    rig.call(FunctionId::ShaderSource, vec![ArgValue::Id(sh), blob(b"src")]);
    rig.call(FunctionId::CompileShader, vec![ArgValue::Id(sh)]);
    rig.call(FunctionId::AttachShader, vec![ArgValue::Id(p), ArgValue::Id(sh)]);
    rig.call(FunctionId::LinkProgram, vec![ArgValue::Id(p)]);
    let prog = &rig.driver.programs[&real(&rig, ResourceKind::Program, p.id.0)];
    let linked = prog.linked.as_ref().unwrap();
    assert_eq!(linked.len(), 1);
    assert_eq!(linked[0].generation, 1);

    rig.call(FunctionId::UseProgram, vec![ArgValue::Id(p)]);
    let frame = rig.driver.render().unwrap();
    // Deleting an attached shader detaches it but leaves the link intact.
    rig.call(FunctionId::DeleteShader, vec![ArgValue::Id(sh)]);
    assert_eq!(rig.driver.render().unwrap(), frame);
    assert!(rig
        .try_call(FunctionId::AttachShader, vec![ArgValue::Id(p), ArgValue::Id(sh)])
        .is_err());
    rig.call(FunctionId::DeleteProgram, vec![ArgValue::Id(p)]);
    assert_eq!(rig.driver.current_program, RealId::DEFAULT);
}

#[test]
fn reset_context_keeps_context_and_counters() {
    let mut rig = Rig::new();
    rig.call(FunctionId::GenTextures, vec![i(2)]);
    rig.call(FunctionId::Enable, vec![e(GlEnum::GL_BLEND)]);
    rig.call(FunctionId::Draw, vec![e(GlEnum::GL_POINTS), i(0), i(1)]);
    rig.call(FunctionId::ResetContext, vec![]);
    assert!(rig.driver.context_alive());
    assert!(!rig.driver.capability(GlEnum::GL_BLEND));
    assert!(rig.driver.textures.is_empty());
    assert_eq!(rig.driver.frame_count, 1);
    let t = rig.call(FunctionId::GenTextures, vec![i(1)]);
    assert_eq!(t[0].id, VirtualId(3));
}

#[test]
fn replay_attaches_recorded_ids() {
    let mut rig = Rig::new();
    let rec = CallRecord {
        seq: 10,
        func: FunctionId::GenTextures,
        args: vec![i(2)],
        returned: vec![
            IdRef::new(ResourceKind::Texture, 4),
            IdRef::new(ResourceKind::Texture, 9),
        ],
        frame: 0,
    };
    let got = rig.driver.apply(&rec, &mut rig.table).unwrap();
    assert_eq!(got, rec.returned);
    assert!(rig.table.to_real(ResourceKind::Texture, VirtualId(9)).is_ok());
    assert_eq!(rig.table.next_virtual(ResourceKind::Texture), 10);
}
