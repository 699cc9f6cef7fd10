use proptest::prelude::*;
use rpr_core::codec::{decode, encode_binary, encode_text, parse_binary, parse_text};
use rpr_core::error::CodecError;
use rpr_core::workload::{fuzz_log, generate, record_all, WorkloadProfile};
use rpr_core::{ArgValue, CallRecord, FunctionId, TraceLog};

fn check_round_trips(log: &TraceLog) {
    let text = encode_text(log);
    let bin = encode_binary(log);
    let from_text = parse_text(&text).expect("text parses");
    let from_bin = parse_binary(&bin).expect("binary parses");
    assert_eq!(&from_text, log);
    assert_eq!(&from_bin, log);
    assert_eq!(encode_binary(&from_text), bin);
    assert_eq!(encode_text(&from_bin), text);
    assert_eq!(encode_binary(log), bin);
}

fn clear_color_log(values: [f64; 4]) -> TraceLog {
    let mut log = TraceLog::new();
    log.records.push(CallRecord {
        seq: 0,
        func: FunctionId::ClearColor,
        args: values.iter().map(|v| ArgValue::Float(*v)).collect(),
        returned: vec![],
        frame: 0,
    });
    log
}

#[test]
fn clear_color_record_renders_per_grammar() {
    let mut log = clear_color_log([0.5, 0.5, 0.5, 1.0]);
    log.records[0].seq = 7;
    log.records[0].frame = 2;
    assert_eq!(encode_text(&log), "RPRT 1\n7 ClearColor(0.5,0.5,0.5,1.0) @f2\n");
}

#[test]
fn workload_logs_round_trip_and_binary_is_smaller() {
    for seed in 0..3 {
        let p = WorkloadProfile {
            seed,
            frames: 4,
            ..Default::default()
        };
        let log = record_all(&generate(&p)).log;
        assert!(log.len() >= 100);
        check_round_trips(&log);
        assert!(encode_binary(&log).len() < encode_text(&log).len());
    }
}

#[test]
fn truncated_documents_are_rejected() {
    let log = fuzz_log(11, 80).log;
    let text = encode_text(&log);
    let bin = encode_binary(&log);
    for cut in [1, text.len() / 2, text.len() - 2] {
        assert!(decode(&text.as_bytes()[..cut]).is_err());
    }
    for cut in [3, bin.len() / 2, bin.len() - 1] {
        assert!(decode(&bin[..cut]).is_err());
    }
    assert!(matches!(decode(b"XXXX"), Err(CodecError::BadMagic { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fuzzed_logs_round_trip(seed in any::<u64>(), max in 0usize..300) {
        check_round_trips(&fuzz_log(seed, max).log);
    }

    #[test]
    fn any_float_bits_round_trip(bits in prop::array::uniform4(any::<u64>())) {
        check_round_trips(&clear_color_log(bits.map(f64::from_bits)));
    }
}
