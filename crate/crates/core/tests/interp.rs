use wamic::driver::{diff_exec_module, Status};
use wamic::interp::{compare_outcomes, eval_ir, exec_wasm, validate_wasm, Event, ExecOptions, Outcome, Trap};
use wamic::ir::{walk_region_mut, IrModule, OpKind};
use wamic::num::Value;
use wamic::pipeline::{compile, run_pass, run_passes, PipelineConfig, DEFAULT_PIPELINE, LOWERINGS};
use wamic::text::parse_module;
use wamic::wasm::{module_from_ir, ContType, FuncType, Instr, Tag, ValType, WasmFunc, WasmModule};

fn corpus(name: &str) -> IrModule {
    let path = format!("{}/corpus/{name}.mir", env!("CARGO_MANIFEST_DIR"));
    parse_module(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn both(name: &str) -> (Outcome, Outcome) {
    let m = corpus(name);
    let opts = ExecOptions::default();
    let oracle = eval_ir(&m, "main", &[], &opts).unwrap();
    let wasm = compile(m, &PipelineConfig::default()).unwrap().wasm.unwrap();
    assert!(validate_wasm(&wasm).is_empty());
    (oracle, exec_wasm(&wasm, "main", &[], &opts).unwrap())
}

fn read_i32s(mem: &[u8], addr: usize, n: usize) -> Vec<i32> {
    mem[addr..addr + 4 * n].chunks(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect()
}

#[test]
fn gcd_via_while_loop() {
    let (a, b) = both("gcd");
    assert_eq!(a.result, Ok(vec![Value::I32(6)]));
    assert_eq!(b.result, Ok(vec![Value::I32(6)]));
}

#[test]
fn gcd_with_explicit_arguments() {
    let m = corpus("gcd");
    let out = eval_ir(&m, "gcd", &[Value::I32(1071), Value::I32(462)], &ExecOptions::default()).unwrap();
    assert_eq!(out.result, Ok(vec![Value::I32(21)]));
}

#[test]
fn matmul_memory_matches_direct_product() {
    let a = [[1, 2], [3, 4]];
    let b = [[5, 6], [7, 8]];
    let want: Vec<i32> =
        (0..4).map(|ij| (0..2).map(|k| a[ij / 2][k] * b[k][ij % 2]).sum()).collect();
    // a and b occupy 16 bytes each from 1024, so c starts at 1056.
    let (oracle, wasm) = both("matmul2");
    assert_eq!(read_i32s(&oracle.memory, 1056, 4), want);
    assert_eq!(read_i32s(&wasm.memory, 1056, 4), want);
    assert_eq!(compare_outcomes(&oracle, &wasm), Ok(()));
}

#[test]
fn generator_payloads_follow_squares() {
    let (oracle, wasm) = both("generator");
    let closed_form = 9 * 10 * 19 / 6;
    for out in [&oracle, &wasm] {
        let payloads: Vec<u32> = out.suspends().iter().map(|p| p[0].as_i32()).collect();
        assert_eq!(payloads, (0..10u32).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(payloads.iter().sum::<u32>(), closed_form);
        assert_eq!(out.result, Ok(vec![Value::I32(closed_form)]));
        assert_eq!(out.trace.iter().filter(|e| matches!(e, Event::Resume(_))).count(), 10);
    }
}

/// Hand-assembled stack switching program: the task suspends with 1 and,
/// once resumed, returns 2. `main` reports both.
fn handshake_module() -> WasmModule {
    let ct = ValType::ContRef("ct".into());
    let task = WasmFunc {
        name: "task".into(),
        results: vec![ValType::I32],
        body: vec![Instr::Const(Value::I32(1)), Instr::Suspend("t".into()), Instr::Const(Value::I32(2))],
        ..Default::default()
    };
    let main = WasmFunc {
        name: "main".into(),
        exported: true,
        results: vec![ValType::I32, ValType::I32],
        locals: vec![ct.clone(), ValType::I32],
        body: vec![
            Instr::Block {
                label: "h".into(),
                results: vec![ct, ValType::I32],
                body: vec![
                    Instr::RefFunc("task".into()),
                    Instr::ContNew("ct".into()),
                    Instr::Resume { cont_type: "ct".into(), on: vec![("t".into(), "h".into())] },
                    Instr::Unreachable,
                ],
            },
            Instr::LocalSet(1),
            Instr::LocalSet(0),
            Instr::LocalGet(1),
            Instr::LocalGet(0),
            Instr::Resume { cont_type: "ct".into(), on: vec![] },
            Instr::Return,
        ],
        ..Default::default()
    };
    WasmModule {
        func_types: vec![FuncType { name: "ft".into(), params: vec![], results: vec![ValType::I32] }],
        cont_types: vec![ContType { name: "ct".into(), func_type: "ft".into() }],
        tags: vec![Tag { name: "t".into(), params: vec![ValType::I32], results: vec![] }],
        funcs: vec![task, main],
        ..Default::default()
    }
}

#[test]
fn handler_receives_payload_then_continuation_returns() {
    let m = handshake_module();
    assert_eq!(validate_wasm(&m), vec![]);
    let out = exec_wasm(&m, "main", &[], &ExecOptions::default()).unwrap();
    assert_eq!(out.result, Ok(vec![Value::I32(1), Value::I32(2)]));
    assert_eq!(out.suspends(), vec![&[Value::I32(1)][..]]);
}

#[test]
fn second_resume_of_same_continuation_traps() {
    let mut m = handshake_module();
    let ct = ValType::ContRef("ct".into());
    // Keep the original reference and resume it again after the handler runs.
    m.funcs[1].body = vec![
        Instr::RefFunc("task".into()),
        Instr::ContNew("ct".into()),
        Instr::LocalSet(0),
        Instr::Block {
            label: "h".into(),
            results: vec![ct, ValType::I32],
            body: vec![
                Instr::LocalGet(0),
                Instr::Resume { cont_type: "ct".into(), on: vec![("t".into(), "h".into())] },
                Instr::Unreachable,
            ],
        },
        Instr::Drop,
        Instr::Drop,
        Instr::LocalGet(0),
        Instr::Resume { cont_type: "ct".into(), on: vec![] },
        Instr::Const(Value::I32(0)),
        Instr::Return,
    ];
    assert_eq!(validate_wasm(&m), vec![]);
    let out = exec_wasm(&m, "main", &[], &ExecOptions::default()).unwrap();
    assert_eq!(out.result, Err(Trap::ConsumedContinuation));
}

#[test]
fn one_shot_and_unhandled_agree_across_engines() {
    let (a, b) = both("oneshot");
    assert_eq!(a.result, Err(Trap::ConsumedContinuation));
    assert_eq!(b.result, Err(Trap::ConsumedContinuation));
    assert_eq!(a.output, vec![Value::I32(7)]);
    assert_eq!(compare_outcomes(&a, &b), Ok(()));

    let (a, b) = both("unhandled");
    assert!(matches!(a.result, Err(Trap::UnhandledSuspend(_))));
    assert!(matches!(b.result, Err(Trap::UnhandledSuspend(_))));
}

#[test]
fn division_by_zero_traps_in_both() {
    let (a, b) = both("div_zero");
    assert_eq!(a.result, Err(Trap::DivByZero));
    assert_eq!(b.result, Err(Trap::DivByZero));
}

#[test]
fn store_past_memory_end_traps() {
    let src = r#"
module {
  memref.global {sym = @g, type = memref<i32x4>}
  func.func @main() -> i32 {
    %g = memref.get_global {name = @g} : memref<i32x4>
    %far = arith.constant {value = 300000} : index
    %v = arith.constant {value = 1} : i32
    memref.store %v, %g, %far
    func.return %v
  }
}"#;
    let m = parse_module(src).unwrap();
    let report = diff_exec_module(&m, &PipelineConfig::default(), &[]).unwrap();
    assert!(matches!(report.oracle.result, Err(Trap::OutOfBounds { .. })));
    assert!(matches!(report.wasm.result, Err(Trap::OutOfBounds { .. })));
    assert_eq!(report.status(), Status::Ok);
}

#[test]
fn corrupted_loop_bound_is_a_mismatch() {
    let m = corpus("sum_loop");
    let cfg = PipelineConfig::default();
    let opts = cfg.lower_options();
    let names = |ps: &[&str]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>();
    let mut ir = run_passes(m.clone(), &names(LOWERINGS), &opts).unwrap();
    let mut flipped = 0;
    for f in &mut ir.functions {
        if let Some(body) = &mut f.body {
            walk_region_mut(body, &mut |op| {
                if op.kind == OpKind::SsaLtS {
                    op.kind = OpKind::SsaLeS;
                    flipped += 1;
                }
            });
        }
    }
    assert!(flipped > 0);
    for p in &DEFAULT_PIPELINE[LOWERINGS.len()..] {
        ir = run_pass(p, ir, &opts).unwrap();
    }
    let wasm = module_from_ir(&ir).unwrap();
    let run = ExecOptions::default();
    let oracle = eval_ir(&m, "main", &[], &run).unwrap();
    let bad = exec_wasm(&wasm, "main", &[], &run).unwrap();
    assert_eq!(bad.result, Ok(vec![Value::I32(55)]));
    let mismatch = compare_outcomes(&oracle, &bad).unwrap_err();
    assert!(mismatch.0.contains("results differ"), "{mismatch}");
}

#[test]
fn fuel_exhaustion_is_reported() {
    let m = corpus("matmul4");
    let opts = ExecOptions { fuel: 100, ..Default::default() };
    let out = eval_ir(&m, "main", &[], &opts).unwrap();
    assert_eq!(out.result, Err(Trap::OutOfFuel));
}

#[test]
fn unknown_entry_and_bad_arguments_are_errors() {
    let m = corpus("gcd");
    let opts = ExecOptions::default();
    assert!(eval_ir(&m, "nope", &[], &opts).is_err());
    assert!(eval_ir(&m, "gcd", &[Value::I64(1), Value::I32(2)], &opts).is_err());
}
