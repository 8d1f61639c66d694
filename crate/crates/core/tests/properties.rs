use proptest::prelude::*;

use wamic::interp::{compare_outcomes, eval_ir, exec_wasm, ExecOptions, Outcome, Trap};
use wamic::num::Value;
use wamic::pipeline::{compile, PipelineConfig};
use wamic::text::parse_module;
use wamic::wat::{escape_bytes, unescape_bytes};

fn run_both(src: &str, args: &[Value]) -> (Outcome, Outcome) {
    let m = parse_module(src).unwrap_or_else(|e| panic!("{e:?}\n{src}"));
    let opts = ExecOptions::default();
    let oracle = eval_ir(&m, "main", args, &opts).unwrap();
    let wasm = compile(m, &PipelineConfig::default()).unwrap().wasm.unwrap();
    let compiled = exec_wasm(&wasm, "main", args, &opts).unwrap();
    (oracle, compiled)
}

fn word_at(mem: &[u8], addr: usize) -> u32 {
    u32::from_le_bytes(mem[addr..addr + 4].try_into().unwrap())
}

fn shape_and_index() -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
    prop::collection::vec(1u64..=8, 1..=3).prop_flat_map(|shape| {
        let idx: Vec<_> = shape.iter().map(|&e| 0..e).collect();
        (Just(shape), idx)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A store lands at 1024 + 4 * row-major offset, after an i64 pad global.
    #[test]
    fn store_address_is_row_major((shape, idx) in shape_and_index(), v in any::<u32>()) {
        let dims = shape.iter().map(|e| format!("x{e}")).collect::<String>();
        let mut body = String::new();
        let mut names = Vec::new();
        for (k, i) in idx.iter().enumerate() {
            body += &format!("    %i{k} = arith.constant {{value = {i}}} : index\n");
            names.push(format!("%i{k}"));
        }
        let src = format!(
            "module {{\n  memref.global {{sym = @pad, type = memref<i64x1>}}\n  memref.global {{sym = @g, type = memref<i32{dims}>}}\n  func.func @main() -> i32 {{\n    %g = memref.get_global {{name = @g}} : memref<i32{dims}>\n{body}    %v = arith.constant {{value = {v}}} : i32\n    memref.store %v, %g, {}\n    func.return %v\n  }}\n}}\n",
            names.join(", ")
        );
        let mut linear = 0u64;
        for (e, i) in shape.iter().zip(&idx) {
            linear = linear * e + i;
        }
        let addr = (1024 + 8 + 4 * linear) as usize;
        let (a, b) = run_both(&src, &[]);
        prop_assert_eq!(word_at(&a.memory, addr), v);
        prop_assert_eq!(word_at(&b.memory, addr), v);
        prop_assert_eq!(compare_outcomes(&a, &b), Ok(()));
    }

    /// Loads at arbitrary indices either trap or read back what was stored.
    #[test]
    fn out_of_range_accesses_always_trap(i in any::<u32>(), v in 1u32..) {
        let src = format!("module {{
  memref.global {{sym = @g, type = memref<i32x4>}}
  func.func @main(%i: i32) -> i32 {{
    %g = memref.get_global {{name = @g}} : memref<i32x4>
    %ix = arith.index_cast %i : index
    %v = arith.constant {{value = {v}}} : i32
    memref.store %v, %g, %ix
    %r = memref.load %g, %ix : i32
    func.return %r
  }}
}}
");
        let addr = 1024u64.wrapping_add(4 * i as u64) % (1 << 32);
        let in_bounds = addr + 4 <= 17 * 65536;
        let (a, b) = run_both(&src, &[Value::I32(i)]);
        for out in [&a, &b] {
            if in_bounds {
                prop_assert_eq!(&out.result, &Ok(vec![Value::I32(v)]));
            } else {
                prop_assert!(matches!(out.result, Err(Trap::OutOfBounds { .. })), "{:?}", out.result);
            }
        }
    }

    #[test]
    fn escape_round_trips(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let text = escape_bytes(&bytes);
        prop_assert!(text.chars().all(|c| (' '..='~').contains(&c)));
        prop_assert_eq!(unescape_bytes(&text), Some(bytes));
    }
}

/// Reference model of one-shot continuations: task `j` suspends `lens[j]`
/// times with payload `10 * j + k`, then returns.
#[derive(Debug, PartialEq)]
enum Step {
    Suspended(u32),
    Returned,
    Trap,
}

fn model(lens: &[u32], schedule: &[usize]) -> Vec<Step> {
    let mut done = vec![0u32; lens.len()];
    let mut finished = vec![false; lens.len()];
    let mut steps = Vec::new();
    for &j in schedule {
        if finished[j] {
            steps.push(Step::Trap);
            return steps;
        }
        if done[j] < lens[j] {
            steps.push(Step::Suspended(10 * j as u32 + done[j]));
            done[j] += 1;
        } else {
            finished[j] = true;
            steps.push(Step::Returned);
        }
    }
    steps
}

fn one_shot_program(lens: &[u32], schedule: &[usize]) -> String {
    let mut s = String::from("module {\n  func.func private @print_i32(i32)\n");
    for (j, &n) in lens.iter().enumerate() {
        s += &format!(
            "  func.func private @task{j}() {{
    %lb = arith.constant {{value = 0}} : i32
    %ub = arith.constant {{value = {n}}} : i32
    %st = arith.constant {{value = 1}} : i32
    %base = arith.constant {{value = {}}} : i32
    scf.for %lb, %ub, %st ({{
    ^body(%k: i32):
      %p = arith.addi %base, %k : i32
      dcont.suspend %p
      scf.yield
    }})
    func.return
  }}
",
            10 * j
        );
    }
    s += "  func.func @main() -> i32 {\n";
    for j in 0..lens.len() {
        s += &format!(
            "    %s{j} = dcont.alloc : local<cont<(i32) -> ()>>\n    %c{j} = dcont.new {{func = @task{j}}} : cont<(i32) -> ()>\n    dcont.store %c{j}, %s{j}\n"
        );
    }
    for (n, &j) in schedule.iter().enumerate() {
        s += &format!(
            "    %k{n} = dcont.load %s{j} : cont<(i32) -> ()>
    dcont.resume %k{n} ({{
    ^h{n}(%nk{n}: cont<(i32) -> ()>, %x{n}: i32):
      dcont.store %nk{n}, %s{j}
      func.call %x{n} {{callee = @print_i32}}
    }})
"
        );
    }
    s += "    %z = arith.constant {value = 0} : i32\n    func.return %z\n  }\n}\n";
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn one_shot_model_holds(
        lens in prop::collection::vec(0u32..3, 1..=3),
        picks in prop::collection::vec(0usize..3, 1..8),
    ) {
        let schedule: Vec<usize> = picks.iter().map(|p| p % lens.len()).collect();
        let expected = model(&lens, &schedule);
        let want_out: Vec<Value> = expected
            .iter()
            .filter_map(|s| match s {
                Step::Suspended(p) => Some(Value::I32(*p)),
                _ => None,
            })
            .collect();
        let traps = expected.last() == Some(&Step::Trap);
        let (a, b) = run_both(&one_shot_program(&lens, &schedule), &[]);
        for out in [&a, &b] {
            prop_assert_eq!(&out.output, &want_out);
            if traps {
                prop_assert_eq!(&out.result, &Err(Trap::ConsumedContinuation));
            } else {
                prop_assert_eq!(&out.result, &Ok(vec![Value::I32(0)]));
            }
        }
        prop_assert_eq!(compare_outcomes(&a, &b), Ok(()));
    }
}
