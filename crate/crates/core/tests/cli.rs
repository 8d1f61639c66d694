use std::path::PathBuf;
use std::process::{Command, Output};

fn wamic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wamic"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("WAMIC_HEAP_RESERVE")
        .output()
        .expect("spawn wamic")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wamic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn compile_matches_golden() {
    let out = wamic(&["compile", "corpus/sum_loop.mir", "--emit=wat"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/sum_loop.wat")).unwrap();
    assert_eq!(stdout(&out), golden);
}

#[test]
fn compile_to_ssawasm_without_optimizations() {
    let out = wamic(&["compile", "corpus/gcd.mir", "--emit=ssawasm", "--no-opt"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("module attributes {level = \"ssawasm\"}"), "{text}");
    assert!(!text.contains("scf."));
}

#[test]
fn malformed_input_reports_position() {
    let p = scratch("bad.mir", "module {\n  func.func @main( {\n}\n");
    let out = wamic(&["compile", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.mir:2:"), "{err}");
    assert!(err.contains("error["), "{err}");
}

#[test]
fn bad_pipeline_order_is_rejected() {
    let out = wamic(&["compile", "corpus/gcd.mir", "--pipeline=dcont-to-ssawasm,scf-to-ssawasm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_prints_result() {
    let out = wamic(&["run", "corpus/gcd.mir"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().any(|l| l == "result: 6"), "{}", stdout(&out));
}

#[test]
fn run_with_arguments() {
    let out = wamic(&["run", "corpus/gcd.mir", "--invoke=gcd", "--arg", "1071", "--arg", "462"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().any(|l| l == "result: 21"), "{}", stdout(&out));
}

#[test]
fn trap_exits_with_two() {
    let out = wamic(&["run", "corpus/div_zero.mir"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("DivByZero"));
}

#[test]
fn generator_trace_has_ten_suspends() {
    let out = wamic(&["run", "corpus/generator.mir", "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("SUSPEND\t")).count(), 10);
    assert_eq!(text.lines().filter(|l| l.starts_with("RESUME\t")).count(), 10);
}

#[test]
fn trace_can_go_to_a_file() {
    let dir = std::env::temp_dir().join(format!("wamic-trace-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gen.trace");
    let out = wamic(&["run", "corpus/generator.mir", "--trace", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(&path).unwrap();
    assert_eq!(trace.lines().filter(|l| l.starts_with("SUSPEND\t")).count(), 10);
}

#[test]
fn diff_exec_whole_corpus() {
    let mut files: Vec<String> = std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus"))
        .unwrap()
        .map(|e| format!("corpus/{}", e.unwrap().file_name().to_string_lossy()))
        .filter(|f| f.ends_with(".mir"))
        .collect();
    files.sort();
    let mut args = vec!["diff-exec"];
    args.extend(files.iter().map(String::as_str));
    let out = wamic(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(": agree")).count(), files.len());
}

#[test]
fn stats_json_matches_text() {
    let text = stdout(&wamic(&["stats", "corpus/matmul2.mir", "--compare-unfused"]));
    let json: serde_json::Value =
        serde_json::from_slice(&wamic(&["stats", "corpus/matmul2.mir", "--compare-unfused", "--json"]).stdout).unwrap();
    let fused = json["fused"]["instructions"].as_u64().unwrap();
    let unfused = json["unfused"]["instructions"].as_u64().unwrap();
    assert!(fused < unfused);
    let totals: Vec<&str> = text.lines().filter(|l| l.starts_with("total:")).collect();
    assert!(totals[0].contains(&format!("instructions={fused} ")), "{text}");
    assert!(totals[1].contains(&format!("instructions={unfused} ")), "{text}");
}

#[test]
fn run_json_and_text_agree() {
    let text = stdout(&wamic(&["run", "corpus/generator.mir"]));
    let json: serde_json::Value = serde_json::from_slice(&wamic(&["run", "corpus/generator.mir", "--json"]).stdout).unwrap();
    let result = json["result"][0].as_str().unwrap();
    assert!(text.contains(&format!("result: {result}\n")));
    let steps = json["steps"].as_u64().unwrap();
    assert!(text.contains(&format!("steps: {steps}\n")));
}

#[test]
fn empty_module_has_zero_stats() {
    let p = scratch("empty.mir", "module {}\n");
    let out = wamic(&["stats", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("total: instructions=0 locals=0 labels=0 text_bytes=0"));
}

#[test]
fn heap_reserve_comes_from_environment() {
    let p = scratch("reserve.mir", "module {}\n");
    let default = wamic(&["compile", p.to_str().unwrap()]);
    assert_eq!(stdout(&default), "(module\n  (memory (export \"memory\") 17)\n)\n");
    let small = Command::new(env!("CARGO_BIN_EXE_wamic"))
        .args(["compile", p.to_str().unwrap()])
        .env("WAMIC_HEAP_RESERVE", "0")
        .output()
        .unwrap();
    assert!(stdout(&small).contains("(memory (export \"memory\") 1)"));
}

#[test]
fn output_is_deterministic() {
    let a = wamic(&["compile", "corpus/scheduler.mir"]);
    let b = wamic(&["compile", "corpus/scheduler.mir"]);
    assert_eq!(a.stdout, b.stdout);
}
