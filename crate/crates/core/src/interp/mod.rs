//! Execution engines: an oracle over the IR and a reference interpreter for
//! the emitted Wasm, plus the Wasm validator.

mod ir_eval;
mod validate;
mod wasm_exec;

use std::fmt;

use serde::Serialize;

use crate::num::{NumType, Value};

pub use ir_eval::eval_ir;
pub use validate::validate_wasm;
pub use wasm_exec::exec_wasm;

/// Why an execution stopped abnormally. A trap is an outcome, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trap {
    DivByZero,
    IntOverflow,
    InvalidConversion,
    OutOfBounds { addr: u64, len: u32 },
    ConsumedContinuation,
    UnhandledSuspend(String),
    Unreachable,
    OutOfFuel,
    CallStackExhausted,
    Internal(String),
}

impl Trap {
    pub fn kind(&self) -> &'static str {
        match self {
            Trap::DivByZero => "DivByZero",
            Trap::IntOverflow => "IntOverflow",
            Trap::InvalidConversion => "InvalidConversion",
            Trap::OutOfBounds { .. } => "OutOfBounds",
            Trap::ConsumedContinuation => "ConsumedContinuation",
            Trap::UnhandledSuspend(_) => "UnhandledSuspend",
            Trap::Unreachable => "Unreachable",
            Trap::OutOfFuel => "OutOfFuel",
            Trap::CallStackExhausted => "CallStackExhausted",
            Trap::Internal(_) => "Internal",
        }
    }
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trap::OutOfBounds { addr, len } => write!(f, "OutOfBounds: {len}-byte access at {addr}"),
            Trap::UnhandledSuspend(tag) => write!(f, "UnhandledSuspend: no handler for {tag}"),
            Trap::Internal(m) => write!(f, "Internal: {m}"),
            t => f.write_str(t.kind()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExecOptions {
    /// Instruction budget; exceeding it traps with `OutOfFuel`.
    pub fuel: u64,
    pub max_depth: usize,
    pub heap_reserve: u64,
    /// Record call entry and return events in addition to suspends and resumes.
    pub trace_calls: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            fuel: 50_000_000,
            max_depth: 10_000,
            heap_reserve: crate::lower::LowerOptions::default().heap_reserve,
            trace_calls: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Enter(String),
    Return(String),
    Suspend { tag: String, payload: Vec<Value> },
    Resume(u32),
    Print(Value),
    Trap(String),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Enter(n) => write!(f, "ENTER\t{n}"),
            Event::Return(n) => write!(f, "RETURN\t{n}"),
            Event::Suspend { tag, payload } => write!(f, "SUSPEND\t{tag}\t{}", join(payload)),
            Event::Resume(id) => write!(f, "RESUME\t{id}"),
            Event::Print(v) => write!(f, "PRINT\t{v}"),
            Event::Trap(t) => write!(f, "TRAP\t{t}"),
        }
    }
}

fn join(vs: &[Value]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Everything observable about one run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Result<Vec<Value>, Trap>,
    pub memory: Vec<u8>,
    pub output: Vec<Value>,
    pub trace: Vec<Event>,
    pub steps: u64,
}

impl Outcome {
    /// Payloads of every suspension, in order.
    pub fn suspends(&self) -> Vec<&[Value]> {
        self.trace
            .iter()
            .filter_map(|e| match e {
                Event::Suspend { payload, .. } => Some(payload.as_slice()),
                _ => None,
            })
            .collect()
    }

    pub fn render_trace(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn summary(&self) -> RunSummary {
        let (result, trap) = match &self.result {
            Ok(vs) => (vs.iter().map(|v| v.to_string()).collect(), None),
            Err(t) => (Vec::new(), Some(t.to_string())),
        };
        RunSummary {
            result,
            trap,
            output: self.output.iter().map(|v| v.to_string()).collect(),
            suspends: self.suspends().iter().map(|p| join(p)).collect(),
            steps: self.steps,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub result: Vec<String>,
    pub trap: Option<String>,
    pub output: Vec<String>,
    pub suspends: Vec<String>,
    pub steps: u64,
}

/// First observable difference between two runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch(pub String);

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Compares results (NaNs of one width are interchangeable), trap kinds,
/// host output, suspension payloads and final linear memory.
pub fn compare_outcomes(a: &Outcome, b: &Outcome) -> Result<(), Mismatch> {
    match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => {
            if x.len() != y.len() || x.iter().zip(y).any(|(p, q)| !p.same_class(q)) {
                return Err(Mismatch(format!("results differ: [{}] vs [{}]", join(x), join(y))));
            }
        }
        (Err(x), Err(y)) if x.kind() == y.kind() => {}
        (x, y) => return Err(Mismatch(format!("termination differs: {} vs {}", show(x), show(y)))),
    }
    if a.output.len() != b.output.len() || a.output.iter().zip(&b.output).any(|(p, q)| !p.same_class(q)) {
        return Err(Mismatch(format!("output differs: [{}] vs [{}]", join(&a.output), join(&b.output))));
    }
    let (sa, sb) = (a.suspends(), b.suspends());
    if sa.len() != sb.len() {
        return Err(Mismatch(format!("{} suspensions vs {}", sa.len(), sb.len())));
    }
    for (i, (p, q)) in sa.iter().zip(&sb).enumerate() {
        if p.len() != q.len() || p.iter().zip(q.iter()).any(|(x, y)| !x.same_class(y)) {
            return Err(Mismatch(format!("suspension {i} payload differs: [{}] vs [{}]", join(p), join(q))));
        }
    }
    if a.memory.len() != b.memory.len() {
        return Err(Mismatch(format!("memory size differs: {} vs {} bytes", a.memory.len(), b.memory.len())));
    }
    if let Some(i) = a.memory.iter().zip(&b.memory).position(|(x, y)| x != y) {
        return Err(Mismatch(format!("memory differs at byte {i}: {} vs {}", a.memory[i], b.memory[i])));
    }
    Ok(())
}

fn show(r: &Result<Vec<Value>, Trap>) -> String {
    match r {
        Ok(v) => format!("returned [{}]", join(v)),
        Err(t) => format!("trapped with {t}"),
    }
}

/// Byte-addressed linear memory.
#[derive(Clone, Debug)]
pub(crate) struct Memory {
    pub bytes: Vec<u8>,
}

impl Memory {
    pub fn new(pages: u64) -> Self {
        Memory { bytes: vec![0; (pages * 65536) as usize] }
    }

    fn range(&self, addr: u64, len: u32) -> Result<std::ops::Range<usize>, Trap> {
        let end = addr.checked_add(len as u64).filter(|&e| e <= self.bytes.len() as u64);
        match end {
            Some(e) => Ok(addr as usize..e as usize),
            None => Err(Trap::OutOfBounds { addr, len }),
        }
    }

    pub fn write_bytes(&mut self, addr: u64, data: &[u8]) -> Result<(), Trap> {
        let r = self.range(addr, data.len() as u32)?;
        self.bytes[r].copy_from_slice(data);
        Ok(())
    }

    pub fn load(&self, addr: u64, ty: NumType) -> Result<Value, Trap> {
        let r = self.range(addr, ty.width())?;
        let b = &self.bytes[r];
        Ok(match ty {
            NumType::I32 => Value::I32(u32::from_le_bytes(b.try_into().unwrap())),
            NumType::F32 => Value::F32(u32::from_le_bytes(b.try_into().unwrap())),
            NumType::I64 => Value::I64(u64::from_le_bytes(b.try_into().unwrap())),
            NumType::F64 => Value::F64(u64::from_le_bytes(b.try_into().unwrap())),
        })
    }

    pub fn store(&mut self, addr: u64, v: &Value) -> Result<(), Trap> {
        let bytes = match v {
            Value::I32(x) | Value::F32(x) => x.to_le_bytes().to_vec(),
            Value::I64(x) | Value::F64(x) => x.to_le_bytes().to_vec(),
            other => return Err(Trap::Internal(format!("cannot store {other}"))),
        };
        self.write_bytes(addr, &bytes)
    }
}

/// Host side of the `env` imports: printing and a bump allocator that mirrors
/// the built-in one.
#[derive(Clone, Debug)]
pub(crate) struct Host {
    pub output: Vec<Value>,
    pub trace: Vec<Event>,
    heap_ptr: u32,
}

impl Host {
    pub fn new(heap_base: u64) -> Self {
        Host { output: Vec::new(), trace: Vec::new(), heap_ptr: heap_base as u32 }
    }

    /// `None` if `name` is not a host function.
    pub fn call(&mut self, name: &str, args: &[Value]) -> Option<Result<Vec<Value>, Trap>> {
        Some(match (name, args) {
            ("print_i32", [v @ Value::I32(_)]) | ("print_i64", [v @ Value::I64(_)]) | ("print_f64", [v @ Value::F64(_)]) | ("print_f32", [v @ Value::F32(_)]) => {
                self.output.push(v.clone());
                self.trace.push(Event::Print(v.clone()));
                Ok(vec![])
            }
            ("malloc", [Value::I32(n)]) => {
                let old = self.heap_ptr;
                self.heap_ptr = old.wrapping_add(n.wrapping_add(7) & !7);
                Ok(vec![Value::I32(old)])
            }
            ("free", [Value::I32(_)]) => Ok(vec![]),
            _ => return None,
        })
    }
}

fn align16(n: u64) -> u64 {
    (n + 15) & !15
}
