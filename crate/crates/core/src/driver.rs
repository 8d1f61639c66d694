//! Batch driver shared by the CLI, the tests and the benchmark: compile, run
//! and differentially execute source files, one independent job per file.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::{compare_outcomes, eval_ir, exec_wasm, validate_wasm, ExecOptions, Mismatch, Outcome, RunSummary};
use crate::ir::IrModule;
use crate::num::{NumType, Value};
use crate::pipeline::{compile, Compiled, EmitLevel, PipelineConfig, FUSE_PASS};
use crate::wasm::WasmModule;
use crate::wat::{stats, InstrStats};

/// Process exit status contract of the `wamic` binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Status {
    Ok = 0,
    Diagnostics = 1,
    Trap = 2,
    Mismatch = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Applies `f` to every item, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub fn map_jobs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Same as [`map_jobs`] but never parallel; the baseline for benchmarks.
pub fn map_jobs_sequential<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

pub fn exec_options(cfg: &PipelineConfig) -> ExecOptions {
    ExecOptions { heap_reserve: cfg.heap_reserve, trace_calls: cfg.trace, ..ExecOptions::default() }
}

pub fn parse(src: &str, file: &str) -> Result<IrModule> {
    crate::text::parse_module_named(src, file).map_err(Error::Diagnostics)
}

/// Compiles all the way to a validated Wasm module.
pub fn compile_to_wasm(m: IrModule, cfg: &PipelineConfig) -> Result<(Compiled, WasmModule)> {
    let cfg = PipelineConfig { emit: EmitLevel::Wat, passes: cfg.passes.clone(), ..cfg.clone() };
    let c = compile(m, &cfg)?;
    let w = c.wasm.clone().ok_or_else(|| Error::Pipeline("the pipeline does not reach the wasm level".into()))?;
    let diags = validate_wasm(&w);
    if !diags.is_empty() {
        return Err(Error::Diagnostics(diags));
    }
    Ok((c, w))
}

/// Parses command-line style arguments against the entry's parameter types.
pub fn parse_args(types: &[Option<NumType>], raw: &[String]) -> Result<Vec<Value>> {
    if types.len() != raw.len() {
        return Err(Error::ArgTypeMismatch(format!("expected {} argument(s), got {}", types.len(), raw.len())));
    }
    types
        .iter()
        .zip(raw)
        .map(|(t, s)| {
            let bad = || Error::ArgTypeMismatch(format!("cannot read `{s}` as {}", t.map_or("a reference".into(), |t| t.to_string())));
            Ok(match t.ok_or_else(bad)? {
                NumType::I32 => Value::I32(s.parse::<i64>().map_err(|_| bad())? as u32),
                NumType::I64 => Value::I64(s.parse::<i128>().map_err(|_| bad())? as u64),
                NumType::F32 => Value::F32(s.parse::<f32>().map_err(|_| bad())?.to_bits()),
                NumType::F64 => Value::F64(s.parse::<f64>().map_err(|_| bad())?.to_bits()),
            })
        })
        .collect()
}

fn entry_types(m: &IrModule, entry: &str) -> Result<Vec<Option<NumType>>> {
    let f = m.function(entry).ok_or_else(|| Error::UnknownEntry(entry.into()))?;
    Ok(f.params.iter().map(|t| NumType::from_type(t.local_inner().unwrap_or(t))).collect())
}

/// Outcome of `run`: the fields shared by the human and JSON renderings.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub file: String,
    #[serde(flatten)]
    pub run: RunSummary,
    pub trace: Option<String>,
    pub wall_ms: f64,
    pub stats: InstrStats,
}

impl RunReport {
    pub fn status(&self) -> Status {
        if self.run.trap.is_some() {
            Status::Trap
        } else {
            Status::Ok
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("file: {}\n", self.file);
        s += &format!("result: {}\n", self.run.result.join(" "));
        s += &format!("trap: {}\n", self.run.trap.as_deref().unwrap_or("none"));
        s += &format!("output: {}\n", self.run.output.join(" "));
        s += &format!("suspends: {}\n", self.run.suspends.join(" "));
        s += &format!("steps: {}\n", self.run.steps);
        s += &format!("trace: {}\n", self.trace.as_deref().unwrap_or("-"));
        s += &format!("wall_ms: {:.3}\n", self.wall_ms);
        s += &format!(
            "stats: instructions={} locals={} labels={} text_bytes={}\n",
            self.stats.instructions, self.stats.locals, self.stats.labels, self.stats.text_bytes
        );
        s
    }
}

/// Compiles `src` and executes the result; the outcome carries the full trace.
pub fn run_source(src: &str, file: &str, cfg: &PipelineConfig, args: &[String]) -> Result<(RunReport, Outcome)> {
    let start = Instant::now();
    let m = parse(src, file)?;
    let args = parse_args(&entry_types(&m, &cfg.invoke)?, args)?;
    let (_, w) = compile_to_wasm(m, cfg)?;
    let out = exec_wasm(&w, &cfg.invoke, &args, &exec_options(cfg))?;
    let report = RunReport {
        file: file.to_string(),
        run: out.summary(),
        trace: None,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        stats: stats(&w),
    };
    Ok((report, out))
}

#[derive(Clone, Debug)]
pub struct DiffReport {
    pub oracle: Outcome,
    pub wasm: Outcome,
    pub mismatch: Option<Mismatch>,
}

impl DiffReport {
    pub fn status(&self) -> Status {
        if self.mismatch.is_some() {
            Status::Mismatch
        } else {
            Status::Ok
        }
    }
}

/// Runs the IR oracle on the input and the Wasm interpreter on its
/// compilation, then compares every observable.
pub fn diff_exec_module(m: &IrModule, cfg: &PipelineConfig, args: &[Value]) -> Result<DiffReport> {
    let opts = exec_options(cfg);
    let oracle = eval_ir(m, &cfg.invoke, args, &opts)?;
    let (_, w) = compile_to_wasm(m.clone(), cfg)?;
    let wasm = exec_wasm(&w, &cfg.invoke, args, &opts)?;
    let mismatch = compare_outcomes(&oracle, &wasm).err();
    Ok(DiffReport { oracle, wasm, mismatch })
}

pub fn diff_exec_source(src: &str, file: &str, cfg: &PipelineConfig, args: &[String]) -> Result<DiffReport> {
    let m = parse(src, file)?;
    let args = parse_args(&entry_types(&m, &cfg.invoke)?, args)?;
    diff_exec_module(&m, cfg, &args)
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub file: String,
    pub fused: InstrStats,
    pub unfused: Option<InstrStats>,
}

impl StatsReport {
    pub fn render(&self) -> String {
        match &self.unfused {
            None => self.fused.render(),
            Some(u) => format!("fused:\n{}unfused:\n{}", self.fused.render(), u.render()),
        }
    }
}

/// Instruction statistics, optionally next to the same pipeline without
/// stack-local fusion.
pub fn stats_source(src: &str, file: &str, cfg: &PipelineConfig, compare_unfused: bool) -> Result<StatsReport> {
    let m = parse(src, file)?;
    let (_, w) = compile_to_wasm(m.clone(), cfg)?;
    let unfused = if compare_unfused {
        let passes: Vec<String> = PipelineConfig { emit: EmitLevel::Wat, ..cfg.clone() }
            .pass_list()
            .into_iter()
            .filter(|p| p != FUSE_PASS)
            .collect();
        let (_, u) = compile_to_wasm(m, &PipelineConfig { passes: Some(passes), ..cfg.clone() })?;
        Some(stats(&u))
    } else {
        None
    };
    Ok(StatsReport { file: file.to_string(), fused: stats(&w), unfused })
}
