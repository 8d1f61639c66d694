//! Pass registry and the compile driver.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ir::{verify_module, IrModule};
use crate::lower::{self, LowerOptions};
use crate::wasm::{self, WasmModule};
use crate::{opt, wat};

/// Every pass in default order.
pub const DEFAULT_PIPELINE: &[&str] = &[
    "arith-to-ssawasm",
    "func-to-ssawasm",
    "memref-to-ssawasm",
    "scf-to-ssawasm",
    "dcont-to-ssawasm",
    "cse",
    "fold-constants",
    "ssawasm-global-to-wasm",
    "introduce-locals",
    "fuse-stack-locals",
    "ssawasm-to-wasm",
];

pub const LOWERINGS: &[&str] = &["arith-to-ssawasm", "func-to-ssawasm", "memref-to-ssawasm", "scf-to-ssawasm", "dcont-to-ssawasm"];
pub const OPTIMIZATIONS: &[&str] = &["cse", "fold-constants"];
pub const FUSE_PASS: &str = "fuse-stack-locals";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EmitLevel {
    SsaWasm,
    Wasm,
    #[default]
    Wat,
}

impl FromStr for EmitLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ssawasm" => Ok(EmitLevel::SsaWasm),
            "wasm" => Ok(EmitLevel::Wasm),
            "wat" => Ok(EmitLevel::Wat),
            other => Err(format!("unknown emit level `{other}` (expected ssawasm, wasm or wat)")),
        }
    }
}

impl fmt::Display for EmitLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmitLevel::SsaWasm => "ssawasm",
            EmitLevel::Wasm => "wasm",
            EmitLevel::Wat => "wat",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Explicit pass list; `None` selects the default pipeline for `emit`.
    pub passes: Option<Vec<String>>,
    pub emit: EmitLevel,
    pub no_opt: bool,
    pub builtin_alloc: bool,
    pub alloca_as_alloc: bool,
    pub trace: bool,
    pub invoke: String,
    pub heap_reserve: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            passes: None,
            emit: EmitLevel::Wat,
            no_opt: false,
            builtin_alloc: true,
            alloca_as_alloc: true,
            trace: false,
            invoke: "main".into(),
            heap_reserve: lower::DEFAULT_HEAP_RESERVE,
        }
    }
}

impl PipelineConfig {
    pub fn lower_options(&self) -> LowerOptions {
        LowerOptions { builtin_alloc: self.builtin_alloc, alloca_as_alloc: self.alloca_as_alloc, heap_reserve: self.heap_reserve }
    }

    /// The passes to run, after applying `emit` and `no_opt` to the default.
    pub fn pass_list(&self) -> Vec<String> {
        if let Some(p) = &self.passes {
            return p.clone();
        }
        let stop = match self.emit {
            EmitLevel::SsaWasm => 7,
            _ => DEFAULT_PIPELINE.len(),
        };
        DEFAULT_PIPELINE[..stop]
            .iter()
            .filter(|p| !(self.no_opt && OPTIMIZATIONS.contains(p)))
            .map(|p| p.to_string())
            .collect()
    }
}

/// Rejects unknown passes and orders that break pass dependencies.
pub fn validate_order(passes: &[String]) -> Result<()> {
    let pos = |name: &str| passes.iter().position(|p| p == name);
    for (i, p) in passes.iter().enumerate() {
        if !DEFAULT_PIPELINE.contains(&p.as_str()) {
            return Err(Error::Pipeline(format!("unknown pass `{p}`")));
        }
        if passes[..i].contains(p) {
            return Err(Error::Pipeline(format!("pass `{p}` listed twice")));
        }
    }
    let before = |a: &str, b: &str| -> Result<()> {
        if let (Some(x), Some(y)) = (pos(a), pos(b)) {
            if x > y {
                return Err(Error::Pipeline(format!("`{a}` must run before `{b}`")));
            }
        }
        Ok(())
    };
    let requires = |a: &str, b: &str| -> Result<()> {
        if pos(a).is_some() && pos(b).is_none() {
            return Err(Error::Pipeline(format!("`{a}` requires `{b}`")));
        }
        Ok(())
    };
    before("scf-to-ssawasm", "dcont-to-ssawasm")?;
    for late in ["ssawasm-global-to-wasm", "introduce-locals", "fuse-stack-locals", "ssawasm-to-wasm"] {
        for early in LOWERINGS.iter().chain(OPTIMIZATIONS) {
            before(early, late)?;
        }
        for l in LOWERINGS {
            requires(late, l)?;
        }
    }
    for o in OPTIMIZATIONS {
        for l in LOWERINGS {
            before(l, o)?;
            requires(o, l)?;
        }
    }
    before("introduce-locals", "fuse-stack-locals")?;
    before("introduce-locals", "ssawasm-to-wasm")?;
    before("fuse-stack-locals", "ssawasm-to-wasm")?;
    before("ssawasm-global-to-wasm", "ssawasm-to-wasm")?;
    requires("fuse-stack-locals", "introduce-locals")?;
    requires("ssawasm-to-wasm", "introduce-locals")?;
    requires("ssawasm-to-wasm", "ssawasm-global-to-wasm")?;
    Ok(())
}

/// Runs one named pass.
pub fn run_pass(name: &str, m: IrModule, opts: &LowerOptions) -> Result<IrModule> {
    match name {
        "arith-to-ssawasm" => lower::convert_arith(m),
        "func-to-ssawasm" => lower::convert_func(m),
        "memref-to-ssawasm" => {
            let layout = lower::layout_data_segments(&m, opts.heap_reserve)?;
            lower::convert_memref(m, &layout, opts)
        }
        "scf-to-ssawasm" => lower::convert_scf(m),
        "dcont-to-ssawasm" => lower::convert_dcont(m),
        "cse" => Ok(opt::cse(m)),
        "fold-constants" => Ok(opt::fold_constants(m)),
        "ssawasm-global-to-wasm" => wasm::convert_globals(m),
        "introduce-locals" => Ok(wasm::introduce_locals(m)),
        "fuse-stack-locals" => Ok(wasm::fuse_stack_locals(m)),
        "ssawasm-to-wasm" => wasm::ssawasm_to_wasm(m),
        other => Err(Error::Pipeline(format!("unknown pass `{other}`"))),
    }
}

/// Runs `passes` in order, verifying the module after each.
pub fn run_passes(mut m: IrModule, passes: &[String], opts: &LowerOptions) -> Result<IrModule> {
    validate_order(passes)?;
    let diags = verify_module(&m);
    if !diags.is_empty() {
        return Err(Error::Diagnostics(diags));
    }
    for p in passes {
        m = run_pass(p, m, opts)?;
        let diags = verify_module(&m);
        if !diags.is_empty() {
            return Err(Error::Diagnostics(diags));
        }
    }
    Ok(m)
}

/// Result of a compile: the final IR and, when the pipeline reached the
/// `wasm` level, the module ready for emission or execution.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub ir: IrModule,
    pub wasm: Option<WasmModule>,
}

impl Compiled {
    /// Text for the requested level: IR for `ssawasm`/`wasm`, WAT otherwise.
    pub fn render(&self, emit: EmitLevel) -> String {
        match (emit, &self.wasm) {
            (EmitLevel::Wat, Some(w)) => wat::emit_wat(w),
            _ => crate::text::print_module(&self.ir),
        }
    }
}

pub fn compile(m: IrModule, cfg: &PipelineConfig) -> Result<Compiled> {
    let passes = cfg.pass_list();
    let ir = run_passes(m, &passes, &cfg.lower_options())?;
    let wasm = match ir.level {
        crate::ir::Level::Wasm => Some(wasm::module_from_ir(&ir)?),
        _ => None,
    };
    Ok(Compiled { ir, wasm })
}

/// Parses and compiles source text.
pub fn compile_source(src: &str, file: &str, cfg: &PipelineConfig) -> Result<Compiled> {
    let m = crate::text::parse_module_named(src, file).map_err(Error::Diagnostics)?;
    compile(m, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ps: &[&str]) -> Vec<String> {
        ps.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn default_order_is_valid() {
        validate_order(&names(DEFAULT_PIPELINE)).unwrap();
    }

    #[test]
    fn dcont_before_scf_rejected() {
        let mut p = names(DEFAULT_PIPELINE);
        p.swap(3, 4);
        assert!(matches!(validate_order(&p), Err(Error::Pipeline(_))));
    }

    #[test]
    fn stackify_needs_locals() {
        let p = names(&["arith-to-ssawasm", "func-to-ssawasm", "memref-to-ssawasm", "scf-to-ssawasm", "dcont-to-ssawasm", "ssawasm-global-to-wasm", "ssawasm-to-wasm"]);
        assert!(matches!(validate_order(&p), Err(Error::Pipeline(_))));
    }

    #[test]
    fn emit_level_trims_default() {
        let cfg = PipelineConfig { emit: EmitLevel::SsaWasm, no_opt: true, ..PipelineConfig::default() };
        assert_eq!(cfg.pass_list(), names(LOWERINGS));
    }
}
