//! Conversions from the high-level dialects into `ssawasm`.

mod arith;
mod dcont;
mod func;
mod memref;
mod scf;

pub use arith::convert_arith;
pub use dcont::{collect_cont_sigs, convert_dcont};
pub use func::convert_func;
pub use memref::{convert_memref, expand_address, layout_data_segments, DataLayout, DataSegment};
pub use scf::convert_scf;

use crate::error::Result;
use crate::ir::{
    Attrs, FuncKind, IrModule, Level, OpKind, Operation, Region, Type, ValueDef, ValueId, ValueTable,
};

/// Knobs shared by the lowering passes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerOptions {
    /// Inject a bump allocator instead of importing `malloc`/`free`.
    pub builtin_alloc: bool,
    /// Lower `memref.alloca` like `memref.alloc`.
    pub alloca_as_alloc: bool,
    /// Bytes reserved for the heap when sizing memory.
    pub heap_reserve: u64,
}

pub const DEFAULT_HEAP_RESERVE: u64 = 1 << 20;

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { builtin_alloc: false, alloca_as_alloc: true, heap_reserve: DEFAULT_HEAP_RESERVE }
    }
}

type Rewrite<'a> = dyn FnMut(Operation, &mut ValueTable, &mut Vec<Operation>) -> Result<()> + 'a;

/// Post-order rewrite of every op list in `region`: nested regions are
/// rewritten before their parent op is handed to `cb`, which pushes the
/// replacement ops.
pub(crate) fn rewrite_region(region: &mut Region, vt: &mut ValueTable, cb: &mut Rewrite<'_>) -> Result<()> {
    for block in region.blocks.iter_mut() {
        let old = std::mem::take(&mut block.ops);
        let mut new = Vec::with_capacity(old.len());
        for mut op in old {
            for r in op.regions.iter_mut() {
                rewrite_region(r, vt, cb)?;
            }
            cb(op, vt, &mut new)?;
        }
        block.ops = new;
    }
    Ok(())
}

pub(crate) fn rewrite_module(m: &mut IrModule, cb: &mut Rewrite<'_>) -> Result<()> {
    for f in m.functions.iter_mut() {
        if let Some(mut body) = f.body.take() {
            let r = rewrite_region(&mut body, &mut f.values, cb);
            f.body = Some(body);
            r?;
        }
    }
    Ok(())
}

/// Emits a new op and returns its first result (if any).
pub(crate) fn emit(
    vt: &mut ValueTable,
    out: &mut Vec<Operation>,
    kind: OpKind,
    operands: Vec<ValueId>,
    types: Vec<Type>,
    attrs: Attrs,
) -> Option<ValueId> {
    let op = vt.op(kind, operands, types, attrs);
    let r = op.results.first().copied();
    out.push(op);
    r
}

/// Builds an op that defines the given, already existing values.
pub(crate) fn op_defining(
    vt: &mut ValueTable,
    kind: OpKind,
    operands: Vec<ValueId>,
    results: Vec<ValueId>,
    attrs: Attrs,
) -> Operation {
    let id = vt.fresh_op_id();
    for (i, &r) in results.iter().enumerate() {
        vt.values[r.0 as usize].def = ValueDef::OpResult { op: id, index: i as u32 };
    }
    let mut op = vt.op(kind, operands, Vec::new(), attrs);
    op.id = id;
    op.results = results;
    op
}

/// Rewrites every type in the module (values, signatures, type attributes).
pub(crate) fn map_module_types(m: &mut IrModule, f: &impl Fn(&Type) -> Type) {
    for g in m.globals.iter_mut() {
        g.attrs.map_types(f);
    }
    for func in m.functions.iter_mut() {
        for t in func.params.iter_mut().chain(func.results.iter_mut()) {
            *t = f(t);
        }
        for v in func.values.values.iter_mut() {
            v.ty = f(&v.ty);
        }
        if let Some(body) = func.body.as_mut() {
            crate::ir::walk_region_mut(body, &mut |op| op.attrs.map_types(f));
        }
    }
}

/// `index` becomes `i32` everywhere (wasm32 addressing).
pub(crate) fn resolve_index_types(m: &mut IrModule) {
    map_module_types(m, &Type::resolve_index);
}

fn is_high_level(kind: OpKind) -> bool {
    matches!(kind.dialect(), "arith" | "func" | "scf" | "memref" | "dcont")
}

/// Marks the module as `ssawasm` once no high-level construct is left.
pub(crate) fn refresh_level(m: &mut IrModule) {
    if m.level != Level::High {
        return;
    }
    let any_high = m.contains_kind(is_high_level) || m.functions.iter().any(|f| f.kind == FuncKind::Func);
    if !any_high {
        m.level = Level::SsaWasm;
    }
}
