use std::collections::HashMap;

use super::{emit, refresh_level, resolve_index_types, rewrite_module, LowerOptions};
use crate::error::{Error, Result};
use crate::ir::{
    Attr, Attrs, FuncKind, Function, IrModule, MemRefType, OpKind, Operation, Type, ValueId, ValueTable,
};

pub const DATA_START: u64 = 1024;
pub const PAGE_SIZE: u64 = 65536;
pub const HEAP_PTR: &str = "__heap_ptr";

/// One global array placed in linear memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSegment {
    pub sym: String,
    pub ty: MemRefType,
    pub memory: u32,
    pub offset: u64,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataLayout {
    pub segments: Vec<DataSegment>,
    pub heap_base: u64,
    pub pages: u64,
}

impl DataLayout {
    pub fn offset_of(&self, sym: &str) -> Option<u64> {
        self.segments.iter().find(|s| s.sym == sym).map(|s| s.offset)
    }
}

fn align_up(v: u64, a: u64) -> u64 {
    v.div_ceil(a) * a
}

/// Places every `memref.global` (or already lowered `ssawasm.data`) in
/// declaration order, starting at 1024.
pub fn layout_data_segments(m: &IrModule, heap_reserve: u64) -> Result<DataLayout> {
    let mut segments = Vec::new();
    let mut cursor = DATA_START;
    for op in &m.globals {
        if !matches!(op.kind, OpKind::MemrefGlobal | OpKind::SsaData) {
            continue;
        }
        let sym = op.attrs.sym("sym").unwrap_or_default().to_string();
        let ty = op
            .attrs
            .ty("type")
            .map(Type::resolve_index)
            .and_then(|t| t.as_memref().cloned())
            .ok_or_else(|| Error::UnsupportedMemRef(format!("@{sym} has no static memref type")))?;
        let size = ty.byte_size();
        let bytes = match op.attrs.bytes("init") {
            Some(b) => b.to_vec(),
            None => vec![0; size as usize],
        };
        let offset = match op.kind {
            OpKind::SsaData => op.attrs.int("offset").unwrap_or(0) as u64,
            _ => align_up(cursor, ty.elem_width() as u64),
        };
        cursor = offset + size;
        segments.push(DataSegment { sym, ty, memory: 0, offset, bytes });
    }
    let heap_base = align_up(cursor, 16);
    let end = heap_base + heap_reserve;
    if end > 1 << 32 {
        return Err(Error::SegmentOverflow(end));
    }
    Ok(DataLayout { segments, heap_base, pages: end.div_ceil(PAGE_SIZE).max(1) })
}

fn i32_const(vt: &mut ValueTable, out: &mut Vec<Operation>, v: i64) -> ValueId {
    emit(vt, out, OpKind::SsaConst, vec![], vec![Type::I32], Attrs::new().with("value", Attr::Int(v))).unwrap()
}

fn binop(vt: &mut ValueTable, out: &mut Vec<Operation>, kind: OpKind, a: ValueId, b: ValueId) -> ValueId {
    emit(vt, out, kind, vec![a, b], vec![Type::I32], Attrs::new()).unwrap()
}

/// Emits `base + (sum idx_k * stride_k) * width` and returns the i32 address.
pub fn expand_address(
    vt: &mut ValueTable,
    out: &mut Vec<Operation>,
    base: ValueId,
    indices: &[ValueId],
    ty: &MemRefType,
) -> ValueId {
    let base = emit(vt, out, OpKind::SsaCastMemrefToI32, vec![base], vec![Type::I32], Attrs::new()).unwrap();
    let mut linear: Option<ValueId> = None;
    for (&idx, stride) in indices.iter().zip(ty.strides()) {
        let term = if stride == 1 {
            idx
        } else {
            let s = i32_const(vt, out, stride as i64);
            binop(vt, out, OpKind::SsaMul, idx, s)
        };
        linear = Some(match linear {
            None => term,
            Some(acc) => binop(vt, out, OpKind::SsaAdd, acc, term),
        });
    }
    let linear = linear.unwrap_or_else(|| i32_const(vt, out, 0));
    let width = i32_const(vt, out, ty.elem_width() as i64);
    let bytes = binop(vt, out, OpKind::SsaMul, linear, width);
    binop(vt, out, OpKind::SsaAdd, base, bytes)
}

/// Rewrites globals to data segments and memory accesses to explicit
/// address arithmetic over linear memory.
pub fn convert_memref(mut m: IrModule, layout: &DataLayout, opts: &LowerOptions) -> Result<IrModule> {
    resolve_index_types(&mut m);
    let offsets: HashMap<&str, u64> = layout.segments.iter().map(|s| (s.sym.as_str(), s.offset)).collect();

    for op in m.globals.iter_mut() {
        if op.kind != OpKind::MemrefGlobal {
            continue;
        }
        let sym = op.attrs.sym("sym").unwrap_or_default().to_string();
        let seg = layout
            .segments
            .iter()
            .find(|s| s.sym == sym)
            .ok_or_else(|| Error::Pipeline(format!("no data layout entry for @{sym}")))?;
        op.kind = OpKind::SsaData;
        op.attrs = Attrs::new()
            .with("sym", Attr::Sym(sym))
            .with("type", Attr::Type(Type::MemRef(seg.ty.clone())))
            .with("memory", Attr::Int(0))
            .with("offset", Attr::Int(seg.offset as i64))
            .with("init", Attr::Bytes(seg.bytes.clone()));
    }
    if !m.globals.iter().any(|g| g.kind == OpKind::SsaMemory) {
        m.globals.push(Operation::module_op(OpKind::SsaMemory, Attrs::new().with("pages", Attr::Int(layout.pages as i64))));
    }

    let mut uses_heap = false;
    rewrite_module(&mut m, &mut |mut op, vt, out| {
        match op.kind {
            OpKind::MemrefGetGlobal => {
                let name = op.attrs.sym("name").unwrap_or_default();
                let off = *offsets.get(name).ok_or_else(|| Error::Pipeline(format!("unknown global @{name}")))?;
                op.kind = OpKind::SsaConst;
                op.attrs = Attrs::new().with("value", Attr::Int(off as i64));
            }
            OpKind::MemrefAlloc | OpKind::MemrefAlloca => {
                if op.kind == OpKind::MemrefAlloca && !opts.alloca_as_alloc {
                    return Err(Error::AllocaUnsupported);
                }
                let ty = vt.ty(op.results[0]).as_memref().cloned().ok_or_else(|| {
                    Error::UnsupportedMemRef(format!("alloc of {}", vt.ty(op.results[0])))
                })?;
                uses_heap = true;
                let size = i32_const(vt, out, ty.byte_size() as i64);
                op.kind = OpKind::SsaCall;
                op.operands = vec![size];
                op.attrs = Attrs::new().with("callee", Attr::Sym("malloc".into()));
            }
            OpKind::MemrefDealloc => {
                uses_heap = true;
                let p = emit(vt, out, OpKind::SsaCastMemrefToI32, op.operands.clone(), vec![Type::I32], Attrs::new()).unwrap();
                op.kind = OpKind::SsaCall;
                op.operands = vec![p];
                op.attrs = Attrs::new().with("callee", Attr::Sym("free".into()));
            }
            OpKind::MemrefLoad | OpKind::MemrefStore => {
                let pos = if op.kind == OpKind::MemrefLoad { 0 } else { 1 };
                let ty = vt.ty(op.operands[pos]).as_memref().cloned().ok_or_else(|| {
                    Error::UnsupportedMemRef(format!("access through {}", vt.ty(op.operands[pos])))
                })?;
                let addr = expand_address(vt, out, op.operands[pos], &op.operands[pos + 1..], &ty);
                op.attrs = Attrs::new().with("offset", Attr::Int(0));
                if op.kind == OpKind::MemrefLoad {
                    op.kind = OpKind::SsaLoad;
                    op.operands = vec![addr];
                } else {
                    op.kind = OpKind::SsaStore;
                    op.operands = vec![addr, op.operands[0]];
                }
            }
            _ => {}
        }
        out.push(op);
        Ok(())
    })?;

    if uses_heap {
        add_allocator(&mut m, layout, opts);
    }
    refresh_level(&mut m);
    Ok(m)
}

fn defines(m: &IrModule, name: &str) -> bool {
    m.function(name).is_some() || m.globals.iter().any(|g| g.attrs.sym("sym") == Some(name))
}

fn add_allocator(m: &mut IrModule, layout: &DataLayout, opts: &LowerOptions) {
    let import = |name: &str, params: Vec<Type>, results: Vec<Type>| {
        Operation::module_op(
            OpKind::SsaFuncImport,
            Attrs::new()
                .with("sym", Attr::Sym(name.into()))
                .with("params", Attr::Types(params))
                .with("results", Attr::Types(results)),
        )
    };
    if !opts.builtin_alloc {
        if !defines(m, "malloc") {
            m.globals.push(import("malloc", vec![Type::I32], vec![Type::I32]));
        }
        if !defines(m, "free") {
            m.globals.push(import("free", vec![Type::I32], vec![]));
        }
        return;
    }
    if !defines(m, HEAP_PTR) {
        m.globals.push(Operation::module_op(
            OpKind::SsaGlobalVar,
            Attrs::new()
                .with("sym", Attr::Sym(HEAP_PTR.into()))
                .with("type", Attr::Type(Type::I32))
                .with("init", Attr::Int(layout.heap_base as i64)),
        ));
    }
    if !defines(m, "malloc") {
        m.functions.push(bump_malloc());
    }
    if !defines(m, "free") {
        let mut f = Function::new("free", FuncKind::SsaWasm, vec![Type::local(Type::I32)], vec![]);
        f.exported = false;
        let ret = f.values.op(OpKind::SsaReturn, vec![], vec![], Attrs::new());
        f.entry_mut().unwrap().ops.push(ret);
        m.functions.push(f);
    }
}

/// `malloc(n)`: returns the heap pointer and bumps it by `n` rounded up to 8.
fn bump_malloc() -> Function {
    let mut f = Function::new("malloc", FuncKind::SsaWasm, vec![Type::local(Type::I32)], vec![Type::I32]);
    f.exported = false;
    let n = f.param_values()[0];
    let vt = &mut f.values;
    let mut ops = Vec::new();
    let heap = || Attrs::new().with("global", Attr::Sym(HEAP_PTR.into()));
    let size = emit(vt, &mut ops, OpKind::SsaLocalGet, vec![n], vec![Type::I32], Attrs::new()).unwrap();
    let seven = i32_const(vt, &mut ops, 7);
    let padded = binop(vt, &mut ops, OpKind::SsaAdd, size, seven);
    let mask = i32_const(vt, &mut ops, -8);
    let rounded = binop(vt, &mut ops, OpKind::SsaAnd, padded, mask);
    let old = emit(vt, &mut ops, OpKind::SsaGlobalGet, vec![], vec![Type::I32], heap()).unwrap();
    let bumped = binop(vt, &mut ops, OpKind::SsaAdd, old, rounded);
    emit(vt, &mut ops, OpKind::SsaGlobalSet, vec![bumped], vec![], heap());
    emit(vt, &mut ops, OpKind::SsaReturn, vec![old], vec![], Attrs::new());
    f.entry_mut().unwrap().ops = ops;
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::test_util::{parse, verified};
    use crate::lower::{convert_arith, convert_func, DEFAULT_HEAP_RESERVE};

    fn layout(src: &str) -> DataLayout {
        layout_data_segments(&parse(src), DEFAULT_HEAP_RESERVE).unwrap()
    }

    #[test]
    fn two_i32x4_globals() {
        let l = layout(
            "module {\n  memref.global {sym = @a, type = memref<i32x4>}\n  memref.global {sym = @b, type = memref<i32x4>}\n}",
        );
        let offs: Vec<u64> = l.segments.iter().map(|s| s.offset).collect();
        assert_eq!(offs, vec![1024, 1040]);
    }

    #[test]
    fn f64_then_i32_alignment() {
        let l = layout(
            "module {\n  memref.global {sym = @a, type = memref<f64x3>}\n  memref.global {sym = @b, type = memref<i32x1>}\n}",
        );
        let offs: Vec<u64> = l.segments.iter().map(|s| s.offset).collect();
        assert_eq!(offs, vec![1024, 1048]);
        assert_eq!(l.heap_base, 1056);
    }

    #[test]
    fn empty_module_layout() {
        let l = layout("module {\n}");
        assert_eq!((l.heap_base, l.pages), (1024, 17));
    }

    #[test]
    fn overflow_is_reported() {
        let m = parse("module {\n}");
        assert!(matches!(layout_data_segments(&m, 1 << 32), Err(Error::SegmentOverflow(_))));
    }

    fn lower(src: &str, opts: &LowerOptions) -> Result<IrModule> {
        let m = convert_func(convert_arith(parse(src))?)?;
        let l = layout_data_segments(&m, opts.heap_reserve)?;
        convert_memref(m, &l, opts)
    }

    #[test]
    fn alloc_calls_malloc_with_byte_size() {
        let src = "module {\n  func.func @f() -> i32 {\n    %m = memref.alloc : memref<i32x4>\n    %c = arith.constant {value = 0} : index\n    %v = memref.load %m, %c : i32\n    memref.dealloc %m\n    func.return %v\n  }\n}";
        let out = lower(src, &LowerOptions::default()).unwrap();
        let text = verified(&out);
        assert!(text.contains("%0 = ssawasm.const {value = 16} : i32\n    %1 = ssawasm.call %0 {callee = @malloc} : memref<i32x4>"), "{text}");
        assert!(text.contains("ssawasm.func_import {sym = @malloc"), "{text}");
        assert!(text.contains("{callee = @free}"), "{text}");

        let out = lower(src, &LowerOptions { builtin_alloc: true, ..Default::default() }).unwrap();
        let text = verified(&out);
        assert!(text.contains("ssawasm.global_var {sym = @__heap_ptr, type = i32, init = 1024}"), "{text}");
        assert!(text.contains("ssawasm.func private @malloc"), "{text}");
    }

    #[test]
    fn alloca_flag() {
        let src = "module {\n  func.func @f() {\n    %m = memref.alloca : memref<f64x2>\n    func.return\n  }\n}";
        let opts = LowerOptions { alloca_as_alloc: false, ..Default::default() };
        assert!(matches!(lower(src, &opts), Err(Error::AllocaUnsupported)));
        assert!(lower(src, &LowerOptions::default()).is_ok());
    }

    #[test]
    fn two_dim_load_expands_row_major() {
        let src = "module {\n  memref.global {sym = @g, type = memref<i32x10x10>}\n  func.func @f(%i: index, %j: index) -> i32 {\n    %m = memref.get_global {name = @g} : memref<i32x10x10>\n    %v = memref.load %m, %i, %j : i32\n    func.return %v\n  }\n}";
        let text = verified(&lower(src, &LowerOptions::default()).unwrap());
        assert!(text.contains("ssawasm.data {sym = @g, type = memref<i32x10x10>, memory = 0, offset = 1024"), "{text}");
        assert!(text.contains("ssawasm.const {value = 1024} : memref<i32x10x10>"), "{text}");
        assert!(text.contains("ssawasm.const {value = 10} : i32"), "{text}");
        assert!(text.contains("ssawasm.load %"), "{text}");
        assert!(text.contains("{offset = 0} : i32"), "{text}");
    }
}
