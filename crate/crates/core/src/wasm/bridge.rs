//! Conversion between [`WasmModule`] and the `wasm` dialect of the IR, so
//! that the stack-form level can be printed, parsed and verified like the
//! others.

use crate::error::{Error, Result};
use crate::ir::{Attr, Attrs, Block, FuncKind, Function, IrModule, Level, OpKind, Operation, Region, Type, ValueTable};
use crate::num::{BinOp, CvtOp, NumType, RelOp, UnOp, Value};

use super::ast::*;

fn vtypes(ts: &[ValType]) -> Attr {
    Attr::Types(ts.iter().map(ValType::to_type).collect())
}

fn ty_attr(n: NumType) -> Attr {
    Attr::Type(n.to_type())
}

pub fn module_to_ir(wm: &WasmModule) -> IrModule {
    let mut m = IrModule { level: Level::Wasm, ..IrModule::default() };
    let g = |kind, attrs| Operation::module_op(kind, attrs);
    for ft in &wm.func_types {
        m.globals.push(g(
            OpKind::WasmFuncType,
            Attrs::new()
                .with("sym", Attr::Sym(ft.name.clone()))
                .with("params", vtypes(&ft.params))
                .with("results", vtypes(&ft.results)),
        ));
    }
    for ct in &wm.cont_types {
        m.globals.push(g(
            OpKind::WasmContType,
            Attrs::new().with("sym", Attr::Sym(ct.name.clone())).with("func_type", Attr::Sym(ct.func_type.clone())),
        ));
    }
    for i in &wm.imports {
        m.globals.push(g(
            OpKind::WasmImport,
            Attrs::new()
                .with("sym", Attr::Sym(i.name.clone()))
                .with("params", vtypes(&i.params))
                .with("results", vtypes(&i.results)),
        ));
    }
    for t in &wm.tags {
        m.globals.push(g(
            OpKind::WasmTag,
            Attrs::new()
                .with("sym", Attr::Sym(t.name.clone()))
                .with("params", vtypes(&t.params))
                .with("results", vtypes(&t.results)),
        ));
    }
    if let Some(mem) = &wm.memory {
        m.globals.push(g(OpKind::WasmMemory, Attrs::new().with("pages", Attr::Int(mem.pages as i64))));
    }
    for gl in &wm.globals {
        m.globals.push(g(
            OpKind::WasmGlobal,
            Attrs::new()
                .with("sym", Attr::Sym(gl.name.clone()))
                .with("type", Attr::Type(gl.ty.to_type()))
                .with("init", gl.init.to_attr()),
        ));
    }
    for d in &wm.data {
        m.globals.push(g(
            OpKind::WasmData,
            Attrs::new().with("offset", Attr::Int(d.offset as i64)).with("init", Attr::Bytes(d.bytes.clone())),
        ));
    }
    for wf in &wm.funcs {
        m.functions.push(func_to_ir(wf));
    }
    m
}

pub fn func_to_ir(wf: &WasmFunc) -> Function {
    let params = wf.params.iter().map(ValType::to_type).collect();
    let results = wf.results.iter().map(ValType::to_type).collect();
    let mut f = Function::new(&wf.name, FuncKind::Wasm, params, results);
    f.exported = wf.exported;
    if !wf.locals.is_empty() {
        f.attrs.set("locals", vtypes(&wf.locals));
    }
    let ops = instrs_to_ops(&wf.body, &mut f.values);
    f.entry_mut().unwrap().ops = ops;
    f
}

fn region(vt: &mut ValueTable, label: &str, body: &[Instr]) -> Region {
    let mut b: Block = vt.block(label, vec![]);
    b.ops = instrs_to_ops(body, vt);
    Region::single(b)
}

fn instrs_to_ops(body: &[Instr], vt: &mut ValueTable) -> Vec<Operation> {
    body.iter().map(|i| instr_to_op(i, vt)).collect()
}

fn instr_to_op(i: &Instr, vt: &mut ValueTable) -> Operation {
    let a = Attrs::new();
    let (kind, attrs, regions) = match i {
        Instr::Const(v) => {
            let t = v.num_type().map(NumType::to_type).unwrap_or(Type::I32);
            (OpKind::WasmConst, a.with("type", Attr::Type(t)).with("value", v.to_attr()), vec![])
        }
        Instr::Unary { op, ty } => (OpKind::WasmUnary, a.with("op", Attr::Str(op.name().into())).with("type", ty_attr(*ty)), vec![]),
        Instr::Binary { op, ty } => (OpKind::WasmBinary, a.with("op", Attr::Str(op.name().into())).with("type", ty_attr(*ty)), vec![]),
        Instr::Compare { op, ty } => (OpKind::WasmCompare, a.with("op", Attr::Str(op.name().into())).with("type", ty_attr(*ty)), vec![]),
        Instr::Eqz(ty) => (OpKind::WasmEqz, a.with("type", ty_attr(*ty)), vec![]),
        Instr::Convert { op, from, to } => (
            OpKind::WasmConvert,
            a.with("op", Attr::Str(op.name().into())).with("from", ty_attr(*from)).with("to", ty_attr(*to)),
            vec![],
        ),
        Instr::Select => (OpKind::WasmSelect, a, vec![]),
        Instr::LocalGet(x) => (OpKind::WasmLocalGet, a.with("index", Attr::Int(*x as i64)), vec![]),
        Instr::LocalSet(x) => (OpKind::WasmLocalSet, a.with("index", Attr::Int(*x as i64)), vec![]),
        Instr::LocalTee(x) => (OpKind::WasmLocalTee, a.with("index", Attr::Int(*x as i64)), vec![]),
        Instr::GlobalGet(s) => (OpKind::WasmGlobalGet, a.with("global", Attr::Sym(s.clone())), vec![]),
        Instr::GlobalSet(s) => (OpKind::WasmGlobalSet, a.with("global", Attr::Sym(s.clone())), vec![]),
        Instr::Load { ty, offset } => (OpKind::WasmLoad, a.with("type", ty_attr(*ty)).with("offset", Attr::Int(*offset as i64)), vec![]),
        Instr::Store { ty, offset } => (OpKind::WasmStore, a.with("type", ty_attr(*ty)).with("offset", Attr::Int(*offset as i64)), vec![]),
        Instr::Call(s) => (OpKind::WasmCall, a.with("callee", Attr::Sym(s.clone())), vec![]),
        Instr::Return => (OpKind::WasmReturn, a, vec![]),
        Instr::Br(l) => (OpKind::WasmBr, a.with("label", Attr::Str(l.clone())), vec![]),
        Instr::BrIf(l) => (OpKind::WasmBrIf, a.with("label", Attr::Str(l.clone())), vec![]),
        Instr::Block { label, results, body } => (
            OpKind::WasmBlock,
            a.with("label", Attr::Str(label.clone())).with("results", vtypes(results)),
            vec![region(vt, label, body)],
        ),
        Instr::Loop { label, body } => (OpKind::WasmLoop, a.with("label", Attr::Str(label.clone())), vec![region(vt, label, body)]),
        Instr::If { results, then, els } => (
            OpKind::WasmIf,
            a.with("results", vtypes(results)),
            vec![region(vt, "then", then), region(vt, "else", els)],
        ),
        Instr::RefFunc(s) => (OpKind::WasmRefFunc, a.with("func", Attr::Sym(s.clone())), vec![]),
        Instr::ContNew(s) => (OpKind::WasmContNew, a.with("cont_type", Attr::Sym(s.clone())), vec![]),
        Instr::Suspend(s) => (OpKind::WasmSuspend, a.with("tag", Attr::Sym(s.clone())), vec![]),
        Instr::Resume { cont_type, on } => {
            // The IR form carries exactly one handler clause.
            let (tag, label) = on.first().cloned().unwrap_or_default();
            (
                OpKind::WasmResume,
                a.with("cont_type", Attr::Sym(cont_type.clone()))
                    .with("tag", Attr::Sym(tag))
                    .with("label", Attr::Str(label)),
                vec![],
            )
        }
        Instr::Unreachable => (OpKind::WasmUnreachable, a, vec![]),
        Instr::Drop => (OpKind::WasmDrop, a, vec![]),
    };
    vt.op(kind, vec![], vec![], attrs).with_regions(regions)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::UnsupportedOp(msg.into())
}

fn sym(op: &Operation, name: &str) -> Result<String> {
    op.attrs.sym(name).map(str::to_string).ok_or_else(|| bad(format!("{} without @{name}", op.full_name())))
}

fn string(op: &Operation, name: &str) -> Result<String> {
    op.attrs.str(name).map(str::to_string).ok_or_else(|| bad(format!("{} without {name}", op.full_name())))
}

fn num_ty(op: &Operation, name: &str) -> Result<NumType> {
    op.attrs.ty(name).and_then(NumType::from_type).ok_or_else(|| bad(format!("{} without numeric {name}", op.full_name())))
}

fn val_types(op: &Operation, name: &str) -> Result<Vec<ValType>> {
    op.attrs
        .types(name)
        .unwrap_or_default()
        .iter()
        .map(|t| ValType::from_type(t).ok_or_else(|| bad(format!("type {t} has no wasm counterpart"))))
        .collect()
}

fn int(op: &Operation, name: &str) -> Result<i64> {
    op.attrs.int(name).ok_or_else(|| bad(format!("{} without {name}", op.full_name())))
}

/// Reads back a `wasm`-level module. Module items of other dialects are rejected.
pub fn module_from_ir(m: &IrModule) -> Result<WasmModule> {
    let mut wm = WasmModule::default();
    add_globals(&mut wm, &m.globals)?;
    for f in &m.functions {
        if f.kind != FuncKind::Wasm {
            return Err(bad(format!("{} @{} in a wasm module", f.kind.keyword(), f.name)));
        }
        wm.funcs.push(func_from_ir(f)?);
    }
    Ok(wm)
}

/// Collects the `wasm` module-level items of `globals`.
pub fn add_globals(wm: &mut WasmModule, globals: &[Operation]) -> Result<()> {
    for op in globals {
        match op.kind {
            OpKind::WasmFuncType => wm.func_types.push(FuncType {
                name: sym(op, "sym")?,
                params: val_types(op, "params")?,
                results: val_types(op, "results")?,
            }),
            OpKind::WasmContType => wm.cont_types.push(ContType { name: sym(op, "sym")?, func_type: sym(op, "func_type")? }),
            OpKind::WasmImport => wm.imports.push(Import {
                name: sym(op, "sym")?,
                params: val_types(op, "params")?,
                results: val_types(op, "results")?,
            }),
            OpKind::WasmTag => wm.tags.push(Tag {
                name: sym(op, "sym")?,
                params: val_types(op, "params")?,
                results: val_types(op, "results")?,
            }),
            OpKind::WasmMemory => wm.memory = Some(Memory { pages: int(op, "pages")? as u32, exported: true }),
            OpKind::WasmGlobal => {
                let ty = op.attrs.ty("type").and_then(ValType::from_type).ok_or_else(|| bad("wasm.global without a type"))?;
                let n = ty.num().ok_or_else(|| bad("reference-typed globals are not supported"))?;
                let init = op.attrs.get("init").and_then(|a| Value::from_attr(a, n)).unwrap_or(n.zero());
                wm.globals.push(Global { name: sym(op, "sym")?, ty, mutable: true, init });
            }
            OpKind::WasmData => wm.data.push(DataSeg {
                offset: int(op, "offset")? as u32,
                bytes: op.attrs.bytes("init").unwrap_or_default().to_vec(),
            }),
            _ => return Err(bad(format!("{} at the wasm level", op.full_name()))),
        }
    }
    Ok(())
}

pub fn func_from_ir(f: &Function) -> Result<WasmFunc> {
    let conv = |ts: &[Type]| -> Result<Vec<ValType>> {
        ts.iter().map(|t| ValType::from_type(t).ok_or_else(|| bad(format!("type {t} has no wasm counterpart")))).collect()
    };
    let body = match &f.body {
        Some(r) => ops_to_instrs(r.blocks.first().map(|b| b.ops.as_slice()).unwrap_or_default())?,
        None => Vec::new(),
    };
    Ok(WasmFunc {
        name: f.name.clone(),
        exported: f.exported,
        params: conv(&f.params)?,
        results: conv(&f.results)?,
        locals: conv(f.attrs.types("locals").unwrap_or_default())?,
        body,
    })
}

fn region_instrs(op: &Operation, i: usize) -> Result<Vec<Instr>> {
    match op.regions.get(i).and_then(|r| r.blocks.first()) {
        Some(b) => ops_to_instrs(&b.ops),
        None => Ok(Vec::new()),
    }
}

fn ops_to_instrs(ops: &[Operation]) -> Result<Vec<Instr>> {
    ops.iter().map(op_to_instr).collect()
}

fn op_to_instr(op: &Operation) -> Result<Instr> {
    let parse_op = |name: &str| string(op, name);
    Ok(match op.kind {
        OpKind::WasmConst => {
            let ty = num_ty(op, "type")?;
            let v = op.attrs.get("value").and_then(|a| Value::from_attr(a, ty)).ok_or_else(|| bad("malformed wasm.const"))?;
            Instr::Const(v)
        }
        OpKind::WasmUnary => Instr::Unary {
            op: UnOp::parse(&parse_op("op")?).ok_or_else(|| bad("unknown unary op"))?,
            ty: num_ty(op, "type")?,
        },
        OpKind::WasmBinary => Instr::Binary {
            op: BinOp::parse(&parse_op("op")?).ok_or_else(|| bad("unknown binary op"))?,
            ty: num_ty(op, "type")?,
        },
        OpKind::WasmCompare => Instr::Compare {
            op: RelOp::parse(&parse_op("op")?).ok_or_else(|| bad("unknown comparison"))?,
            ty: num_ty(op, "type")?,
        },
        OpKind::WasmEqz => Instr::Eqz(num_ty(op, "type")?),
        OpKind::WasmConvert => Instr::Convert {
            op: CvtOp::parse(&parse_op("op")?).ok_or_else(|| bad("unknown conversion"))?,
            from: num_ty(op, "from")?,
            to: num_ty(op, "to")?,
        },
        OpKind::WasmSelect => Instr::Select,
        OpKind::WasmLocalGet => Instr::LocalGet(int(op, "index")? as u32),
        OpKind::WasmLocalSet => Instr::LocalSet(int(op, "index")? as u32),
        OpKind::WasmLocalTee => Instr::LocalTee(int(op, "index")? as u32),
        OpKind::WasmGlobalGet => Instr::GlobalGet(sym(op, "global")?),
        OpKind::WasmGlobalSet => Instr::GlobalSet(sym(op, "global")?),
        OpKind::WasmLoad => Instr::Load { ty: num_ty(op, "type")?, offset: int(op, "offset")? as u32 },
        OpKind::WasmStore => Instr::Store { ty: num_ty(op, "type")?, offset: int(op, "offset")? as u32 },
        OpKind::WasmCall => Instr::Call(sym(op, "callee")?),
        OpKind::WasmReturn => Instr::Return,
        OpKind::WasmBr => Instr::Br(string(op, "label")?),
        OpKind::WasmBrIf => Instr::BrIf(string(op, "label")?),
        OpKind::WasmBlock => Instr::Block {
            label: string(op, "label")?,
            results: val_types(op, "results")?,
            body: region_instrs(op, 0)?,
        },
        OpKind::WasmLoop => Instr::Loop { label: string(op, "label")?, body: region_instrs(op, 0)? },
        OpKind::WasmIf => Instr::If {
            results: val_types(op, "results")?,
            then: region_instrs(op, 0)?,
            els: region_instrs(op, 1)?,
        },
        OpKind::WasmRefFunc => Instr::RefFunc(sym(op, "func")?),
        OpKind::WasmContNew => Instr::ContNew(sym(op, "cont_type")?),
        OpKind::WasmSuspend => Instr::Suspend(sym(op, "tag")?),
        OpKind::WasmResume => Instr::Resume {
            cont_type: sym(op, "cont_type")?,
            on: vec![(sym(op, "tag")?, string(op, "label")?)],
        },
        OpKind::WasmUnreachable => Instr::Unreachable,
        OpKind::WasmDrop => Instr::Drop,
        _ => return Err(bad(format!("{} inside a wasm function", op.full_name()))),
    })
}
