use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::ir::{Attr, Attrs, IrModule, OpKind, Operation, Type};

fn types(op: &Operation, name: &str) -> Vec<Type> {
    op.attrs.types(name).map(<[Type]>::to_vec).unwrap_or_default()
}

fn erase(ts: Vec<Type>) -> Vec<Type> {
    ts.into_iter().map(|t| if t.as_memref().is_some() || t == Type::Index { Type::I32 } else { t }).collect()
}

/// Turns module-level `ssawasm` declarations into their `wasm` counterparts.
/// Data bytes are carried verbatim; each continuation type gains a named
/// function type.
pub fn convert_globals(mut m: IrModule) -> Result<IrModule> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(m.globals.len());
    let mut func_types = Vec::new();
    for op in std::mem::take(&mut m.globals) {
        if let Some(sym) = op.attrs.sym("sym") {
            if !seen.insert((op.kind == OpKind::SsaData || op.kind == OpKind::WasmData, sym.to_string())) {
                return Err(Error::DuplicateSymbol(sym.to_string()));
            }
        }
        let sym = || Attr::Sym(op.attrs.sym("sym").unwrap_or_default().to_string());
        let new = match op.kind {
            OpKind::SsaData => (
                OpKind::WasmData,
                Attrs::new()
                    .with("offset", Attr::Int(op.attrs.int("offset").unwrap_or(0)))
                    .with("init", Attr::Bytes(op.attrs.bytes("init").unwrap_or_default().to_vec())),
            ),
            OpKind::SsaFuncImport => (
                OpKind::WasmImport,
                Attrs::new()
                    .with("sym", sym())
                    .with("params", Attr::Types(erase(types(&op, "params"))))
                    .with("results", Attr::Types(erase(types(&op, "results")))),
            ),
            OpKind::SsaGlobalVar => {
                let ty = erase(vec![op.attrs.ty("type").cloned().unwrap_or(Type::I32)]).remove(0);
                let init = op.attrs.get("init").cloned().unwrap_or(Attr::Int(0));
                (OpKind::WasmGlobal, Attrs::new().with("sym", sym()).with("type", Attr::Type(ty)).with("init", init))
            }
            OpKind::SsaTag => (
                OpKind::WasmTag,
                Attrs::new()
                    .with("sym", sym())
                    .with("params", Attr::Types(types(&op, "params")))
                    .with("results", Attr::Types(types(&op, "results"))),
            ),
            OpKind::SsaContType => {
                let ft = op.attrs.sym("func_type").unwrap_or_default().to_string();
                func_types.push(Operation::module_op(
                    OpKind::WasmFuncType,
                    Attrs::new()
                        .with("sym", Attr::Sym(ft.clone()))
                        .with("params", Attr::Types(types(&op, "params")))
                        .with("results", Attr::Types(types(&op, "results"))),
                ));
                (OpKind::WasmContType, Attrs::new().with("sym", sym()).with("func_type", Attr::Sym(ft)))
            }
            OpKind::SsaMemory => (OpKind::WasmMemory, Attrs::new().with("pages", Attr::Int(op.attrs.int("pages").unwrap_or(0)))),
            _ => {
                out.push(op);
                continue;
            }
        };
        let mut g = Operation::module_op(new.0, new.1);
        g.span = op.span.clone();
        out.push(g);
    }
    func_types.append(&mut out);
    m.globals = func_types;
    Ok(m)
}
