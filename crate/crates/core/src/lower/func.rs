use super::{emit, op_defining, refresh_level, rewrite_region};
use crate::error::Result;
use crate::ir::{Attr, Attrs, FuncKind, IrModule, OpKind, Operation, Type, ValueDef};

/// Address-typed boundary values travel as plain `i32`.
fn erase_memref(t: &Type) -> Type {
    if t.as_memref().is_some() {
        Type::I32
    } else {
        t.clone()
    }
}

/// `func.func` becomes `ssawasm.func` with `local<T>` parameters read back
/// through `local_get`; declarations become `ssawasm.func_import`.
pub fn convert_func(mut m: IrModule) -> Result<IrModule> {
    let mut kept = Vec::with_capacity(m.functions.len());
    for mut f in std::mem::take(&mut m.functions) {
        if f.kind != FuncKind::Func {
            kept.push(f);
            continue;
        }
        let Some(mut body) = f.body.take() else {
            let params: Vec<Type> = f.params.iter().map(erase_memref).collect();
            let results: Vec<Type> = f.results.iter().map(erase_memref).collect();
            let mut op = Operation::module_op(
                OpKind::SsaFuncImport,
                Attrs::new()
                    .with("sym", Attr::Sym(f.name.clone()))
                    .with("params", Attr::Types(params))
                    .with("results", Attr::Types(results)),
            );
            op.span = f.span.clone();
            m.globals.push(op);
            continue;
        };
        f.kind = FuncKind::SsaWasm;
        let vt = &mut f.values;

        // Parameters: fresh local handles as block args, old values become reads.
        let mut prologue = Vec::new();
        let entry = &mut body.blocks[0];
        let old_args = std::mem::take(&mut entry.args);
        for (i, old) in old_args.into_iter().enumerate() {
            let ty = vt.ty(old).clone();
            let inner = erase_memref(&ty);
            let local = vt.new_value(Type::local(inner.clone()), ValueDef::BlockArg { block: entry.id, index: i as u32 });
            entry.args.push(local);
            f.params[i] = Type::local(inner.clone());
            if ty.as_memref().is_some() {
                let raw = emit(vt, &mut prologue, OpKind::SsaLocalGet, vec![local], vec![Type::I32], Attrs::new()).unwrap();
                prologue.push(op_defining(vt, OpKind::SsaCastI32ToMemref, vec![raw], vec![old], Attrs::new()));
            } else {
                prologue.push(op_defining(vt, OpKind::SsaLocalGet, vec![local], vec![old], Attrs::new()));
            }
        }
        f.results = f.results.iter().map(erase_memref).collect();

        rewrite_region(&mut body, vt, &mut |mut op, vt, out| {
            match op.kind {
                OpKind::FuncCall | OpKind::FuncReturn => {
                    for v in op.operands.iter_mut() {
                        if vt.ty(*v).as_memref().is_some() {
                            *v = emit(vt, out, OpKind::SsaCastMemrefToI32, vec![*v], vec![Type::I32], Attrs::new()).unwrap();
                        }
                    }
                    op.kind = if op.kind == OpKind::FuncCall { OpKind::SsaCall } else { OpKind::SsaReturn };
                }
                _ => {}
            }
            out.push(op);
            Ok(())
        })?;
        let entry = &mut body.blocks[0];
        prologue.append(&mut entry.ops);
        entry.ops = prologue;
        f.body = Some(body);
        kept.push(f);
    }
    m.functions = kept;
    refresh_level(&mut m);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::test_util::{parse, verified};

    #[test]
    fn params_become_locals() {
        let m = parse(
            "module {\n  func.func @f(%x: i32) -> i32 {\n    func.return %x\n  }\n  func.func @main() -> i32 {\n    %a = arith.constant {value = 3} : i32\n    %r = func.call %a {callee = @f} : i32\n    func.return %r\n  }\n}",
        );
        let text = verified(&convert_func(m).unwrap());
        assert!(text.contains("ssawasm.func @f(%0: local<i32>) -> i32 {"), "{text}");
        assert!(text.contains("%1 = ssawasm.local_get %0 : i32"), "{text}");
        // the call passes the plain i32 value
        assert!(text.contains("ssawasm.call %0 {callee = @f} : i32"), "{text}");
        assert!(text.contains("ssawasm.func @main() -> i32 {"), "{text}");
    }

    #[test]
    fn declarations_become_imports() {
        let m = parse("module {\n  func.func private @print_i32(i32)\n}");
        let out = convert_func(m).unwrap();
        let text = verified(&out);
        assert!(text.contains("ssawasm.func_import {sym = @print_i32, params = [i32], results = []}"), "{text}");
        assert_eq!(out.level, crate::ir::Level::SsaWasm);
    }

    #[test]
    fn memref_params_travel_as_i32() {
        let m = parse(
            "module {\n  func.func @first(%m: memref<i32x4>) -> i32 {\n    %c = arith.constant {value = 0} : index\n    %v = memref.load %m, %c : i32\n    func.return %v\n  }\n}",
        );
        let text = verified(&convert_func(m).unwrap());
        assert!(text.contains("@first(%0: local<i32>)"), "{text}");
        assert!(text.contains("ssawasm.cast_i32_to_memref"), "{text}");
    }
}
