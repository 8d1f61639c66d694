use super::{emit, map_module_types, op_defining, refresh_level, rewrite_module};
use crate::error::{Error, Result};
use crate::ir::{walk_region, Attr, Attrs, ContSig, IrModule, OpKind, Operation, Region, Type};

/// Distinct continuation signatures in order of first appearance.
pub fn collect_cont_sigs(m: &IrModule) -> Vec<ContSig> {
    fn note(t: &Type, out: &mut Vec<ContSig>) {
        match t {
            Type::Cont(sig) if !out.contains(sig) => out.push(sig.clone()),
            Type::Local(inner) => note(inner, out),
            _ => {}
        }
    }
    let mut sigs = Vec::new();
    for f in &m.functions {
        for t in f.params.iter().chain(&f.results) {
            note(t, &mut sigs);
        }
        if let Some(body) = &f.body {
            walk_region(body, &mut |op| {
                for &v in op.operands.iter().chain(&op.results) {
                    note(f.ty(v), &mut sigs);
                }
                // A suspend may name a signature no continuation value carries.
                if op.kind == OpKind::DcontSuspend {
                    let sig = ContSig {
                        payload: op.operands.iter().map(|&v| f.ty(v).clone()).collect(),
                        resume: op.results.iter().map(|&v| f.ty(v).clone()).collect(),
                    };
                    if !sigs.contains(&sig) {
                        sigs.push(sig);
                    }
                }
            });
        }
    }
    sigs
}

pub fn tag_name(k: usize) -> String {
    format!("yield_{k}")
}

pub fn cont_type_name(k: usize) -> String {
    format!("ct_{k}")
}

pub fn func_type_name(k: usize) -> String {
    format!("ft_{k}")
}

fn map_cont(t: &Type, sigs: &[ContSig]) -> Type {
    match t {
        Type::Cont(sig) => match sigs.iter().position(|s| s == sig) {
            Some(k) => Type::ContRef(cont_type_name(k)),
            None => t.clone(),
        },
        Type::Local(inner) => Type::local(map_cont(inner, sigs)),
        _ => t.clone(),
    }
}

/// Lowers `dcont` onto stack-switching primitives: one tag and one
/// continuation type per signature, `resume` as a `block_block` whose inner
/// block receives the suspended payloads.
pub fn convert_dcont(mut m: IrModule) -> Result<IrModule> {
    let sigs = collect_cont_sigs(&m);
    for (k, sig) in sigs.iter().enumerate() {
        m.globals.push(Operation::module_op(
            OpKind::SsaTag,
            Attrs::new()
                .with("sym", Attr::Sym(tag_name(k)))
                .with("params", Attr::Types(sig.payload.clone()))
                .with("results", Attr::Types(sig.resume.clone())),
        ));
        m.globals.push(Operation::module_op(
            OpKind::SsaContType,
            Attrs::new()
                .with("sym", Attr::Sym(cont_type_name(k)))
                .with("func_type", Attr::Sym(func_type_name(k)))
                .with("params", Attr::Types(sig.resume.clone()))
                .with("results", Attr::Types(vec![])),
        ));
    }
    let index_of = |t: &Type| -> Result<usize> {
        match t {
            Type::Cont(sig) => Ok(sigs.iter().position(|s| s == sig).expect("collected signature")),
            t => Err(Error::TypeMismatch(format!("expected a continuation, got {t}"))),
        }
    };

    rewrite_module(&mut m, &mut |mut op, vt, out| {
        match op.kind {
            OpKind::DcontNew => {
                let k = index_of(vt.ty(op.results[0]))?;
                let func = op.attrs.sym("func").unwrap_or_default().to_string();
                let fref = emit(vt, out, OpKind::SsaFuncRef, vec![], vec![Type::FuncRef], Attrs::new().with("func", Attr::Sym(func))).unwrap();
                op.kind = OpKind::SsaContNew;
                op.operands = vec![fref];
                op.attrs = Attrs::new().with("cont_type", Attr::Sym(cont_type_name(k)));
            }
            OpKind::DcontAlloc => op.kind = OpKind::SsaLocalDecl,
            OpKind::DcontLoad => op.kind = OpKind::SsaLocalGet,
            OpKind::DcontStore => {
                op.kind = OpKind::SsaLocalSet;
                op.operands.swap(0, 1);
            }
            OpKind::DcontSuspend => {
                let payload = vt.types_of(&op.operands);
                let resume = vt.types_of(&op.results);
                let k = sigs.iter().position(|s| s.payload == payload && s.resume == resume).ok_or_else(|| {
                    Error::SignatureMismatch(format!(
                        "suspend ({}) -> ({}) matches no continuation type",
                        join(&payload),
                        join(&resume)
                    ))
                })?;
                op.kind = OpKind::SsaSuspend;
                op.attrs = Attrs::new().with("tag", Attr::Sym(tag_name(k)));
            }
            OpKind::DcontResume => {
                if op.regions.len() != 1 {
                    return Err(Error::MultipleHandlers(op.regions.len()));
                }
                let cont = *op.operands.last().unwrap();
                let k = index_of(vt.ty(cont))?;
                let handler = op.regions.pop().unwrap().blocks.into_iter().next();

                let mut entry = vt.block("entry", vec![]);
                let attrs = Attrs::new()
                    .with("cont_type", Attr::Sym(cont_type_name(k)))
                    .with("tag", Attr::Sym(tag_name(k)));
                let resume = vt
                    .op(OpKind::SsaResume, op.operands.clone(), vec![], attrs)
                    .with_successors(vec!["inner_block_label".into(), "resume".into()]);
                entry.ops.push(resume);

                let mut fallback = vt.block("resume", vec![]);
                fallback.ops.push(
                    vt.op(OpKind::SsaBr, vec![], vec![], Attrs::new()).with_successors(vec!["outer_block_label".into()]),
                );

                // The contref is pushed first, so payloads come off the stack before it.
                let mut inner = vt.block("inner_block_label", vec![]);
                if let Some(h) = handler {
                    for &a in h.args.iter().skip(1).rev().chain(h.args.first()) {
                        inner.ops.push(op_defining(vt, OpKind::SsaOnStack, vec![], vec![a], Attrs::new()));
                    }
                    inner.ops.extend(h.ops);
                }
                inner.ops.push(
                    vt.op(OpKind::SsaPseudoBr, vec![], vec![], Attrs::new())
                        .with_successors(vec!["outer_block_label".into()]),
                );
                let outer = vt.block("outer_block_label", vec![]);

                let mut bb = vt
                    .op(OpKind::SsaBlockBlock, vec![], vec![], Attrs::new())
                    .with_regions(vec![Region { blocks: vec![entry, fallback, inner, outer] }]);
                bb.span = op.span.clone();
                out.push(bb);
                return Ok(());
            }
            _ => {}
        }
        out.push(op);
        Ok(())
    })?;

    map_module_types(&mut m, &|t| map_cont(t, &sigs));
    refresh_level(&mut m);
    Ok(m)
}

fn join(ts: &[Type]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::test_util::{parse, verified};
    use crate::lower::{convert_arith, convert_func, convert_memref, convert_scf, layout_data_segments, LowerOptions};

    fn lower(src: &str) -> Result<IrModule> {
        let m = convert_func(convert_arith(parse(src))?)?;
        let layout = layout_data_segments(&m, crate::lower::DEFAULT_HEAP_RESERVE)?;
        convert_dcont(convert_scf(convert_memref(m, &layout, &LowerOptions::default())?)?)
    }

    #[test]
    fn generator_gets_one_tag() {
        let out = lower(include_str!("../../corpus/generator.mir")).unwrap();
        let text = verified(&out);
        assert!(text.contains("ssawasm.tag {sym = @yield_0, params = [i32], results = []}"), "{text}");
        assert!(text.contains("ssawasm.cont_type {sym = @ct_0, func_type = @ft_0"), "{text}");
        assert!(!text.contains("@yield_1"), "{text}");
        assert!(text.contains("ssawasm.block_block"), "{text}");
        assert!(text.contains("ssawasm.suspend %"), "{text}");
        assert_eq!(out.level, crate::ir::Level::SsaWasm);
    }

    #[test]
    fn handler_binds_payload_then_contref() {
        let text = verified(&lower(include_str!("../../corpus/generator.mir")).unwrap());
        let inner = text.split("^inner_block_label:").nth(1).unwrap();
        let mut lines = inner.lines().skip(1).map(str::trim);
        assert!(lines.next().unwrap().ends_with("ssawasm.on_stack : i32"), "{text}");
        assert!(lines.next().unwrap().ends_with("ssawasm.on_stack : contref<@ct_0>"), "{text}");
    }

    #[test]
    fn empty_handler_has_no_bindings() {
        let src = "module {\n  func.func private @body() {\n    func.return\n  }\n  func.func @main() {\n    %c = dcont.new {func = @body} : cont<() -> ()>\n    dcont.resume %c ({\n    ^h(%k: cont<() -> ()>):\n    })\n    func.return\n  }\n}";
        let text = verified(&lower(src).unwrap());
        assert_eq!(text.matches("on_stack").count(), 1, "{text}");
        assert!(text.contains("ssawasm.tag {sym = @yield_0, params = [], results = []}"), "{text}");
    }

    #[test]
    fn two_handlers_rejected() {
        let src = "module {\n  func.func private @body() {\n    func.return\n  }\n  func.func @main() {\n    %c = dcont.new {func = @body} : cont<() -> ()>\n    dcont.resume %c ({\n    ^h(%k: cont<() -> ()>):\n    }, {\n    ^g(%j: cont<() -> ()>):\n    })\n    func.return\n  }\n}";
        assert!(matches!(lower(src), Err(Error::MultipleHandlers(2))));
    }

    #[test]
    fn scheduler_lowers() {
        verified(&lower(include_str!("../../corpus/scheduler.mir")).unwrap());
    }
}
