use super::{emit, op_defining, refresh_level, resolve_index_types, rewrite_module};
use crate::error::{Error, Result};
use crate::ir::{Attrs, Block, OpKind, Operation, Region, Type, ValueId, ValueTable};
use crate::ir::IrModule;

/// Structured control flow becomes `ssawasm.block_loop` / `ssawasm.if`;
/// loop-carried values and results live in locals declared just before the
/// composite op.
pub fn convert_scf(mut m: IrModule) -> Result<IrModule> {
    resolve_index_types(&mut m);
    rewrite_module(&mut m, &mut |op, vt, out| match op.kind {
        OpKind::ScfFor => lower_for(op, vt, out),
        OpKind::ScfWhile => lower_while(op, vt, out),
        OpKind::ScfIf => lower_if(op, vt, out),
        OpKind::ScfYield | OpKind::ScfCondition => {
            out.push(op);
            Ok(())
        }
        k if k.dialect() == "scf" => Err(Error::UnsupportedScfOp(k.name().to_string())),
        _ => {
            out.push(op);
            Ok(())
        }
    })?;
    refresh_level(&mut m);
    Ok(m)
}

fn local_decl(vt: &mut ValueTable, out: &mut Vec<Operation>, ty: &Type) -> Result<ValueId> {
    if !ty.is_scalar() {
        return Err(Error::UnsupportedMemRef(format!("loop-carried or result value of type {ty}")));
    }
    Ok(emit(vt, out, OpKind::SsaLocalDecl, vec![], vec![Type::local(ty.clone())], Attrs::new()).unwrap())
}

fn set(vt: &mut ValueTable, out: &mut Vec<Operation>, local: ValueId, v: ValueId) {
    emit(vt, out, OpKind::SsaLocalSet, vec![local, v], vec![], Attrs::new());
}

fn get(vt: &mut ValueTable, out: &mut Vec<Operation>, local: ValueId) -> ValueId {
    let ty = vt.ty(local).local_inner().cloned().expect("local handle");
    emit(vt, out, OpKind::SsaLocalGet, vec![local], vec![ty], Attrs::new()).unwrap()
}

/// Re-binds existing values (block args, op results) as reads of `locals`.
fn rebind(vt: &mut ValueTable, out: &mut Vec<Operation>, locals: &[ValueId], values: &[ValueId]) {
    for (&l, &v) in locals.iter().zip(values) {
        out.push(op_defining(vt, OpKind::SsaLocalGet, vec![l], vec![v], Attrs::new()));
    }
}

fn jump(vt: &mut ValueTable, kind: OpKind, operands: Vec<ValueId>, targets: &[&str]) -> Operation {
    vt.op(kind, operands, vec![], Attrs::new()).with_successors(targets.iter().map(|s| s.to_string()).collect())
}

/// Splits a single-block region into its block and the operands of its
/// terminator, which is dropped.
fn take_body(region: &mut Region) -> (Block, Vec<ValueId>) {
    let mut block = region.blocks.remove(0);
    let term = block.ops.pop().expect("scf region terminator");
    (block, term.operands)
}

fn lower_for(mut op: Operation, vt: &mut ValueTable, out: &mut Vec<Operation>) -> Result<()> {
    let (lb, ub, step) = (op.operands[0], op.operands[1], op.operands[2]);
    let inits = op.operands[3..].to_vec();
    let iv_ty = vt.ty(lb).clone();
    let (body, yields) = take_body(&mut op.regions[0]);

    let l_iv = local_decl(vt, out, &iv_ty)?;
    let l_ub = local_decl(vt, out, &iv_ty)?;
    let l_step = local_decl(vt, out, &iv_ty)?;
    let mut l_iters = Vec::new();
    for &v in &inits {
        let ty = vt.ty(v).clone();
        l_iters.push(local_decl(vt, out, &ty)?);
    }

    let mut entry = vt.block("entry", vec![]);
    set(vt, &mut entry.ops, l_iv, lb);
    set(vt, &mut entry.ops, l_ub, ub);
    set(vt, &mut entry.ops, l_step, step);
    for (&l, &v) in l_iters.iter().zip(&inits) {
        set(vt, &mut entry.ops, l, v);
    }
    entry.ops.push(jump(vt, OpKind::SsaPseudoBr, vec![], &["loop_label"]));

    let mut head = vt.block("loop_label", vec![]);
    let i = get(vt, &mut head.ops, l_iv);
    let u = get(vt, &mut head.ops, l_ub);
    let c = emit(vt, &mut head.ops, OpKind::SsaLtS, vec![i, u], vec![Type::I32], Attrs::new()).unwrap();
    head.ops.push(jump(vt, OpKind::SsaPseudoCondBr, vec![c], &["body", "block_label"]));

    let mut inner = vt.block("body", vec![]);
    rebind(vt, &mut inner.ops, &[l_iv], &body.args[..1]);
    rebind(vt, &mut inner.ops, &l_iters, &body.args[1..]);
    inner.ops.extend(body.ops);
    inner.ops.push(jump(vt, OpKind::SsaPseudoBr, vec![], &["ind_var_update"]));

    let mut update = vt.block("ind_var_update", vec![]);
    let i = get(vt, &mut update.ops, l_iv);
    let s = get(vt, &mut update.ops, l_step);
    let next = emit(vt, &mut update.ops, OpKind::SsaAdd, vec![i, s], vec![iv_ty], Attrs::new()).unwrap();
    set(vt, &mut update.ops, l_iv, next);
    for (&l, &v) in l_iters.iter().zip(&yields) {
        set(vt, &mut update.ops, l, v);
    }
    update.ops.push(jump(vt, OpKind::SsaBr, vec![], &["loop_label"]));

    let mut exit = vt.block("block_label", vec![]);
    exit.ops.push(vt.op(OpKind::SsaExit, vec![], vec![], Attrs::new()));

    push_loop(vt, out, vec![entry, head, inner, update, exit], op.span.clone());
    rebind(vt, out, &l_iters, &op.results);
    Ok(())
}

fn lower_while(mut op: Operation, vt: &mut ValueTable, out: &mut Vec<Operation>) -> Result<()> {
    let (before, cond_args) = take_body(&mut op.regions[0]);
    let (after, yields) = take_body(&mut op.regions[1]);

    let mut l_before = Vec::new();
    for &v in &op.operands {
        let ty = vt.ty(v).clone();
        l_before.push(local_decl(vt, out, &ty)?);
    }
    let mut l_res = Vec::new();
    for &v in &op.results {
        let ty = vt.ty(v).clone();
        l_res.push(local_decl(vt, out, &ty)?);
    }

    let mut entry = vt.block("entry", vec![]);
    for (&l, &v) in l_before.iter().zip(&op.operands) {
        set(vt, &mut entry.ops, l, v);
    }
    entry.ops.push(jump(vt, OpKind::SsaPseudoBr, vec![], &["loop_label"]));

    let mut head = vt.block("loop_label", vec![]);
    rebind(vt, &mut head.ops, &l_before, &before.args);
    head.ops.extend(before.ops);
    for (&l, &v) in l_res.iter().zip(&cond_args[1..]) {
        set(vt, &mut head.ops, l, v);
    }
    head.ops.push(jump(vt, OpKind::SsaPseudoCondBr, vec![cond_args[0]], &["body", "block_label"]));

    let mut inner = vt.block("body", vec![]);
    rebind(vt, &mut inner.ops, &l_res, &after.args);
    inner.ops.extend(after.ops);
    for (&l, &v) in l_before.iter().zip(&yields) {
        set(vt, &mut inner.ops, l, v);
    }
    inner.ops.push(jump(vt, OpKind::SsaBr, vec![], &["loop_label"]));

    let mut exit = vt.block("block_label", vec![]);
    exit.ops.push(vt.op(OpKind::SsaExit, vec![], vec![], Attrs::new()));

    push_loop(vt, out, vec![entry, head, inner, exit], op.span.clone());
    rebind(vt, out, &l_res, &op.results);
    Ok(())
}

fn push_loop(vt: &mut ValueTable, out: &mut Vec<Operation>, blocks: Vec<Block>, span: Option<crate::ir::SourceSpan>) {
    let mut lp = vt.op(OpKind::SsaBlockLoop, vec![], vec![], Attrs::new()).with_regions(vec![Region { blocks }]);
    lp.span = span;
    out.push(lp);
}

fn lower_if(mut op: Operation, vt: &mut ValueTable, out: &mut Vec<Operation>) -> Result<()> {
    let mut l_res = Vec::new();
    for &v in &op.results {
        let ty = vt.ty(v).clone();
        l_res.push(local_decl(vt, out, &ty)?);
    }
    let mut regions = Vec::new();
    for (region, label) in op.regions.iter_mut().zip(["then", "else"]) {
        if region.is_empty() {
            regions.push(Region::default());
            continue;
        }
        let (body, yields) = take_body(region);
        let mut block = vt.block(label, vec![]);
        block.ops = body.ops;
        for (&l, &v) in l_res.iter().zip(&yields) {
            set(vt, &mut block.ops, l, v);
        }
        regions.push(Region::single(block));
    }
    let mut new = vt.op(OpKind::SsaIf, op.operands.clone(), vec![], Attrs::new()).with_regions(regions);
    new.span = op.span.clone();
    out.push(new);
    rebind(vt, out, &l_res, &op.results);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::test_util::{parse, verified};
    use crate::lower::{convert_arith, convert_func};

    fn lower(src: &str) -> Result<IrModule> {
        convert_scf(convert_func(convert_arith(parse(src))?)?)
    }

    const SUM: &str = "module {\n  func.func @sum(%n: i32) -> i32 {\n    %lb = arith.constant {value = 0} : i32\n    %st = arith.constant {value = 1} : i32\n    %r = scf.for %lb, %n, %st, %lb ({\n    ^body(%i: i32, %acc: i32):\n      %s = arith.addi %acc, %i : i32\n      scf.yield %s\n    }) : i32\n    func.return %r\n  }\n}";

    #[test]
    fn for_becomes_block_loop_skeleton() {
        let text = verified(&lower(SUM).unwrap());
        let labels: Vec<&str> = text.lines().map(str::trim).filter(|l| l.starts_with('^')).collect();
        assert_eq!(labels, vec!["^entry:", "^loop_label:", "^body:", "^ind_var_update:", "^block_label:"], "{text}");
        assert!(text.contains("ssawasm.pseudo_cond_br %"), "{text}");
        assert!(text.contains("[^body, ^block_label]"), "{text}");
        assert!(text.contains("ssawasm.exit"), "{text}");
        assert!(!text.contains("scf."), "{text}");
    }

    #[test]
    fn iter_arg_gets_its_own_local() {
        let text = verified(&lower(SUM).unwrap());
        // induction variable, ub snapshot, step snapshot, one iter_arg
        assert_eq!(text.matches("ssawasm.local_decl").count(), 4, "{text}");
    }

    #[test]
    fn while_and_if_lower() {
        let src = "module {\n  func.func @gcd(%a: i32, %b: i32) -> i32 {\n    %r0, %r1 = scf.while %a, %b ({\n    ^before(%x: i32, %y: i32):\n      %z = arith.constant {value = 0} : i32\n      %c = arith.cmpi %y, %z {predicate = \"ne\"} : i32\n      scf.condition %c, %x, %y\n    }, {\n    ^after(%x2: i32, %y2: i32):\n      %m = arith.remsi %x2, %y2 : i32\n      scf.yield %y2, %m\n    }) : i32, i32\n    %one = arith.constant {value = 1} : i32\n    %big = arith.cmpi %r0, %one {predicate = \"sgt\"} : i32\n    %o = scf.if %big ({\n    ^t:\n      scf.yield %r0\n    }, {\n    ^e:\n      scf.yield %one\n    }) : i32\n    func.return %o\n  }\n}";
        let text = verified(&lower(src).unwrap());
        assert!(text.contains("ssawasm.block_loop"), "{text}");
        assert!(text.contains("ssawasm.if"), "{text}");
        assert!(text.contains("^then:"), "{text}");
        assert!(!text.contains("scf."), "{text}");
    }

    #[test]
    fn execute_region_is_unsupported() {
        let src = "module {\n  func.func @f() -> i32 {\n    %r = scf.execute_region ({\n    ^bb:\n      %c = arith.constant {value = 1} : i32\n      scf.yield %c\n    }) : i32\n    func.return %r\n  }\n}";
        assert!(matches!(lower(src), Err(Error::UnsupportedScfOp(n)) if n == "execute_region"));
    }
}
