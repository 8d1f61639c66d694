use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ir::{
    resolve_chains, substitute_region, walk_region, walk_region_mut, Attrs, Function, IrModule, OpKind, Operation, Region, Type,
    ValueId, ValueTable,
};

/// Values that live on the operand stack, as opposed to local handles.
fn on_stack(vt: &ValueTable, v: ValueId) -> bool {
    !vt.ty(v).is_local()
}

/// Addresses become plain `i32` and the casts between the two views vanish.
fn erase_memrefs(f: &mut Function) {
    let Some(body) = f.body.as_mut() else { return };
    let mut subst = HashMap::new();
    strip_casts(body, &mut subst);
    substitute_region(body, &subst);
    for v in f.values.values.iter_mut() {
        if v.ty.as_memref().is_some() {
            v.ty = Type::I32;
        }
    }
    walk_region_mut(body, &mut |op| op.attrs.map_types(&|t| if t.as_memref().is_some() { Type::I32 } else { t.clone() }));
}

fn strip_casts(region: &mut Region, subst: &mut HashMap<ValueId, ValueId>) {
    for block in region.blocks.iter_mut() {
        block.ops.retain_mut(|op| {
            for r in op.regions.iter_mut() {
                strip_casts(r, subst);
            }
            if matches!(op.kind, OpKind::SsaCastI32ToMemref | OpKind::SsaCastMemrefToI32) {
                let src = subst.get(&op.operands[0]).copied().unwrap_or(op.operands[0]);
                subst.insert(op.results[0], src);
                false
            } else {
                true
            }
        });
    }
}

/// Spill-all stackification: every stack value is stored to a fresh local
/// right after its definition and reloaded right before each use, in
/// operand order. Unread results of side-effecting ops are dropped; unread
/// pure ops disappear.
pub fn introduce_locals(mut m: IrModule) -> IrModule {
    for f in m.functions.iter_mut() {
        introduce_locals_fn(f);
    }
    m
}

pub fn introduce_locals_fn(f: &mut Function) {
    erase_memrefs(f);
    let uses = f.count_uses();
    let Some(mut body) = f.body.take() else { return };
    let mut slots = HashMap::new();
    spill_region(&mut body, &mut f.values, &uses, &mut slots);
    f.body = Some(body);
}

fn spill_region(
    region: &mut Region,
    vt: &mut ValueTable,
    uses: &HashMap<ValueId, usize>,
    slots: &mut HashMap<ValueId, ValueId>,
) {
    for block in region.blocks.iter_mut() {
        let old = std::mem::take(&mut block.ops);
        let mut new = Vec::with_capacity(old.len() * 3);
        for mut op in old {
            for r in op.regions.iter_mut() {
                spill_region(r, vt, uses, slots);
            }
            // Slots for this op's results are declared up front so that
            // declaration order follows definition order.
            let mut decls = Vec::new();
            for &r in &op.results {
                if on_stack(vt, r) && uses.get(&r).copied().unwrap_or(0) > 0 {
                    let d = vt.op(OpKind::SsaLocalDecl, vec![], vec![Type::local(vt.ty(r).clone())], Attrs::new());
                    slots.insert(r, d.results[0]);
                    decls.push(d);
                }
            }
            new.extend(decls);
            for i in 0..op.operands.len() {
                let v = op.operands[i];
                if !on_stack(vt, v) {
                    continue;
                }
                let Some(&slot) = slots.get(&v) else { continue };
                let get = vt.op(OpKind::SsaLocalGet, vec![slot], vec![vt.ty(v).clone()], Attrs::new());
                op.operands[i] = get.results[0];
                new.push(get);
            }
            let results = op.results.clone();
            let unused = results.iter().all(|r| uses.get(r).copied().unwrap_or(0) == 0);
            if !results.is_empty() && unused && (op.kind.is_pure() || op.kind == OpKind::SsaLocalGet) {
                continue;
            }
            new.push(op);
            for &r in results.iter().rev() {
                if !on_stack(vt, r) {
                    continue;
                }
                match slots.get(&r) {
                    Some(&slot) => new.push(vt.op(OpKind::SsaLocalSet, vec![slot, r], vec![], Attrs::new())),
                    None => new.push(vt.op(OpKind::SsaDrop, vec![r], vec![], Attrs::new())),
                }
            }
        }
        block.ops = new;
    }
}

#[derive(Default)]
struct SlotUse {
    sets: usize,
    gets: usize,
    /// The single set stores a constant defined by the op right before it.
    const_fed: bool,
}

fn slot_uses(body: &Region, params: &HashSet<ValueId>) -> HashMap<ValueId, SlotUse> {
    let mut out: HashMap<ValueId, SlotUse> = HashMap::new();
    fn visit(region: &Region, out: &mut HashMap<ValueId, SlotUse>) {
        for block in &region.blocks {
            for (i, op) in block.ops.iter().enumerate() {
                for r in &op.regions {
                    visit(r, out);
                }
                match op.kind {
                    OpKind::SsaLocalDecl => {
                        out.entry(op.results[0]).or_default();
                    }
                    OpKind::SsaLocalGet => out.entry(op.operands[0]).or_default().gets += 1,
                    OpKind::SsaLocalSet => {
                        let e = out.entry(op.operands[0]).or_default();
                        e.sets += 1;
                        e.const_fed = i > 0 && {
                            let prev = &block.ops[i - 1];
                            prev.kind == OpKind::SsaConst && prev.results[0] == op.operands[1]
                        };
                    }
                    _ => {}
                }
            }
        }
    }
    visit(body, &mut out);
    out.retain(|k, _| !params.contains(k));
    out
}

/// Removes `local_set L ... local_get L` pairs when that get is the only read
/// of a local written once and the code between them is stack neutral, letting
/// the value flow on the stack.
/// Single-use constants are also rematerialized at their use.
pub fn fuse_stack_locals(mut m: IrModule) -> IrModule {
    for f in m.functions.iter_mut() {
        fuse_stack_locals_fn(f);
    }
    m
}

pub fn fuse_stack_locals_fn(f: &mut Function) {
    let params: HashSet<ValueId> = f.param_values().into_iter().collect();
    let Some(body) = f.body.as_mut() else { return };
    let vt = &f.values;
    let uses = slot_uses(body, &params);
    let single = |u: &SlotUse| u.sets == 1 && u.gets == 1;

    // Constants move to their only use.
    let sink: HashSet<ValueId> = uses.iter().filter(|(_, u)| single(u) && u.const_fed).map(|(&k, _)| k).collect();
    let mut consts = HashMap::new();
    take_sunk_consts(body, &sink, &mut consts);
    let mut subst = HashMap::new();
    place_sunk_consts(body, &mut consts, &mut subst);

    // Adjacent set/get pairs.
    let fusable: HashSet<ValueId> = uses.iter().filter(|(_, u)| single(u)).map(|(&k, _)| k).collect();
    let mut dead = sink;
    fuse_region(body, vt, &fusable, &mut subst, &mut dead);
    resolve_chains(&mut subst);
    substitute_region(body, &subst);
    remove_decls(body, &dead);
}

fn take_sunk_consts(region: &mut Region, sink: &HashSet<ValueId>, consts: &mut HashMap<ValueId, Operation>) {
    for block in region.blocks.iter_mut() {
        let old = std::mem::take(&mut block.ops);
        let mut new: Vec<Operation> = Vec::with_capacity(old.len());
        for mut op in old {
            for r in op.regions.iter_mut() {
                take_sunk_consts(r, sink, consts);
            }
            if op.kind == OpKind::SsaLocalSet && sink.contains(&op.operands[0]) {
                let c = new.pop().expect("constant precedes its spill");
                consts.insert(op.operands[0], c);
                continue;
            }
            new.push(op);
        }
        block.ops = new;
    }
}

fn place_sunk_consts(region: &mut Region, consts: &mut HashMap<ValueId, Operation>, subst: &mut HashMap<ValueId, ValueId>) {
    for block in region.blocks.iter_mut() {
        for op in block.ops.iter_mut() {
            for r in op.regions.iter_mut() {
                place_sunk_consts(r, consts, subst);
            }
            if op.kind == OpKind::SsaLocalGet {
                if let Some(c) = consts.remove(&op.operands[0]) {
                    subst.insert(op.results[0], c.results[0]);
                    *op = c;
                }
            }
        }
    }
}

/// Net stack traffic of one op: (pops, pushes).
fn stack_effect(vt: &ValueTable, op: &Operation) -> (usize, usize) {
    let pops = op.operands.iter().filter(|&&v| on_stack(vt, v)).count();
    let pushes = op.results.iter().filter(|&&v| on_stack(vt, v)).count();
    (pops, pushes)
}

/// Position of the `local_set` feeding the get at `at`, provided every op in
/// between is stack neutral: it consumes only what it produces itself and
/// leaves nothing behind. Dropping the pair then keeps the value in place.
fn feeding_set(ops: &[Operation], at: usize, slot: ValueId, vt: &ValueTable) -> Option<usize> {
    let mut pending = 0usize;
    for i in (0..at).rev() {
        let op = &ops[i];
        if op.kind == OpKind::SsaLocalSet && op.operands[0] == slot {
            return (pending == 0).then_some(i);
        }
        // Block inputs already sit below the current stack.
        if op.kind == OpKind::SsaOnStack {
            return None;
        }
        let (pops, pushes) = stack_effect(vt, op);
        pending = pending.checked_sub(pushes)? + pops;
    }
    None
}

fn fuse_region(
    region: &mut Region,
    vt: &ValueTable,
    fusable: &HashSet<ValueId>,
    subst: &mut HashMap<ValueId, ValueId>,
    dead: &mut HashSet<ValueId>,
) {
    for block in region.blocks.iter_mut() {
        for op in block.ops.iter_mut() {
            for r in op.regions.iter_mut() {
                fuse_region(r, vt, fusable, subst, dead);
            }
        }
        let old = std::mem::take(&mut block.ops);
        let mut new: Vec<Operation> = Vec::with_capacity(old.len());
        for op in old {
            if op.kind == OpKind::SsaLocalGet && fusable.contains(&op.operands[0]) {
                if let Some(at) = feeding_set(&new, new.len(), op.operands[0], vt) {
                    let set = new.remove(at);
                    subst.insert(op.results[0], set.operands[1]);
                    dead.insert(op.operands[0]);
                    continue;
                }
            }
            new.push(op);
        }
        block.ops = new;
    }
}

fn remove_decls(region: &mut Region, dead: &HashSet<ValueId>) {
    for block in region.blocks.iter_mut() {
        block.ops.retain_mut(|op| {
            for r in op.regions.iter_mut() {
                remove_decls(r, dead);
            }
            !(op.kind == OpKind::SsaLocalDecl && dead.contains(&op.results[0]))
        });
    }
}

/// Checks that every block consumes exactly the stack values produced before
/// it in order and leaves the stack empty, so SSA operands can be dropped.
pub fn check_stack_discipline(f: &Function) -> Result<()> {
    match &f.body {
        Some(body) => check_region(body, &f.values, f),
        None => Ok(()),
    }
}

fn check_region(region: &Region, vt: &ValueTable, f: &Function) -> Result<()> {
    for block in &region.blocks {
        let mut stack: Vec<ValueId> = Vec::new();
        for op in &block.ops {
            let fail = || Error::StackDiscipline(format!("{} in @{} ^{}", op.full_name(), f.name, block.label));
            let pops: Vec<ValueId> = op.operands.iter().copied().filter(|&v| on_stack(vt, v)).collect();
            if stack.len() < pops.len() || stack[stack.len() - pops.len()..] != pops[..] {
                return Err(fail());
            }
            stack.truncate(stack.len() - pops.len());
            for r in &op.regions {
                check_region(r, vt, f)?;
            }
            stack.extend(op.results.iter().copied().filter(|&v| on_stack(vt, v)));
        }
        if !stack.is_empty() {
            return Err(Error::StackDiscipline(format!(
                "^{} in @{} leaves {} value(s) on the stack",
                block.label,
                f.name,
                stack.len()
            )));
        }
    }
    Ok(())
}

/// Total number of operations that survive as Wasm instructions.
pub fn instruction_estimate(f: &Function) -> usize {
    let mut n = 0;
    if let Some(body) = &f.body {
        walk_region(body, &mut |op| {
            if !matches!(
                op.kind,
                OpKind::SsaLocalDecl | OpKind::SsaOnStack | OpKind::SsaExit | OpKind::SsaPseudoBr | OpKind::SsaCastI32ToMemref | OpKind::SsaCastMemrefToI32
            ) {
                n += 1;
            }
        });
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::verify_module;
    use crate::text::{parse_module, print_module};

    fn parse(src: &str) -> IrModule {
        parse_module(src).unwrap()
    }

    fn wrap(body: &str) -> String {
        format!("module attributes {{level = \"ssawasm\"}} {{\n  ssawasm.func @f(%p: local<i32>) -> i32 {{\n{body}  }}\n}}")
    }

    fn checked(m: &IrModule) -> String {
        let text = print_module(m);
        assert!(verify_module(m).is_empty(), "{:?}\n{text}", verify_module(m));
        for f in &m.functions {
            check_stack_discipline(f).unwrap_or_else(|e| panic!("{e}\n{text}"));
        }
        text
    }

    // `%0` read twice: one set, two gets.
    const SHARED: &str = "    %x = ssawasm.local_get %p : i32\n    %s = ssawasm.add %x, %x : i32\n    ssawasm.return %s\n";

    #[test]
    fn shared_value_set_once_read_twice() {
        let m = introduce_locals(parse(&wrap(SHARED)));
        let text = checked(&m);
        assert_eq!(text.matches("local_set").count(), 2, "{text}");
        assert_eq!(text.matches("local_get").count(), 4, "{text}");
        let fused = fuse_stack_locals(m);
        let text = checked(&fused);
        // the two-get local survives; the sum flows straight into the return
        assert_eq!(text.matches("local_set").count(), 1, "{text}");
        assert_eq!(text.matches("local_get").count(), 3, "{text}");
    }

    #[test]
    fn single_use_chain_fuses_completely() {
        let src = wrap("    %x = ssawasm.local_get %p : i32\n    %a = ssawasm.add %x, %x : i32\n    %b = ssawasm.mul %a, %a : i32\n    %c = ssawasm.eqz %b : i32\n    ssawasm.return %c\n");
        let spilled = introduce_locals(parse(&src));
        let fused = fuse_stack_locals(spilled.clone());
        let n0 = instruction_estimate(&spilled.functions[0]);
        let n1 = instruction_estimate(&fused.functions[0]);
        assert!(n1 < n0, "{n1} vs {n0}");
        checked(&fused);
    }

    #[test]
    fn fuses_across_stack_neutral_code() {
        // %y is spilled and reloaded between the spill and reload of %x.
        let src = wrap("    %x = ssawasm.local_get %p : i32\n    %y = ssawasm.local_get %p : i32\n    %a = ssawasm.lt_s %x, %y : i32\n    ssawasm.return %a\n");
        let text = checked(&fuse_stack_locals(introduce_locals(parse(&src))));
        assert_eq!(text.matches("local_decl").count(), 0, "{text}");
    }

    #[test]
    fn unused_results_are_dropped() {
        let src = wrap("    %x = ssawasm.local_get %p : i32\n    %c = ssawasm.call %x {callee = @f} : i32\n    %k = ssawasm.const {value = 3} : i32\n    ssawasm.return %x\n");
        let text = checked(&introduce_locals(parse(&src)));
        assert!(text.contains("ssawasm.drop"), "{text}");
        assert!(!text.contains("ssawasm.const"), "{text}");
    }

    #[test]
    fn constants_sink_to_their_use() {
        let src = wrap("    %k = ssawasm.const {value = 7} : i32\n    %x = ssawasm.local_get %p : i32\n    %a = ssawasm.add %x, %k : i32\n    ssawasm.return %a\n");
        let text = checked(&fuse_stack_locals(introduce_locals(parse(&src))));
        assert_eq!(text.matches("local_decl").count(), 0, "{text}");
        let get = text.find("local_get").unwrap();
        let k = text.find("ssawasm.const").unwrap();
        assert!(get < k, "{text}");
    }

    #[test]
    fn handler_bindings_pop_payload_then_contref() {
        let src = "module attributes {level = \"ssawasm\"} {
  ssawasm.tag {sym = @yield_0, params = [i32], results = []}
  ssawasm.cont_type {sym = @ct_0, func_type = @ft_0, params = [], results = []}
  ssawasm.func private @g() {
    %v = ssawasm.const {value = 1} : i32
    ssawasm.suspend %v {tag = @yield_0}
    ssawasm.return
  }
  ssawasm.func @main() -> i32 {
    %f = ssawasm.func_ref {func = @g} : funcref
    %c = ssawasm.cont_new %f {cont_type = @ct_0} : contref<@ct_0>
    %slot = ssawasm.local_decl : local<contref<@ct_0>>
    %acc = ssawasm.local_decl : local<i32>
    ssawasm.block_block ({
    ^entry:
      ssawasm.resume %c [^inner_block_label, ^resume] {cont_type = @ct_0, tag = @yield_0}
    ^resume:
      ssawasm.br [^outer_block_label]
    ^inner_block_label:
      %x = ssawasm.on_stack : i32
      %k = ssawasm.on_stack : contref<@ct_0>
      ssawasm.local_set %slot, %k
      ssawasm.local_set %acc, %x
      ssawasm.pseudo_br [^outer_block_label]
    ^outer_block_label:
    })
    %r = ssawasm.local_get %acc : i32
    ssawasm.return %r
  }
}";
        let m = parse(src);
        let text = checked(&introduce_locals(m));
        let inner = text.split("^inner_block_label:").nth(1).unwrap();
        let lines: Vec<&str> = inner.lines().map(str::trim).filter(|l| !l.is_empty() && !l.contains("local_decl")).take(4).collect();
        assert!(lines[0].ends_with("ssawasm.on_stack : i32"), "{text}");
        assert!(lines[1].contains("local_set"), "{text}");
        assert!(lines[2].ends_with("ssawasm.on_stack : contref<@ct_0>"), "{text}");
        assert!(lines[3].contains("local_set"), "{text}");
    }

    #[test]
    fn discipline_violation_detected() {
        let m = parse(&wrap(SHARED));
        assert!(matches!(check_stack_discipline(&m.functions[0]), Err(Error::StackDiscipline(_))));
    }
}
