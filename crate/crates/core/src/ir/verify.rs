//! Structural, type and dominance checks over an [`IrModule`].

use std::collections::{HashMap, HashSet};

use super::diag::{Diagnostic, Rule};
use super::dominance::Dominators;
use super::module::{Block, FuncKind, Function, IrModule, Operation, Region, ValueId};
use super::ops::{OpKind, TypeRule};
use super::types::Type;
use super::Attr;

/// Verifies `m`; an empty result means the module is well formed.
pub fn verify_module(m: &IrModule) -> Vec<Diagnostic> {
    let mut v = Verifier::new(m);
    v.run();
    v.diags
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RegionRole {
    FuncBody,
    Scf,
    BlockLoop,
    BlockBlock,
    SsaIf,
    Handler,
    Wasm,
}

struct Signature {
    params: Vec<Type>,
    results: Vec<Type>,
}

struct Verifier<'m> {
    m: &'m IrModule,
    diags: Vec<Diagnostic>,
    callees: HashMap<&'m str, Signature>,
    globals_by_sym: HashMap<&'m str, &'m Operation>,
}

impl<'m> Verifier<'m> {
    fn new(m: &'m IrModule) -> Self {
        Verifier { m, diags: Vec::new(), callees: HashMap::new(), globals_by_sym: HashMap::new() }
    }

    fn run(&mut self) {
        let mut seen = HashSet::new();
        for f in &self.m.functions {
            if !seen.insert(f.name.as_str()) {
                self.diags.push(Diagnostic::new(
                    Rule::DuplicateSymbol,
                    format!("function @{} defined more than once", f.name),
                ).at(f.span.clone()));
            }
            self.callees.insert(
                &f.name,
                Signature { params: f.params.clone(), results: f.results.clone() },
            );
        }
        for op in &self.m.globals {
            self.check_global(op, &mut seen);
        }
        for f in &self.m.functions {
            self.check_function(f);
        }
    }

    fn check_global(&mut self, op: &'m Operation, seen: &mut HashSet<&'m str>) {
        if !op.kind.is_module_level() {
            self.diags.push(
                Diagnostic::new(Rule::UnknownOp, format!("{} is not a module-level operation", op.full_name()))
                    .at(op.span.clone()),
            );
            return;
        }
        self.check_attrs(op, None);
        if let Some(sym) = op.attrs.sym("sym") {
            if !seen.insert(sym) {
                self.diags.push(
                    Diagnostic::new(Rule::DuplicateSymbol, format!("symbol @{sym} defined more than once"))
                        .at(op.span.clone())
                        .on_op(op.full_name()),
                );
            }
            self.globals_by_sym.insert(sym, op);
            if matches!(op.kind, OpKind::SsaFuncImport | OpKind::WasmImport) {
                let params = op.attrs.types("params").unwrap_or_default().to_vec();
                let results = op.attrs.types("results").unwrap_or_default().to_vec();
                self.callees.insert(sym, Signature { params, results });
            }
        }
        match op.kind {
            OpKind::MemrefGlobal | OpKind::SsaData => {
                let Some(ty) = op.attrs.ty("type") else { return };
                let Some(mt) = ty.as_memref() else {
                    self.err(Rule::InvalidType, format!("global data must have memref type, got {ty}"), op, None);
                    return;
                };
                if let Err(e) = ty.check() {
                    self.err(Rule::InvalidType, e, op, None);
                }
                if let Some(init) = op.attrs.bytes("init") {
                    if init.len() as u64 != mt.byte_size() {
                        self.err(
                            Rule::TypeMismatch,
                            format!("initializer has {} bytes, {ty} needs {}", init.len(), mt.byte_size()),
                            op,
                            None,
                        );
                    }
                }
            }
            _ => {}
        }
    }

    fn err(&mut self, rule: Rule, msg: impl Into<String>, op: &Operation, f: Option<&Function>) {
        let mut d = Diagnostic::new(rule, msg).at(op.span.clone()).on_op(op.full_name());
        if let Some(f) = f {
            d = d.in_function(&f.name);
        }
        self.diags.push(d);
    }

    fn check_attrs(&mut self, op: &Operation, f: Option<&Function>) {
        let sig = op.kind.signature();
        for &name in sig.required_attrs {
            if op.attrs.get(name).is_none() {
                self.err(Rule::MissingAttribute, format!("missing attribute `{name}`"), op, f);
            }
        }
    }

    fn check_function(&mut self, f: &'m Function) {
        for t in f.params.iter().chain(&f.results) {
            if let Err(e) = t.check() {
                self.diags.push(Diagnostic::new(Rule::InvalidType, e).in_function(&f.name).at(f.span.clone()));
            }
        }
        if f.kind == FuncKind::SsaWasm {
            for (i, t) in f.params.iter().enumerate() {
                if !t.is_local() {
                    self.diags.push(
                        Diagnostic::new(
                            Rule::ParamNotLocal,
                            format!("parameter {i} of ssawasm.func has type {t}, expected local<_>"),
                        )
                        .in_function(&f.name)
                        .at(f.span.clone()),
                    );
                }
            }
        }
        let Some(body) = &f.body else { return };

        // Each value defined exactly once.
        let mut defs: HashMap<ValueId, usize> = HashMap::new();
        count_defs(body, &mut defs);
        for (v, n) in &defs {
            if *n > 1 {
                self.diags.push(
                    Diagnostic::new(Rule::MultipleDefinitions, format!("value %{} defined {n} times", v.0))
                        .in_function(&f.name),
                );
            }
        }
        if let Some(entry) = body.blocks.first() {
            let arg_tys: Vec<Type> = entry.args.iter().map(|&a| f.ty(a).clone()).collect();
            if arg_tys != f.params {
                self.diags.push(
                    Diagnostic::new(Rule::TypeMismatch, "entry block arguments do not match parameters")
                        .in_function(&f.name),
                );
            }
        }
        if matches!(f.kind, FuncKind::Func | FuncKind::SsaWasm) {
            let ends_in_return = body
                .blocks
                .last()
                .and_then(|b| b.ops.last())
                .is_some_and(|op| matches!(op.kind, OpKind::FuncReturn | OpKind::SsaReturn));
            if !ends_in_return {
                self.diags.push(
                    Diagnostic::new(Rule::MissingTerminator, "function body must end with a return")
                        .in_function(&f.name)
                        .at(f.span.clone()),
                );
            }
        }
        let role = if f.kind == FuncKind::Wasm { RegionRole::Wasm } else { RegionRole::FuncBody };
        let mut visible = HashSet::new();
        self.check_region(f, body, role, &mut visible);
    }

    fn check_region(
        &mut self,
        f: &'m Function,
        region: &'m Region,
        role: RegionRole,
        visible: &mut HashSet<ValueId>,
    ) {
        let doms = Dominators::compute(region);
        for (bi, block) in region.blocks.iter().enumerate() {
            let mut added = Vec::new();
            for d in doms.dominators_of(bi) {
                let dblock = &region.blocks[d];
                for v in block_defs(dblock) {
                    if visible.insert(v) {
                        added.push(v);
                    }
                }
            }
            for &a in &block.args {
                if visible.insert(a) {
                    added.push(a);
                }
            }
            self.check_block(f, region, bi, block, role, visible, &mut added);
            for v in added {
                visible.remove(&v);
            }
        }
        self.check_structure(f, region, role);
    }

    #[allow(clippy::too_many_arguments)]
    fn check_block(
        &mut self,
        f: &'m Function,
        region: &'m Region,
        bi: usize,
        block: &'m Block,
        role: RegionRole,
        visible: &mut HashSet<ValueId>,
        added: &mut Vec<ValueId>,
    ) {
        for (i, op) in block.ops.iter().enumerate() {
            let is_last = i + 1 == block.ops.len();
            if op.kind.is_module_level() {
                self.err(Rule::UnknownOp, "module-level operation inside a function", op, Some(f));
            }
            for &v in &op.operands {
                if (v.0 as usize) >= f.values.values.len() {
                    self.err(Rule::UndefinedValue, format!("use of undefined value %{}", v.0), op, Some(f));
                } else if !visible.contains(&v) {
                    self.err(
                        Rule::Dominance,
                        format!("operand %{} does not dominate its use", v.0),
                        op,
                        Some(f),
                    );
                }
            }
            self.check_signature(f, op, is_last);
            let child_role = match op.kind {
                OpKind::SsaBlockLoop => RegionRole::BlockLoop,
                OpKind::SsaBlockBlock => RegionRole::BlockBlock,
                OpKind::SsaIf => RegionRole::SsaIf,
                OpKind::DcontResume => RegionRole::Handler,
                OpKind::WasmBlock | OpKind::WasmLoop | OpKind::WasmIf => RegionRole::Wasm,
                _ => RegionRole::Scf,
            };
            for r in &op.regions {
                self.check_region(f, r, child_role, visible);
            }
            for &res in &op.results {
                if visible.insert(res) {
                    added.push(res);
                }
            }
            if !op.successors.is_empty() && !is_last {
                self.err(Rule::TerminatorNotLast, "operation with successors must end its block", op, Some(f));
            }
            for s in &op.successors {
                if region.block_index(s).is_none() {
                    let rule = if matches!(role, RegionRole::BlockLoop | RegionRole::BlockBlock) {
                        Rule::BranchOutsideRegion
                    } else {
                        Rule::UnknownSuccessor
                    };
                    self.err(rule, format!("branch target ^{s} is not a block of this region"), op, Some(f));
                }
            }
            if op.kind == OpKind::SsaPseudoBr {
                let next = region.blocks.get(bi + 1).map(|b| b.label.as_str());
                if op.successors.first().map(String::as_str) != next {
                    self.err(
                        Rule::NonAdjacentPseudoBranch,
                        format!(
                            "pseudo_br must target the lexically next block ({})",
                            next.map(|n| format!("^{n}")).unwrap_or_else(|| "none".into())
                        ),
                        op,
                        Some(f),
                    );
                }
            }
        }
        let needs_terminator = matches!(role, RegionRole::Scf)
            || (matches!(role, RegionRole::BlockLoop | RegionRole::BlockBlock) && !block.ops.is_empty());
        if needs_terminator && block.terminator().is_none() {
            self.diags.push(
                Diagnostic::new(Rule::MissingTerminator, format!("block ^{} must end in a terminator", block.label))
                    .in_function(&f.name),
            );
        }
    }

    fn check_structure(&mut self, f: &Function, region: &Region, role: RegionRole) {
        let labels: Vec<&str> = region.blocks.iter().map(|b| b.label.as_str()).collect();
        let required: &[(&str, Option<usize>)] = match role {
            RegionRole::BlockLoop => &[("entry", Some(0)), ("loop_label", Some(1)), ("block_label", None)],
            RegionRole::BlockBlock => &[("entry", Some(0)), ("inner_block_label", Some(usize::MAX)), ("outer_block_label", None)],
            _ => return,
        };
        for &(label, pos) in required {
            let found = labels.iter().position(|l| *l == label);
            let ok = match (found, pos) {
                (None, _) => false,
                (Some(i), Some(p)) if p != usize::MAX => i == p,
                (Some(_), Some(_)) => true,
                (Some(i), None) => i + 1 == labels.len(),
            };
            if !ok {
                self.diags.push(
                    Diagnostic::new(
                        Rule::MissingStructuralBlock,
                        format!("composite region is missing ^{label} in its required position"),
                    )
                    .in_function(&f.name),
                );
            }
        }
    }

    fn check_signature(&mut self, f: &'m Function, op: &'m Operation, is_last: bool) {
        let sig = op.kind.signature();
        if !sig.operands.accepts(op.operands.len()) {
            self.err(
                Rule::OperandArity,
                format!("expected {:?} operands, got {}", sig.operands, op.operands.len()),
                op,
                Some(f),
            );
            return;
        }
        if !sig.results.accepts(op.results.len()) {
            self.err(
                Rule::ResultArity,
                format!("expected {:?} results, got {}", sig.results, op.results.len()),
                op,
                Some(f),
            );
            return;
        }
        self.check_attrs(op, Some(f));
        let regions_ok = if op.kind == OpKind::DcontResume {
            !op.regions.is_empty()
        } else {
            op.regions.len() == sig.regions
        };
        if !regions_ok {
            self.err(
                Rule::RegionCount,
                format!("expected {} regions, got {}", sig.regions, op.regions.len()),
                op,
                Some(f),
            );
            return;
        }
        if op.successors.len() != sig.successors {
            self.err(
                Rule::SuccessorCount,
                format!("expected {} successors, got {}", sig.successors, op.successors.len()),
                op,
                Some(f),
            );
        }
        if sig.traits.terminator && !is_last {
            self.err(Rule::TerminatorNotLast, "terminator must be the last operation of its block", op, Some(f));
        }
        for &r in &op.results {
            if let Err(e) = f.ty(r).check() {
                self.err(Rule::InvalidType, e, op, Some(f));
            }
        }
        if let Err(msg) = self.check_types(f, op) {
            let rule = if msg.starts_with("call argument") {
                Rule::CallArgumentNotInnerType
            } else if msg.starts_with("unknown symbol") {
                Rule::UnknownSymbol
            } else {
                Rule::TypeMismatch
            };
            self.err(rule, msg, op, Some(f));
        }
    }

    fn check_types(&self, f: &Function, op: &Operation) -> Result<(), String> {
        let ot: Vec<&Type> = op.operands.iter().map(|&v| f.ty(v)).collect();
        let rt: Vec<&Type> = op.results.iter().map(|&v| f.ty(v)).collect();
        let same = |a: &Type, b: &Type, what: &str| {
            if a == b {
                Ok(())
            } else {
                Err(format!("{what}: expected {b}, got {a}"))
            }
        };
        match op.kind.signature().rule {
            TypeRule::None => Ok(()),
            TypeRule::Constant => check_constant(op.attrs.get("value"), rt[0], op.kind == OpKind::SsaConst),
            TypeRule::IntBinary => {
                if !ot[0].is_int() {
                    return Err(format!("expected integer operands, got {}", ot[0]));
                }
                same(ot[1], ot[0], "rhs")?;
                same(rt[0], ot[0], "result")
            }
            TypeRule::FloatBinary => {
                if !ot[0].is_float() {
                    return Err(format!("expected float operands, got {}", ot[0]));
                }
                same(ot[1], ot[0], "rhs")?;
                same(rt[0], ot[0], "result")
            }
            TypeRule::NumBinary => {
                if !ot[0].is_scalar() {
                    return Err(format!("expected numeric operands, got {}", ot[0]));
                }
                same(ot[1], ot[0], "rhs")?;
                same(rt[0], ot[0], "result")
            }
            TypeRule::FloatUnary => {
                if !ot[0].is_float() {
                    return Err(format!("expected float operand, got {}", ot[0]));
                }
                same(rt[0], ot[0], "result")
            }
            TypeRule::IntCompare | TypeRule::FloatCompare | TypeRule::NumCompare => {
                let ok = match op.kind.signature().rule {
                    TypeRule::IntCompare => ot[0].is_int(),
                    TypeRule::FloatCompare => ot[0].is_float(),
                    _ => ot[0].is_scalar(),
                };
                if !ok {
                    return Err(format!("comparison operand type {} not allowed", ot[0]));
                }
                same(ot[1], ot[0], "rhs")?;
                same(rt[0], &Type::I32, "comparison result")?;
                if let Some(pred) = op.attrs.get("predicate") {
                    let p = pred.as_str().ok_or("predicate must be a string")?;
                    let valid: &[&str] = if op.kind == OpKind::ArithCmpI {
                        &["eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge"]
                    } else {
                        &["oeq", "une", "olt", "ole", "ogt", "oge"]
                    };
                    if !valid.contains(&p) {
                        return Err(format!("unknown predicate `{p}`"));
                    }
                }
                Ok(())
            }
            TypeRule::IntTest => {
                if !ot[0].is_int() {
                    return Err("eqz expects an integer".into());
                }
                same(rt[0], &Type::I32, "result")
            }
            TypeRule::IntToFloat => {
                if ot[0].is_int() && rt[0].is_float() {
                    Ok(())
                } else {
                    Err(format!("cannot convert {} to {}", ot[0], rt[0]))
                }
            }
            TypeRule::FloatToInt => {
                if ot[0].is_float() && rt[0].is_int() {
                    Ok(())
                } else {
                    Err(format!("cannot convert {} to {}", ot[0], rt[0]))
                }
            }
            TypeRule::I32ToI64 => {
                same(ot[0], &Type::I32, "operand")?;
                same(rt[0], &Type::I64, "result")
            }
            TypeRule::I64ToI32 => {
                same(ot[0], &Type::I64, "operand")?;
                same(rt[0], &Type::I32, "result")
            }
            TypeRule::F32ToF64 => {
                same(ot[0], &Type::F32, "operand")?;
                same(rt[0], &Type::F64, "result")
            }
            TypeRule::F64ToF32 => {
                same(ot[0], &Type::F64, "operand")?;
                same(rt[0], &Type::F32, "result")
            }
            TypeRule::IndexCast => {
                let ok = matches!(
                    (ot[0], rt[0]),
                    (Type::Index, Type::I32 | Type::I64 | Type::Index) | (Type::I32 | Type::I64, Type::Index)
                        | (Type::I32, Type::I32)
                        | (Type::I64, Type::I32)
                        | (Type::I32, Type::I64)
                );
                if ok {
                    Ok(())
                } else {
                    Err(format!("index_cast from {} to {}", ot[0], rt[0]))
                }
            }
            TypeRule::Select => {
                // arith.select takes the condition first, ssawasm.select last (stack order).
                let (c, a, b) = if op.kind == OpKind::ArithSelect { (0, 1, 2) } else { (2, 0, 1) };
                same(ot[c], &Type::I32, "select condition")?;
                same(ot[b], ot[a], "select false value")?;
                same(rt[0], ot[a], "result")
            }
            TypeRule::Custom => self.check_custom(f, op, &ot, &rt),
        }
    }

    fn lookup_global(&self, sym: &str) -> Result<&'m Operation, String> {
        self.globals_by_sym.get(sym).copied().ok_or_else(|| format!("unknown symbol @{sym}"))
    }

    fn check_custom(&self, f: &Function, op: &Operation, ot: &[&Type], rt: &[&Type]) -> Result<(), String> {
        use OpKind::*;
        let types_eq = |a: &[&Type], b: &[Type], what: &str| -> Result<(), String> {
            if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| *x == y) {
                Ok(())
            } else {
                Err(format!("{what}: expected ({}), got ({})", join(b.iter()), join(a.iter().copied())))
            }
        };
        match op.kind {
            FuncCall | SsaCall => {
                let callee = op.attrs.sym("callee").ok_or("callee must be a symbol")?;
                let sig = self.callees.get(callee).ok_or_else(|| format!("unknown symbol @{callee}"))?;
                if sig.params.len() != ot.len() {
                    return Err(format!("call to @{callee} passes {} arguments, expected {}", ot.len(), sig.params.len()));
                }
                for (i, (a, p)) in ot.iter().zip(&sig.params).enumerate() {
                    let expected = p.local_inner().unwrap_or(p);
                    if a.is_local() && op.kind == SsaCall {
                        return Err(format!(
                            "call argument {i} to @{callee} has type {a}; actual arguments must use the inner type {expected}"
                        ));
                    }
                    if *a != expected {
                        return Err(format!("argument {i} to @{callee}: expected {expected}, got {a}"));
                    }
                }
                if rt.len() != sig.results.len() {
                    return Err(format!("call to @{callee} binds {} results, expected {}", rt.len(), sig.results.len()));
                }
                for (r, s) in rt.iter().zip(&sig.results) {
                    let memref_address = op.kind == SsaCall && r.as_memref().is_some() && *s == Type::I32;
                    if *r != s && !memref_address {
                        return Err(format!("call result: expected {s}, got {r}"));
                    }
                }
                Ok(())
            }
            FuncReturn | SsaReturn => types_eq(ot, &f.results, "return values"),
            ScfFor => {
                let iv = ot[0];
                if !iv.is_int() {
                    return Err(format!("loop bounds must be integers, got {iv}"));
                }
                if ot[1] != iv || ot[2] != iv {
                    return Err("loop bounds and step must share a type".into());
                }
                let inits: Vec<Type> = ot[3..].iter().map(|t| (*t).clone()).collect();
                types_eq(rt, &inits, "scf.for results")?;
                let body = single_block(&op.regions[0])?;
                let mut expect = vec![iv.clone()];
                expect.extend(inits.iter().cloned());
                let args: Vec<&Type> = body.args.iter().map(|&a| f.ty(a)).collect();
                types_eq(&args, &expect, "scf.for block arguments")?;
                check_yield(f, body, &inits, ScfYield)
            }
            ScfWhile => {
                let inits: Vec<Type> = ot.iter().map(|t| (*t).clone()).collect();
                let results: Vec<Type> = rt.iter().map(|t| (*t).clone()).collect();
                let before = single_block(&op.regions[0])?;
                let after = single_block(&op.regions[1])?;
                let bargs: Vec<&Type> = before.args.iter().map(|&a| f.ty(a)).collect();
                types_eq(&bargs, &inits, "scf.while before-region arguments")?;
                let aargs: Vec<&Type> = after.args.iter().map(|&a| f.ty(a)).collect();
                types_eq(&aargs, &results, "scf.while after-region arguments")?;
                match before.ops.last() {
                    Some(t) if t.kind == ScfCondition => {
                        let ct: Vec<&Type> = t.operands.iter().map(|&v| f.ty(v)).collect();
                        if ct[0] != &Type::I32 {
                            return Err("scf.condition flag must be i32".into());
                        }
                        types_eq(&ct[1..], &results, "scf.condition forwarded values")?;
                    }
                    _ => return Err("scf.while before-region must end in scf.condition".into()),
                }
                check_yield(f, after, &inits, ScfYield)
            }
            ScfIf => {
                if ot[0] != &Type::I32 {
                    return Err("scf.if condition must be i32".into());
                }
                let results: Vec<Type> = rt.iter().map(|t| (*t).clone()).collect();
                let then = single_block(&op.regions[0])?;
                check_yield(f, then, &results, ScfYield)?;
                if op.regions[1].is_empty() {
                    if !results.is_empty() {
                        return Err("scf.if with results needs an else region".into());
                    }
                    Ok(())
                } else {
                    check_yield(f, single_block(&op.regions[1])?, &results, ScfYield)
                }
            }
            ScfExecuteRegion => {
                let results: Vec<Type> = rt.iter().map(|t| (*t).clone()).collect();
                check_yield(f, single_block(&op.regions[0])?, &results, ScfYield)
            }
            ScfYield | ScfCondition => Ok(()),
            MemrefGetGlobal => {
                let name = op.attrs.sym("name").ok_or("name must be a symbol")?;
                let g = self.lookup_global(name)?;
                let gty = g.attrs.ty("type").ok_or("global without type")?;
                if rt[0] != gty {
                    return Err(format!("get_global result {} does not match @{name} of type {gty}", rt[0]));
                }
                Ok(())
            }
            MemrefAlloc | MemrefAlloca => rt[0].as_memref().map(|_| ()).ok_or_else(|| "alloc must produce a memref".into()),
            MemrefDealloc => ot[0].as_memref().map(|_| ()).ok_or_else(|| "dealloc expects a memref".into()),
            MemrefLoad | MemrefStore => {
                let (mem_pos, value) = if op.kind == MemrefLoad { (0, rt[0]) } else { (1, ot[0]) };
                let mt = ot[mem_pos].as_memref().ok_or("memory access needs a memref operand")?;
                let indices = &ot[mem_pos + 1..];
                if indices.len() != mt.shape.len() {
                    return Err(format!("memref of rank {} accessed with {} indices", mt.shape.len(), indices.len()));
                }
                if indices.iter().any(|t| !matches!(t, Type::Index | Type::I32)) {
                    return Err("memref indices must be index or i32".into());
                }
                if value != mt.elem.as_ref() {
                    return Err(format!("element type {} does not match value {value}", mt.elem));
                }
                Ok(())
            }
            DcontNew => {
                let func = op.attrs.sym("func").ok_or("func must be a symbol")?;
                let callee = self.callees.get(func).ok_or_else(|| format!("unknown symbol @{func}"))?;
                match rt[0] {
                    Type::Cont(sig) => {
                        let params: Vec<&Type> = callee.params.iter().map(|p| p.local_inner().unwrap_or(p)).collect();
                        let matches = params.len() == sig.resume.len() && params.iter().zip(&sig.resume).all(|(a, b)| *a == b);
                        if !matches || !callee.results.is_empty() {
                            return Err(format!(
                                "continuation body @{func} must take ({}) and return nothing",
                                join(sig.resume.iter())
                            ));
                        }
                        Ok(())
                    }
                    t => Err(format!("dcont.new must produce a continuation, got {t}")),
                }
            }
            DcontAlloc => match rt[0].local_inner() {
                Some(Type::Cont(_)) => Ok(()),
                _ => Err(format!("dcont.alloc must produce local<cont<..>>, got {}", rt[0])),
            },
            DcontLoad => match ot[0].local_inner() {
                Some(inner @ Type::Cont(_)) if inner == rt[0] => Ok(()),
                _ => Err(format!("dcont.load from {} to {}", ot[0], rt[0])),
            },
            DcontStore => match ot[1].local_inner() {
                Some(inner @ Type::Cont(_)) if inner == ot[0] => Ok(()),
                _ => Err(format!("dcont.store of {} into {}", ot[0], ot[1])),
            },
            DcontSuspend => {
                if ot.iter().chain(rt).all(|t| t.is_scalar()) {
                    Ok(())
                } else {
                    Err("suspend payloads and results must be scalars".into())
                }
            }
            DcontResume => {
                let Some((cont, args)) = ot.split_last() else { return Err("resume needs a continuation".into()) };
                let Type::Cont(sig) = cont else {
                    return Err(format!("resume operand must be a continuation, got {cont}"));
                };
                types_eq(args, &sig.resume, "resume arguments")?;
                for region in &op.regions {
                    let handler = single_block(region)?;
                    let hargs: Vec<&Type> = handler.args.iter().map(|&a| f.ty(a)).collect();
                    let mut expect = vec![(*cont).clone()];
                    expect.extend(sig.payload.iter().cloned());
                    types_eq(&hargs, &expect, "handler arguments")?;
                }
                Ok(())
            }
            SsaLocalDecl => match rt[0] {
                Type::Local(_) => Ok(()),
                t => Err(format!("local_decl must produce local<_>, got {t}")),
            },
            SsaLocalGet => match ot[0].local_inner() {
                Some(inner) if inner == rt[0] => Ok(()),
                _ => Err(format!("local_get from {} cannot produce {}", ot[0], rt[0])),
            },
            SsaLocalSet => match ot[0].local_inner() {
                Some(inner) if inner == ot[1] => Ok(()),
                _ => Err(format!("local_set of {} into {}", ot[1], ot[0])),
            },
            SsaFuncRef => {
                let func = op.attrs.sym("func").ok_or("func must be a symbol")?;
                if !self.callees.contains_key(func) {
                    return Err(format!("unknown symbol @{func}"));
                }
                if rt[0] != &Type::FuncRef {
                    return Err("func_ref must produce funcref".into());
                }
                Ok(())
            }
            SsaGlobalGet | SsaGlobalSet => {
                let name = op.attrs.sym("global").ok_or("global must be a symbol")?;
                let g = self.lookup_global(name)?;
                let gty = g.attrs.ty("type").ok_or("global without type")?;
                let t = if op.kind == SsaGlobalGet { rt[0] } else { ot[0] };
                if t != gty {
                    return Err(format!("global @{name} has type {gty}, used as {t}"));
                }
                Ok(())
            }
            SsaLoad => {
                if ot[0] != &Type::I32 {
                    return Err(format!("load address must be i32, got {}", ot[0]));
                }
                if !rt[0].is_scalar() {
                    return Err("load must produce a scalar".into());
                }
                Ok(())
            }
            SsaStore => {
                if ot[0] != &Type::I32 {
                    return Err(format!("store address must be i32, got {}", ot[0]));
                }
                if !ot[1].is_scalar() {
                    return Err("store value must be a scalar".into());
                }
                Ok(())
            }
            SsaIf | SsaCondBr | SsaPseudoCondBr => {
                if ot[0] != &Type::I32 {
                    return Err(format!("branch condition must be i32, got {}", ot[0]));
                }
                Ok(())
            }
            SsaBlockLoop | SsaBlockBlock | SsaBr | SsaPseudoBr | SsaExit | SsaDrop => Ok(()),
            SsaOnStack => {
                if rt[0].is_local() {
                    return Err("on_stack cannot produce a local handle".into());
                }
                Ok(())
            }
            SsaCastMemrefToI32 => {
                if ot[0].as_memref().is_none() || rt[0] != &Type::I32 {
                    return Err(format!("cast_memref_to_i32 from {} to {}", ot[0], rt[0]));
                }
                Ok(())
            }
            SsaCastI32ToMemref => {
                if ot[0] != &Type::I32 || rt[0].as_memref().is_none() {
                    return Err(format!("cast_i32_to_memref from {} to {}", ot[0], rt[0]));
                }
                Ok(())
            }
            SsaContNew => {
                let ct = op.attrs.sym("cont_type").ok_or("cont_type must be a symbol")?;
                self.lookup_global(ct)?;
                if ot[0] != &Type::FuncRef {
                    return Err("cont_new expects a funcref".into());
                }
                if rt[0] != &Type::ContRef(ct.to_string()) {
                    return Err(format!("cont_new result must be contref<@{ct}>, got {}", rt[0]));
                }
                Ok(())
            }
            SsaSuspend => {
                let tag = op.attrs.sym("tag").ok_or("tag must be a symbol")?;
                let t = self.lookup_global(tag)?;
                let params = t.attrs.types("params").unwrap_or_default();
                let results = t.attrs.types("results").unwrap_or_default();
                types_eq(ot, params, "suspend payload")?;
                types_eq(rt, results, "suspend results")
            }
            SsaResume => {
                let ct = op.attrs.sym("cont_type").ok_or("cont_type must be a symbol")?;
                let decl = self.lookup_global(ct)?;
                let tag = op.attrs.sym("tag").ok_or("tag must be a symbol")?;
                self.lookup_global(tag)?;
                let (cont, args) = ot.split_last().ok_or("resume needs a continuation")?;
                if *cont != &Type::ContRef(ct.to_string()) {
                    return Err(format!("resume operand must be contref<@{ct}>, got {cont}"));
                }
                types_eq(args, decl.attrs.types("params").unwrap_or_default(), "resume arguments")
            }
            _ => Ok(()),
        }
    }
}

fn join<'a>(tys: impl Iterator<Item = &'a Type>) -> String {
    tys.map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn single_block(region: &Region) -> Result<&Block, String> {
    match region.blocks.as_slice() {
        [b] => Ok(b),
        _ => Err(format!("expected a single-block region, found {} blocks", region.blocks.len())),
    }
}

fn check_yield(f: &Function, block: &Block, expect: &[Type], kind: OpKind) -> Result<(), String> {
    match block.ops.last() {
        Some(t) if t.kind == kind => {
            let got: Vec<&Type> = t.operands.iter().map(|&v| f.ty(v)).collect();
            if got.len() == expect.len() && got.iter().zip(expect).all(|(a, b)| *a == b) {
                Ok(())
            } else {
                Err(format!("yield types ({}) do not match ({})", join(got.into_iter()), join(expect.iter())))
            }
        }
        _ => Err(format!("region must end in {}", kind.full_name())),
    }
}

fn check_constant(value: Option<&Attr>, ty: &Type, allow_memref: bool) -> Result<(), String> {
    match (value, ty) {
        (Some(Attr::Int(_)), t) if t.is_int() => Ok(()),
        (Some(Attr::Int(_)), Type::MemRef(_)) if allow_memref => Ok(()),
        (Some(Attr::Float(bits)), t) if bits.ty() == *t => Ok(()),
        (Some(v), t) => Err(format!("constant {v:?} cannot have type {t}")),
        (None, _) => Ok(()),
    }
}

fn block_defs(block: &Block) -> impl Iterator<Item = ValueId> + '_ {
    block.args.iter().copied().chain(block.ops.iter().flat_map(|op| op.results.iter().copied()))
}

fn count_defs(region: &Region, defs: &mut HashMap<ValueId, usize>) {
    for block in &region.blocks {
        for &a in &block.args {
            *defs.entry(a).or_insert(0) += 1;
        }
        for op in &block.ops {
            for &r in &op.results {
                *defs.entry(r).or_insert(0) += 1;
            }
            for r in &op.regions {
                count_defs(r, defs);
            }
        }
    }
}
