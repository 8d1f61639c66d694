use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ir::{walk_region, FuncKind, Function, IrModule, OpKind, Operation, Region, Type, ValueId};
use crate::num::{ssawasm_op, NumOp, NumType, Value};

use super::ast::*;
use super::bridge::{add_globals, func_from_ir, module_to_ir};
use super::locals::check_stack_discipline;

/// Tag parameter types by symbol, read from either dialect's declarations.
fn tag_params(m: &IrModule) -> HashMap<String, Vec<ValType>> {
    m.globals
        .iter()
        .filter(|g| matches!(g.kind, OpKind::SsaTag | OpKind::WasmTag))
        .filter_map(|g| {
            let params = g.attrs.types("params")?.iter().filter_map(ValType::from_type).collect();
            Some((g.attrs.sym("sym")?.to_string(), params))
        })
        .collect()
}

/// Builds the final [`WasmModule`]: module items must already be in the
/// `wasm` dialect, and `ssawasm` functions must obey stack discipline.
pub fn lower_module(m: &IrModule) -> Result<WasmModule> {
    let mut wm = WasmModule::default();
    add_globals(&mut wm, &m.globals)?;
    let tags = tag_params(m);
    for f in &m.functions {
        let wf = match f.kind {
            FuncKind::SsaWasm => convert_ssawasm_ops(f, &tags)?,
            FuncKind::Wasm => func_from_ir(f)?,
            FuncKind::Func => return Err(Error::UnsupportedOp(format!("func.func @{} at the wasm stage", f.name))),
        };
        wm.funcs.push(wf);
    }
    Ok(wm)
}

/// The `ssawasm-to-wasm` pass over IR.
pub fn ssawasm_to_wasm(m: IrModule) -> Result<IrModule> {
    Ok(module_to_ir(&lower_module(&m)?))
}

struct Cx<'f> {
    f: &'f Function,
    tags: &'f HashMap<String, Vec<ValType>>,
    locals: HashMap<ValueId, u32>,
    blocks: usize,
    loops: usize,
    handlers: usize,
}

/// Maps one stack-disciplined `ssawasm` function onto structured Wasm.
pub fn convert_ssawasm_ops(f: &Function, tags: &HashMap<String, Vec<ValType>>) -> Result<WasmFunc> {
    check_stack_discipline(f)?;
    let vt = |t: &Type| ValType::from_type(t).ok_or_else(|| Error::TypeMismatch(format!("{t} has no wasm counterpart")));
    let params = f.params.iter().map(vt).collect::<Result<Vec<_>>>()?;
    let results = f.results.iter().map(vt).collect::<Result<Vec<_>>>()?;
    let mut locals_map = HashMap::new();
    for (i, &a) in f.param_values().iter().enumerate() {
        locals_map.insert(a, i as u32);
    }
    let mut locals = Vec::new();
    let mut decl_err = None;
    if let Some(body) = &f.body {
        walk_region(body, &mut |op| {
            if op.kind == OpKind::SsaLocalDecl {
                let r = op.results[0];
                match vt(f.ty(r)) {
                    Ok(t) => {
                        locals_map.insert(r, (params.len() + locals.len()) as u32);
                        locals.push(t);
                    }
                    Err(e) => decl_err = Some(e),
                }
            }
        });
    }
    if let Some(e) = decl_err {
        return Err(e);
    }
    let mut cx = Cx { f, tags, locals: locals_map, blocks: 0, loops: 0, handlers: 0 };
    let mut body = Vec::new();
    if let Some(region) = &f.body {
        cx.region(region, 0..region.blocks.len(), &HashMap::new(), &mut body)?;
    }
    Ok(WasmFunc { name: f.name.clone(), exported: f.exported, params, results, locals, body })
}

impl Cx<'_> {
    fn num(&self, v: ValueId) -> Result<NumType> {
        let t = self.f.ty(v);
        NumType::from_type(t).ok_or_else(|| Error::TypeMismatch(format!("expected a numeric value, found {t}")))
    }

    fn local(&self, v: ValueId) -> Result<u32> {
        self.locals.get(&v).copied().ok_or_else(|| Error::UnsupportedOp(format!("local %{} is never declared", v.0)))
    }

    /// Emits the blocks `range` of `region` in order.
    fn region(
        &mut self,
        region: &Region,
        range: std::ops::Range<usize>,
        labels: &HashMap<String, String>,
        out: &mut Vec<Instr>,
    ) -> Result<()> {
        for bi in range {
            let next = region.blocks.get(bi + 1).map(|b| b.label.as_str());
            for op in &region.blocks[bi].ops {
                self.op(op, next, labels, out)?;
            }
        }
        Ok(())
    }

    fn target(&self, labels: &HashMap<String, String>, block: &str) -> Result<String> {
        labels.get(block).cloned().ok_or_else(|| Error::UnlabeledBranchTarget(block.to_string()))
    }

    fn op(&mut self, op: &Operation, next: Option<&str>, labels: &HashMap<String, String>, out: &mut Vec<Instr>) -> Result<()> {
        let is_next = |s: &String| Some(s.as_str()) == next;
        let instr = match op.kind {
            OpKind::SsaLocalDecl
            | OpKind::SsaOnStack
            | OpKind::SsaExit
            | OpKind::SsaCastI32ToMemref
            | OpKind::SsaCastMemrefToI32 => return Ok(()),
            OpKind::SsaConst => {
                let ty = self.num(op.results[0])?;
                let v = op.attrs.get("value").and_then(|a| Value::from_attr(a, ty));
                Instr::Const(v.ok_or_else(|| Error::TypeMismatch(format!("constant does not fit {ty}")))?)
            }
            OpKind::SsaLocalGet => Instr::LocalGet(self.local(op.operands[0])?),
            OpKind::SsaLocalSet => Instr::LocalSet(self.local(op.operands[0])?),
            OpKind::SsaGlobalGet => Instr::GlobalGet(op.attrs.sym("global").unwrap_or_default().into()),
            OpKind::SsaGlobalSet => Instr::GlobalSet(op.attrs.sym("global").unwrap_or_default().into()),
            OpKind::SsaLoad => Instr::Load { ty: self.num(op.results[0])?, offset: op.attrs.int("offset").unwrap_or(0) as u32 },
            OpKind::SsaStore => Instr::Store { ty: self.num(op.operands[1])?, offset: op.attrs.int("offset").unwrap_or(0) as u32 },
            OpKind::SsaCall => Instr::Call(op.attrs.sym("callee").unwrap_or_default().into()),
            OpKind::SsaReturn => Instr::Return,
            OpKind::SsaDrop => Instr::Drop,
            OpKind::SsaFuncRef => Instr::RefFunc(op.attrs.sym("func").unwrap_or_default().into()),
            OpKind::SsaContNew => Instr::ContNew(op.attrs.sym("cont_type").unwrap_or_default().into()),
            OpKind::SsaSuspend => Instr::Suspend(op.attrs.sym("tag").unwrap_or_default().into()),
            OpKind::SsaResume => {
                if !is_next(&op.successors[1]) {
                    return Err(Error::NonAdjacentFallthrough(op.successors[1].clone()));
                }
                Instr::Resume {
                    cont_type: op.attrs.sym("cont_type").unwrap_or_default().into(),
                    on: vec![(op.attrs.sym("tag").unwrap_or_default().into(), self.target(labels, &op.successors[0])?)],
                }
            }
            OpKind::SsaPseudoBr => {
                if !is_next(&op.successors[0]) {
                    return Err(Error::NonAdjacentFallthrough(op.successors[0].clone()));
                }
                return Ok(());
            }
            OpKind::SsaBr => {
                if is_next(&op.successors[0]) {
                    return Ok(());
                }
                Instr::Br(self.target(labels, &op.successors[0])?)
            }
            OpKind::SsaCondBr | OpKind::SsaPseudoCondBr => {
                let (t, e) = (&op.successors[0], &op.successors[1]);
                if is_next(t) {
                    out.push(Instr::Eqz(NumType::I32));
                    out.push(Instr::BrIf(self.target(labels, e)?));
                } else if is_next(e) {
                    out.push(Instr::BrIf(self.target(labels, t)?));
                } else {
                    out.push(Instr::BrIf(self.target(labels, t)?));
                    out.push(Instr::Br(self.target(labels, e)?));
                }
                return Ok(());
            }
            OpKind::SsaIf => {
                let mut then = Vec::new();
                let mut els = Vec::new();
                let none = HashMap::new();
                if let Some(r) = op.regions.first() {
                    self.region(r, 0..r.blocks.len(), &none, &mut then)?;
                }
                if let Some(r) = op.regions.get(1) {
                    self.region(r, 0..r.blocks.len(), &none, &mut els)?;
                }
                Instr::If { results: vec![], then, els }
            }
            OpKind::SsaBlockLoop => return self.block_loop(op, out),
            OpKind::SsaBlockBlock => return self.block_block(op, out),
            k => match ssawasm_op(k) {
                Some(NumOp::Bin(b)) => Instr::Binary { op: b, ty: self.num(op.operands[0])? },
                Some(NumOp::Rel(r)) => Instr::Compare { op: r, ty: self.num(op.operands[0])? },
                Some(NumOp::Un(u)) => Instr::Unary { op: u, ty: self.num(op.operands[0])? },
                Some(NumOp::Eqz) => Instr::Eqz(self.num(op.operands[0])?),
                Some(NumOp::Cvt(c)) => Instr::Convert { op: c, from: self.num(op.operands[0])?, to: self.num(op.results[0])? },
                Some(NumOp::Select) => Instr::Select,
                None => return Err(Error::UnsupportedOp(op.full_name())),
            },
        };
        out.push(instr);
        Ok(())
    }

    /// `block $blk { entry; loop $loop { loop_label .. } } block_label`
    fn block_loop(&mut self, op: &Operation, out: &mut Vec<Instr>) -> Result<()> {
        let region = &op.regions[0];
        let blk = format!("blk{}", self.blocks);
        let lp = format!("loop{}", self.loops);
        self.blocks += 1;
        self.loops += 1;
        let last = region.blocks.len() - 1;
        let labels = HashMap::from([
            (region.blocks[1].label.clone(), lp.clone()),
            (region.blocks[last].label.clone(), blk.clone()),
        ]);
        let mut outer = Vec::new();
        self.region(region, 0..1, &labels, &mut outer)?;
        let mut body = Vec::new();
        self.region(region, 1..last, &labels, &mut body)?;
        outer.push(Instr::Loop { label: lp, body });
        out.push(Instr::Block { label: blk, results: vec![], body: outer });
        self.region(region, last..last + 1, &labels, out)
    }

    /// `block $blk { block $on_yield (result contref payload..) { entry; resume } handler } outer`
    fn block_block(&mut self, op: &Operation, out: &mut Vec<Instr>) -> Result<()> {
        let region = &op.regions[0];
        let blk = format!("blk{}", self.blocks);
        let hb = format!("on_yield{}", self.handlers);
        self.blocks += 1;
        self.handlers += 1;
        let last = region.blocks.len() - 1;
        let inner = region
            .block_index("inner_block_label")
            .ok_or_else(|| Error::UnlabeledBranchTarget("inner_block_label".into()))?;
        let labels = HashMap::from([
            (region.blocks[inner].label.clone(), hb.clone()),
            (region.blocks[last].label.clone(), blk.clone()),
        ]);
        let resume = region.blocks[0]
            .ops
            .last()
            .filter(|o| o.kind == OpKind::SsaResume)
            .ok_or_else(|| Error::UnsupportedOp("block_block whose entry does not end in resume".into()))?;
        let ct = resume.attrs.sym("cont_type").unwrap_or_default().to_string();
        let tag = resume.attrs.sym("tag").unwrap_or_default();
        let mut results = vec![ValType::ContRef(ct)];
        results.extend(self.tags.get(tag).cloned().unwrap_or_default());

        let mut handler_body = Vec::new();
        self.region(region, 0..inner, &labels, &mut handler_body)?;
        let mut body = vec![Instr::Block { label: hb, results, body: handler_body }];
        self.region(region, inner..last, &labels, &mut body)?;
        out.push(Instr::Block { label: blk, results: vec![], body });
        self.region(region, last..last + 1, &labels, out)
    }
}

