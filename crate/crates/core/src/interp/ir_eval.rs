//! Oracle interpreter over the region IR. Runs any mix of high-level and
//! `ssawasm` operations, so every intermediate pipeline stage can be executed.

use std::collections::HashMap;

use super::{Event, ExecOptions, Host, Memory, Outcome, Trap};
use crate::error::{Error, Result};
use crate::ir::{ContSig, Function, IrModule, OpKind, Operation, Region, Type, ValueId};
use crate::lower::layout_data_segments;
use crate::num::{self, BinOp, CvtOp, NumType, RelOp, UnOp, Value};

/// Runs `entry` with `args` and reports everything observable.
pub fn eval_ir(m: &IrModule, entry: &str, args: &[Value], opts: &ExecOptions) -> Result<Outcome> {
    let f = m.function(entry).filter(|f| f.body.is_some()).ok_or_else(|| Error::UnknownEntry(entry.into()))?;
    let params: Vec<Option<NumType>> = f.params.iter().map(|t| NumType::from_type(t.local_inner().unwrap_or(t))).collect();
    if params.len() != args.len() || params.iter().zip(args).any(|(p, a)| *p != a.num_type()) {
        return Err(Error::ArgTypeMismatch(format!("@{entry} takes {} argument(s) of types ({})", params.len(), show_types(&f.params))));
    }

    let layout = layout_data_segments(m, opts.heap_reserve)?;
    let mut pages = layout.pages;
    let mut globals = HashMap::new();
    for g in &m.globals {
        match g.kind {
            OpKind::SsaMemory | OpKind::WasmMemory => pages = g.attrs.int("pages").unwrap_or(pages as i64) as u64,
            OpKind::SsaGlobalVar | OpKind::WasmGlobal => {
                let sym = g.attrs.sym("sym").unwrap_or_default().to_string();
                let ty = g.attrs.ty("type").and_then(NumType::from_type).unwrap_or(NumType::I32);
                let init = g.attrs.get("init").and_then(|a| Value::from_attr(a, ty)).unwrap_or(ty.zero());
                globals.insert(sym, init);
            }
            _ => {}
        }
    }
    let mut mem = Memory::new(pages);
    let mut offsets = HashMap::new();
    for seg in &layout.segments {
        mem.write_bytes(seg.offset, &seg.bytes).map_err(|t| Error::Pipeline(format!("data segment @{}: {t}", seg.sym)))?;
        offsets.insert(seg.sym.clone(), seg.offset);
    }

    let mut mach = Machine {
        funcs: m.functions.iter().filter(|f| f.body.is_some()).map(|f| (f.name.as_str(), f)).collect(),
        stack: Vec::new(),
        conts: Vec::new(),
        mem,
        globals,
        offsets,
        host: Host::new(layout.heap_base),
        opts,
        steps: 0,
    };
    let result = mach.enter(f, args.to_vec()).and_then(|_| mach.run());
    let mut trace = mach.host.trace;
    if let Err(t) = &result {
        trace.push(Event::Trap(t.kind().into()));
    }
    Ok(Outcome { result, memory: mach.mem.bytes, output: mach.host.output, trace, steps: mach.steps })
}

fn show_types(ts: &[Type]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, PartialEq)]
enum HandlerKey {
    Sig(ContSig),
    Tag(String),
}

impl HandlerKey {
    fn name(&self) -> String {
        match self {
            HandlerKey::Sig(sig) => Type::Cont(sig.clone()).to_string(),
            HandlerKey::Tag(t) => t.clone(),
        }
    }
}

#[derive(Clone, Copy)]
enum Kind<'m> {
    Body,
    Composite,
    Handler,
    For(&'m Operation),
    While(&'m Operation),
    Yielding(&'m Operation),
}

#[derive(Clone)]
struct Ctl<'m> {
    region: &'m Region,
    block: usize,
    ip: usize,
    kind: Kind<'m>,
    /// Induction variable, bound and step of a running `scf.for`.
    iv: Option<(Value, Value, Value)>,
}

#[derive(Clone)]
struct Frame<'m> {
    func: &'m Function,
    vals: Vec<Option<Value>>,
    locals: HashMap<ValueId, Value>,
    ctl: Vec<Ctl<'m>>,
    /// Values delivered to `ssawasm.on_stack` by a resume.
    pending: Vec<Value>,
}

enum Entry<'m> {
    Frame(Frame<'m>),
    Marker(HandlerKey),
}

enum Cont<'m> {
    Fresh(String),
    Suspended(Vec<Entry<'m>>),
    Consumed,
}

struct Machine<'m, 'o> {
    funcs: HashMap<&'m str, &'m Function>,
    stack: Vec<Entry<'m>>,
    conts: Vec<Cont<'m>>,
    mem: Memory,
    globals: HashMap<String, Value>,
    offsets: HashMap<String, u64>,
    host: Host,
    opts: &'o ExecOptions,
    steps: u64,
}

fn internal(msg: impl Into<String>) -> Trap {
    Trap::Internal(msg.into())
}

fn truthy(v: &Value) -> bool {
    !matches!(v, Value::I32(0) | Value::I64(0))
}

fn lt_s(a: &Value, b: &Value) -> Result<bool, Trap> {
    Ok(truthy(&num::compare(RelOp::LtS, a, b)?))
}

impl<'m> Machine<'m, '_> {
    fn run(&mut self) -> Result<Vec<Value>, Trap> {
        loop {
            self.steps += 1;
            if self.steps > self.opts.fuel {
                return Err(Trap::OutOfFuel);
            }
            if let Some(done) = self.step()? {
                return Ok(done);
            }
        }
    }

    fn frame(&mut self) -> &mut Frame<'m> {
        match self.stack.last_mut() {
            Some(Entry::Frame(f)) => f,
            _ => unreachable!("no active frame"),
        }
    }

    fn frame_ref(&self) -> &Frame<'m> {
        match self.stack.last() {
            Some(Entry::Frame(f)) => f,
            _ => unreachable!("no active frame"),
        }
    }

    fn current_op(&self) -> Option<&'m Operation> {
        let c = self.frame_ref().ctl.last()?;
        let region: &'m Region = c.region;
        region.blocks[c.block].ops.get(c.ip)
    }

    fn ctl(&mut self) -> &mut Ctl<'m> {
        self.frame().ctl.last_mut().expect("control stack")
    }

    fn advance(&mut self) {
        self.ctl().ip += 1;
    }

    fn val(&self, v: ValueId) -> Result<Value, Trap> {
        self.frame_ref().vals[v.0 as usize].clone().ok_or_else(|| internal(format!("use of undefined value %{}", v.0)))
    }

    fn vals(&self, vs: &[ValueId]) -> Result<Vec<Value>, Trap> {
        vs.iter().map(|&v| self.val(v)).collect()
    }

    fn bind(&mut self, ids: &[ValueId], vals: Vec<Value>) -> Result<(), Trap> {
        if ids.len() != vals.len() {
            return Err(internal(format!("binding {} values to {} slots", vals.len(), ids.len())));
        }
        let f = self.frame();
        for (&id, v) in ids.iter().zip(vals) {
            f.vals[id.0 as usize] = Some(v);
        }
        Ok(())
    }

    fn result_type(&self, op: &Operation, i: usize) -> Result<NumType, Trap> {
        let t = self.frame_ref().func.ty(op.results[i]);
        NumType::from_type(t).ok_or_else(|| internal(format!("{} yields non-numeric {t}", op.full_name())))
    }

    fn enter(&mut self, f: &'m Function, args: Vec<Value>) -> Result<(), Trap> {
        if self.stack.len() >= self.opts.max_depth {
            return Err(Trap::CallStackExhausted);
        }
        let body = f.body.as_ref().ok_or_else(|| internal(format!("@{} has no body", f.name)))?;
        let mut frame = Frame {
            func: f,
            vals: vec![None; f.values.values.len()],
            locals: HashMap::new(),
            ctl: vec![Ctl { region: body, block: 0, ip: 0, kind: Kind::Body, iv: None }],
            pending: Vec::new(),
        };
        let params = &body.blocks[0].args;
        if params.len() != args.len() {
            return Err(internal(format!("@{} called with {} arguments", f.name, args.len())));
        }
        for (&p, v) in params.iter().zip(args) {
            if f.ty(p).is_local() {
                frame.locals.insert(p, v);
            } else {
                frame.vals[p.0 as usize] = Some(v);
            }
        }
        if self.opts.trace_calls {
            self.host.trace.push(Event::Enter(f.name.clone()));
        }
        self.stack.push(Entry::Frame(frame));
        Ok(())
    }

    fn call(&mut self, callee: &str, args: Vec<Value>) -> Result<Option<Vec<Value>>, Trap> {
        if let Some(&f) = self.funcs.get(callee) {
            self.enter(f, args)?;
            return Ok(None);
        }
        match self.host.call(callee, &args) {
            Some(r) => r.map(Some),
            None => Err(internal(format!("unresolved function @{callee}"))),
        }
    }

    /// Pops the current frame and hands `vals` to whoever is waiting for it.
    fn do_return(&mut self, vals: Vec<Value>) -> Result<Option<Vec<Value>>, Trap> {
        let Some(Entry::Frame(done)) = self.stack.pop() else { unreachable!() };
        if self.opts.trace_calls {
            self.host.trace.push(Event::Return(done.func.name.clone()));
        }
        match self.stack.last() {
            None => Ok(Some(vals)),
            Some(Entry::Frame(_)) => {
                let op = self.current_op().ok_or_else(|| internal("caller lost its call site"))?;
                self.bind(&op.results, vals)?;
                self.advance();
                Ok(None)
            }
            Some(Entry::Marker(_)) => {
                // The continuation ran to completion.
                self.stack.pop();
                let op = self.current_op().ok_or_else(|| internal("resumer lost its resume site"))?;
                match op.kind {
                    OpKind::SsaResume => {
                        self.frame().pending = vals;
                        self.branch(&op.successors[1])?;
                    }
                    _ => self.advance(),
                }
                Ok(None)
            }
        }
    }

    /// Jumps to `label` in the innermost enclosing composite op that has it.
    fn branch(&mut self, label: &str) -> Result<(), Trap> {
        let f = self.frame();
        for i in (0..f.ctl.len()).rev() {
            if !matches!(f.ctl[i].kind, Kind::Composite) {
                continue;
            }
            if let Some(b) = f.ctl[i].region.block_index(label) {
                f.ctl.truncate(i + 1);
                let c = &mut f.ctl[i];
                c.block = b;
                c.ip = 0;
                return Ok(());
            }
        }
        Err(internal(format!("branch to unknown block ^{label}")))
    }

    fn fall_off(&mut self) -> Result<Option<Vec<Value>>, Trap> {
        let c = self.ctl().clone();
        match c.kind {
            Kind::Body => self.do_return(vec![]),
            Kind::Composite if c.block + 1 < c.region.blocks.len() => {
                let c = self.ctl();
                c.block += 1;
                c.ip = 0;
                Ok(None)
            }
            Kind::Composite | Kind::Handler => {
                self.frame().ctl.pop();
                self.advance();
                Ok(None)
            }
            _ => Err(internal("structured region ended without a terminator")),
        }
    }

    fn push_region(&mut self, region: &'m Region, kind: Kind<'m>, args: Vec<Value>) -> Result<(), Trap> {
        self.bind(&region.blocks[0].args, args)?;
        self.frame().ctl.push(Ctl { region, block: 0, ip: 0, kind, iv: None });
        Ok(())
    }

    fn finish_region(&mut self, op: &Operation, vals: Vec<Value>) -> Result<(), Trap> {
        self.frame().ctl.pop();
        self.bind(&op.results, vals)?;
        self.advance();
        Ok(())
    }

    fn address(&self, mem: ValueId, idx: &[ValueId]) -> Result<u64, Trap> {
        let ty = self.frame_ref().func.ty(mem);
        let mt = ty.as_memref().ok_or_else(|| internal(format!("access through non-memref {ty}")))?;
        let base = self.val(mem)?.as_i32() as i64;
        let mut off: i64 = 0;
        for (&i, stride) in idx.iter().zip(mt.strides()) {
            let iv = match self.val(i)? {
                Value::I32(v) => v as i32 as i64,
                Value::I64(v) => v as i64,
                v => return Err(internal(format!("non-integer index {v}"))),
            };
            off = off.wrapping_add(iv.wrapping_mul(stride as i64));
        }
        // wasm32 addresses wrap modulo 2^32.
        Ok(base.wrapping_add(off.wrapping_mul(mt.elem_width() as i64)) as u32 as u64)
    }

    fn step(&mut self) -> Result<Option<Vec<Value>>, Trap> {
        let Some(op) = self.current_op() else { return self.fall_off() };
        use OpKind::*;
        match op.kind {
            ArithConstant | SsaConst => {
                let ty = self.result_type(op, 0)?;
                let a = op.attrs.get("value").ok_or_else(|| internal("constant without value"))?;
                let v = Value::from_attr(a, ty).ok_or_else(|| internal(format!("bad constant {a:?} for {ty}")))?;
                self.bind(&op.results, vec![v])?;
            }
            k if k.dialect() == "arith" => {
                let args = self.vals(&op.operands)?;
                let to = self.result_type(op, 0)?;
                let v = arith(op, &args, to)?;
                self.bind(&op.results, vec![v])?;
            }
            k if num::ssawasm_op(k).is_some() => {
                let args = self.vals(&op.operands)?;
                let to = self.result_type(op, 0)?;
                let v = num::eval(num::ssawasm_op(k).unwrap(), to, &args)?;
                self.bind(&op.results, vec![v])?;
            }
            SsaCastMemrefToI32 | SsaCastI32ToMemref => {
                let v = self.val(op.operands[0])?;
                self.bind(&op.results, vec![v])?;
            }
            FuncCall | SsaCall => {
                let callee = op.attrs.sym("callee").unwrap_or_default();
                let args = self.vals(&op.operands)?;
                if let Some(res) = self.call(callee, args)? {
                    self.bind(&op.results, res)?;
                    self.advance();
                }
                return Ok(None);
            }
            FuncReturn | SsaReturn => {
                let vals = self.vals(&op.operands)?;
                return self.do_return(vals);
            }

            ScfFor => {
                let args = self.vals(&op.operands)?;
                let (lb, ub, st) = (args[0].clone(), args[1].clone(), args[2].clone());
                let inits = args[3..].to_vec();
                if lt_s(&lb, &ub)? {
                    let mut bargs = vec![lb.clone()];
                    bargs.extend(inits);
                    self.push_region(&op.regions[0], Kind::For(op), bargs)?;
                    self.ctl().iv = Some((lb, ub, st));
                } else {
                    self.bind(&op.results, inits)?;
                    self.advance();
                }
                return Ok(None);
            }
            ScfWhile => {
                let args = self.vals(&op.operands)?;
                self.push_region(&op.regions[0], Kind::While(op), args)?;
                return Ok(None);
            }
            ScfIf => {
                let c = self.val(op.operands[0])?;
                let region = &op.regions[if truthy(&c) { 0 } else { 1 }];
                if region.is_empty() {
                    self.advance();
                } else {
                    self.push_region(region, Kind::Yielding(op), vec![])?;
                }
                return Ok(None);
            }
            ScfExecuteRegion => {
                self.push_region(&op.regions[0], Kind::Yielding(op), vec![])?;
                return Ok(None);
            }
            ScfYield => {
                let vals = self.vals(&op.operands)?;
                let c = self.ctl().clone();
                match c.kind {
                    Kind::For(parent) => {
                        let (iv, ub, st) = c.iv.clone().unwrap();
                        let next = num::binary(BinOp::Add, &iv, &st)?;
                        if lt_s(&next, &ub)? {
                            let mut bargs = vec![next.clone()];
                            bargs.extend(vals);
                            self.bind(&c.region.blocks[0].args, bargs)?;
                            let c = self.ctl();
                            c.iv = Some((next, ub, st));
                            c.block = 0;
                            c.ip = 0;
                        } else {
                            self.finish_region(parent, vals)?;
                        }
                    }
                    Kind::While(parent) => {
                        let before = &parent.regions[0];
                        self.bind(&before.blocks[0].args, vals)?;
                        let c = self.ctl();
                        c.region = before;
                        c.block = 0;
                        c.ip = 0;
                    }
                    Kind::Yielding(parent) => self.finish_region(parent, vals)?,
                    _ => return Err(internal("scf.yield outside a structured op")),
                }
                return Ok(None);
            }
            ScfCondition => {
                let Kind::While(parent) = self.ctl().kind else {
                    return Err(internal("scf.condition outside scf.while"));
                };
                let vals = self.vals(&op.operands[1..])?;
                if truthy(&self.val(op.operands[0])?) {
                    let after = &parent.regions[1];
                    self.bind(&after.blocks[0].args, vals)?;
                    let c = self.ctl();
                    c.region = after;
                    c.block = 0;
                    c.ip = 0;
                } else {
                    self.finish_region(parent, vals)?;
                }
                return Ok(None);
            }

            MemrefGetGlobal => {
                let name = op.attrs.sym("name").unwrap_or_default();
                let off = *self.offsets.get(name).ok_or_else(|| internal(format!("unknown global @{name}")))?;
                self.bind(&op.results, vec![Value::I32(off as u32)])?;
            }
            MemrefAlloc | MemrefAlloca => {
                let ty = self.frame_ref().func.ty(op.results[0]);
                let size = ty.as_memref().map(|m| m.byte_size()).unwrap_or(0) as u32;
                let p = self.host.call("malloc", &[Value::I32(size)]).unwrap()?;
                self.bind(&op.results, p)?;
            }
            MemrefDealloc => {}
            MemrefLoad => {
                let addr = self.address(op.operands[0], &op.operands[1..])?;
                let v = self.mem.load(addr, self.result_type(op, 0)?)?;
                self.bind(&op.results, vec![v])?;
            }
            MemrefStore => {
                let addr = self.address(op.operands[1], &op.operands[2..])?;
                let v = self.val(op.operands[0])?;
                self.mem.store(addr, &v)?;
            }

            SsaLocalDecl | DcontAlloc | SsaDrop => {}
            SsaLocalGet | DcontLoad => {
                let h = op.operands[0];
                let v = match self.frame_ref().locals.get(&h) {
                    Some(v) => v.clone(),
                    None => {
                        let t = self.frame_ref().func.ty(h);
                        let inner = t.local_inner().unwrap_or(t);
                        NumType::from_type(inner).ok_or_else(|| internal("read of an unset reference local"))?.zero()
                    }
                };
                self.bind(&op.results, vec![v])?;
            }
            SsaLocalSet => {
                let v = self.val(op.operands[1])?;
                self.frame().locals.insert(op.operands[0], v);
            }
            DcontStore => {
                let v = self.val(op.operands[0])?;
                self.frame().locals.insert(op.operands[1], v);
            }
            SsaGlobalGet => {
                let g = op.attrs.sym("global").unwrap_or_default();
                let v = self.globals.get(g).cloned().ok_or_else(|| internal(format!("unknown global @{g}")))?;
                self.bind(&op.results, vec![v])?;
            }
            SsaGlobalSet => {
                let g = op.attrs.sym("global").unwrap_or_default().to_string();
                let v = self.val(op.operands[0])?;
                self.globals.insert(g, v);
            }
            SsaLoad => {
                let base = self.val(op.operands[0])?.as_i32() as u64;
                let addr = base + op.attrs.int("offset").unwrap_or(0) as u64;
                let v = self.mem.load(addr, self.result_type(op, 0)?)?;
                self.bind(&op.results, vec![v])?;
            }
            SsaStore => {
                let base = self.val(op.operands[0])?.as_i32() as u64;
                let addr = base + op.attrs.int("offset").unwrap_or(0) as u64;
                let v = self.val(op.operands[1])?;
                self.mem.store(addr, &v)?;
            }
            SsaOnStack => {
                let v = self.frame().pending.pop().ok_or_else(|| internal("on_stack with nothing delivered"))?;
                self.bind(&op.results, vec![v])?;
            }
            SsaBlockLoop | SsaBlockBlock => {
                self.push_region(&op.regions[0], Kind::Composite, vec![])?;
                return Ok(None);
            }
            SsaIf => {
                let c = self.val(op.operands[0])?;
                let region = &op.regions[if truthy(&c) { 0 } else { 1 }];
                if region.is_empty() {
                    self.advance();
                } else {
                    self.push_region(region, Kind::Composite, vec![])?;
                }
                return Ok(None);
            }
            SsaBr | SsaPseudoBr => {
                self.branch(&op.successors[0])?;
                return Ok(None);
            }
            SsaCondBr | SsaPseudoCondBr => {
                let c = self.val(op.operands[0])?;
                self.branch(&op.successors[if truthy(&c) { 0 } else { 1 }])?;
                return Ok(None);
            }
            SsaExit => {
                self.frame().ctl.pop();
                self.advance();
                return Ok(None);
            }

            SsaFuncRef => {
                let f = op.attrs.sym("func").unwrap_or_default().to_string();
                self.bind(&op.results, vec![Value::FuncRef(f)])?;
            }
            SsaContNew => {
                let Value::FuncRef(f) = self.val(op.operands[0])? else {
                    return Err(internal("cont_new of a non-function"));
                };
                let id = self.new_cont(Cont::Fresh(f));
                self.bind(&op.results, vec![id])?;
            }
            DcontNew => {
                let f = op.attrs.sym("func").unwrap_or_default().to_string();
                let id = self.new_cont(Cont::Fresh(f));
                self.bind(&op.results, vec![id])?;
            }
            DcontSuspend | SsaSuspend => {
                let key = match op.kind {
                    SsaSuspend => HandlerKey::Tag(op.attrs.sym("tag").unwrap_or_default().to_string()),
                    _ => {
                        let f = self.frame_ref().func;
                        let sig = ContSig {
                            payload: op.operands.iter().map(|&v| f.ty(v).resolve_index()).collect(),
                            resume: op.results.iter().map(|&v| f.ty(v).resolve_index()).collect(),
                        };
                        HandlerKey::Sig(sig)
                    }
                };
                let payload = self.vals(&op.operands)?;
                self.suspend(key, payload)?;
                return Ok(None);
            }
            DcontResume | SsaResume => {
                let all = self.vals(&op.operands)?;
                let (cont, args) = all.split_last().ok_or_else(|| internal("resume without a continuation"))?;
                let key = match op.kind {
                    SsaResume => HandlerKey::Tag(op.attrs.sym("tag").unwrap_or_default().to_string()),
                    _ => match self.frame_ref().func.ty(*op.operands.last().unwrap()).resolve_index() {
                        Type::Cont(sig) => HandlerKey::Sig(sig),
                        t => return Err(internal(format!("resume of non-continuation {t}"))),
                    },
                };
                self.resume(cont.clone(), args.to_vec(), key)?;
                return Ok(None);
            }
            k => return Err(internal(format!("cannot execute {}", k.full_name()))),
        }
        self.advance();
        Ok(None)
    }

    fn new_cont(&mut self, c: Cont<'m>) -> Value {
        self.conts.push(c);
        Value::ContRef(self.conts.len() as u32 - 1)
    }

    fn resume(&mut self, cont: Value, args: Vec<Value>, key: HandlerKey) -> Result<(), Trap> {
        let Value::ContRef(id) = cont else { return Err(internal(format!("resume of {cont}"))) };
        let slot = self.conts.get_mut(id as usize).ok_or_else(|| internal(format!("dangling continuation {id}")))?;
        let state = std::mem::replace(slot, Cont::Consumed);
        if matches!(state, Cont::Consumed) {
            return Err(Trap::ConsumedContinuation);
        }
        self.host.trace.push(Event::Resume(id));
        self.stack.push(Entry::Marker(key));
        match state {
            Cont::Fresh(name) => {
                let f = *self.funcs.get(name.as_str()).ok_or_else(|| internal(format!("continuation of unknown @{name}")))?;
                self.enter(f, args)
            }
            Cont::Suspended(frames) => {
                self.stack.extend(frames);
                let op = self.current_op().ok_or_else(|| internal("suspended frame lost its suspend site"))?;
                self.bind(&op.results, args)?;
                self.advance();
                Ok(())
            }
            Cont::Consumed => unreachable!(),
        }
    }

    fn suspend(&mut self, key: HandlerKey, payload: Vec<Value>) -> Result<(), Trap> {
        let k = self
            .stack
            .iter()
            .rposition(|e| matches!(e, Entry::Marker(h) if *h == key))
            .ok_or_else(|| Trap::UnhandledSuspend(key.name()))?;
        let frames = self.stack.split_off(k + 1);
        self.stack.pop();
        let Value::ContRef(id) = self.new_cont(Cont::Suspended(frames)) else { unreachable!() };
        self.host.trace.push(Event::Suspend { tag: key.name(), payload: payload.clone() });

        let op = self.current_op().ok_or_else(|| internal("resumer lost its resume site"))?;
        let mut delivered = vec![Value::ContRef(id)];
        delivered.extend(payload);
        match op.kind {
            OpKind::SsaResume => {
                self.frame().pending = delivered;
                self.branch(&op.successors[0])
            }
            _ => match op.regions.first().filter(|r| !r.is_empty()) {
                Some(h) => self.push_region(h, Kind::Handler, delivered),
                None => {
                    self.advance();
                    Ok(())
                }
            },
        }
    }
}

/// Direct semantics of the `arith` opcodes.
fn arith(op: &Operation, a: &[Value], to: NumType) -> Result<Value, Trap> {
    use OpKind::*;
    let bin = |b| num::binary(b, &a[0], &a[1]);
    let cvt = |c| num::convert(c, to, &a[0]);
    match op.kind {
        ArithAddI | ArithAddF => bin(BinOp::Add),
        ArithSubI | ArithSubF => bin(BinOp::Sub),
        ArithMulI | ArithMulF => bin(BinOp::Mul),
        ArithDivSI => bin(BinOp::DivS),
        ArithDivUI => bin(BinOp::DivU),
        ArithRemSI => bin(BinOp::RemS),
        ArithRemUI => bin(BinOp::RemU),
        ArithAndI => bin(BinOp::And),
        ArithOrI => bin(BinOp::Or),
        ArithXOrI => bin(BinOp::Xor),
        ArithShLI => bin(BinOp::Shl),
        ArithShRSI => bin(BinOp::ShrS),
        ArithShRUI => bin(BinOp::ShrU),
        ArithDivF => bin(BinOp::Div),
        ArithNegF => num::unary(UnOp::Neg, &a[0]),
        ArithCeilDivSI => {
            let q = num::binary(BinOp::DivS, &a[0], &a[1])?;
            let r = num::binary(BinOp::RemS, &a[0], &a[1])?;
            let zero = to.zero();
            let bump = r != zero && truthy(&num::compare(RelOp::LtS, &a[0], &zero)?) == truthy(&num::compare(RelOp::LtS, &a[1], &zero)?);
            if bump {
                let one = match to {
                    NumType::I64 => Value::I64(1),
                    _ => Value::I32(1),
                };
                num::binary(BinOp::Add, &q, &one)
            } else {
                Ok(q)
            }
        }
        ArithCmpI | ArithCmpF => {
            let p = op.attrs.str("predicate").unwrap_or("");
            let rel = match p {
                "eq" | "oeq" => RelOp::Eq,
                "ne" | "une" => RelOp::Ne,
                "slt" => RelOp::LtS,
                "sle" => RelOp::LeS,
                "sgt" => RelOp::GtS,
                "sge" => RelOp::GeS,
                "ult" => RelOp::LtU,
                "ule" => RelOp::LeU,
                "ugt" => RelOp::GtU,
                "uge" => RelOp::GeU,
                "olt" => RelOp::Lt,
                "ole" => RelOp::Le,
                "ogt" => RelOp::Gt,
                "oge" => RelOp::Ge,
                p => return Err(internal(format!("unknown predicate {p}"))),
            };
            num::compare(rel, &a[0], &a[1])
        }
        ArithSIToFP => cvt(CvtOp::ConvertS),
        ArithUIToFP => cvt(CvtOp::ConvertU),
        ArithFPToSI => cvt(CvtOp::TruncS),
        ArithFPToUI => cvt(CvtOp::TruncU),
        ArithExtSI => cvt(CvtOp::ExtendS),
        ArithExtUI => cvt(CvtOp::ExtendU),
        ArithTruncI => cvt(CvtOp::Wrap),
        ArithExtF => cvt(CvtOp::Promote),
        ArithTruncF => cvt(CvtOp::Demote),
        ArithIndexCast => match (&a[0], to) {
            (Value::I32(_), NumType::I32) | (Value::I64(_), NumType::I64) => Ok(a[0].clone()),
            (Value::I32(v), NumType::I64) => Ok(Value::I64(*v as i32 as i64 as u64)),
            (Value::I64(v), NumType::I32) => Ok(Value::I32(*v as u32)),
            (v, t) => Err(internal(format!("index_cast of {v} to {t}"))),
        },
        ArithSelect => Ok(num::select(a[1].clone(), a[2].clone(), &a[0])),
        k => Err(internal(format!("cannot execute {}", k.full_name()))),
    }
}
