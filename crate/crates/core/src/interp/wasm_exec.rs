//! Reference interpreter for the emitted Wasm subset, stack switching included.

use std::collections::HashMap;

use super::{align16, Event, ExecOptions, Host, Memory, Outcome, Trap};
use crate::error::{Error, Result};
use crate::num::{self, Value};
use crate::wasm::{Instr, WasmFunc, WasmModule};

/// Runs the exported or internal function `entry` of `m`.
pub fn exec_wasm(m: &WasmModule, entry: &str, args: &[Value], opts: &ExecOptions) -> Result<Outcome> {
    let f = m.func(entry).ok_or_else(|| Error::UnknownEntry(entry.into()))?;
    if f.params.len() != args.len() || f.params.iter().zip(args).any(|(p, a)| p.num() != a.num_type()) {
        let ps: Vec<String> = f.params.iter().map(|p| p.to_string()).collect();
        return Err(Error::ArgTypeMismatch(format!("${entry} takes ({})", ps.join(", "))));
    }
    let pages = m.memory.map_or(0, |mm| mm.pages as u64);
    let mut mem = Memory::new(pages);
    let mut data_end = 1024u64;
    for seg in &m.data {
        mem.write_bytes(seg.offset as u64, &seg.bytes)
            .map_err(|t| Error::Pipeline(format!("data segment at {}: {t}", seg.offset)))?;
        data_end = data_end.max(seg.offset as u64 + seg.bytes.len() as u64);
    }
    let mut mach = Machine {
        m,
        stack: Vec::new(),
        conts: Vec::new(),
        mem,
        globals: m.globals.iter().map(|g| (g.name.clone(), g.init.clone())).collect(),
        host: Host::new(align16(data_end)),
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

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Func,
    Block,
    Loop,
}

#[derive(Clone)]
struct Ctl<'m> {
    body: &'m [Instr],
    ip: usize,
    kind: Kind,
    label: Option<&'m str>,
    height: usize,
    arity: usize,
}

struct Frame<'m> {
    func: &'m WasmFunc,
    locals: Vec<Option<Value>>,
    stack: Vec<Value>,
    ctl: Vec<Ctl<'m>>,
}

enum Entry<'m> {
    Frame(Frame<'m>),
    /// A resume waiting for its continuation, with its `(tag, label)` clauses.
    Marker(&'m [(String, String)]),
}

enum Cont<'m> {
    Fresh(String),
    Suspended(Vec<Entry<'m>>),
    Consumed,
}

struct Machine<'m, 'o> {
    m: &'m WasmModule,
    stack: Vec<Entry<'m>>,
    conts: Vec<Cont<'m>>,
    mem: Memory,
    globals: HashMap<String, Value>,
    host: Host,
    opts: &'o ExecOptions,
    steps: u64,
}

fn internal(msg: impl Into<String>) -> Trap {
    Trap::Internal(msg.into())
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

    fn pop(&mut self) -> Result<Value, Trap> {
        self.frame().stack.pop().ok_or_else(|| internal("operand stack underflow"))
    }

    fn pop_n(&mut self, n: usize) -> Result<Vec<Value>, Trap> {
        let s = &mut self.frame().stack;
        if s.len() < n {
            return Err(internal("operand stack underflow"));
        }
        Ok(s.split_off(s.len() - n))
    }

    fn push(&mut self, v: Value) {
        self.frame().stack.push(v);
    }

    fn advance(&mut self) {
        self.frame().ctl.last_mut().expect("control stack").ip += 1;
    }

    fn pop_addr(&mut self, offset: u32) -> Result<u64, Trap> {
        match self.pop()? {
            Value::I32(a) => Ok(a as u64 + offset as u64),
            v => Err(internal(format!("address operand {v}"))),
        }
    }

    fn enter(&mut self, f: &'m WasmFunc, args: Vec<Value>) -> Result<(), Trap> {
        if self.stack.len() >= self.opts.max_depth {
            return Err(Trap::CallStackExhausted);
        }
        let mut locals: Vec<Option<Value>> = args.into_iter().map(Some).collect();
        locals.extend(f.locals.iter().map(|t| t.num().map(|n| n.zero())));
        if self.opts.trace_calls {
            self.host.trace.push(Event::Enter(f.name.clone()));
        }
        self.stack.push(Entry::Frame(Frame {
            func: f,
            locals,
            stack: Vec::new(),
            ctl: vec![Ctl { body: &f.body, ip: 0, kind: Kind::Func, label: None, height: 0, arity: f.results.len() }],
        }));
        Ok(())
    }

    fn do_return(&mut self) -> Result<Option<Vec<Value>>, Trap> {
        let n = self.frame().func.results.len();
        let vals = self.pop_n(n)?;
        let Some(Entry::Frame(done)) = self.stack.pop() else { unreachable!() };
        if self.opts.trace_calls {
            self.host.trace.push(Event::Return(done.func.name.clone()));
        }
        match self.stack.last() {
            None => return Ok(Some(vals)),
            Some(Entry::Frame(_)) => {}
            Some(Entry::Marker(_)) => {
                self.stack.pop();
            }
        }
        self.frame().stack.extend(vals);
        self.advance();
        Ok(None)
    }

    fn branch(&mut self, label: &str) -> Result<(), Trap> {
        let f = self.frame();
        let j = f
            .ctl
            .iter()
            .rposition(|c| c.label == Some(label))
            .ok_or_else(|| internal(format!("branch to unknown label ${label}")))?;
        let (kind, height, arity) = (f.ctl[j].kind, f.ctl[j].height, f.ctl[j].arity);
        if kind == Kind::Loop {
            f.stack.truncate(height);
            f.ctl.truncate(j + 1);
            f.ctl[j].ip = 0;
            return Ok(());
        }
        let keep = f.stack.split_off(f.stack.len() - arity);
        f.stack.truncate(height);
        f.stack.extend(keep);
        f.ctl.truncate(j);
        self.advance();
        Ok(())
    }

    fn push_ctl(&mut self, body: &'m [Instr], kind: Kind, label: Option<&'m str>, arity: usize) {
        let f = self.frame();
        let height = f.stack.len();
        f.ctl.push(Ctl { body, ip: 0, kind, label, height, arity });
    }

    fn step(&mut self) -> Result<Option<Vec<Value>>, Trap> {
        let c = self.frame().ctl.last().expect("control stack").clone();
        let Some(ins) = c.body.get(c.ip) else {
            if c.kind == Kind::Func {
                return self.do_return();
            }
            self.frame().ctl.pop();
            self.advance();
            return Ok(None);
        };
        match ins {
            Instr::Const(v) => self.push(v.clone()),
            Instr::Unary { op, .. } => {
                let a = self.pop()?;
                self.push(num::unary(*op, &a)?);
            }
            Instr::Binary { op, .. } => {
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(num::binary(*op, &a, &b)?);
            }
            Instr::Compare { op, .. } => {
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(num::compare(*op, &a, &b)?);
            }
            Instr::Eqz(_) => {
                let a = self.pop()?;
                self.push(num::eqz(&a)?);
            }
            Instr::Convert { op, to, .. } => {
                let a = self.pop()?;
                self.push(num::convert(*op, *to, &a)?);
            }
            Instr::Select => {
                let cnd = self.pop()?;
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(num::select(a, b, &cnd));
            }
            Instr::LocalGet(i) => {
                let v = self.frame().locals.get(*i as usize).cloned().flatten();
                self.push(v.ok_or_else(|| internal(format!("read of unset local {i}")))?);
            }
            Instr::LocalSet(i) | Instr::LocalTee(i) => {
                let v = self.pop()?;
                if matches!(ins, Instr::LocalTee(_)) {
                    self.push(v.clone());
                }
                let slot = self.frame().locals.get_mut(*i as usize).ok_or_else(|| internal(format!("no local {i}")))?;
                *slot = Some(v);
            }
            Instr::GlobalGet(g) => {
                let v = self.globals.get(g).cloned().ok_or_else(|| internal(format!("unknown global ${g}")))?;
                self.push(v);
            }
            Instr::GlobalSet(g) => {
                let v = self.pop()?;
                self.globals.insert(g.clone(), v);
            }
            Instr::Load { ty, offset } => {
                let addr = self.pop_addr(*offset)?;
                let v = self.mem.load(addr, *ty)?;
                self.push(v);
            }
            Instr::Store { offset, .. } => {
                let v = self.pop()?;
                let addr = self.pop_addr(*offset)?;
                self.mem.store(addr, &v)?;
            }
            Instr::Call(name) => {
                if let Some(f) = self.m.func(name) {
                    let args = self.pop_n(f.params.len())?;
                    return self.enter(f, args).map(|_| None);
                }
                let imp = self.m.import(name).ok_or_else(|| internal(format!("unknown function ${name}")))?;
                let args = self.pop_n(imp.params.len())?;
                let res = self.host.call(name, &args).ok_or_else(|| internal(format!("unresolved import ${name}")))??;
                self.frame().stack.extend(res);
            }
            Instr::Return => return self.do_return(),
            Instr::Br(l) => {
                self.branch(l)?;
                return Ok(None);
            }
            Instr::BrIf(l) => {
                let cnd = self.pop()?;
                if !matches!(cnd, Value::I32(0)) {
                    self.branch(l)?;
                    return Ok(None);
                }
            }
            Instr::Block { label, results, body } => {
                self.push_ctl(body, Kind::Block, Some(label), results.len());
                return Ok(None);
            }
            Instr::Loop { label, body } => {
                self.push_ctl(body, Kind::Loop, Some(label), 0);
                return Ok(None);
            }
            Instr::If { results, then, els } => {
                let cnd = self.pop()?;
                let body = if matches!(cnd, Value::I32(0)) { els } else { then };
                self.push_ctl(body, Kind::Block, None, results.len());
                return Ok(None);
            }
            Instr::RefFunc(f) => self.push(Value::FuncRef(f.clone())),
            Instr::ContNew(_) => {
                let Value::FuncRef(f) = self.pop()? else { return Err(internal("cont.new of a non-function")) };
                self.conts.push(Cont::Fresh(f));
                self.push(Value::ContRef(self.conts.len() as u32 - 1));
            }
            Instr::Suspend(tag) => {
                let t = self.m.tag(tag).ok_or_else(|| internal(format!("unknown tag ${tag}")))?;
                let payload = self.pop_n(t.params.len())?;
                self.suspend(tag, payload)?;
                return Ok(None);
            }
            Instr::Resume { cont_type, on } => {
                let sig = self.m.cont_signature(cont_type).ok_or_else(|| internal(format!("unknown cont type ${cont_type}")))?;
                let Value::ContRef(id) = self.pop()? else { return Err(internal("resume of a non-continuation")) };
                let args = self.pop_n(sig.params.len())?;
                self.resume(id, args, on)?;
                return Ok(None);
            }
            Instr::Unreachable => return Err(Trap::Unreachable),
            Instr::Drop => {
                self.pop()?;
            }
        }
        self.advance();
        Ok(None)
    }

    fn resume(&mut self, id: u32, args: Vec<Value>, on: &'m [(String, String)]) -> Result<(), Trap> {
        let slot = self.conts.get_mut(id as usize).ok_or_else(|| internal(format!("dangling continuation {id}")))?;
        let state = std::mem::replace(slot, Cont::Consumed);
        if matches!(state, Cont::Consumed) {
            return Err(Trap::ConsumedContinuation);
        }
        self.host.trace.push(Event::Resume(id));
        self.stack.push(Entry::Marker(on));
        match state {
            Cont::Fresh(name) => {
                let f = self.m.func(&name).ok_or_else(|| internal(format!("continuation of unknown ${name}")))?;
                self.enter(f, args)
            }
            Cont::Suspended(frames) => {
                self.stack.extend(frames);
                self.frame().stack.extend(args);
                self.advance();
                Ok(())
            }
            Cont::Consumed => unreachable!(),
        }
    }

    fn suspend(&mut self, tag: &str, payload: Vec<Value>) -> Result<(), Trap> {
        let (k, label) = self
            .stack
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, e)| match e {
                Entry::Marker(on) => on.iter().find(|(t, _)| t == tag).map(|(_, l)| (i, l.as_str())),
                _ => None,
            })
            .ok_or_else(|| Trap::UnhandledSuspend(tag.to_string()))?;
        let frames = self.stack.split_off(k + 1);
        self.stack.pop();
        self.conts.push(Cont::Suspended(frames));
        let id = self.conts.len() as u32 - 1;
        self.host.trace.push(Event::Suspend { tag: tag.to_string(), payload: payload.clone() });
        self.push(Value::ContRef(id));
        self.frame().stack.extend(payload);
        self.branch(label)
    }
}
