//! Type checker for the emitted Wasm subset (stack-polymorphic after
//! `br`, `return` and `unreachable`).

use crate::ir::{Diagnostic, Rule};
use crate::num::NumType;
use crate::wasm::{Instr, ValType, WasmFunc, WasmModule};

/// Returns every violation found; an empty list means the module validates.
pub fn validate_wasm(m: &WasmModule) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if m.memory.is_none() && !m.data.is_empty() {
        diags.push(Diagnostic::new(Rule::NoMemory, "data segments without a memory"));
    }
    for f in &m.funcs {
        let mut v = Checker { m, f, stack: Vec::new(), ctl: Vec::new(), diags: Vec::new() };
        v.ctl.push(Frame { label: None, branch: f.results.clone(), results: f.results.clone(), height: 0, unreachable: false });
        v.body(&f.body);
        v.end();
        diags.extend(v.diags.into_iter().map(|d| d.in_function(&f.name)));
    }
    diags
}

struct Frame {
    label: Option<String>,
    /// Types a branch to this frame carries.
    branch: Vec<ValType>,
    results: Vec<ValType>,
    height: usize,
    unreachable: bool,
}

struct Checker<'a> {
    m: &'a WasmModule,
    f: &'a WasmFunc,
    /// `None` is the unknown type produced by popping a polymorphic stack.
    stack: Vec<Option<ValType>>,
    ctl: Vec<Frame>,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn err(&mut self, rule: Rule, msg: String) {
        self.diags.push(Diagnostic::new(rule, msg));
    }

    fn push(&mut self, t: ValType) {
        self.stack.push(Some(t));
    }

    fn pop_any(&mut self, what: &str) -> Option<ValType> {
        let fr = self.ctl.last().unwrap();
        if self.stack.len() == fr.height {
            if !fr.unreachable {
                self.err(Rule::StackUnderflowAtValidation, format!("{what} needs an operand but the stack is empty"));
            }
            return None;
        }
        self.stack.pop().unwrap()
    }

    fn pop(&mut self, want: &ValType, what: &str) {
        if let Some(got) = self.pop_any(what) {
            if &got != want {
                self.err(Rule::TypeMismatch, format!("{what} expects {want}, found {got}"));
            }
        }
    }

    fn pop_num(&mut self, t: NumType, what: &str) {
        self.pop(&ValType::from_num(t), what);
    }

    fn pop_all(&mut self, ts: &[ValType], what: &str) {
        for t in ts.iter().rev() {
            self.pop(t, what);
        }
    }

    fn set_unreachable(&mut self) {
        let fr = self.ctl.last_mut().unwrap();
        self.stack.truncate(fr.height);
        fr.unreachable = true;
    }

    fn label_types(&mut self, label: &str, what: &str) -> Option<Vec<ValType>> {
        match self.ctl.iter().rev().find(|c| c.label.as_deref() == Some(label)) {
            Some(c) => Some(c.branch.clone()),
            None => {
                self.err(Rule::UnknownLabel, format!("{what} targets unknown label ${label}"));
                None
            }
        }
    }

    /// Checks the stack at the end of the innermost frame and pops it.
    fn end(&mut self) {
        let results = self.ctl.last().unwrap().results.clone();
        self.pop_all(&results, "block end");
        let fr = self.ctl.pop().unwrap();
        if self.stack.len() != fr.height {
            let extra = self.stack.len() - fr.height;
            self.err(Rule::StackHeightMismatch, format!("{extra} value(s) left on the stack at block end"));
            self.stack.truncate(fr.height);
        }
    }

    fn nested(&mut self, label: Option<&str>, branch: Vec<ValType>, results: &[ValType], body: &[Instr]) {
        self.ctl.push(Frame { label: label.map(String::from), branch, results: results.to_vec(), height: self.stack.len(), unreachable: false });
        self.body(body);
        self.end();
    }

    fn body(&mut self, body: &[Instr]) {
        for ins in body {
            self.instr(ins);
        }
    }

    fn instr(&mut self, ins: &Instr) {
        match ins {
            Instr::Const(v) => match v.num_type() {
                Some(t) => self.push(ValType::from_num(t)),
                None => self.err(Rule::TypeMismatch, format!("constant {v} is not numeric")),
            },
            Instr::Unary { ty, .. } => {
                self.pop_num(*ty, "unary op");
                self.push(ValType::from_num(*ty));
            }
            Instr::Binary { ty, .. } => {
                self.pop_num(*ty, "binary op");
                self.pop_num(*ty, "binary op");
                self.push(ValType::from_num(*ty));
            }
            Instr::Compare { ty, .. } => {
                self.pop_num(*ty, "comparison");
                self.pop_num(*ty, "comparison");
                self.push(ValType::I32);
            }
            Instr::Eqz(ty) => {
                self.pop_num(*ty, "eqz");
                self.push(ValType::I32);
            }
            Instr::Convert { from, to, .. } => {
                self.pop_num(*from, "conversion");
                self.push(ValType::from_num(*to));
            }
            Instr::Select => {
                self.pop(&ValType::I32, "select condition");
                let b = self.pop_any("select");
                let a = self.pop_any("select");
                match (a, b) {
                    (Some(a), Some(b)) if a != b => self.err(Rule::TypeMismatch, format!("select arms differ: {a} vs {b}")),
                    (Some(t), _) | (None, Some(t)) => self.push(t),
                    (None, None) => self.stack.push(None),
                }
            }
            Instr::LocalGet(i) | Instr::LocalSet(i) | Instr::LocalTee(i) => {
                let Some(t) = self.f.local_type(*i).cloned() else {
                    self.err(Rule::UnknownLocal, format!("local index {i} out of range"));
                    return;
                };
                if !matches!(ins, Instr::LocalGet(_)) {
                    self.pop(&t, "local.set");
                }
                if !matches!(ins, Instr::LocalSet(_)) {
                    self.push(t);
                }
            }
            Instr::GlobalGet(g) | Instr::GlobalSet(g) => {
                let Some(gl) = self.m.global(g) else {
                    self.err(Rule::UnknownSymbol, format!("unknown global ${g}"));
                    return;
                };
                let t = gl.ty.clone();
                if let Instr::GlobalSet(_) = ins {
                    if !gl.mutable {
                        self.err(Rule::ImmutableGlobal, format!("global.set of immutable ${g}"));
                    }
                    self.pop(&t, "global.set");
                } else {
                    self.push(t);
                }
            }
            Instr::Load { ty, .. } => {
                self.need_memory();
                self.pop(&ValType::I32, "load address");
                self.push(ValType::from_num(*ty));
            }
            Instr::Store { ty, .. } => {
                self.need_memory();
                self.pop_num(*ty, "stored value");
                self.pop(&ValType::I32, "store address");
            }
            Instr::Call(name) => match self.m.callee_signature(name) {
                Some((ps, rs)) => {
                    let (ps, rs) = (ps.to_vec(), rs.to_vec());
                    self.pop_all(&ps, "call argument");
                    for r in rs {
                        self.push(r);
                    }
                }
                None => self.err(Rule::UnknownSymbol, format!("call to unknown function ${name}")),
            },
            Instr::Return => {
                let rs = self.f.results.clone();
                self.pop_all(&rs, "return value");
                self.set_unreachable();
            }
            Instr::Br(l) => {
                if let Some(ts) = self.label_types(l, "br") {
                    self.pop_all(&ts, "branch value");
                }
                self.set_unreachable();
            }
            Instr::BrIf(l) => {
                self.pop(&ValType::I32, "br_if condition");
                if let Some(ts) = self.label_types(l, "br_if") {
                    self.pop_all(&ts, "branch value");
                    for t in ts {
                        self.push(t);
                    }
                }
            }
            Instr::Block { label, results, body } => {
                self.nested(Some(label), results.clone(), results, body);
                for t in results {
                    self.push(t.clone());
                }
            }
            Instr::Loop { label, body } => self.nested(Some(label), vec![], &[], body),
            Instr::If { results, then, els } => {
                self.pop(&ValType::I32, "if condition");
                self.nested(None, results.clone(), results, then);
                if els.is_empty() && !results.is_empty() {
                    self.err(Rule::TypeMismatch, "if with results needs an else arm".into());
                } else {
                    self.nested(None, results.clone(), results, els);
                }
                for t in results {
                    self.push(t.clone());
                }
            }
            Instr::RefFunc(f) => {
                if self.m.func(f).is_none() {
                    self.err(Rule::UnknownSymbol, format!("ref.func of unknown ${f}"));
                }
                self.push(ValType::FuncRef);
            }
            Instr::ContNew(ct) => {
                if self.m.cont_signature(ct).is_none() {
                    self.err(Rule::UnknownSymbol, format!("unknown continuation type ${ct}"));
                }
                self.pop(&ValType::FuncRef, "cont.new");
                self.push(ValType::ContRef(ct.clone()));
            }
            Instr::Suspend(tag) => match self.m.tag(tag) {
                Some(t) => {
                    let (ps, rs) = (t.params.clone(), t.results.clone());
                    self.pop_all(&ps, "suspend payload");
                    for r in rs {
                        self.push(r);
                    }
                }
                None => self.err(Rule::UnknownSymbol, format!("suspend to unknown tag ${tag}")),
            },
            Instr::Resume { cont_type, on } => {
                let Some(sig) = self.m.cont_signature(cont_type).cloned() else {
                    self.err(Rule::UnknownSymbol, format!("unknown continuation type ${cont_type}"));
                    return;
                };
                for (tag, label) in on {
                    let Some(t) = self.m.tag(tag).cloned() else {
                        self.err(Rule::UnknownSymbol, format!("handler for unknown tag ${tag}"));
                        continue;
                    };
                    if let Some(ts) = self.label_types(label, "resume handler") {
                        let mut want = vec![ValType::ContRef(cont_type.clone())];
                        want.extend(t.params.iter().cloned());
                        if ts != want {
                            let show = |v: &[ValType]| v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
                            self.err(Rule::HandlerTarget, format!("handler block ${label} yields ({}), expected ({})", show(&ts), show(&want)));
                        }
                    }
                }
                self.pop(&ValType::ContRef(cont_type.clone()), "resume");
                self.pop_all(&sig.params, "resume argument");
                for r in sig.results {
                    self.push(r);
                }
            }
            Instr::Unreachable => self.set_unreachable(),
            Instr::Drop => {
                self.pop_any("drop");
            }
        }
    }

    fn need_memory(&mut self) {
        if self.m.memory.is_none() {
            self.err(Rule::NoMemory, "memory access without a memory".into());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{BinOp, Value};
    use crate::wasm::Memory;

    fn module(body: Vec<Instr>, results: Vec<ValType>) -> WasmModule {
        WasmModule {
            memory: Some(Memory { pages: 1, exported: true }),
            funcs: vec![WasmFunc { name: "f".into(), exported: true, results, body, ..Default::default() }],
            ..Default::default()
        }
    }

    fn rules(m: &WasmModule) -> Vec<Rule> {
        validate_wasm(m).into_iter().map(|d| d.rule).collect()
    }

    #[test]
    fn well_typed_block_loop_validates() {
        let body = vec![Instr::Block {
            label: "blk0".into(),
            results: vec![],
            body: vec![Instr::Loop {
                label: "loop0".into(),
                body: vec![Instr::Const(Value::I32(0)), Instr::BrIf("blk0".into()), Instr::Br("loop0".into())],
            }],
        }];
        assert!(rules(&module(body, vec![])).is_empty());
    }

    #[test]
    fn br_to_undefined_label() {
        assert_eq!(rules(&module(vec![Instr::Br("nowhere".into())], vec![])), vec![Rule::UnknownLabel]);
    }

    #[test]
    fn add_with_one_operand_underflows() {
        let body = vec![Instr::Const(Value::I32(1)), Instr::Binary { op: BinOp::Add, ty: NumType::I32 }];
        assert_eq!(rules(&module(body, vec![ValType::I32])), vec![Rule::StackUnderflowAtValidation]);
    }

    #[test]
    fn code_after_br_is_polymorphic() {
        let body = vec![Instr::Block {
            label: "b".into(),
            results: vec![ValType::I32],
            body: vec![Instr::Const(Value::I32(3)), Instr::Br("b".into()), Instr::Binary { op: BinOp::Add, ty: NumType::I32 }],
        }];
        assert!(rules(&module(body, vec![ValType::I32])).is_empty());
    }

    #[test]
    fn leftover_and_mismatched_values() {
        let body = vec![Instr::Const(Value::I64(1)), Instr::Const(Value::I32(1))];
        assert_eq!(rules(&module(body, vec![ValType::I64])), vec![Rule::TypeMismatch, Rule::StackHeightMismatch]);
    }
}
