use std::fmt;

use crate::ir::Type;
use crate::num::{BinOp, CvtOp, NumType, RelOp, UnOp, Value};

/// Value types of the emitted subset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ValType {
    I32,
    I64,
    F32,
    F64,
    /// Non-null reference to a continuation of the named type.
    ContRef(String),
    FuncRef,
}

impl ValType {
    /// Wasm type of an IR value; memrefs and `index` are 32-bit addresses.
    pub fn from_type(t: &Type) -> Option<ValType> {
        Some(match t {
            Type::ContRef(name) => ValType::ContRef(name.clone()),
            Type::FuncRef => ValType::FuncRef,
            Type::Local(inner) => return ValType::from_type(inner),
            t => ValType::from_num(NumType::from_type(t)?),
        })
    }

    pub fn from_num(n: NumType) -> ValType {
        match n {
            NumType::I32 => ValType::I32,
            NumType::I64 => ValType::I64,
            NumType::F32 => ValType::F32,
            NumType::F64 => ValType::F64,
        }
    }

    pub fn num(&self) -> Option<NumType> {
        Some(match self {
            ValType::I32 => NumType::I32,
            ValType::I64 => NumType::I64,
            ValType::F32 => NumType::F32,
            ValType::F64 => NumType::F64,
            _ => return None,
        })
    }

    pub fn to_type(&self) -> Type {
        match self {
            ValType::ContRef(name) => Type::ContRef(name.clone()),
            ValType::FuncRef => Type::FuncRef,
            t => t.num().unwrap().to_type(),
        }
    }
}

impl fmt::Display for ValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValType::ContRef(name) => write!(f, "(ref ${name})"),
            ValType::FuncRef => f.write_str("funcref"),
            t => write!(f, "{}", t.num().unwrap()),
        }
    }
}

/// One instruction of the stack machine. Structured instructions own their
/// bodies; there are no SSA operands or results.
#[derive(Clone, Debug, PartialEq)]
pub enum Instr {
    Const(Value),
    Unary { op: UnOp, ty: NumType },
    Binary { op: BinOp, ty: NumType },
    Compare { op: RelOp, ty: NumType },
    Eqz(NumType),
    Convert { op: CvtOp, from: NumType, to: NumType },
    Select,
    LocalGet(u32),
    LocalSet(u32),
    LocalTee(u32),
    GlobalGet(String),
    GlobalSet(String),
    Load { ty: NumType, offset: u32 },
    Store { ty: NumType, offset: u32 },
    Call(String),
    Return,
    Br(String),
    BrIf(String),
    Block { label: String, results: Vec<ValType>, body: Vec<Instr> },
    Loop { label: String, body: Vec<Instr> },
    If { results: Vec<ValType>, then: Vec<Instr>, els: Vec<Instr> },
    RefFunc(String),
    ContNew(String),
    Suspend(String),
    /// `on` clauses map a tag to the label of the block receiving the payload.
    Resume { cont_type: String, on: Vec<(String, String)> },
    Unreachable,
    Drop,
}

impl Instr {
    /// Nested instruction lists, in textual order.
    pub fn bodies(&self) -> Vec<&Vec<Instr>> {
        match self {
            Instr::Block { body, .. } | Instr::Loop { body, .. } => vec![body],
            Instr::If { then, els, .. } => vec![then, els],
            _ => vec![],
        }
    }

    pub fn bodies_mut(&mut self) -> Vec<&mut Vec<Instr>> {
        match self {
            Instr::Block { body, .. } | Instr::Loop { body, .. } => vec![body],
            Instr::If { then, els, .. } => vec![then, els],
            _ => vec![],
        }
    }
}

/// Visits every instruction in `body`, parents before children.
pub fn walk_instrs<'a>(body: &'a [Instr], f: &mut impl FnMut(&'a Instr)) {
    for i in body {
        f(i);
        for b in i.bodies() {
            walk_instrs(b, f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct WasmFunc {
    pub name: String,
    pub exported: bool,
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
    /// Declared locals; their indices follow the parameters.
    pub locals: Vec<ValType>,
    pub body: Vec<Instr>,
}

impl WasmFunc {
    pub fn local_type(&self, idx: u32) -> Option<&ValType> {
        let i = idx as usize;
        if i < self.params.len() {
            self.params.get(i)
        } else {
            self.locals.get(i - self.params.len())
        }
    }

    /// Text name of a local slot: `$p{i}` for parameters, `$l{i}` otherwise.
    pub fn local_name(&self, idx: u32) -> String {
        let n = self.params.len() as u32;
        if idx < n {
            format!("p{idx}")
        } else {
            format!("l{}", idx - n)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncType {
    pub name: String,
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContType {
    pub name: String,
    pub func_type: String,
}

/// Function imported from the `env` module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Import {
    pub name: String,
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tag {
    pub name: String,
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Global {
    pub name: String,
    pub ty: ValType,
    pub mutable: bool,
    pub init: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSeg {
    pub offset: u32,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Memory {
    pub pages: u32,
    pub exported: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct WasmModule {
    /// Only the function types that continuation types refer to.
    pub func_types: Vec<FuncType>,
    pub cont_types: Vec<ContType>,
    pub imports: Vec<Import>,
    pub tags: Vec<Tag>,
    pub memory: Option<Memory>,
    pub globals: Vec<Global>,
    pub data: Vec<DataSeg>,
    pub funcs: Vec<WasmFunc>,
}

impl WasmModule {
    pub fn func(&self, name: &str) -> Option<&WasmFunc> {
        self.funcs.iter().find(|f| f.name == name)
    }

    pub fn import(&self, name: &str) -> Option<&Import> {
        self.imports.iter().find(|i| i.name == name)
    }

    pub fn tag(&self, name: &str) -> Option<&Tag> {
        self.tags.iter().find(|t| t.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Parameter and result types of the function type behind a continuation type.
    pub fn cont_signature(&self, cont_type: &str) -> Option<&FuncType> {
        let ct = self.cont_types.iter().find(|c| c.name == cont_type)?;
        self.func_types.iter().find(|f| f.name == ct.func_type)
    }

    /// Signature of a callable symbol, defined or imported.
    pub fn callee_signature(&self, name: &str) -> Option<(&[ValType], &[ValType])> {
        if let Some(f) = self.func(name) {
            return Some((&f.params, &f.results));
        }
        self.import(name).map(|i| (i.params.as_slice(), i.results.as_slice()))
    }

    /// Functions referenced by `ref.func`, in first-reference order.
    pub fn referenced_funcs(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.funcs {
            walk_instrs(&f.body, &mut |i| {
                if let Instr::RefFunc(name) = i {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
            });
        }
        out
    }
}
