use std::collections::HashMap;

use super::attr::Attrs;
use super::diag::SourceSpan;
use super::ops::OpKind;
use super::types::Type;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueDef {
    OpResult { op: OpId, index: u32 },
    BlockArg { block: BlockId, index: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueData {
    pub ty: Type,
    pub def: ValueDef,
}

#[derive(Clone, Debug)]
pub struct Operation {
    pub id: OpId,
    pub kind: OpKind,
    pub operands: Vec<ValueId>,
    pub results: Vec<ValueId>,
    pub attrs: Attrs,
    pub regions: Vec<Region>,
    pub successors: Vec<String>,
    pub span: Option<SourceSpan>,
}

impl Operation {
    /// Module-level operation (no SSA values).
    pub fn module_op(kind: OpKind, attrs: Attrs) -> Self {
        Operation {
            id: OpId(0),
            kind,
            operands: Vec::new(),
            results: Vec::new(),
            attrs,
            regions: Vec::new(),
            successors: Vec::new(),
            span: None,
        }
    }

    pub fn result(&self, i: usize) -> ValueId {
        self.results[i]
    }

    pub fn with_regions(mut self, regions: Vec<Region>) -> Self {
        self.regions = regions;
        self
    }

    pub fn with_successors(mut self, succ: Vec<String>) -> Self {
        self.successors = succ;
        self
    }

    pub fn full_name(&self) -> String {
        self.kind.full_name()
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub id: BlockId,
    pub label: String,
    pub args: Vec<ValueId>,
    pub ops: Vec<Operation>,
}

impl Block {
    pub fn terminator(&self) -> Option<&Operation> {
        self.ops.last().filter(|op| op.kind.is_terminator())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Region {
    pub blocks: Vec<Block>,
}

impl Region {
    pub fn single(block: Block) -> Self {
        Region { blocks: vec![block] }
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FuncKind {
    /// `func.func`
    Func,
    /// `ssawasm.func`
    SsaWasm,
    /// `wasm.func`
    Wasm,
}

impl FuncKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FuncKind::Func => "func.func",
            FuncKind::SsaWasm => "ssawasm.func",
            FuncKind::Wasm => "wasm.func",
        }
    }
}

/// Arena of SSA values and id counters for one function.
#[derive(Clone, Debug, Default)]
pub struct ValueTable {
    pub values: Vec<ValueData>,
    pub next_op: u32,
    pub next_block: u32,
}

impl ValueTable {
    pub fn new_value(&mut self, ty: Type, def: ValueDef) -> ValueId {
        self.values.push(ValueData { ty, def });
        ValueId(self.values.len() as u32 - 1)
    }

    pub fn ty(&self, v: ValueId) -> &Type {
        &self.values[v.0 as usize].ty
    }

    pub fn data(&self, v: ValueId) -> &ValueData {
        &self.values[v.0 as usize]
    }

    pub fn set_ty(&mut self, v: ValueId, ty: Type) {
        self.values[v.0 as usize].ty = ty;
    }

    pub fn fresh_op_id(&mut self) -> OpId {
        self.next_op += 1;
        OpId(self.next_op)
    }

    pub fn fresh_block_id(&mut self) -> BlockId {
        self.next_block += 1;
        BlockId(self.next_block)
    }

    /// Creates an operation with freshly allocated result values.
    pub fn op(
        &mut self,
        kind: OpKind,
        operands: Vec<ValueId>,
        result_types: Vec<Type>,
        attrs: Attrs,
    ) -> Operation {
        let id = self.fresh_op_id();
        let results = result_types
            .into_iter()
            .enumerate()
            .map(|(i, ty)| self.new_value(ty, ValueDef::OpResult { op: id, index: i as u32 }))
            .collect();
        Operation {
            id,
            kind,
            operands,
            results,
            attrs,
            regions: Vec::new(),
            successors: Vec::new(),
            span: None,
        }
    }

    pub fn block(&mut self, label: &str, arg_types: Vec<Type>) -> Block {
        let id = self.fresh_block_id();
        let args = arg_types
            .into_iter()
            .enumerate()
            .map(|(i, ty)| self.new_value(ty, ValueDef::BlockArg { block: id, index: i as u32 }))
            .collect();
        Block { id, label: label.to_string(), args, ops: Vec::new() }
    }

    pub fn types_of(&self, vs: &[ValueId]) -> Vec<Type> {
        vs.iter().map(|&v| self.ty(v).clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Function {
    pub name: String,
    pub kind: FuncKind,
    pub exported: bool,
    pub params: Vec<Type>,
    pub results: Vec<Type>,
    /// `None` for an external declaration.
    pub body: Option<Region>,
    pub attrs: Attrs,
    pub values: ValueTable,
    pub span: Option<SourceSpan>,
}

impl Function {
    /// A function with an empty entry block whose arguments are the params.
    pub fn new(name: &str, kind: FuncKind, params: Vec<Type>, results: Vec<Type>) -> Self {
        let mut values = ValueTable::default();
        let entry = values.block("entry", params.clone());
        Function {
            name: name.to_string(),
            kind,
            exported: true,
            params,
            results,
            body: Some(Region::single(entry)),
            attrs: Attrs::new(),
            values,
            span: None,
        }
    }

    pub fn declaration(name: &str, params: Vec<Type>, results: Vec<Type>) -> Self {
        Function {
            name: name.to_string(),
            kind: FuncKind::Func,
            exported: false,
            params,
            results,
            body: None,
            attrs: Attrs::new(),
            values: ValueTable::default(),
            span: None,
        }
    }

    pub fn entry(&self) -> Option<&Block> {
        self.body.as_ref().and_then(|r| r.blocks.first())
    }

    pub fn entry_mut(&mut self) -> Option<&mut Block> {
        self.body.as_mut().and_then(|r| r.blocks.first_mut())
    }

    pub fn param_values(&self) -> Vec<ValueId> {
        self.entry().map(|b| b.args.clone()).unwrap_or_default()
    }

    pub fn ty(&self, v: ValueId) -> &Type {
        self.values.ty(v)
    }

    /// Rewrites every use of `old` to `new`, returning the number of rewritten uses.
    pub fn replace_value_uses(&mut self, old: ValueId, new: ValueId) -> Result<usize, Error> {
        let (a, b) = (self.values.ty(old), self.values.ty(new));
        if a != b {
            return Err(Error::TypeMismatch(format!(
                "cannot replace value of type {a} with value of type {b}"
            )));
        }
        let mut map = HashMap::new();
        map.insert(old, new);
        Ok(self.body.as_mut().map_or(0, |r| substitute_region(r, &map)))
    }

    pub fn count_uses(&self) -> HashMap<ValueId, usize> {
        let mut uses = HashMap::new();
        if let Some(body) = &self.body {
            walk_region(body, &mut |op| {
                for &v in &op.operands {
                    *uses.entry(v).or_insert(0) += 1;
                }
            });
        }
        uses
    }
}

/// Applies a value substitution to all operands in `region`; returns rewritten use count.
pub fn substitute_region(region: &mut Region, map: &HashMap<ValueId, ValueId>) -> usize {
    let mut count = 0;
    walk_region_mut(region, &mut |op| {
        for v in op.operands.iter_mut() {
            if let Some(&n) = map.get(v) {
                *v = n;
                count += 1;
            }
        }
    });
    count
}

/// Resolves chains in a substitution map (a -> b -> c becomes a -> c).
pub fn resolve_chains(map: &mut HashMap<ValueId, ValueId>) {
    let keys: Vec<ValueId> = map.keys().copied().collect();
    for k in keys {
        let mut target = map[&k];
        let mut guard = 0;
        while let Some(&next) = map.get(&target) {
            target = next;
            guard += 1;
            if guard > map.len() {
                break;
            }
        }
        map.insert(k, target);
    }
}

/// Pre-order walk over every operation in `region`, including nested regions.
pub fn walk_region(region: &Region, f: &mut impl FnMut(&Operation)) {
    for block in &region.blocks {
        for op in &block.ops {
            f(op);
            for r in &op.regions {
                walk_region(r, f);
            }
        }
    }
}

pub fn walk_region_mut(region: &mut Region, f: &mut impl FnMut(&mut Operation)) {
    for block in region.blocks.iter_mut() {
        for op in block.ops.iter_mut() {
            f(op);
            for r in op.regions.iter_mut() {
                walk_region_mut(r, f);
            }
        }
    }
}

pub fn walk_blocks_mut(region: &mut Region, f: &mut impl FnMut(&mut Block)) {
    for block in region.blocks.iter_mut() {
        f(block);
        for op in block.ops.iter_mut() {
            for r in op.regions.iter_mut() {
                walk_blocks_mut(r, f);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    High,
    SsaWasm,
    Wasm,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::SsaWasm => "ssawasm",
            Level::Wasm => "wasm",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s {
            "high" => Some(Level::High),
            "ssawasm" => Some(Level::SsaWasm),
            "wasm" => Some(Level::Wasm),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IrModule {
    pub level: Level,
    pub globals: Vec<Operation>,
    pub functions: Vec<Function>,
}

impl Default for IrModule {
    fn default() -> Self {
        IrModule { level: Level::High, globals: Vec::new(), functions: Vec::new() }
    }
}

impl IrModule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    pub fn global_op(&self, kind: OpKind, sym: &str) -> Option<&Operation> {
        self.globals.iter().find(|op| op.kind == kind && op.attrs.sym("sym") == Some(sym))
    }

    /// Total number of operations, module-level ones included.
    pub fn op_count(&self) -> usize {
        let mut n = self.globals.len();
        for f in &self.functions {
            if let Some(body) = &f.body {
                walk_region(body, &mut |_| n += 1);
            }
        }
        n
    }

    pub fn contains_kind(&self, pred: impl Fn(OpKind) -> bool) -> bool {
        if self.globals.iter().any(|op| pred(op.kind)) {
            return true;
        }
        let mut found = false;
        for f in &self.functions {
            if let Some(body) = &f.body {
                walk_region(body, &mut |op| found |= pred(op.kind));
            }
        }
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::attr::Attr;

    fn sample() -> (Function, ValueId, ValueId) {
        let mut f = Function::new("f", FuncKind::Func, vec![], vec![]);
        let c1 = f.values.op(OpKind::ArithConstant, vec![], vec![Type::I32], Attrs::new().with("value", Attr::Int(1)));
        let a = c1.result(0);
        let c2 = f.values.op(OpKind::ArithConstant, vec![], vec![Type::I32], Attrs::new().with("value", Attr::Int(2)));
        let b = c2.result(0);
        let add = f.values.op(OpKind::ArithAddI, vec![a, a], vec![Type::I32], Attrs::new());
        let entry = f.entry_mut().unwrap();
        entry.ops.extend([c1, c2, add]);
        (f, a, b)
    }

    #[test]
    fn replace_counts_each_use() {
        let (mut f, a, b) = sample();
        assert_eq!(f.replace_value_uses(a, b).unwrap(), 2);
        assert_eq!(f.replace_value_uses(a, b).unwrap(), 0);
    }

    #[test]
    fn replace_rejects_type_change() {
        let (mut f, a, _) = sample();
        let fv = f.values.new_value(Type::F64, ValueDef::BlockArg { block: BlockId(0), index: 9 });
        assert!(matches!(f.replace_value_uses(a, fv), Err(Error::TypeMismatch(_))));
    }
}
