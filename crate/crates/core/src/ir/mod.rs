//! Region-based SSA IR shared by every dialect level.

mod attr;
mod diag;
mod dominance;
mod module;
mod ops;
mod types;
mod verify;

pub use attr::{Attr, Attrs, FloatBits};
pub use diag::{Diagnostic, Rule, SourceSpan};
pub use dominance::Dominators;
pub use module::{
    resolve_chains, substitute_region, walk_blocks_mut, walk_region, walk_region_mut, Block,
    BlockId, FuncKind, Function, IrModule, Level, OpId, Operation, Region, ValueData, ValueDef,
    ValueId, ValueTable,
};
pub use ops::{
    lookup_full_name, lookup_signature, Arity, OpKind, OpSignature, Traits, TypeRule, UnknownOp,
};
pub use types::{ContSig, MemRefType, Type};
pub use verify::verify_module;
