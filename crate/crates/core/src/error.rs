use thiserror::Error;

use crate::ir::Diagnostic;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}", render_diagnostics(.0))]
    Diagnostics(Vec<Diagnostic>),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unsupported arith operation `arith.{0}`")]
    UnsupportedArithOp(String),
    #[error("unsupported scf operation `scf.{0}`")]
    UnsupportedScfOp(String),
    #[error("unsupported memref: {0}")]
    UnsupportedMemRef(String),
    #[error("memref.alloca is not supported without alloca-as-alloc")]
    AllocaUnsupported,
    #[error("data layout exceeds the 32-bit address space (heap base {0})")]
    SegmentOverflow(u64),
    #[error("dcont.resume with {0} handlers; exactly one is supported")]
    MultipleHandlers(usize),
    #[error("continuation signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("duplicate symbol @{0}")]
    DuplicateSymbol(String),
    #[error("pseudo branch to ^{0} does not target the lexically next block")]
    NonAdjacentFallthrough(String),
    #[error("branch target ^{0} has no enclosing wasm label")]
    UnlabeledBranchTarget(String),
    #[error("operation {0} does not follow stack discipline; run introduce-locals first")]
    StackDiscipline(String),
    #[error("unsupported operation {0} at this stage")]
    UnsupportedOp(String),
    #[error("unknown entry function @{0}")]
    UnknownEntry(String),
    #[error("argument type mismatch: {0}")]
    ArgTypeMismatch(String),
    #[error("pipeline: {0}")]
    Pipeline(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
