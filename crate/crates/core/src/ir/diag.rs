use std::fmt;
use std::sync::Arc;

/// 1-based location of a parsed construct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Syntax,
    UnknownOp,
    DuplicateSymbol,
    UndefinedValue,
    MultipleDefinitions,
    Dominance,
    OperandArity,
    ResultArity,
    MissingAttribute,
    RegionCount,
    SuccessorCount,
    TypeMismatch,
    InvalidType,
    TerminatorNotLast,
    MissingTerminator,
    UnknownSuccessor,
    UnknownSymbol,
    MissingStructuralBlock,
    BranchOutsideRegion,
    NonAdjacentPseudoBranch,
    ParamNotLocal,
    CallArgumentNotInnerType,
    UnknownLabel,
    StackUnderflowAtValidation,
    StackHeightMismatch,
    UnknownLocal,
    ImmutableGlobal,
    BranchArity,
    HandlerTarget,
    NoMemory,
}

impl Rule {
    /// Structural control-flow rules may legitimately survive parsing.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            Rule::MissingStructuralBlock | Rule::BranchOutsideRegion | Rule::NonAdjacentPseudoBranch
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Rule,
    pub message: String,
    /// Function containing the offending op, if any.
    pub function: Option<String>,
    /// Full name of the offending op, if any.
    pub op: Option<String>,
    pub span: Option<SourceSpan>,
}

impl Diagnostic {
    pub fn new(rule: Rule, message: impl Into<String>) -> Self {
        Diagnostic { rule, message: message.into(), function: None, op: None, span: None }
    }

    pub fn at(mut self, span: Option<SourceSpan>) -> Self {
        self.span = span;
        self
    }

    pub fn in_function(mut self, name: &str) -> Self {
        self.function = Some(name.to_string());
        self
    }

    pub fn on_op(mut self, op: String) -> Self {
        self.op = Some(op);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = &self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "error[{:?}]: {}", self.rule, self.message)?;
        if let Some(op) = &self.op {
            write!(f, " (in {op}")?;
            if let Some(func) = &self.function {
                write!(f, " of @{func}")?;
            }
            write!(f, ")")?;
        } else if let Some(func) = &self.function {
            write!(f, " (in @{func})")?;
        }
        Ok(())
    }
}
