//! Operation kinds and the signature registry for every supported dialect.

use std::collections::HashMap;
use std::sync::LazyLock;

use thiserror::Error;

macro_rules! op_kinds {
    ($($variant:ident => $dialect:literal, $name:literal;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum OpKind {
            $($variant),*
        }

        impl OpKind {
            pub const ALL: &'static [OpKind] = &[$(OpKind::$variant),*];

            pub fn dialect(self) -> &'static str {
                match self {
                    $(OpKind::$variant => $dialect),*
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $(OpKind::$variant => $name),*
                }
            }
        }
    };
}

op_kinds! {
    ArithConstant => "arith", "constant";
    ArithAddI => "arith", "addi";
    ArithSubI => "arith", "subi";
    ArithMulI => "arith", "muli";
    ArithDivSI => "arith", "divsi";
    ArithDivUI => "arith", "divui";
    ArithRemSI => "arith", "remsi";
    ArithRemUI => "arith", "remui";
    ArithAndI => "arith", "andi";
    ArithOrI => "arith", "ori";
    ArithXOrI => "arith", "xori";
    ArithShLI => "arith", "shli";
    ArithShRSI => "arith", "shrsi";
    ArithShRUI => "arith", "shrui";
    ArithCeilDivSI => "arith", "ceildivsi";
    ArithAddF => "arith", "addf";
    ArithSubF => "arith", "subf";
    ArithMulF => "arith", "mulf";
    ArithDivF => "arith", "divf";
    ArithNegF => "arith", "negf";
    ArithCmpI => "arith", "cmpi";
    ArithCmpF => "arith", "cmpf";
    ArithSIToFP => "arith", "sitofp";
    ArithUIToFP => "arith", "uitofp";
    ArithFPToSI => "arith", "fptosi";
    ArithFPToUI => "arith", "fptoui";
    ArithExtSI => "arith", "extsi";
    ArithExtUI => "arith", "extui";
    ArithTruncI => "arith", "trunci";
    ArithExtF => "arith", "extf";
    ArithTruncF => "arith", "truncf";
    ArithIndexCast => "arith", "index_cast";
    ArithSelect => "arith", "select";

    FuncCall => "func", "call";
    FuncReturn => "func", "return";

    ScfFor => "scf", "for";
    ScfWhile => "scf", "while";
    ScfIf => "scf", "if";
    ScfYield => "scf", "yield";
    ScfCondition => "scf", "condition";
    ScfExecuteRegion => "scf", "execute_region";

    MemrefGlobal => "memref", "global";
    MemrefGetGlobal => "memref", "get_global";
    MemrefAlloc => "memref", "alloc";
    MemrefAlloca => "memref", "alloca";
    MemrefDealloc => "memref", "dealloc";
    MemrefLoad => "memref", "load";
    MemrefStore => "memref", "store";

    DcontNew => "dcont", "new";
    DcontAlloc => "dcont", "alloc";
    DcontLoad => "dcont", "load";
    DcontStore => "dcont", "store";
    DcontSuspend => "dcont", "suspend";
    DcontResume => "dcont", "resume";

    SsaConst => "ssawasm", "const";
    SsaAdd => "ssawasm", "add";
    SsaSub => "ssawasm", "sub";
    SsaMul => "ssawasm", "mul";
    SsaDivS => "ssawasm", "div_s";
    SsaDivU => "ssawasm", "div_u";
    SsaDiv => "ssawasm", "div";
    SsaRemS => "ssawasm", "rem_s";
    SsaRemU => "ssawasm", "rem_u";
    SsaAnd => "ssawasm", "and";
    SsaOr => "ssawasm", "or";
    SsaXor => "ssawasm", "xor";
    SsaShl => "ssawasm", "shl";
    SsaShrS => "ssawasm", "shr_s";
    SsaShrU => "ssawasm", "shr_u";
    SsaNeg => "ssawasm", "neg";
    SsaEq => "ssawasm", "eq";
    SsaNe => "ssawasm", "ne";
    SsaLtS => "ssawasm", "lt_s";
    SsaLtU => "ssawasm", "lt_u";
    SsaLeS => "ssawasm", "le_s";
    SsaLeU => "ssawasm", "le_u";
    SsaGtS => "ssawasm", "gt_s";
    SsaGtU => "ssawasm", "gt_u";
    SsaGeS => "ssawasm", "ge_s";
    SsaGeU => "ssawasm", "ge_u";
    SsaLt => "ssawasm", "lt";
    SsaLe => "ssawasm", "le";
    SsaGt => "ssawasm", "gt";
    SsaGe => "ssawasm", "ge";
    SsaEqz => "ssawasm", "eqz";
    SsaConvertS => "ssawasm", "convert_s";
    SsaConvertU => "ssawasm", "convert_u";
    SsaTruncS => "ssawasm", "trunc_s";
    SsaTruncU => "ssawasm", "trunc_u";
    SsaExtendS => "ssawasm", "extend_s";
    SsaExtendU => "ssawasm", "extend_u";
    SsaWrap => "ssawasm", "wrap";
    SsaPromote => "ssawasm", "promote";
    SsaDemote => "ssawasm", "demote";
    SsaSelect => "ssawasm", "select";
    SsaLocalDecl => "ssawasm", "local_decl";
    SsaLocalGet => "ssawasm", "local_get";
    SsaLocalSet => "ssawasm", "local_set";
    SsaCall => "ssawasm", "call";
    SsaReturn => "ssawasm", "return";
    SsaFuncRef => "ssawasm", "func_ref";
    SsaFuncImport => "ssawasm", "func_import";
    SsaData => "ssawasm", "data";
    SsaGlobalVar => "ssawasm", "global_var";
    SsaGlobalGet => "ssawasm", "global_get";
    SsaGlobalSet => "ssawasm", "global_set";
    SsaMemory => "ssawasm", "memory";
    SsaLoad => "ssawasm", "load";
    SsaStore => "ssawasm", "store";
    SsaBlockLoop => "ssawasm", "block_loop";
    SsaBlockBlock => "ssawasm", "block_block";
    SsaIf => "ssawasm", "if";
    SsaBr => "ssawasm", "br";
    SsaCondBr => "ssawasm", "cond_br";
    SsaPseudoBr => "ssawasm", "pseudo_br";
    SsaPseudoCondBr => "ssawasm", "pseudo_cond_br";
    SsaExit => "ssawasm", "exit";
    SsaDrop => "ssawasm", "drop";
    SsaOnStack => "ssawasm", "on_stack";
    SsaCastMemrefToI32 => "ssawasm", "cast_memref_to_i32";
    SsaCastI32ToMemref => "ssawasm", "cast_i32_to_memref";
    SsaContNew => "ssawasm", "cont_new";
    SsaSuspend => "ssawasm", "suspend";
    SsaResume => "ssawasm", "resume";
    SsaTag => "ssawasm", "tag";
    SsaContType => "ssawasm", "cont_type";

    WasmConst => "wasm", "const";
    WasmUnary => "wasm", "unary";
    WasmBinary => "wasm", "binary";
    WasmCompare => "wasm", "compare";
    WasmConvert => "wasm", "convert";
    WasmEqz => "wasm", "eqz";
    WasmSelect => "wasm", "select";
    WasmLocalGet => "wasm", "local_get";
    WasmLocalSet => "wasm", "local_set";
    WasmLocalTee => "wasm", "local_tee";
    WasmGlobalGet => "wasm", "global_get";
    WasmGlobalSet => "wasm", "global_set";
    WasmLoad => "wasm", "load";
    WasmStore => "wasm", "store";
    WasmCall => "wasm", "call";
    WasmReturn => "wasm", "return";
    WasmBr => "wasm", "br";
    WasmBrIf => "wasm", "br_if";
    WasmBlock => "wasm", "block";
    WasmLoop => "wasm", "loop";
    WasmIf => "wasm", "if";
    WasmRefFunc => "wasm", "ref_func";
    WasmContNew => "wasm", "cont_new";
    WasmSuspend => "wasm", "suspend";
    WasmResume => "wasm", "resume";
    WasmUnreachable => "wasm", "unreachable";
    WasmDrop => "wasm", "drop";
    WasmMemory => "wasm", "memory";
    WasmData => "wasm", "data";
    WasmImport => "wasm", "import";
    WasmGlobal => "wasm", "global";
    WasmTag => "wasm", "tag";
    WasmFuncType => "wasm", "func_type";
    WasmContType => "wasm", "cont_type";
}

impl OpKind {
    pub fn full_name(self) -> String {
        format!("{}.{}", self.dialect(), self.name())
    }

    pub fn signature(self) -> &'static OpSignature {
        &REGISTRY.by_kind[&self]
    }

    pub fn is_terminator(self) -> bool {
        self.signature().traits.terminator
    }

    pub fn is_pure(self) -> bool {
        self.signature().traits.pure
    }

    pub fn is_module_level(self) -> bool {
        self.signature().traits.module_level
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exact(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Traits {
    pub terminator: bool,
    /// No side effects and cannot trap.
    pub pure: bool,
    pub module_level: bool,
}

/// How operand and result types relate; checked by the verifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeRule {
    /// Result matches the `value` attribute.
    Constant,
    /// Same integer type on both operands and the result.
    IntBinary,
    FloatBinary,
    /// Same numeric type (int or float) everywhere.
    NumBinary,
    FloatUnary,
    /// Two operands of the same integer type, `i32` flag result.
    IntCompare,
    FloatCompare,
    NumCompare,
    IntTest,
    IntToFloat,
    FloatToInt,
    I32ToI64,
    I64ToI32,
    F32ToF64,
    F64ToF32,
    IndexCast,
    Select,
    /// Rule lives in the verifier's op-specific checks.
    Custom,
    /// Wasm dialect: no SSA operands/results to check.
    None,
}

#[derive(Clone, Debug)]
pub struct OpSignature {
    pub kind: OpKind,
    pub dialect: &'static str,
    pub name: &'static str,
    pub operands: Arity,
    pub results: Arity,
    pub required_attrs: &'static [&'static str],
    pub regions: usize,
    pub successors: usize,
    pub traits: Traits,
    pub rule: TypeRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown operation {dialect}.{name}")]
pub struct UnknownOp {
    pub dialect: String,
    pub name: String,
}

struct Registry {
    by_kind: HashMap<OpKind, OpSignature>,
    by_name: HashMap<(&'static str, &'static str), OpKind>,
}

static REGISTRY: LazyLock<Registry> = LazyLock::new(|| {
    let mut by_kind = HashMap::new();
    let mut by_name = HashMap::new();
    for &kind in OpKind::ALL {
        let sig = build_signature(kind);
        by_name.insert((kind.dialect(), kind.name()), kind);
        by_kind.insert(kind, sig);
    }
    Registry { by_kind, by_name }
});

/// Looks up the registered signature for `dialect.name`.
pub fn lookup_signature(dialect: &str, name: &str) -> Result<&'static OpSignature, UnknownOp> {
    REGISTRY
        .by_name
        .get(&(dialect, name))
        .map(|k| &REGISTRY.by_kind[k])
        .ok_or_else(|| UnknownOp { dialect: dialect.to_string(), name: name.to_string() })
}

/// Resolves a dotted op name such as `ssawasm.add`.
pub fn lookup_full_name(full: &str) -> Result<&'static OpSignature, UnknownOp> {
    match full.split_once('.') {
        Some((d, n)) => lookup_signature(d, n),
        None => Err(UnknownOp { dialect: String::new(), name: full.to_string() }),
    }
}

fn build_signature(kind: OpKind) -> OpSignature {
    use Arity::*;
    use OpKind::*;
    use TypeRule as R;

    let pure = Traits { pure: true, ..Traits::default() };
    let effect = Traits::default();
    let term = Traits { terminator: true, ..Traits::default() };
    let module = Traits { module_level: true, ..Traits::default() };

    // (operands, results, attrs, regions, successors, traits, rule)
    let (operands, results, attrs, regions, successors, traits, rule): (
        Arity,
        Arity,
        &'static [&'static str],
        usize,
        usize,
        Traits,
        TypeRule,
    ) = match kind {
        ArithConstant => (Exact(0), Exact(1), &["value"], 0, 0, pure, R::Constant),
        ArithAddI | ArithSubI | ArithMulI | ArithAndI | ArithOrI | ArithXOrI | ArithShLI
        | ArithShRSI | ArithShRUI => (Exact(2), Exact(1), &[], 0, 0, pure, R::IntBinary),
        ArithDivSI | ArithDivUI | ArithRemSI | ArithRemUI | ArithCeilDivSI => {
            (Exact(2), Exact(1), &[], 0, 0, effect, R::IntBinary)
        }
        ArithAddF | ArithSubF | ArithMulF | ArithDivF => {
            (Exact(2), Exact(1), &[], 0, 0, pure, R::FloatBinary)
        }
        ArithNegF => (Exact(1), Exact(1), &[], 0, 0, pure, R::FloatUnary),
        ArithCmpI => (Exact(2), Exact(1), &["predicate"], 0, 0, pure, R::IntCompare),
        ArithCmpF => (Exact(2), Exact(1), &["predicate"], 0, 0, pure, R::FloatCompare),
        ArithSIToFP | ArithUIToFP => (Exact(1), Exact(1), &[], 0, 0, pure, R::IntToFloat),
        ArithFPToSI | ArithFPToUI => (Exact(1), Exact(1), &[], 0, 0, effect, R::FloatToInt),
        ArithExtSI | ArithExtUI => (Exact(1), Exact(1), &[], 0, 0, pure, R::I32ToI64),
        ArithTruncI => (Exact(1), Exact(1), &[], 0, 0, pure, R::I64ToI32),
        ArithExtF => (Exact(1), Exact(1), &[], 0, 0, pure, R::F32ToF64),
        ArithTruncF => (Exact(1), Exact(1), &[], 0, 0, pure, R::F64ToF32),
        ArithIndexCast => (Exact(1), Exact(1), &[], 0, 0, pure, R::IndexCast),
        ArithSelect => (Exact(3), Exact(1), &[], 0, 0, pure, R::Select),

        FuncCall => (AtLeast(0), AtLeast(0), &["callee"], 0, 0, effect, R::Custom),
        FuncReturn => (AtLeast(0), Exact(0), &[], 0, 0, term, R::Custom),

        ScfFor => (AtLeast(3), AtLeast(0), &[], 1, 0, effect, R::Custom),
        ScfWhile => (AtLeast(0), AtLeast(0), &[], 2, 0, effect, R::Custom),
        ScfIf => (Exact(1), AtLeast(0), &[], 2, 0, effect, R::Custom),
        ScfYield => (AtLeast(0), Exact(0), &[], 0, 0, term, R::Custom),
        ScfCondition => (AtLeast(1), Exact(0), &[], 0, 0, term, R::Custom),
        ScfExecuteRegion => (Exact(0), AtLeast(0), &[], 1, 0, effect, R::Custom),

        MemrefGlobal => (Exact(0), Exact(0), &["sym", "type"], 0, 0, module, R::Custom),
        MemrefGetGlobal => (Exact(0), Exact(1), &["name"], 0, 0, pure, R::Custom),
        MemrefAlloc | MemrefAlloca => (Exact(0), Exact(1), &[], 0, 0, effect, R::Custom),
        MemrefDealloc => (Exact(1), Exact(0), &[], 0, 0, effect, R::Custom),
        MemrefLoad => (AtLeast(1), Exact(1), &[], 0, 0, effect, R::Custom),
        MemrefStore => (AtLeast(2), Exact(0), &[], 0, 0, effect, R::Custom),

        DcontNew => (Exact(0), Exact(1), &["func"], 0, 0, effect, R::Custom),
        DcontAlloc => (Exact(0), Exact(1), &[], 0, 0, effect, R::Custom),
        DcontLoad => (Exact(1), Exact(1), &[], 0, 0, effect, R::Custom),
        DcontStore => (Exact(2), Exact(0), &[], 0, 0, effect, R::Custom),
        DcontSuspend => (AtLeast(0), AtLeast(0), &[], 0, 0, effect, R::Custom),
        DcontResume => (AtLeast(1), Exact(0), &[], 1, 0, effect, R::Custom),

        SsaConst => (Exact(0), Exact(1), &["value"], 0, 0, pure, R::Constant),
        SsaAdd | SsaSub | SsaMul => (Exact(2), Exact(1), &[], 0, 0, pure, R::NumBinary),
        SsaAnd | SsaOr | SsaXor | SsaShl | SsaShrS | SsaShrU => {
            (Exact(2), Exact(1), &[], 0, 0, pure, R::IntBinary)
        }
        SsaDivS | SsaDivU | SsaRemS | SsaRemU => {
            (Exact(2), Exact(1), &[], 0, 0, effect, R::IntBinary)
        }
        SsaDiv => (Exact(2), Exact(1), &[], 0, 0, pure, R::FloatBinary),
        SsaNeg => (Exact(1), Exact(1), &[], 0, 0, pure, R::FloatUnary),
        SsaEq | SsaNe => (Exact(2), Exact(1), &[], 0, 0, pure, R::NumCompare),
        SsaLtS | SsaLtU | SsaLeS | SsaLeU | SsaGtS | SsaGtU | SsaGeS | SsaGeU => {
            (Exact(2), Exact(1), &[], 0, 0, pure, R::IntCompare)
        }
        SsaLt | SsaLe | SsaGt | SsaGe => (Exact(2), Exact(1), &[], 0, 0, pure, R::FloatCompare),
        SsaEqz => (Exact(1), Exact(1), &[], 0, 0, pure, R::IntTest),
        SsaConvertS | SsaConvertU => (Exact(1), Exact(1), &[], 0, 0, pure, R::IntToFloat),
        SsaTruncS | SsaTruncU => (Exact(1), Exact(1), &[], 0, 0, effect, R::FloatToInt),
        SsaExtendS | SsaExtendU => (Exact(1), Exact(1), &[], 0, 0, pure, R::I32ToI64),
        SsaWrap => (Exact(1), Exact(1), &[], 0, 0, pure, R::I64ToI32),
        SsaPromote => (Exact(1), Exact(1), &[], 0, 0, pure, R::F32ToF64),
        SsaDemote => (Exact(1), Exact(1), &[], 0, 0, pure, R::F64ToF32),
        SsaSelect => (Exact(3), Exact(1), &[], 0, 0, pure, R::Select),
        SsaLocalDecl => (Exact(0), Exact(1), &[], 0, 0, effect, R::Custom),
        SsaLocalGet => (Exact(1), Exact(1), &[], 0, 0, effect, R::Custom),
        SsaLocalSet => (Exact(2), Exact(0), &[], 0, 0, effect, R::Custom),
        SsaCall => (AtLeast(0), AtLeast(0), &["callee"], 0, 0, effect, R::Custom),
        SsaReturn => (AtLeast(0), Exact(0), &[], 0, 0, term, R::Custom),
        SsaFuncRef => (Exact(0), Exact(1), &["func"], 0, 0, pure, R::Custom),
        SsaFuncImport => (Exact(0), Exact(0), &["sym", "params", "results"], 0, 0, module, R::Custom),
        SsaData => (Exact(0), Exact(0), &["sym", "type", "memory", "offset", "init"], 0, 0, module, R::Custom),
        SsaGlobalVar => (Exact(0), Exact(0), &["sym", "type"], 0, 0, module, R::Custom),
        SsaGlobalGet => (Exact(0), Exact(1), &["global"], 0, 0, effect, R::Custom),
        SsaGlobalSet => (Exact(1), Exact(0), &["global"], 0, 0, effect, R::Custom),
        SsaMemory => (Exact(0), Exact(0), &["pages"], 0, 0, module, R::Custom),
        SsaLoad => (Exact(1), Exact(1), &["offset"], 0, 0, effect, R::Custom),
        SsaStore => (Exact(2), Exact(0), &["offset"], 0, 0, effect, R::Custom),
        SsaBlockLoop | SsaBlockBlock => (Exact(0), Exact(0), &[], 1, 0, effect, R::Custom),
        SsaIf => (Exact(1), Exact(0), &[], 2, 0, effect, R::Custom),
        SsaBr | SsaPseudoBr => (Exact(0), Exact(0), &[], 0, 1, term, R::Custom),
        SsaCondBr | SsaPseudoCondBr => (Exact(1), Exact(0), &[], 0, 2, term, R::Custom),
        SsaExit => (Exact(0), Exact(0), &[], 0, 0, term, R::Custom),
        SsaDrop => (Exact(1), Exact(0), &[], 0, 0, effect, R::Custom),
        SsaOnStack => (Exact(0), Exact(1), &[], 0, 0, effect, R::Custom),
        SsaCastMemrefToI32 | SsaCastI32ToMemref => {
            (Exact(1), Exact(1), &[], 0, 0, pure, R::Custom)
        }
        SsaContNew => (Exact(1), Exact(1), &["cont_type"], 0, 0, effect, R::Custom),
        SsaSuspend => (AtLeast(0), AtLeast(0), &["tag"], 0, 0, effect, R::Custom),
        SsaResume => (AtLeast(1), Exact(0), &["cont_type", "tag"], 0, 2, term, R::Custom),
        SsaTag => (Exact(0), Exact(0), &["sym", "params", "results"], 0, 0, module, R::Custom),
        SsaContType => {
            (Exact(0), Exact(0), &["sym", "func_type", "params", "results"], 0, 0, module, R::Custom)
        }

        WasmConst => (Exact(0), Exact(0), &["type", "value"], 0, 0, effect, R::None),
        WasmUnary | WasmBinary | WasmCompare => {
            (Exact(0), Exact(0), &["op", "type"], 0, 0, effect, R::None)
        }
        WasmConvert => (Exact(0), Exact(0), &["op", "from", "to"], 0, 0, effect, R::None),
        WasmEqz => (Exact(0), Exact(0), &["type"], 0, 0, effect, R::None),
        WasmSelect | WasmReturn | WasmUnreachable | WasmDrop => {
            (Exact(0), Exact(0), &[], 0, 0, effect, R::None)
        }
        WasmLocalGet | WasmLocalSet | WasmLocalTee => {
            (Exact(0), Exact(0), &["index"], 0, 0, effect, R::None)
        }
        WasmGlobalGet | WasmGlobalSet => (Exact(0), Exact(0), &["global"], 0, 0, effect, R::None),
        WasmLoad | WasmStore => (Exact(0), Exact(0), &["type", "offset"], 0, 0, effect, R::None),
        WasmCall => (Exact(0), Exact(0), &["callee"], 0, 0, effect, R::None),
        WasmBr | WasmBrIf => (Exact(0), Exact(0), &["label"], 0, 0, effect, R::None),
        WasmBlock => (Exact(0), Exact(0), &["label", "results"], 1, 0, effect, R::None),
        WasmLoop => (Exact(0), Exact(0), &["label"], 1, 0, effect, R::None),
        WasmIf => (Exact(0), Exact(0), &["results"], 2, 0, effect, R::None),
        WasmRefFunc => (Exact(0), Exact(0), &["func"], 0, 0, effect, R::None),
        WasmContNew => (Exact(0), Exact(0), &["cont_type"], 0, 0, effect, R::None),
        WasmSuspend => (Exact(0), Exact(0), &["tag"], 0, 0, effect, R::None),
        WasmResume => (Exact(0), Exact(0), &["cont_type", "tag", "label"], 0, 0, effect, R::None),
        WasmMemory => (Exact(0), Exact(0), &["pages"], 0, 0, module, R::None),
        WasmData => (Exact(0), Exact(0), &["offset", "init"], 0, 0, module, R::None),
        WasmImport => (Exact(0), Exact(0), &["sym", "params", "results"], 0, 0, module, R::None),
        WasmGlobal => (Exact(0), Exact(0), &["sym", "type", "init"], 0, 0, module, R::None),
        WasmTag => (Exact(0), Exact(0), &["sym", "params", "results"], 0, 0, module, R::None),
        WasmFuncType => (Exact(0), Exact(0), &["sym", "params", "results"], 0, 0, module, R::None),
        WasmContType => (Exact(0), Exact(0), &["sym", "func_type"], 0, 0, module, R::None),
    };

    OpSignature {
        kind,
        dialect: kind.dialect(),
        name: kind.name(),
        operands,
        results,
        required_attrs: attrs,
        regions,
        successors,
        traits,
        rule,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssawasm_add_is_binary() {
        let sig = lookup_signature("ssawasm", "add").unwrap();
        assert_eq!(sig.operands, Arity::Exact(2));
        assert_eq!(sig.results, Arity::Exact(1));
        assert_eq!(sig.rule, TypeRule::NumBinary);
    }

    #[test]
    fn exit_is_nullary_terminator() {
        let sig = lookup_signature("ssawasm", "exit").unwrap();
        assert_eq!(sig.operands, Arity::Exact(0));
        assert_eq!(sig.results, Arity::Exact(0));
        assert!(sig.traits.terminator);
    }

    #[test]
    fn unknown_op_is_reported() {
        let err = lookup_signature("arith", "bogus").unwrap_err();
        assert_eq!(err, UnknownOp { dialect: "arith".into(), name: "bogus".into() });
    }

    #[test]
    fn every_kind_round_trips_through_names() {
        for &k in OpKind::ALL {
            assert_eq!(lookup_signature(k.dialect(), k.name()).unwrap().kind, k);
        }
    }
}
