//! Runtime values and the numeric instruction semantics shared by constant
//! folding and both interpreters.

use std::fmt;

use crate::interp::Trap;
use crate::ir::{Attr, FloatBits, OpKind, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumType {
    I32,
    I64,
    F32,
    F64,
}

impl NumType {
    pub fn from_type(t: &Type) -> Option<NumType> {
        match t {
            Type::I32 | Type::Index | Type::MemRef(_) => Some(NumType::I32),
            Type::I64 => Some(NumType::I64),
            Type::F32 => Some(NumType::F32),
            Type::F64 => Some(NumType::F64),
            _ => None,
        }
    }

    pub fn to_type(self) -> Type {
        match self {
            NumType::I32 => Type::I32,
            NumType::I64 => Type::I64,
            NumType::F32 => Type::F32,
            NumType::F64 => Type::F64,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, NumType::F32 | NumType::F64)
    }

    pub fn width(self) -> u32 {
        match self {
            NumType::I32 | NumType::F32 => 4,
            NumType::I64 | NumType::F64 => 8,
        }
    }

    pub fn zero(self) -> Value {
        match self {
            NumType::I32 => Value::I32(0),
            NumType::I64 => Value::I64(0),
            NumType::F32 => Value::F32(0),
            NumType::F64 => Value::F64(0),
        }
    }
}

impl fmt::Display for NumType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumType::I32 => "i32",
            NumType::I64 => "i64",
            NumType::F32 => "f32",
            NumType::F64 => "f64",
        })
    }
}

/// A runtime value; floats are kept as raw bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    I32(u32),
    I64(u64),
    F32(u32),
    F64(u64),
    ContRef(u32),
    FuncRef(String),
}

impl Value {
    pub fn num_type(&self) -> Option<NumType> {
        match self {
            Value::I32(_) => Some(NumType::I32),
            Value::I64(_) => Some(NumType::I64),
            Value::F32(_) => Some(NumType::F32),
            Value::F64(_) => Some(NumType::F64),
            _ => None,
        }
    }

    pub fn as_i32(&self) -> u32 {
        match self {
            Value::I32(v) => *v,
            other => panic!("expected i32, found {other:?}"),
        }
    }

    pub fn as_i64(&self) -> u64 {
        match self {
            Value::I64(v) => *v,
            other => panic!("expected i64, found {other:?}"),
        }
    }

    /// Builds a constant of type `ty` from an attribute.
    pub fn from_attr(a: &Attr, ty: NumType) -> Option<Value> {
        Some(match (a, ty) {
            (Attr::Int(v), NumType::I32) => Value::I32(*v as u32),
            (Attr::Int(v), NumType::I64) => Value::I64(*v as u64),
            (Attr::Float(FloatBits::F32(b)), NumType::F32) => Value::F32(*b),
            (Attr::Float(FloatBits::F64(b)), NumType::F64) => Value::F64(*b),
            _ => return None,
        })
    }

    pub fn to_attr(&self) -> Attr {
        match self {
            Value::I32(v) => Attr::Int(*v as i32 as i64),
            Value::I64(v) => Attr::Int(*v as i64),
            Value::F32(b) => Attr::Float(FloatBits::F32(*b)),
            Value::F64(b) => Attr::Float(FloatBits::F64(*b)),
            Value::ContRef(id) => Attr::Int(*id as i64),
            Value::FuncRef(s) => Attr::Sym(s.clone()),
        }
    }

    pub fn is_nan(&self) -> bool {
        match self {
            Value::F32(b) => f32::from_bits(*b).is_nan(),
            Value::F64(b) => f64::from_bits(*b).is_nan(),
            _ => false,
        }
    }

    /// Bit equality, except that any two NaNs of the same width are equal.
    pub fn same_class(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::F32(_), Value::F32(_)) | (Value::F64(_), Value::F64(_)) if self.is_nan() && other.is_nan() => true,
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::I32(v) => write!(f, "{}", *v as i32),
            Value::I64(v) => write!(f, "{}", *v as i64),
            Value::F32(b) => write!(f, "{:?}", f32::from_bits(*b)),
            Value::F64(b) => write!(f, "{:?}", f64::from_bits(*b)),
            Value::ContRef(id) => write!(f, "contref#{id}"),
            Value::FuncRef(s) => write!(f, "funcref ${s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    DivS,
    DivU,
    Div,
    RemS,
    RemU,
    And,
    Or,
    Xor,
    Shl,
    ShrS,
    ShrU,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    LtS,
    LtU,
    LeS,
    LeU,
    GtS,
    GtU,
    GeS,
    GeU,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CvtOp {
    ConvertS,
    ConvertU,
    TruncS,
    TruncU,
    ExtendS,
    ExtendU,
    Wrap,
    Promote,
    Demote,
}

macro_rules! named {
    ($ty:ident { $($v:ident = $s:literal),* $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$v),*];
            pub fn name(self) -> &'static str {
                match self { $($ty::$v => $s),* }
            }
            pub fn parse(s: &str) -> Option<$ty> {
                match s { $($s => Some($ty::$v),)* _ => None }
            }
        }
    };
}

named!(BinOp { Add = "add", Sub = "sub", Mul = "mul", DivS = "div_s", DivU = "div_u", Div = "div", RemS = "rem_s", RemU = "rem_u", And = "and", Or = "or", Xor = "xor", Shl = "shl", ShrS = "shr_s", ShrU = "shr_u" });
named!(RelOp { Eq = "eq", Ne = "ne", LtS = "lt_s", LtU = "lt_u", LeS = "le_s", LeU = "le_u", GtS = "gt_s", GtU = "gt_u", GeS = "ge_s", GeU = "ge_u", Lt = "lt", Le = "le", Gt = "gt", Ge = "ge" });
named!(UnOp { Neg = "neg" });
named!(CvtOp { ConvertS = "convert_s", ConvertU = "convert_u", TruncS = "trunc_s", TruncU = "trunc_u", ExtendS = "extend_s", ExtendU = "extend_u", Wrap = "wrap", Promote = "promote", Demote = "demote" });

impl BinOp {
    pub fn valid_for(self, ty: NumType) -> bool {
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul => true,
            BinOp::Div => ty.is_float(),
            _ => !ty.is_float(),
        }
    }
}

impl RelOp {
    pub fn valid_for(self, ty: NumType) -> bool {
        match self {
            RelOp::Eq | RelOp::Ne => true,
            RelOp::Lt | RelOp::Le | RelOp::Gt | RelOp::Ge => ty.is_float(),
            _ => !ty.is_float(),
        }
    }
}

impl CvtOp {
    /// Whether `from -> to` is a legal pairing for this conversion.
    pub fn valid_for(self, from: NumType, to: NumType) -> bool {
        use NumType::*;
        match self {
            CvtOp::ConvertS | CvtOp::ConvertU => !from.is_float() && to.is_float(),
            CvtOp::TruncS | CvtOp::TruncU => from.is_float() && !to.is_float(),
            CvtOp::ExtendS | CvtOp::ExtendU => from == I32 && to == I64,
            CvtOp::Wrap => from == I64 && to == I32,
            CvtOp::Promote => from == F32 && to == F64,
            CvtOp::Demote => from == F64 && to == F32,
        }
    }

    /// Wasm mnemonic, e.g. `f64.convert_i32_s`.
    pub fn mnemonic(self, from: NumType, to: NumType) -> String {
        let (base, sign) = match self {
            CvtOp::ConvertS => ("convert", "_s"),
            CvtOp::ConvertU => ("convert", "_u"),
            CvtOp::TruncS => ("trunc", "_s"),
            CvtOp::TruncU => ("trunc", "_u"),
            CvtOp::ExtendS => ("extend", "_s"),
            CvtOp::ExtendU => ("extend", "_u"),
            CvtOp::Wrap => ("wrap", ""),
            CvtOp::Promote => ("promote", ""),
            CvtOp::Demote => ("demote", ""),
        };
        format!("{to}.{base}_{from}{sign}")
    }
}

fn f32v(b: u32) -> f32 {
    f32::from_bits(b)
}

fn f64v(b: u64) -> f64 {
    f64::from_bits(b)
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, Trap> {
    use BinOp::*;
    Ok(match (a, b) {
        (Value::I32(x), Value::I32(y)) => {
            let (x, y) = (*x, *y);
            Value::I32(match op {
                Add => x.wrapping_add(y),
                Sub => x.wrapping_sub(y),
                Mul => x.wrapping_mul(y),
                DivS | RemS | DivU | RemU if y == 0 => return Err(Trap::DivByZero),
                DivS if x as i32 == i32::MIN && y as i32 == -1 => return Err(Trap::IntOverflow),
                DivS => ((x as i32) / (y as i32)) as u32,
                DivU => x / y,
                RemS => (x as i32).wrapping_rem(y as i32) as u32,
                RemU => x % y,
                And => x & y,
                Or => x | y,
                Xor => x ^ y,
                Shl => x.wrapping_shl(y),
                ShrS => ((x as i32).wrapping_shr(y)) as u32,
                ShrU => x.wrapping_shr(y),
                Div => return Err(Trap::Internal("div on i32".into())),
            })
        }
        (Value::I64(x), Value::I64(y)) => {
            let (x, y) = (*x, *y);
            Value::I64(match op {
                Add => x.wrapping_add(y),
                Sub => x.wrapping_sub(y),
                Mul => x.wrapping_mul(y),
                DivS | RemS | DivU | RemU if y == 0 => return Err(Trap::DivByZero),
                DivS if x as i64 == i64::MIN && y as i64 == -1 => return Err(Trap::IntOverflow),
                DivS => ((x as i64) / (y as i64)) as u64,
                DivU => x / y,
                RemS => (x as i64).wrapping_rem(y as i64) as u64,
                RemU => x % y,
                And => x & y,
                Or => x | y,
                Xor => x ^ y,
                Shl => x.wrapping_shl(y as u32),
                ShrS => ((x as i64).wrapping_shr(y as u32)) as u64,
                ShrU => x.wrapping_shr(y as u32),
                Div => return Err(Trap::Internal("div on i64".into())),
            })
        }
        (Value::F32(x), Value::F32(y)) => {
            let (x, y) = (f32v(*x), f32v(*y));
            Value::F32(
                match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    _ => return Err(Trap::Internal(format!("{} on f32", op.name()))),
                }
                .to_bits(),
            )
        }
        (Value::F64(x), Value::F64(y)) => {
            let (x, y) = (f64v(*x), f64v(*y));
            Value::F64(
                match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    _ => return Err(Trap::Internal(format!("{} on f64", op.name()))),
                }
                .to_bits(),
            )
        }
        _ => return Err(Trap::Internal(format!("{} on {a:?}, {b:?}", op.name()))),
    })
}

pub fn compare(op: RelOp, a: &Value, b: &Value) -> Result<Value, Trap> {
    use RelOp::*;
    let r = match (a, b) {
        (Value::I32(x), Value::I32(y)) => int_rel(op, *x as i64, *y as i64, (*x as i32) as i64, (*y as i32) as i64),
        (Value::I64(x), Value::I64(y)) => {
            let (x, y) = (*x, *y);
            match op {
                Eq => x == y,
                Ne => x != y,
                LtU => x < y,
                LeU => x <= y,
                GtU => x > y,
                GeU => x >= y,
                LtS => (x as i64) < (y as i64),
                LeS => (x as i64) <= (y as i64),
                GtS => (x as i64) > (y as i64),
                GeS => (x as i64) >= (y as i64),
                _ => return Err(Trap::Internal(format!("{} on i64", op.name()))),
            }
        }
        (Value::F32(x), Value::F32(y)) => float_rel(op, f32v(*x) as f64, f32v(*y) as f64)?,
        (Value::F64(x), Value::F64(y)) => float_rel(op, f64v(*x), f64v(*y))?,
        _ => return Err(Trap::Internal(format!("{} on {a:?}, {b:?}", op.name()))),
    };
    Ok(Value::I32(r as u32))
}

fn int_rel(op: RelOp, ux: i64, uy: i64, sx: i64, sy: i64) -> bool {
    use RelOp::*;
    match op {
        Eq => ux == uy,
        Ne => ux != uy,
        LtU => ux < uy,
        LeU => ux <= uy,
        GtU => ux > uy,
        GeU => ux >= uy,
        LtS => sx < sy,
        LeS => sx <= sy,
        GtS => sx > sy,
        GeS => sx >= sy,
        Lt | Le | Gt | Ge => false,
    }
}

fn float_rel(op: RelOp, x: f64, y: f64) -> Result<bool, Trap> {
    use RelOp::*;
    Ok(match op {
        Eq => x == y,
        Ne => x != y,
        Lt => x < y,
        Le => x <= y,
        Gt => x > y,
        Ge => x >= y,
        _ => return Err(Trap::Internal(format!("{} on float", op.name()))),
    })
}

pub fn unary(op: UnOp, a: &Value) -> Result<Value, Trap> {
    match (op, a) {
        (UnOp::Neg, Value::F32(b)) => Ok(Value::F32(b ^ 0x8000_0000)),
        (UnOp::Neg, Value::F64(b)) => Ok(Value::F64(b ^ 0x8000_0000_0000_0000)),
        _ => Err(Trap::Internal(format!("neg on {a:?}"))),
    }
}

pub fn eqz(a: &Value) -> Result<Value, Trap> {
    match a {
        Value::I32(v) => Ok(Value::I32((*v == 0) as u32)),
        Value::I64(v) => Ok(Value::I32((*v == 0) as u32)),
        _ => Err(Trap::Internal(format!("eqz on {a:?}"))),
    }
}

fn trunc_checked(v: f64, lo: f64, hi: f64) -> Result<f64, Trap> {
    if v.is_nan() {
        return Err(Trap::InvalidConversion);
    }
    let t = v.trunc();
    if t < lo || t >= hi {
        return Err(Trap::IntOverflow);
    }
    Ok(t)
}

pub fn convert(op: CvtOp, to: NumType, a: &Value) -> Result<Value, Trap> {
    use CvtOp::*;
    use NumType as N;
    let bad = || Trap::Internal(format!("{} to {to} on {a:?}", op.name()));
    Ok(match (op, a, to) {
        (ConvertS, Value::I32(v), N::F32) => Value::F32((*v as i32 as f32).to_bits()),
        (ConvertS, Value::I32(v), N::F64) => Value::F64((*v as i32 as f64).to_bits()),
        (ConvertS, Value::I64(v), N::F32) => Value::F32((*v as i64 as f32).to_bits()),
        (ConvertS, Value::I64(v), N::F64) => Value::F64((*v as i64 as f64).to_bits()),
        (ConvertU, Value::I32(v), N::F32) => Value::F32((*v as f32).to_bits()),
        (ConvertU, Value::I32(v), N::F64) => Value::F64((*v as f64).to_bits()),
        (ConvertU, Value::I64(v), N::F32) => Value::F32((*v as f32).to_bits()),
        (ConvertU, Value::I64(v), N::F64) => Value::F64((*v as f64).to_bits()),
        (TruncS | TruncU, Value::F32(b), _) => return convert(op, to, &Value::F64((f32v(*b) as f64).to_bits())),
        (TruncS, Value::F64(b), N::I32) => Value::I32(trunc_checked(f64v(*b), -2147483648.0, 2147483648.0)? as i32 as u32),
        (TruncS, Value::F64(b), N::I64) => {
            Value::I64(trunc_checked(f64v(*b), -9223372036854775808.0, 9223372036854775808.0)? as i64 as u64)
        }
        (TruncU, Value::F64(b), N::I32) => Value::I32(trunc_checked(f64v(*b), 0.0, 4294967296.0)? as u32),
        (TruncU, Value::F64(b), N::I64) => Value::I64(trunc_checked(f64v(*b), 0.0, 18446744073709551616.0)? as u64),
        (ExtendS, Value::I32(v), N::I64) => Value::I64(*v as i32 as i64 as u64),
        (ExtendU, Value::I32(v), N::I64) => Value::I64(*v as u64),
        (Wrap, Value::I64(v), N::I32) => Value::I32(*v as u32),
        (Promote, Value::F32(b), N::F64) => Value::F64((f32v(*b) as f64).to_bits()),
        (Demote, Value::F64(b), N::F32) => Value::F32((f64v(*b) as f32).to_bits()),
        _ => return Err(bad()),
    })
}

pub fn select(a: Value, b: Value, c: &Value) -> Value {
    if c.as_i32() != 0 {
        a
    } else {
        b
    }
}

/// The numeric meaning of an `ssawasm` opcode, if it has one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumOp {
    Bin(BinOp),
    Rel(RelOp),
    Un(UnOp),
    Eqz,
    Cvt(CvtOp),
    Select,
}

pub fn ssawasm_op(kind: OpKind) -> Option<NumOp> {
    use OpKind::*;
    Some(match kind {
        SsaAdd => NumOp::Bin(BinOp::Add),
        SsaSub => NumOp::Bin(BinOp::Sub),
        SsaMul => NumOp::Bin(BinOp::Mul),
        SsaDivS => NumOp::Bin(BinOp::DivS),
        SsaDivU => NumOp::Bin(BinOp::DivU),
        SsaDiv => NumOp::Bin(BinOp::Div),
        SsaRemS => NumOp::Bin(BinOp::RemS),
        SsaRemU => NumOp::Bin(BinOp::RemU),
        SsaAnd => NumOp::Bin(BinOp::And),
        SsaOr => NumOp::Bin(BinOp::Or),
        SsaXor => NumOp::Bin(BinOp::Xor),
        SsaShl => NumOp::Bin(BinOp::Shl),
        SsaShrS => NumOp::Bin(BinOp::ShrS),
        SsaShrU => NumOp::Bin(BinOp::ShrU),
        SsaEq => NumOp::Rel(RelOp::Eq),
        SsaNe => NumOp::Rel(RelOp::Ne),
        SsaLtS => NumOp::Rel(RelOp::LtS),
        SsaLtU => NumOp::Rel(RelOp::LtU),
        SsaLeS => NumOp::Rel(RelOp::LeS),
        SsaLeU => NumOp::Rel(RelOp::LeU),
        SsaGtS => NumOp::Rel(RelOp::GtS),
        SsaGtU => NumOp::Rel(RelOp::GtU),
        SsaGeS => NumOp::Rel(RelOp::GeS),
        SsaGeU => NumOp::Rel(RelOp::GeU),
        SsaLt => NumOp::Rel(RelOp::Lt),
        SsaLe => NumOp::Rel(RelOp::Le),
        SsaGt => NumOp::Rel(RelOp::Gt),
        SsaGe => NumOp::Rel(RelOp::Ge),
        SsaNeg => NumOp::Un(UnOp::Neg),
        SsaEqz => NumOp::Eqz,
        SsaConvertS => NumOp::Cvt(CvtOp::ConvertS),
        SsaConvertU => NumOp::Cvt(CvtOp::ConvertU),
        SsaTruncS => NumOp::Cvt(CvtOp::TruncS),
        SsaTruncU => NumOp::Cvt(CvtOp::TruncU),
        SsaExtendS => NumOp::Cvt(CvtOp::ExtendS),
        SsaExtendU => NumOp::Cvt(CvtOp::ExtendU),
        SsaWrap => NumOp::Cvt(CvtOp::Wrap),
        SsaPromote => NumOp::Cvt(CvtOp::Promote),
        SsaDemote => NumOp::Cvt(CvtOp::Demote),
        SsaSelect => NumOp::Select,
        _ => return None,
    })
}

/// Evaluates `op` on `args`; `to` is the result type (needed by conversions).
pub fn eval(op: NumOp, to: NumType, args: &[Value]) -> Result<Value, Trap> {
    match op {
        NumOp::Bin(b) => binary(b, &args[0], &args[1]),
        NumOp::Rel(r) => compare(r, &args[0], &args[1]),
        NumOp::Un(u) => unary(u, &args[0]),
        NumOp::Eqz => eqz(&args[0]),
        NumOp::Cvt(c) => convert(c, to, &args[0]),
        NumOp::Select => Ok(select(args[0].clone(), args[1].clone(), &args[2])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i32_arith_wraps() {
        assert_eq!(binary(BinOp::Add, &Value::I32(u32::MAX), &Value::I32(1)).unwrap(), Value::I32(0));
        assert_eq!(binary(BinOp::Mul, &Value::I32(0x10000), &Value::I32(0x10000)).unwrap(), Value::I32(0));
    }

    #[test]
    fn division_traps() {
        assert_eq!(binary(BinOp::DivS, &Value::I32(1), &Value::I32(0)), Err(Trap::DivByZero));
        assert_eq!(binary(BinOp::RemU, &Value::I64(1), &Value::I64(0)), Err(Trap::DivByZero));
        assert_eq!(binary(BinOp::DivS, &Value::I32(i32::MIN as u32), &Value::I32(-1i32 as u32)), Err(Trap::IntOverflow));
        assert_eq!(binary(BinOp::RemS, &Value::I32(i32::MIN as u32), &Value::I32(-1i32 as u32)).unwrap(), Value::I32(0));
    }

    #[test]
    fn signed_and_unsigned_compare() {
        let m1 = Value::I32(-1i32 as u32);
        let one = Value::I32(1);
        assert_eq!(compare(RelOp::LtS, &m1, &one).unwrap(), Value::I32(1));
        assert_eq!(compare(RelOp::LtU, &m1, &one).unwrap(), Value::I32(0));
    }

    #[test]
    fn nan_compares_false_and_trunc_traps() {
        let nan = Value::F64(f64::NAN.to_bits());
        assert_eq!(compare(RelOp::Eq, &nan, &nan).unwrap(), Value::I32(0));
        assert_eq!(compare(RelOp::Ne, &nan, &nan).unwrap(), Value::I32(1));
        assert_eq!(convert(CvtOp::TruncS, NumType::I32, &nan), Err(Trap::InvalidConversion));
        assert_eq!(convert(CvtOp::TruncS, NumType::I32, &Value::F64(3e9f64.to_bits())), Err(Trap::IntOverflow));
        assert_eq!(convert(CvtOp::TruncS, NumType::I32, &Value::F64((-2.9f64).to_bits())).unwrap(), Value::I32(-2i32 as u32));
    }

    #[test]
    fn mnemonics() {
        assert_eq!(CvtOp::ConvertS.mnemonic(NumType::I32, NumType::F64), "f64.convert_i32_s");
        assert_eq!(CvtOp::Wrap.mnemonic(NumType::I64, NumType::I32), "i32.wrap_i64");
        assert_eq!(BinOp::parse("div_s"), Some(BinOp::DivS));
    }

    #[test]
    fn nan_class_equality() {
        let a = Value::F64(f64::NAN.to_bits());
        let b = Value::F64(0x7FF0_0000_0000_0001);
        assert!(a.same_class(&b));
        assert!(!Value::F64(0.0f64.to_bits()).same_class(&Value::F64((-0.0f64).to_bits())));
    }
}
