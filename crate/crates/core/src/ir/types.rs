use std::fmt;

/// Statically shaped memory reference: element type first, extents after.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MemRefType {
    pub shape: Vec<u32>,
    pub elem: Box<Type>,
}

impl MemRefType {
    pub fn new(shape: Vec<u32>, elem: Type) -> Self {
        MemRefType { shape, elem: Box::new(elem) }
    }

    pub fn num_elements(&self) -> u64 {
        self.shape.iter().map(|&d| d as u64).product()
    }

    pub fn elem_width(&self) -> u32 {
        self.elem.byte_width().unwrap_or(4)
    }

    pub fn byte_size(&self) -> u64 {
        self.num_elements() * self.elem_width() as u64
    }

    /// Row-major strides in elements: `stride_k = prod(shape[k+1..])`.
    pub fn strides(&self) -> Vec<u64> {
        let mut strides = vec![1u64; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1] as u64;
        }
        strides
    }
}

/// Signature of a delimited continuation: values yielded to the parent on
/// suspend, and values handed back to the suspended computation on resume.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContSig {
    pub payload: Vec<Type>,
    pub resume: Vec<Type>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    I32,
    I64,
    F32,
    F64,
    Index,
    MemRef(MemRefType),
    Local(Box<Type>),
    /// Reference to a continuation of the named continuation type.
    ContRef(String),
    /// High-level continuation value (dcont dialect).
    Cont(ContSig),
    FuncRef,
}

impl Type {
    pub fn memref(shape: Vec<u32>, elem: Type) -> Type {
        Type::MemRef(MemRefType::new(shape, elem))
    }

    pub fn local(inner: Type) -> Type {
        Type::Local(Box::new(inner))
    }

    pub fn is_int(&self) -> bool {
        matches!(self, Type::I32 | Type::I64 | Type::Index)
    }

    pub fn is_float(&self) -> bool {
        matches!(self, Type::F32 | Type::F64)
    }

    pub fn is_scalar(&self) -> bool {
        self.is_int() || self.is_float()
    }

    pub fn is_local(&self) -> bool {
        matches!(self, Type::Local(_))
    }

    pub fn local_inner(&self) -> Option<&Type> {
        match self {
            Type::Local(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_memref(&self) -> Option<&MemRefType> {
        match self {
            Type::MemRef(m) => Some(m),
            _ => None,
        }
    }

    /// Width in bytes of a scalar stored in linear memory.
    pub fn byte_width(&self) -> Option<u32> {
        match self {
            Type::I32 | Type::F32 | Type::Index => Some(4),
            Type::I64 | Type::F64 => Some(8),
            _ => None,
        }
    }

    /// Type after resolving `index` to the wasm32 address width.
    pub fn resolve_index(&self) -> Type {
        match self {
            Type::Index => Type::I32,
            Type::Local(t) => Type::Local(Box::new(t.resolve_index())),
            Type::MemRef(m) => Type::MemRef(MemRefType {
                shape: m.shape.clone(),
                elem: Box::new(m.elem.resolve_index()),
            }),
            Type::Cont(sig) => Type::Cont(ContSig {
                payload: sig.payload.iter().map(Type::resolve_index).collect(),
                resume: sig.resume.iter().map(Type::resolve_index).collect(),
            }),
            t => t.clone(),
        }
    }

    /// Checks the structural invariants of the type.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Type::MemRef(m) => {
                if m.shape.is_empty() {
                    return Err("memref shape must be nonempty".into());
                }
                if m.shape.contains(&0) {
                    return Err("memref extents must be positive".into());
                }
                if !matches!(*m.elem, Type::I32 | Type::I64 | Type::F32 | Type::F64) {
                    return Err(format!("memref element must be a numeric scalar, got {}", m.elem));
                }
                Ok(())
            }
            Type::Local(inner) => match inner.as_ref() {
                t if t.is_scalar() => Ok(()),
                Type::ContRef(_) | Type::Cont(_) | Type::FuncRef => Ok(()),
                t => Err(format!("local cannot wrap {t}")),
            },
            Type::Cont(sig) => {
                for t in sig.payload.iter().chain(&sig.resume) {
                    if !t.is_scalar() {
                        return Err(format!("continuation signature element {t} is not scalar"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, tys: &[Type]) -> fmt::Result {
    write!(f, "(")?;
    for (i, t) in tys.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{t}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::I32 => write!(f, "i32"),
            Type::I64 => write!(f, "i64"),
            Type::F32 => write!(f, "f32"),
            Type::F64 => write!(f, "f64"),
            Type::Index => write!(f, "index"),
            Type::MemRef(m) => {
                write!(f, "memref<{}", m.elem)?;
                for d in &m.shape {
                    write!(f, "x{d}")?;
                }
                write!(f, ">")
            }
            Type::Local(t) => write!(f, "local<{t}>"),
            Type::ContRef(name) => write!(f, "contref<@{name}>"),
            Type::Cont(sig) => {
                write!(f, "cont<")?;
                write_list(f, &sig.payload)?;
                write!(f, " -> ")?;
                write_list(f, &sig.resume)?;
                write!(f, ">")
            }
            Type::FuncRef => write!(f, "funcref"),
        }
    }
}
