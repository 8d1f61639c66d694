use super::types::Type;

/// Float literal stored as its exact IEEE bit pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FloatBits {
    F32(u32),
    F64(u64),
}

impl FloatBits {
    pub fn from_f64(v: f64) -> Self {
        FloatBits::F64(v.to_bits())
    }

    pub fn from_f32(v: f32) -> Self {
        FloatBits::F32(v.to_bits())
    }

    pub fn ty(&self) -> Type {
        match self {
            FloatBits::F32(_) => Type::F32,
            FloatBits::F64(_) => Type::F64,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            FloatBits::F32(b) => f32::from_bits(b) as f64,
            FloatBits::F64(b) => f64::from_bits(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Attr {
    Int(i64),
    Float(FloatBits),
    Sym(String),
    Str(String),
    Type(Type),
    Types(Vec<Type>),
    Bytes(Vec<u8>),
}

impl Attr {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Attr::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Attr::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Attr::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_type(&self) -> Option<&Type> {
        match self {
            Attr::Type(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_types(&self) -> Option<&[Type]> {
        match self {
            Attr::Types(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Attr::Bytes(b) => Some(b),
            _ => None,
        }
    }
}

/// Ordered attribute table.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Attrs(pub Vec<(String, Attr)>);

impl Attrs {
    pub fn new() -> Self {
        Attrs(Vec::new())
    }

    pub fn with(mut self, name: &str, value: Attr) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Attr> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn set(&mut self, name: &str, value: Attr) {
        match self.0.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn remove(&mut self, name: &str) -> Option<Attr> {
        let pos = self.0.iter().position(|(k, _)| k == name)?;
        Some(self.0.remove(pos).1)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.get(name).and_then(Attr::as_int)
    }

    pub fn sym(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(Attr::as_sym)
    }

    pub fn str(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(Attr::as_str)
    }

    pub fn ty(&self, name: &str) -> Option<&Type> {
        self.get(name).and_then(Attr::as_type)
    }

    pub fn types(&self, name: &str) -> Option<&[Type]> {
        self.get(name).and_then(Attr::as_types)
    }

    pub fn bytes(&self, name: &str) -> Option<&[u8]> {
        self.get(name).and_then(Attr::as_bytes)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Attr)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn map_types(&mut self, f: &impl Fn(&Type) -> Type) {
        for (_, v) in self.0.iter_mut() {
            match v {
                Attr::Type(t) => *t = f(t),
                Attr::Types(ts) => {
                    for t in ts.iter_mut() {
                        *t = f(t);
                    }
                }
                _ => {}
            }
        }
    }
}
