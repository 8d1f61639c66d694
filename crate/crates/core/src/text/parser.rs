use std::collections::HashMap;
use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use crate::ir::{
    lookup_full_name, verify_module, Attr, Attrs, Block, ContSig, Diagnostic, FloatBits, FuncKind,
    Function, IrModule, Level, MemRefType, Operation, Region, Rule, SourceSpan, Type, ValueDef,
    ValueId, ValueTable,
};

/// Parses and verifies a module. Structural control-flow diagnostics do not
/// reject the parse; every other verifier finding does.
pub fn parse_module(text: &str) -> Result<IrModule, Vec<Diagnostic>> {
    parse_module_named(text, "<input>")
}

pub fn parse_module_named(text: &str, file: &str) -> Result<IrModule, Vec<Diagnostic>> {
    let m = parse_unverified(text, file).map_err(|d| vec![d])?;
    let diags: Vec<Diagnostic> = verify_module(&m).into_iter().filter(|d| !d.rule.is_structural()).collect();
    if diags.is_empty() {
        Ok(m)
    } else {
        Err(diags)
    }
}

/// Parses without running the verifier.
pub fn parse_unverified(text: &str, file: &str) -> Result<IrModule, Diagnostic> {
    let file: Arc<str> = Arc::from(file);
    let toks = tokenize(text, &file)?;
    let mut p = Parser { toks, pos: 0, file, func: None };
    p.module()
}

struct FuncState {
    values: ValueTable,
    names: HashMap<String, ValueId>,
    /// Forward references awaiting a definition, with the span of first use.
    pending: HashMap<ValueId, (String, SourceSpan)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    func: Option<FuncState>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        let t = &self.toks[self.pos];
        SourceSpan { file: self.file.clone(), line: t.line, column: t.column, length: t.length.max(1) }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(Rule::Syntax, msg).at(Some(self.span())))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(i) if i == s)
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.error(format!("expected {what}, found {}", describe(&t))),
        }
    }

    fn sym(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Sym(s) => {
                self.next();
                Ok(s)
            }
            t => self.error(format!("expected a symbol, found {}", describe(&t))),
        }
    }

    fn module(&mut self) -> PResult<IrModule> {
        let mut m = IrModule::new();
        if !self.is_ident("module") {
            return self.error("expected `module`");
        }
        self.next();
        if self.is_ident("attributes") {
            self.next();
            let attrs = self.attr_dict()?;
            if let Some(level) = attrs.get("level") {
                let parsed = level.as_str().and_then(Level::parse);
                match parsed {
                    Some(l) => m.level = l,
                    None => return self.error("level must be \"high\", \"ssawasm\" or \"wasm\""),
                }
            }
        }
        self.expect(Tok::LBrace, "`{`")?;
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Ident(kw) if kw == "func.func" || kw == "ssawasm.func" || kw == "wasm.func" => {
                    let f = self.function()?;
                    m.functions.push(f);
                }
                Tok::Ident(_) => {
                    let op = self.global_op()?;
                    m.globals.push(op);
                }
                t => return self.error(format!("expected a function or module-level operation, found {}", describe(&t))),
            }
        }
        if *self.peek() != Tok::Eof {
            return self.error("unexpected input after module");
        }
        Ok(m)
    }

    fn global_op(&mut self) -> PResult<Operation> {
        let span = self.span();
        let name = self.ident("operation name")?;
        let sig = lookup_full_name(&name)
            .map_err(|e| Diagnostic::new(Rule::UnknownOp, e.to_string()).at(Some(span.clone())))?;
        let attrs = if *self.peek() == Tok::LBrace { self.attr_dict()? } else { Attrs::new() };
        let mut op = Operation::module_op(sig.kind, attrs);
        op.span = Some(span);
        Ok(op)
    }

    fn function(&mut self) -> PResult<Function> {
        let span = self.span();
        let kind = match self.ident("function keyword")?.as_str() {
            "func.func" => FuncKind::Func,
            "ssawasm.func" => FuncKind::SsaWasm,
            _ => FuncKind::Wasm,
        };
        let private = self.is_ident("private");
        if private {
            self.next();
        }
        let name = self.sym()?;
        self.func = Some(FuncState { values: ValueTable::default(), names: HashMap::new(), pending: HashMap::new() });
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        let mut param_names = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                if let Tok::Value(v) = self.peek().clone() {
                    let vspan = self.span();
                    self.next();
                    self.expect(Tok::Colon, "`:`")?;
                    params.push(self.ty()?);
                    param_names.push(Some((v, vspan)));
                } else {
                    params.push(self.ty()?);
                    param_names.push(None);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let results = if self.eat(&Tok::Arrow) { self.result_types()? } else { Vec::new() };
        let attrs = if self.is_ident("attributes") {
            self.next();
            self.attr_dict()?
        } else {
            Attrs::new()
        };
        let mut f = Function {
            name,
            kind,
            exported: !private,
            params: params.clone(),
            results,
            body: None,
            attrs,
            values: ValueTable::default(),
            span: Some(span),
        };
        if *self.peek() == Tok::LBrace {
            if param_names.iter().any(Option::is_none) {
                return self.error("a function with a body must name its parameters");
            }
            self.next();
            let mut entry = self.state().values.block("entry", Vec::new());
            for (i, (pname, t)) in param_names.into_iter().flatten().zip(params).enumerate() {
                let v = self.define(&pname.0, t, ValueDef::BlockArg { block: entry.id, index: i as u32 }, &pname.1)?;
                entry.args.push(v);
            }
            let mut region = Region::default();
            if !matches!(self.peek(), Tok::Label(_)) {
                entry.ops = self.ops()?;
                region.blocks.push(entry);
            } else {
                // Labeled first block: parameters become its arguments.
                let mut first = self.block()?;
                let mut args = entry.args;
                args.extend(first.args);
                first.args = args;
                region.blocks.push(first);
            }
            while matches!(self.peek(), Tok::Label(_)) {
                region.blocks.push(self.block()?);
            }
            self.expect(Tok::RBrace, "`}`")?;
            f.body = Some(region);
        }
        let st = self.func.take().expect("function state");
        if let Some((_, (name, span))) = st.pending.iter().min_by_key(|(_, (_, s))| (s.line, s.column)) {
            return Err(Diagnostic::new(Rule::UndefinedValue, format!("use of undefined value %{name}"))
                .at(Some(span.clone()))
                .in_function(&f.name));
        }
        f.values = st.values;
        Ok(f)
    }

    fn state(&mut self) -> &mut FuncState {
        self.func.as_mut().expect("inside a function")
    }

    fn define(&mut self, name: &str, ty: Type, def: ValueDef, span: &SourceSpan) -> PResult<ValueId> {
        let st = self.state();
        match st.names.get(name).copied() {
            Some(v) if st.pending.contains_key(&v) => {
                st.pending.remove(&v);
                st.values.values[v.0 as usize].ty = ty;
                st.values.values[v.0 as usize].def = def;
                Ok(v)
            }
            Some(_) => Err(Diagnostic::new(Rule::MultipleDefinitions, format!("value %{name} is defined more than once"))
                .at(Some(span.clone()))),
            None => {
                let v = st.values.new_value(ty, def);
                st.names.insert(name.to_string(), v);
                Ok(v)
            }
        }
    }

    fn use_value(&mut self, name: &str, span: SourceSpan) -> ValueId {
        let st = self.state();
        if let Some(&v) = st.names.get(name) {
            return v;
        }
        let v = st.values.new_value(Type::I32, ValueDef::BlockArg { block: crate::ir::BlockId(u32::MAX), index: 0 });
        st.names.insert(name.to_string(), v);
        st.pending.insert(v, (name.to_string(), span));
        v
    }

    fn block(&mut self) -> PResult<Block> {
        let Tok::Label(label) = self.next() else { unreachable!("caller checked for a label") };
        let mut block = self.state().values.block(&label, Vec::new());
        if self.eat(&Tok::LParen) {
            let mut i = 0;
            while *self.peek() != Tok::RParen {
                let vspan = self.span();
                let Tok::Value(name) = self.next() else { return self.error("expected a block argument") };
                self.expect(Tok::Colon, "`:`")?;
                let t = self.ty()?;
                let v = self.define(&name, t, ValueDef::BlockArg { block: block.id, index: i }, &vspan)?;
                block.args.push(v);
                i += 1;
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        self.expect(Tok::Colon, "`:` after block label")?;
        block.ops = self.ops()?;
        Ok(block)
    }

    fn ops(&mut self) -> PResult<Vec<Operation>> {
        let mut ops = Vec::new();
        while matches!(self.peek(), Tok::Ident(_) | Tok::Value(_)) {
            ops.push(self.op()?);
        }
        Ok(ops)
    }

    /// True when the upcoming tokens are `%a, %b =`, i.e. a new op's results.
    fn at_result_list(&self) -> bool {
        let mut k = 0;
        loop {
            if !matches!(self.peek_at(k), Tok::Value(_)) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Eq => return true,
                Tok::Comma => k += 2,
                _ => return false,
            }
        }
    }

    fn op(&mut self) -> PResult<Operation> {
        let mut result_names = Vec::new();
        if self.at_result_list() {
            loop {
                let s = self.span();
                let Tok::Value(n) = self.next() else { unreachable!() };
                result_names.push((n, s));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Eq, "`=`")?;
        }
        let span = self.span();
        let name = self.ident("operation name")?;
        let sig = lookup_full_name(&name)
            .map_err(|e| Diagnostic::new(Rule::UnknownOp, e.to_string()).at(Some(span.clone())))?;
        let mut operands = Vec::new();
        if matches!(self.peek(), Tok::Value(_)) && !self.at_result_list() {
            loop {
                let s = self.span();
                let Tok::Value(n) = self.next() else { return self.error("expected an operand") };
                operands.push(self.use_value(&n, s));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let mut successors = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                match self.next() {
                    Tok::Label(l) => successors.push(l),
                    _ => return self.error("expected a successor label"),
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket, "`]`")?;
        }
        let attrs = if *self.peek() == Tok::LBrace { self.attr_dict()? } else { Attrs::new() };
        let mut regions = Vec::new();
        if *self.peek() == Tok::LParen && *self.peek_at(1) == Tok::LBrace {
            self.next();
            loop {
                regions.push(self.region()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        let mut types = Vec::new();
        if self.eat(&Tok::Colon) {
            loop {
                types.push(self.ty()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        if types.len() != result_names.len() {
            return Err(Diagnostic::new(
                Rule::Syntax,
                format!("{} results but {} result types", result_names.len(), types.len()),
            )
            .at(Some(span)));
        }
        let id = self.state().values.fresh_op_id();
        let mut results = Vec::new();
        for (i, ((n, s), t)) in result_names.into_iter().zip(types).enumerate() {
            results.push(self.define(&n, t, ValueDef::OpResult { op: id, index: i as u32 }, &s)?);
        }
        Ok(Operation { id, kind: sig.kind, operands, results, attrs, regions, successors, span: Some(span) })
    }

    fn region(&mut self) -> PResult<Region> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut region = Region::default();
        while matches!(self.peek(), Tok::Label(_)) {
            region.blocks.push(self.block()?);
        }
        if !matches!(self.peek(), Tok::RBrace) {
            return self.error(format!("expected a block label or `}}`, found {}", describe(self.peek())));
        }
        self.next();
        Ok(region)
    }

    fn result_types(&mut self) -> PResult<Vec<Type>> {
        if self.eat(&Tok::LParen) {
            let ts = self.type_list_until(Tok::RParen)?;
            Ok(ts)
        } else {
            Ok(vec![self.ty()?])
        }
    }

    /// Parses `t, t, ...` followed by `close` (consumed).
    fn type_list_until(&mut self, close: Tok) -> PResult<Vec<Type>> {
        let mut ts = Vec::new();
        if self.eat(&close) {
            return Ok(ts);
        }
        loop {
            ts.push(self.ty()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(close, "closing delimiter")?;
        Ok(ts)
    }

    fn is_type_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                matches!(s.as_str(), "i32" | "i64" | "f32" | "f64" | "index" | "funcref" | "memref" | "local" | "contref" | "cont")
            }
            _ => false,
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        let span = self.span();
        let word = self.ident("a type")?;
        let t = match word.as_str() {
            "i32" => Type::I32,
            "i64" => Type::I64,
            "f32" => Type::F32,
            "f64" => Type::F64,
            "index" => Type::Index,
            "funcref" => Type::FuncRef,
            "memref" => {
                self.expect(Tok::Lt, "`<`")?;
                let shape_span = self.span();
                let text = self.ident("memref shape")?;
                self.expect(Tok::Gt, "`>`")?;
                let mut parts = text.split('x');
                let elem = match parts.next() {
                    Some("i32") => Type::I32,
                    Some("i64") => Type::I64,
                    Some("f32") => Type::F32,
                    Some("f64") => Type::F64,
                    _ => {
                        return Err(Diagnostic::new(Rule::Syntax, format!("bad memref element in `{text}`"))
                            .at(Some(shape_span)))
                    }
                };
                let mut shape = Vec::new();
                for p in parts {
                    match p.parse::<u32>() {
                        Ok(d) => shape.push(d),
                        Err(_) => {
                            return Err(Diagnostic::new(Rule::InvalidType, format!("memref extent `{p}` is not a static size"))
                                .at(Some(shape_span)))
                        }
                    }
                }
                Type::MemRef(MemRefType::new(shape, elem))
            }
            "local" => {
                self.expect(Tok::Lt, "`<`")?;
                let inner = self.ty()?;
                self.expect(Tok::Gt, "`>`")?;
                Type::local(inner)
            }
            "contref" => {
                self.expect(Tok::Lt, "`<`")?;
                let name = self.sym()?;
                self.expect(Tok::Gt, "`>`")?;
                Type::ContRef(name)
            }
            "cont" => {
                self.expect(Tok::Lt, "`<`")?;
                self.expect(Tok::LParen, "`(`")?;
                let payload = self.type_list_until(Tok::RParen)?;
                self.expect(Tok::Arrow, "`->`")?;
                self.expect(Tok::LParen, "`(`")?;
                let resume = self.type_list_until(Tok::RParen)?;
                self.expect(Tok::Gt, "`>`")?;
                Type::Cont(ContSig { payload, resume })
            }
            other => {
                return Err(Diagnostic::new(Rule::Syntax, format!("unknown type `{other}`")).at(Some(span)));
            }
        };
        Ok(t)
    }

    fn attr_dict(&mut self) -> PResult<Attrs> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut attrs = Attrs::new();
        if self.eat(&Tok::RBrace) {
            return Ok(attrs);
        }
        loop {
            let key = self.ident("attribute name")?;
            self.expect(Tok::Eq, "`=`")?;
            let v = self.attr_value()?;
            if attrs.get(&key).is_some() {
                return self.error(format!("attribute `{key}` given twice"));
            }
            attrs.set(&key, v);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(attrs)
    }

    fn float_suffix(&mut self) -> PResult<Option<Type>> {
        if *self.peek() == Tok::Colon {
            self.next();
            let t = self.ty()?;
            return Ok(Some(t));
        }
        Ok(None)
    }

    fn attr_value(&mut self) -> PResult<Attr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                match self.float_suffix()? {
                    Some(Type::F64) => Ok(Attr::Float(FloatBits::F64(v as u64))),
                    Some(Type::F32) => Ok(Attr::Float(FloatBits::F32(v as u32))),
                    Some(t) if t.is_int() => Ok(Attr::Int(v as i64)),
                    Some(t) => Err(Diagnostic::new(Rule::TypeMismatch, format!("integer literal typed as {t}")).at(Some(span))),
                    None => {
                        let Ok(v) = i64::try_from(v) else { return self.error("integer attribute out of range") };
                        Ok(Attr::Int(v))
                    }
                }
            }
            Tok::Float(text) => {
                self.next();
                match self.float_suffix()? {
                    Some(Type::F32) => {
                        let v: f32 = text.parse().map_err(|_| Diagnostic::new(Rule::Syntax, "bad float").at(Some(span.clone())))?;
                        Ok(Attr::Float(FloatBits::from_f32(v)))
                    }
                    None | Some(Type::F64) => {
                        let v: f64 = text.parse().map_err(|_| Diagnostic::new(Rule::Syntax, "bad float").at(Some(span.clone())))?;
                        Ok(Attr::Float(FloatBits::from_f64(v)))
                    }
                    Some(t) => Err(Diagnostic::new(Rule::TypeMismatch, format!("float literal typed as {t}")).at(Some(span))),
                }
            }
            Tok::Sym(s) => {
                self.next();
                Ok(Attr::Sym(s))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Attr::Str(s))
            }
            Tok::LBracket => {
                self.next();
                Ok(Attr::Types(self.type_list_until(Tok::RBracket)?))
            }
            Tok::Ident(w) if w == "dense" => {
                self.next();
                self.expect(Tok::Lt, "`<`")?;
                let bytes = self.dense_body()?;
                Ok(Attr::Bytes(bytes))
            }
            _ if self.is_type_start() => Ok(Attr::Type(self.ty()?)),
            t => self.error(format!("expected an attribute value, found {}", describe(&t))),
        }
    }

    /// Parses the inside of `dense<...>` after `<`, through an optional element-type suffix.
    fn dense_body(&mut self) -> PResult<Vec<u8>> {
        match self.next() {
            Tok::Str(hex) => {
                self.expect(Tok::Gt, "`>`")?;
                let digits = hex.strip_prefix("0X").or_else(|| hex.strip_prefix("0x")).unwrap_or(&hex);
                if digits.len() % 2 != 0 {
                    return self.error("hex dense literal needs an even number of digits");
                }
                (0..digits.len())
                    .step_by(2)
                    .map(|i| u8::from_str_radix(&digits[i..i + 2], 16))
                    .collect::<Result<Vec<u8>, _>>()
                    .or_else(|_| self.error("malformed hex dense literal"))
            }
            Tok::LBracket => {
                enum Lit {
                    I(i128),
                    F(String),
                }
                let mut lits = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        match self.next() {
                            Tok::Int(v) => lits.push(Lit::I(v)),
                            Tok::Float(f) => lits.push(Lit::F(f)),
                            _ => return self.error("expected a number in dense list"),
                        }
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket, "`]`")?;
                }
                self.expect(Tok::Gt, "`>`")?;
                let any_float = lits.iter().any(|l| matches!(l, Lit::F(_)));
                let elem = match self.float_suffix()? {
                    Some(t) => t,
                    None if any_float => Type::F64,
                    None => Type::I32,
                };
                let mut bytes = Vec::new();
                let as_f64 = |l: &Lit| match l {
                    Lit::I(v) => *v as f64,
                    Lit::F(s) => s.parse().unwrap_or(f64::NAN),
                };
                let as_int = |l: &Lit| match l {
                    Lit::I(v) => *v,
                    Lit::F(s) => s.parse::<f64>().unwrap_or(0.0) as i128,
                };
                for l in &lits {
                    match elem {
                        Type::I32 => bytes.extend_from_slice(&(as_int(l) as i32).to_le_bytes()),
                        Type::I64 => bytes.extend_from_slice(&(as_int(l) as i64).to_le_bytes()),
                        Type::F32 => bytes.extend_from_slice(&(as_f64(l) as f32).to_le_bytes()),
                        Type::F64 => bytes.extend_from_slice(&as_f64(l).to_le_bytes()),
                        ref t => return self.error(format!("dense element type {t} is not a scalar")),
                    }
                }
                Ok(bytes)
            }
            _ => self.error("expected a hex string or list inside dense<>"),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Value(s) => format!("`%{s}`"),
        Tok::Sym(s) => format!("`@{s}`"),
        Tok::Label(s) => format!("`^{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Float(s) => format!("`{s}`"),
        Tok::Str(s) => format!("{s:?}"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}
