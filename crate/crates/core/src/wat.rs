//! WebAssembly text rendering and instruction statistics.

use std::fmt::Write;

use serde::Serialize;

use crate::num::Value;
use crate::wasm::{walk_instrs, Instr, ValType, WasmFunc, WasmModule};

fn params_results(out: &mut String, params: &[ValType], results: &[ValType]) {
    if !params.is_empty() {
        out.push_str(" (param");
        for p in params {
            let _ = write!(out, " {p}");
        }
        out.push(')');
    }
    if !results.is_empty() {
        out.push_str(" (result");
        for r in results {
            let _ = write!(out, " {r}");
        }
        out.push(')');
    }
}

/// Escapes bytes for a WAT string literal: printable ASCII stays literal,
/// everything else becomes `\xy` in lowercase hex.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 3);
    for &b in bytes {
        if (0x20..0x7f).contains(&b) && b != b'"' && b != b'\\' {
            s.push(b as char);
        } else {
            let _ = write!(s, "\\{b:02x}");
        }
    }
    s
}

/// Inverse of [`escape_bytes`]; also accepts the named escapes of the text format.
pub fn unescape_bytes(s: &str) -> Option<Vec<u8>> {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] != b'\\' {
            out.push(b[i]);
            i += 1;
            continue;
        }
        match *b.get(i + 1)? {
            b'n' => out.push(b'\n'),
            b't' => out.push(b'\t'),
            b'r' => out.push(b'\r'),
            b'"' => out.push(b'"'),
            b'\'' => out.push(b'\''),
            b'\\' => out.push(b'\\'),
            _ => {
                let hex = std::str::from_utf8(b.get(i + 1..i + 3)?).ok()?;
                out.push(u8::from_str_radix(hex, 16).ok()?);
                i += 3;
                continue;
            }
        }
        i += 2;
    }
    Some(out)
}

fn float_text(v: f64, nan_bits: u64, mantissa_bits: u32) -> String {
    if v.is_nan() {
        let sign = if nan_bits >> (mantissa_bits + if mantissa_bits == 52 { 11 } else { 8 }) & 1 == 1 { "-" } else { "" };
        return format!("{sign}nan:0x{:x}", nan_bits & ((1u64 << mantissa_bits) - 1));
    }
    if v.is_infinite() {
        return if v < 0.0 { "-inf".into() } else { "inf".into() };
    }
    format!("{v:?}")
}

/// Text of a constant's immediate, exact for every bit pattern.
pub fn const_text(v: &Value) -> String {
    match v {
        Value::I32(x) => format!("i32.const {}", *x as i32),
        Value::I64(x) => format!("i64.const {}", *x as i64),
        Value::F32(b) => {
            let f = f32::from_bits(*b);
            let body = if f.is_nan() || f.is_infinite() { float_text(f as f64, *b as u64, 23) } else { format!("{f:?}") };
            format!("f32.const {body}")
        }
        Value::F64(b) => format!("f64.const {}", float_text(f64::from_bits(*b), *b, 52)),
        other => format!(";; {other}"),
    }
}

struct Emitter<'m> {
    out: String,
    func: &'m WasmFunc,
}

impl Emitter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn local(&self, idx: u32) -> String {
        format!("${}", self.func.local_name(idx))
    }

    fn body(&mut self, body: &[Instr], depth: usize) {
        for i in body {
            self.instr(i, depth);
        }
    }

    fn instr(&mut self, i: &Instr, depth: usize) {
        let text = match i {
            Instr::Const(v) => const_text(v),
            Instr::Unary { op, ty } => format!("{ty}.{}", op.name()),
            Instr::Binary { op, ty } => format!("{ty}.{}", op.name()),
            Instr::Compare { op, ty } => format!("{ty}.{}", op.name()),
            Instr::Eqz(ty) => format!("{ty}.eqz"),
            Instr::Convert { op, from, to } => op.mnemonic(*from, *to),
            Instr::Select => "select".into(),
            Instr::LocalGet(x) => format!("local.get {}", self.local(*x)),
            Instr::LocalSet(x) => format!("local.set {}", self.local(*x)),
            Instr::LocalTee(x) => format!("local.tee {}", self.local(*x)),
            Instr::GlobalGet(g) => format!("global.get ${g}"),
            Instr::GlobalSet(g) => format!("global.set ${g}"),
            Instr::Load { ty, offset } | Instr::Store { ty, offset } => {
                let verb = if matches!(i, Instr::Load { .. }) { "load" } else { "store" };
                match offset {
                    0 => format!("{ty}.{verb}"),
                    o => format!("{ty}.{verb} offset={o}"),
                }
            }
            Instr::Call(f) => format!("call ${f}"),
            Instr::Return => "return".into(),
            Instr::Br(l) => format!("br ${l}"),
            Instr::BrIf(l) => format!("br_if ${l}"),
            Instr::Block { label, results, body } => {
                let mut head = format!("block ${label}");
                params_results(&mut head, &[], results);
                self.line(depth, &head);
                self.body(body, depth + 1);
                self.line(depth, "end");
                return;
            }
            Instr::Loop { label, body } => {
                self.line(depth, &format!("loop ${label}"));
                self.body(body, depth + 1);
                self.line(depth, "end");
                return;
            }
            Instr::If { results, then, els } => {
                let mut head = "if".to_string();
                params_results(&mut head, &[], results);
                self.line(depth, &head);
                self.body(then, depth + 1);
                if !els.is_empty() {
                    self.line(depth, "else");
                    self.body(els, depth + 1);
                }
                self.line(depth, "end");
                return;
            }
            Instr::RefFunc(f) => format!("ref.func ${f}"),
            Instr::ContNew(ct) => format!("cont.new ${ct}"),
            Instr::Suspend(t) => format!("suspend ${t}"),
            Instr::Resume { cont_type, on } => {
                let mut s = format!("resume ${cont_type}");
                for (tag, label) in on {
                    let _ = write!(s, " (on ${tag} ${label})");
                }
                s
            }
            Instr::Unreachable => "unreachable".into(),
            Instr::Drop => "drop".into(),
        };
        self.line(depth, &text);
    }
}

fn func_text(f: &WasmFunc) -> String {
    let mut e = Emitter { out: String::new(), func: f };
    let mut head = format!("(func ${}", f.name);
    if f.exported {
        let _ = write!(head, " (export \"{}\")", f.name);
    }
    for (i, p) in f.params.iter().enumerate() {
        let _ = write!(head, " (param $p{i} {p})");
    }
    params_results(&mut head, &[], &f.results);
    e.line(1, &head);
    for (i, l) in f.locals.iter().enumerate() {
        // Reference locals have no default value unless nullable.
        match l {
            ValType::ContRef(ct) => e.line(2, &format!("(local $l{i} (ref null ${ct}))")),
            l => e.line(2, &format!("(local $l{i} {l})")),
        }
    }
    e.body(&f.body, 2);
    e.line(1, ")");
    e.out
}

/// Renders `m` as WAT. Deterministic: equal modules give identical text.
pub fn emit_wat(m: &WasmModule) -> String {
    let mut out = String::from("(module\n");
    for ft in &m.func_types {
        let mut s = format!("  (type ${} (func", ft.name);
        params_results(&mut s, &ft.params, &ft.results);
        s.push_str("))\n");
        out.push_str(&s);
    }
    for ct in &m.cont_types {
        let _ = writeln!(out, "  (type ${} (cont ${}))", ct.name, ct.func_type);
    }
    for imp in &m.imports {
        let mut s = format!("  (import \"env\" \"{0}\" (func ${0}", imp.name);
        params_results(&mut s, &imp.params, &imp.results);
        s.push_str("))\n");
        out.push_str(&s);
    }
    for t in &m.tags {
        let mut s = format!("  (tag ${}", t.name);
        params_results(&mut s, &t.params, &t.results);
        s.push_str(")\n");
        out.push_str(&s);
    }
    if let Some(mem) = &m.memory {
        if mem.exported {
            let _ = writeln!(out, "  (memory (export \"memory\") {})", mem.pages);
        } else {
            let _ = writeln!(out, "  (memory {})", mem.pages);
        }
    }
    for g in &m.globals {
        let ty = if g.mutable { format!("(mut {})", g.ty) } else { g.ty.to_string() };
        let _ = writeln!(out, "  (global ${} {ty} ({}))", g.name, const_text(&g.init));
    }
    for d in &m.data {
        let _ = writeln!(out, "  (data (i32.const {}) \"{}\")", d.offset, escape_bytes(&d.bytes));
    }
    // `ref.func` targets must be declared.
    let refs = m.referenced_funcs();
    if !refs.is_empty() {
        let names: Vec<String> = refs.iter().map(|r| format!("${r}")).collect();
        let _ = writeln!(out, "  (elem declare func {})", names.join(" "));
    }
    for f in &m.funcs {
        out.push_str(&func_text(f));
    }
    out.push(')');
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuncStats {
    pub name: String,
    pub instructions: usize,
    pub locals: usize,
    pub labels: usize,
    pub text_bytes: usize,
}

/// Size figures for a module; totals are sums over the functions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InstrStats {
    pub functions: Vec<FuncStats>,
    pub instructions: usize,
    pub locals: usize,
    pub labels: usize,
    pub text_bytes: usize,
    pub data_bytes: usize,
    /// Types, imports, tags, memory, globals and data segments.
    pub module_items: usize,
}

pub fn func_stats(f: &WasmFunc) -> FuncStats {
    let mut instructions = 0;
    let mut labels = 0;
    walk_instrs(&f.body, &mut |i| {
        instructions += 1;
        if matches!(i, Instr::Block { .. } | Instr::Loop { .. }) {
            labels += 1;
        }
    });
    FuncStats { name: f.name.clone(), instructions, locals: f.locals.len(), labels, text_bytes: func_text(f).len() }
}

pub fn stats(m: &WasmModule) -> InstrStats {
    let functions: Vec<FuncStats> = m.funcs.iter().map(func_stats).collect();
    InstrStats {
        instructions: functions.iter().map(|f| f.instructions).sum(),
        locals: functions.iter().map(|f| f.locals).sum(),
        labels: functions.iter().map(|f| f.labels).sum(),
        text_bytes: functions.iter().map(|f| f.text_bytes).sum(),
        data_bytes: m.data.iter().map(|d| d.bytes.len()).sum(),
        module_items: m.func_types.len()
            + m.cont_types.len()
            + m.imports.len()
            + m.tags.len()
            + usize::from(m.memory.is_some())
            + m.globals.len()
            + m.data.len(),
        functions,
    }
}

impl InstrStats {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for f in &self.functions {
            let _ = writeln!(
                s,
                "func {}: instructions={} locals={} labels={} text_bytes={}",
                f.name, f.instructions, f.locals, f.labels, f.text_bytes
            );
        }
        let _ = writeln!(
            s,
            "total: instructions={} locals={} labels={} text_bytes={} data_bytes={} module_items={}",
            self.instructions, self.locals, self.labels, self.text_bytes, self.data_bytes, self.module_items
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::NumType;
    use crate::wasm::Memory;

    #[test]
    fn empty_module() {
        let m = WasmModule { memory: Some(Memory { pages: 17, exported: true }), ..WasmModule::default() };
        assert_eq!(emit_wat(&m), "(module\n  (memory (export \"memory\") 17)\n)");
        let s = stats(&m);
        assert_eq!((s.instructions, s.locals, s.labels, s.data_bytes, s.text_bytes), (0, 0, 0, 0, 0));
        assert_eq!(s.module_items, 1);
    }

    #[test]
    fn every_byte_round_trips() {
        let all: Vec<u8> = (0..=255).collect();
        let text = escape_bytes(&all);
        assert_eq!(unescape_bytes(&text).unwrap(), all);
        assert!(text.contains("\\22") && text.contains("\\5c") && text.contains("\\ff"));
    }

    #[test]
    fn float_constants_are_exact() {
        assert_eq!(const_text(&Value::F64(2.25f64.to_bits())), "f64.const 2.25");
        assert_eq!(const_text(&Value::F64(f64::INFINITY.to_bits())), "f64.const inf");
        assert_eq!(const_text(&Value::F64(0x7ff8_0000_0000_0001)), "f64.const nan:0x8000000000001");
        assert_eq!(const_text(&Value::F32(0xffc0_0000)), "f32.const -nan:0x400000");
        assert_eq!(const_text(&Value::I32(u32::MAX)), "i32.const -1");
    }

    #[test]
    fn structured_control_nests() {
        let f = WasmFunc {
            name: "f".into(),
            exported: true,
            params: vec![ValType::I32],
            locals: vec![ValType::I32],
            body: vec![Instr::Block {
                label: "blk0".into(),
                results: vec![],
                body: vec![Instr::Loop {
                    label: "loop0".into(),
                    body: vec![Instr::LocalGet(0), Instr::Eqz(NumType::I32), Instr::BrIf("blk0".into()), Instr::Br("loop0".into())],
                }],
            }],
            ..WasmFunc::default()
        };
        let m = WasmModule { funcs: vec![f], ..WasmModule::default() };
        let text = emit_wat(&m);
        let expect = "  (func $f (export \"f\") (param $p0 i32)
    (local $l0 i32)
    block $blk0
      loop $loop0
        local.get $p0
        i32.eqz
        br_if $blk0
        br $loop0
      end
    end
  )
";
        assert!(text.contains(expect), "{text}");
        let s = stats(&m);
        assert_eq!((s.instructions, s.labels, s.locals), (6, 2, 1));
    }
}
