use std::collections::HashMap;
use std::fmt::Write;

use crate::ir::{Attr, Attrs, Block, FloatBits, Function, IrModule, Level, OpKind, Operation, Region, Type, ValueId};

/// Renders `m` deterministically; values are renumbered `%0..` per function
/// in textual definition order.
pub fn print_module(m: &IrModule) -> String {
    let mut out = String::new();
    match m.level {
        Level::High => out.push_str("module {\n"),
        level => {
            let _ = writeln!(out, "module attributes {{level = \"{}\"}} {{", level.as_str());
        }
    }
    for op in &m.globals {
        out.push_str("  ");
        out.push_str(&op.full_name());
        let attrs = canonical_attrs(op.kind, &op.attrs);
        if !attrs.is_empty() {
            out.push(' ');
            write_attr_dict(&mut out, &attrs);
        }
        out.push('\n');
    }
    for f in &m.functions {
        print_function(&mut out, f);
    }
    out.push_str("}\n");
    out
}

/// Renders one function at module indentation.
pub fn print_function_text(f: &Function) -> String {
    let mut out = String::new();
    print_function(&mut out, f);
    out
}

fn print_function(out: &mut String, f: &Function) {
    let mut names = HashMap::new();
    if let Some(body) = &f.body {
        number_region(body, &mut names);
    }
    let p = Printer { names };
    let _ = write!(out, "  {} ", f.kind.keyword());
    if !f.exported {
        out.push_str("private ");
    }
    let _ = write!(out, "@{}(", f.name);
    let params: Vec<String> = match f.entry() {
        Some(entry) if f.body.is_some() => entry
            .args
            .iter()
            .zip(&f.params)
            .map(|(&a, t)| format!("{}: {t}", p.name(a)))
            .collect(),
        _ => f.params.iter().map(|t| t.to_string()).collect(),
    };
    out.push_str(&params.join(", "));
    out.push(')');
    match f.results.len() {
        0 => {}
        1 => {
            let _ = write!(out, " -> {}", f.results[0]);
        }
        _ => {
            let _ = write!(out, " -> ({})", join_types(&f.results));
        }
    }
    if !f.attrs.is_empty() {
        out.push_str(" attributes ");
        write_attr_dict(out, &f.attrs);
    }
    let Some(body) = &f.body else {
        out.push('\n');
        return;
    };
    out.push_str(" {\n");
    for (i, block) in body.blocks.iter().enumerate() {
        if i == 0 {
            // Entry arguments are the parameters; extra ones would be lost.
            debug_assert_eq!(block.args.len(), f.params.len());
            if block.label != "entry" {
                let _ = writeln!(out, "  ^{}:", block.label);
            }
            for op in &block.ops {
                p.op(out, op, 4, f);
            }
        } else {
            p.block(out, block, 2, f);
        }
    }
    out.push_str("  }\n");
}

fn number_region(region: &Region, names: &mut HashMap<ValueId, usize>) {
    for block in &region.blocks {
        for &a in &block.args {
            let n = names.len();
            names.entry(a).or_insert(n);
        }
        for op in &block.ops {
            for &r in &op.results {
                let n = names.len();
                names.entry(r).or_insert(n);
            }
            for r in &op.regions {
                number_region(r, names);
            }
        }
    }
}

struct Printer {
    names: HashMap<ValueId, usize>,
}

impl Printer {
    fn name(&self, v: ValueId) -> String {
        match self.names.get(&v) {
            Some(n) => format!("%{n}"),
            None => format!("%undef{}", v.0),
        }
    }

    fn block(&self, out: &mut String, block: &Block, indent: usize, f: &Function) {
        let pad = " ".repeat(indent);
        let _ = write!(out, "{pad}^{}", block.label);
        if !block.args.is_empty() {
            let args: Vec<String> = block.args.iter().map(|&a| format!("{}: {}", self.name(a), f.ty(a))).collect();
            let _ = write!(out, "({})", args.join(", "));
        }
        out.push_str(":\n");
        for op in &block.ops {
            self.op(out, op, indent + 2, f);
        }
    }

    fn op(&self, out: &mut String, op: &Operation, indent: usize, f: &Function) {
        let pad = " ".repeat(indent);
        out.push_str(&pad);
        if !op.results.is_empty() {
            let rs: Vec<String> = op.results.iter().map(|&r| self.name(r)).collect();
            let _ = write!(out, "{} = ", rs.join(", "));
        }
        out.push_str(&op.full_name());
        if !op.operands.is_empty() {
            let os: Vec<String> = op.operands.iter().map(|&v| self.name(v)).collect();
            let _ = write!(out, " {}", os.join(", "));
        }
        if !op.successors.is_empty() {
            let ss: Vec<String> = op.successors.iter().map(|s| format!("^{s}")).collect();
            let _ = write!(out, " [{}]", ss.join(", "));
        }
        let attrs = canonical_attrs(op.kind, &op.attrs);
        if !attrs.is_empty() {
            out.push(' ');
            write_attr_dict(out, &attrs);
        }
        if !op.regions.is_empty() {
            out.push_str(" (");
            for (i, r) in op.regions.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('{');
                if !r.blocks.is_empty() {
                    out.push('\n');
                    for b in &r.blocks {
                        self.block(out, b, indent, f);
                    }
                    out.push_str(&pad);
                }
                out.push('}');
            }
            out.push(')');
        }
        if !op.results.is_empty() {
            let ts: Vec<String> = op.results.iter().map(|&r| f.ty(r).to_string()).collect();
            let _ = write!(out, " : {}", ts.join(", "));
        }
        out.push('\n');
    }
}

/// Required attributes first in registered order, then the rest as stored.
fn canonical_attrs(kind: OpKind, attrs: &Attrs) -> Attrs {
    let mut out = Attrs::new();
    for &name in kind.signature().required_attrs {
        if let Some(v) = attrs.get(name) {
            out.set(name, v.clone());
        }
    }
    for (k, v) in attrs.iter() {
        if out.get(k).is_none() {
            out.set(k, v.clone());
        }
    }
    out
}

fn join_types(ts: &[Type]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_attr_dict(out: &mut String, attrs: &Attrs) {
    out.push('{');
    for (i, (k, v)) in attrs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{k} = {}", format_attr(v));
    }
    out.push('}');
}

pub fn format_attr(a: &Attr) -> String {
    match a {
        Attr::Int(v) => v.to_string(),
        Attr::Float(FloatBits::F64(bits)) => {
            let v = f64::from_bits(*bits);
            if v.is_finite() {
                format!("{v:?} : f64")
            } else {
                format!("0x{bits:016X} : f64")
            }
        }
        Attr::Float(FloatBits::F32(bits)) => {
            let v = f32::from_bits(*bits);
            if v.is_finite() {
                format!("{v:?} : f32")
            } else {
                format!("0x{bits:08X} : f32")
            }
        }
        Attr::Sym(s) => format!("@{s}"),
        Attr::Str(s) => {
            let mut e = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => e.push_str("\\\""),
                    '\\' => e.push_str("\\\\"),
                    '\n' => e.push_str("\\n"),
                    '\t' => e.push_str("\\t"),
                    c => e.push(c),
                }
            }
            e.push('"');
            e
        }
        Attr::Type(t) => t.to_string(),
        Attr::Types(ts) => format!("[{}]", join_types(ts)),
        Attr::Bytes(b) => {
            let mut s = String::from("dense<\"0X");
            for byte in b {
                let _ = write!(s, "{byte:02X}");
            }
            s.push_str("\">");
            s
        }
    }
}
