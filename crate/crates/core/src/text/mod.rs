//! Textual form of the IR: a generic MLIR-like syntax shared by every level.

mod lexer;
mod parser;
mod printer;

pub use parser::{parse_module, parse_module_named, parse_unverified};
pub use printer::{format_attr, print_function_text, print_module};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{IrModule, OpKind, Rule, Type};

    #[test]
    fn empty_module_prints_braces() {
        assert_eq!(print_module(&IrModule::new()), "module {\n}\n");
    }

    #[test]
    fn parses_minimal_function() {
        let m = parse_module("module { func.func @main() { func.return } }").unwrap();
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.functions[0].name, "main");
    }

    #[test]
    fn local_ops_thread_local_type() {
        let src = r#"
module attributes {level = "ssawasm"} {
  ssawasm.func @f() {
    %0 = ssawasm.local_decl : local<i32>
    %1 = ssawasm.const {value = 7} : i32
    ssawasm.local_set %0, %1
    %2 = ssawasm.local_get %0 : i32
    ssawasm.return
  }
}
"#;
        let m = parse_module(src).unwrap();
        let f = &m.functions[0];
        let ops = &f.entry().unwrap().ops;
        let local_ops: Vec<OpKind> = ops
            .iter()
            .map(|o| o.kind)
            .filter(|k| matches!(k, OpKind::SsaLocalDecl | OpKind::SsaLocalSet | OpKind::SsaLocalGet))
            .collect();
        assert_eq!(local_ops, [OpKind::SsaLocalDecl, OpKind::SsaLocalSet, OpKind::SsaLocalGet]);
        assert_eq!(f.ty(ops[0].results[0]), &Type::local(Type::I32));
        assert_eq!(ops[2].operands[0], ops[0].results[0]);
    }

    #[test]
    fn self_use_is_rejected() {
        let src = "module {\n  func.func @f(%1: i32) {\n    %0 = arith.addi %0, %1 : i32\n    func.return\n  }\n}\n";
        let diags = parse_module(src).unwrap_err();
        assert!(diags.iter().any(|d| d.rule == Rule::Dominance), "{diags:?}");
        assert_eq!(diags[0].span.as_ref().unwrap().line, 3);
    }

    #[test]
    fn undefined_value_has_position() {
        let src = "module {\n  func.func @f() {\n    %0 = arith.addi %9, %9 : i32\n    func.return\n  }\n}";
        let diags = parse_module(src).unwrap_err();
        assert_eq!(diags[0].rule, Rule::UndefinedValue);
        let span = diags[0].span.as_ref().unwrap();
        assert_eq!((span.line, span.column), (3, 21));
    }

    #[test]
    fn dense_forms_normalize_to_bytes() {
        let a = parse_module(r#"module { memref.global {sym = @g, type = memref<i32x2>, init = dense<[1, 2]>} }"#).unwrap();
        let b = parse_module(r#"module { memref.global {sym = @g, type = memref<i32x2>, init = dense<"0X0100000002000000">} }"#).unwrap();
        assert_eq!(print_module(&a), print_module(&b));
        assert_eq!(a.globals[0].attrs.bytes("init").unwrap(), &[1, 0, 0, 0, 2, 0, 0, 0]);
    }

    #[test]
    fn floats_round_trip_exactly() {
        let src = r#"module {
  func.func @f() -> f64 {
    %0 = arith.constant {value = 0.1 : f64} : f64
    %1 = arith.constant {value = 0x7FF8000000000001 : f64} : f64
    %2 = arith.constant {value = -0.0 : f64} : f64
    %3 = arith.constant {value = 3.4028235e38 : f32} : f32
    func.return %0
  }
}
"#;
        let once = print_module(&parse_module(src).unwrap());
        let twice = print_module(&parse_module(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.contains("0x7FF8000000000001 : f64"));
        assert!(once.contains("-0.0 : f64"));
    }

    #[test]
    fn round_trip_with_regions() {
        let src = r#"module {
  func.func @sum(%n: index) -> i32 {
    %z = arith.constant {value = 0} : index
    %one = arith.constant {value = 1} : index
    %init = arith.constant {value = 0} : i32
    %r = scf.for %z, %n, %one, %init ({
    ^body(%i: index, %acc: i32):
      %iv = arith.index_cast %i : i32
      %next = arith.addi %acc, %iv : i32
      scf.yield %next
    }) : i32
    func.return %r
  }
}
"#;
        let m = parse_module(src).unwrap();
        let once = print_module(&m);
        assert_eq!(print_module(&parse_module(&once).unwrap()), once);
        assert!(once.contains("^body(%5: index, %6: i32):"), "{once}");
    }

    #[test]
    fn unknown_op_is_diagnosed() {
        let diags = parse_module("module {\n  func.func @f() {\n    arith.bogus\n  }\n}").unwrap_err();
        assert_eq!(diags[0].rule, Rule::UnknownOp);
    }
}
