use std::collections::HashMap;

use super::{refresh_level, resolve_index_types, rewrite_region};
use crate::error::{Error, Result};
use crate::ir::{resolve_chains, substitute_region, IrModule, OpKind, Type};

/// Opcode-for-opcode mapping of `arith` into `ssawasm`; `index` is first
/// rewritten to `i32` module-wide.
pub fn convert_arith(mut m: IrModule) -> Result<IrModule> {
    resolve_index_types(&mut m);
    for f in m.functions.iter_mut() {
        let Some(mut body) = f.body.take() else { continue };
        let mut map = HashMap::new();
        let r = rewrite_region(&mut body, &mut f.values, &mut |mut op, vt, out| {
            if op.kind.dialect() != "arith" {
                out.push(op);
                return Ok(());
            }
            if op.kind == OpKind::ArithIndexCast {
                let (from, to) = (vt.ty(op.operands[0]).clone(), vt.ty(op.results[0]).clone());
                match (from, to) {
                    (a, b) if a == b => {
                        map.insert(op.results[0], op.operands[0]);
                    }
                    (Type::I64, Type::I32) => {
                        op.kind = OpKind::SsaWrap;
                        out.push(op);
                    }
                    (Type::I32, Type::I64) => {
                        op.kind = OpKind::SsaExtendS;
                        out.push(op);
                    }
                    (a, b) => return Err(Error::TypeMismatch(format!("index_cast from {a} to {b}"))),
                }
                return Ok(());
            }
            op.kind = map_opcode(&op)?;
            if op.kind == OpKind::SsaSelect {
                op.operands.rotate_left(1);
            }
            op.attrs.remove("predicate");
            out.push(op);
            Ok(())
        });
        if r.is_ok() && !map.is_empty() {
            resolve_chains(&mut map);
            substitute_region(&mut body, &map);
        }
        f.body = Some(body);
        r?;
    }
    refresh_level(&mut m);
    Ok(m)
}

fn map_opcode(op: &crate::ir::Operation) -> Result<OpKind> {
    use OpKind::*;
    let pred = op.attrs.str("predicate").unwrap_or("");
    Ok(match op.kind {
        ArithConstant => SsaConst,
        ArithAddI | ArithAddF => SsaAdd,
        ArithSubI | ArithSubF => SsaSub,
        ArithMulI | ArithMulF => SsaMul,
        ArithDivSI => SsaDivS,
        ArithDivUI => SsaDivU,
        ArithRemSI => SsaRemS,
        ArithRemUI => SsaRemU,
        ArithAndI => SsaAnd,
        ArithOrI => SsaOr,
        ArithXOrI => SsaXor,
        ArithShLI => SsaShl,
        ArithShRSI => SsaShrS,
        ArithShRUI => SsaShrU,
        ArithDivF => SsaDiv,
        ArithNegF => SsaNeg,
        ArithCmpI => match pred {
            "eq" => SsaEq,
            "ne" => SsaNe,
            "slt" => SsaLtS,
            "sle" => SsaLeS,
            "sgt" => SsaGtS,
            "sge" => SsaGeS,
            "ult" => SsaLtU,
            "ule" => SsaLeU,
            "ugt" => SsaGtU,
            "uge" => SsaGeU,
            p => return Err(Error::UnsupportedArithOp(format!("cmpi {p}"))),
        },
        ArithCmpF => match pred {
            "oeq" => SsaEq,
            "une" => SsaNe,
            "olt" => SsaLt,
            "ole" => SsaLe,
            "ogt" => SsaGt,
            "oge" => SsaGe,
            p => return Err(Error::UnsupportedArithOp(format!("cmpf {p}"))),
        },
        ArithSIToFP => SsaConvertS,
        ArithUIToFP => SsaConvertU,
        ArithFPToSI => SsaTruncS,
        ArithFPToUI => SsaTruncU,
        ArithExtSI => SsaExtendS,
        ArithExtUI => SsaExtendU,
        ArithTruncI => SsaWrap,
        ArithExtF => SsaPromote,
        ArithTruncF => SsaDemote,
        ArithSelect => SsaSelect,
        other => return Err(Error::UnsupportedArithOp(other.name().to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::test_util::{parse, verified};

    #[test]
    fn constant_becomes_ssawasm_const() {
        let m = parse("module {\n  func.func @f() -> i32 {\n    %0 = arith.constant {value = 42} : i32\n    func.return %0\n  }\n}");
        let out = convert_arith(m).unwrap();
        let text = verified(&out);
        assert!(text.contains("%0 = ssawasm.const {value = 42} : i32"), "{text}");
    }

    #[test]
    fn sitofp_maps_to_convert_s() {
        let m = parse("module {\n  func.func @f(%a: i32) -> f64 {\n    %0 = arith.sitofp %a : f64\n    func.return %0\n  }\n}");
        let text = verified(&convert_arith(m).unwrap());
        assert!(text.contains("ssawasm.convert_s %0 : f64"), "{text}");
    }

    #[test]
    fn cmpi_predicate_selects_opcode() {
        let m = parse(
            "module {\n  func.func @f(%a: i32, %b: i32) -> i32 {\n    %0 = arith.cmpi %a, %b {predicate = \"ule\"} : i32\n    %1 = arith.cmpi %a, %b {predicate = \"eq\"} : i32\n    func.return %1\n  }\n}",
        );
        let text = verified(&convert_arith(m).unwrap());
        assert!(text.contains("ssawasm.le_u %0, %1 : i32"), "{text}");
        assert!(text.contains("ssawasm.eq %0, %1 : i32"), "{text}");
        assert!(!text.contains("predicate"));
    }

    #[test]
    fn index_cast_disappears() {
        let m = parse(
            "module {\n  func.func @f(%a: index) -> i32 {\n    %0 = arith.index_cast %a : i32\n    func.return %0\n  }\n}",
        );
        let out = convert_arith(m).unwrap();
        let text = verified(&out);
        assert!(!text.contains("index"), "{text}");
        assert!(text.contains("func.return %0"), "{text}");
    }

    #[test]
    fn ceildivsi_is_unsupported() {
        let m = parse("module {\n  func.func @f(%a: i32) -> i32 {\n    %0 = arith.ceildivsi %a, %a : i32\n    func.return %0\n  }\n}");
        assert!(matches!(convert_arith(m), Err(Error::UnsupportedArithOp(n)) if n == "ceildivsi"));
    }
}
