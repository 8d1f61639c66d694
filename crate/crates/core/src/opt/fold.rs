use std::collections::HashMap;

use crate::ir::{Attrs, IrModule, OpKind, Region, ValueId, ValueTable};
use crate::num::{eval, ssawasm_op, NumOp, NumType, Value};

/// Replaces ops whose operands are all literal constants with a constant.
/// Trapping and NaN-producing evaluations are left for run time.
pub fn fold_constants(mut m: IrModule) -> IrModule {
    for f in m.functions.iter_mut() {
        let Some(body) = f.body.as_mut() else { continue };
        let mut consts = HashMap::new();
        fold_region(body, &f.values, &mut consts);
    }
    m
}

fn const_value(vt: &ValueTable, op: &crate::ir::Operation) -> Option<Value> {
    let ty = NumType::from_type(vt.ty(op.results[0]))?;
    Value::from_attr(op.attrs.get("value")?, ty)
}

fn fold_region(region: &mut Region, vt: &ValueTable, consts: &mut HashMap<ValueId, Value>) {
    for block in region.blocks.iter_mut() {
        for op in block.ops.iter_mut() {
            for r in op.regions.iter_mut() {
                fold_region(r, vt, consts);
            }
            if op.kind == OpKind::SsaConst {
                if let Some(v) = const_value(vt, op) {
                    consts.insert(op.results[0], v);
                }
                continue;
            }
            let args: Option<Vec<Value>> = op.operands.iter().map(|v| consts.get(v).cloned()).collect();
            let Some(args) = args else { continue };
            if op.results.len() != 1 || args.is_empty() {
                continue;
            }
            let Some(to) = NumType::from_type(vt.ty(op.results[0])) else { continue };
            let folded = match op.kind {
                OpKind::SsaCastMemrefToI32 | OpKind::SsaCastI32ToMemref => Some(args[0].clone()),
                k => match ssawasm_op(k) {
                    Some(NumOp::Select) => Some(crate::num::select(args[0].clone(), args[1].clone(), &args[2])),
                    Some(nop) => eval(nop, to, &args).ok(),
                    None => None,
                },
            };
            let Some(v) = folded else { continue };
            if v.is_nan() {
                continue;
            }
            op.kind = OpKind::SsaConst;
            op.operands.clear();
            op.attrs = Attrs::new().with("value", v.to_attr());
            consts.insert(op.results[0], v);
        }
    }
}
