use std::collections::HashMap;

use crate::ir::{Dominators, IrModule, OpKind, Region, Type, ValueId};
use crate::text::format_attr;

/// Opcode, operands (after substitution), attributes and result types.
type ExprKey = (OpKind, Vec<ValueId>, String, Vec<Type>);

/// Removes pure ops recomputing a value already available from a dominating
/// op in the same region. Nested regions start with an empty table.
pub fn cse(mut m: IrModule) -> IrModule {
    for f in m.functions.iter_mut() {
        let Some(body) = f.body.as_mut() else { continue };
        let mut subst = HashMap::new();
        cse_region(body, &f.values, &mut subst);
    }
    m
}

fn cse_region(region: &mut Region, vt: &crate::ir::ValueTable, subst: &mut HashMap<ValueId, ValueId>) {
    let dom = Dominators::compute(region);
    let mut tables: Vec<HashMap<ExprKey, Vec<ValueId>>> = Vec::with_capacity(region.blocks.len());
    for bi in 0..region.blocks.len() {
        let mut avail: HashMap<ExprKey, Vec<ValueId>> = HashMap::new();
        for d in dom.dominators_of(bi) {
            if d < tables.len() {
                for (k, v) in &tables[d] {
                    avail.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
        }
        let mut own = HashMap::new();
        let block = &mut region.blocks[bi];
        let ops = std::mem::take(&mut block.ops);
        for mut op in ops {
            for v in op.operands.iter_mut() {
                if let Some(&n) = subst.get(v) {
                    *v = n;
                }
            }
            for r in op.regions.iter_mut() {
                cse_region(r, vt, subst);
            }
            if op.kind.is_pure() && op.regions.is_empty() && !op.results.is_empty() && op.successors.is_empty() {
                let attrs: Vec<String> = op.attrs.iter().map(|(k, a)| format!("{k}={}", format_attr(a))).collect();
                let key = (op.kind, op.operands.clone(), attrs.join(","), vt.types_of(&op.results));
                if let Some(prev) = avail.get(&key).or_else(|| own.get(&key)) {
                    for (&r, &p) in op.results.iter().zip(prev.iter()) {
                        subst.insert(r, p);
                    }
                    continue;
                }
                own.insert(key, op.results.clone());
            }
            block.ops.push(op);
        }
        tables.push(own);
    }
    // Blocks laid out before a dominating block still need their operands rewritten.
    crate::ir::substitute_region(region, subst);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse_module, print_module};

    fn run(src: &str) -> (String, String) {
        let m = parse_module(src).unwrap();
        let before = print_module(&m);
        let out = cse(m);
        assert!(crate::ir::verify_module(&out).is_empty());
        (before, print_module(&out))
    }

    #[test]
    fn duplicate_address_chain_collapses() {
        let src = "module attributes {level = \"ssawasm\"} {\n  ssawasm.func @f(%a: local<i32>) -> i32 {\n    %i = ssawasm.local_get %a : i32\n    %c = ssawasm.const {value = 10} : i32\n    %m = ssawasm.mul %i, %c : i32\n    %c2 = ssawasm.const {value = 10} : i32\n    %m2 = ssawasm.mul %i, %c2 : i32\n    %s = ssawasm.add %m, %m2 : i32\n    ssawasm.return %s\n  }\n}";
        let (before, after) = run(src);
        assert_eq!(before.matches("ssawasm.mul").count(), 2);
        assert_eq!(after.matches("ssawasm.mul").count(), 1, "{after}");
        assert_eq!(after.matches("ssawasm.const").count(), 1, "{after}");
        assert!(after.contains("ssawasm.add %3, %3"), "{after}");
    }

    #[test]
    fn no_duplicates_is_identity() {
        let src = "module attributes {level = \"ssawasm\"} {\n  ssawasm.func @f() -> i32 {\n    %c = ssawasm.const {value = 1} : i32\n    ssawasm.return %c\n  }\n}";
        let (before, after) = run(src);
        assert_eq!(before, after);
    }

    #[test]
    fn sibling_regions_are_not_merged() {
        let src = "module attributes {level = \"ssawasm\"} {\n  ssawasm.func @f(%p: local<i32>) {\n    %x = ssawasm.local_get %p : i32\n    ssawasm.if %x ({\n    ^then:\n      %a = ssawasm.const {value = 7} : i32\n      ssawasm.drop %a\n    }, {\n    ^else:\n      %b = ssawasm.const {value = 7} : i32\n      ssawasm.drop %b\n    })\n    ssawasm.return\n  }\n}";
        let (before, after) = run(src);
        assert_eq!(before, after);
    }

    #[test]
    fn loads_are_not_merged() {
        let src = "module attributes {level = \"ssawasm\"} {\n  ssawasm.func @f() -> i32 {\n    %c = ssawasm.const {value = 1024} : i32\n    %a = ssawasm.load %c {offset = 0} : i32\n    %b = ssawasm.load %c {offset = 0} : i32\n    %s = ssawasm.add %a, %b : i32\n    ssawasm.return %s\n  }\n}";
        let (_, after) = run(src);
        assert_eq!(after.matches("ssawasm.load").count(), 2);
    }
}
