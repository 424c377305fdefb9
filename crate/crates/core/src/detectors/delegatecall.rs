use crate::frontend::visit::{walk_block, walk_block_exprs, StmtContext};
use crate::frontend::{ContractDef, Expr, ExprKind, SourceUnit, StmtKind, VariableMutability};

use super::{bodies, hierarchy, line_excerpt, Finding, FindingBuilder, PatternKind, SubKind};

/// `.delegatecall(...)` on any address expression and the opcode in inline
/// assembly. The target is constant only when it names a `constant` state
/// variable of the contract or an in-file ancestor.
pub fn detect_delegatecall(unit: &SourceUnit) -> Vec<Finding> {
    let mut out = Vec::new();
    for body in bodies(unit) {
        let b = FindingBuilder { unit, contract: &body.contract.name, function: body.name };
        let lineage = hierarchy(unit, body.contract);
        walk_block_exprs(body.block, &mut |expr, _, _| {
            let Some((target, _)) = expr.call_target() else { return };
            let ExprKind::Member { base, member } = &target.kind else { return };
            if member != "delegatecall" {
                return;
            }
            let (sub_kind, description) = if is_constant_target(base, &lineage) {
                (SubKind::ConstantTarget, format!("{} delegates to a hard-coded implementation", body.name))
            } else {
                (SubKind::ExternalTarget, format!("{} delegates execution to a mutable or caller-chosen address", body.name))
            };
            out.push(b.at(PatternKind::DelegateCall, Some(sub_kind), expr.span, description));
        });
        walk_block(body.block, StmtContext::default(), &mut |stmt, _| {
            let StmtKind::Assembly(asm) = &stmt.kind else { return };
            if let Some(first) = asm.delegatecall_at.first() {
                let mut f = b.at(
                    PatternKind::DelegateCall,
                    Some(SubKind::Assembly),
                    stmt.span,
                    format!("inline assembly in {} executes delegatecall", body.name),
                );
                f.evidence = line_excerpt(unit, first.start);
                out.push(f);
            }
        });
    }
    out
}

fn is_constant_target(base: &Expr, lineage: &[&ContractDef]) -> bool {
    let mut e = base;
    while let ExprKind::TypeCast { arg, .. } = &e.kind {
        e = arg;
    }
    let Some(name) = e.as_identifier() else { return false };
    lineage
        .iter()
        .find_map(|c| c.state_variable(name))
        .is_some_and(|v| v.mutability == VariableMutability::Constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn run(src: &str) -> Vec<Finding> {
        detect_delegatecall(&parse(src, "t.sol").unwrap())
    }

    #[test]
    fn external_target() {
        let f = run("contract P { address impl;
            function exec(bytes calldata d) external { (bool ok, ) = impl.delegatecall(d); require(ok); } }");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].sub_kind, Some(SubKind::ExternalTarget));
        assert_eq!(f[0].evidence, "impl.delegatecall(d)");
    }

    #[test]
    fn constant_target_through_cast() {
        let f = run("contract P { address constant IMPL = address(0x1234);
            function exec(bytes memory d) public { address(IMPL).delegatecall(d); } }");
        assert_eq!(f[0].sub_kind, Some(SubKind::ConstantTarget));
        let inherited = run("contract B { address constant IMPL = address(1); }
            contract P is B { function exec(bytes memory d) public { IMPL.delegatecall(d); } }");
        assert_eq!(inherited[0].sub_kind, Some(SubKind::ConstantTarget));
    }

    #[test]
    fn call_options_and_assembly() {
        let f = run("contract P { function f(address t) external { t.delegatecall{gas: 5000}(\"\"); } }");
        assert_eq!(f.len(), 1);
        let a = run("contract P { fallback() external payable { assembly {
            let r := delegatecall(gas(), sload(0), 0, calldatasize(), 0, 0) } } }");
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].sub_kind, Some(SubKind::Assembly));
        assert_eq!(a[0].function_name, "fallback");
    }

    #[test]
    fn plain_call_and_names_ignored() {
        let src = "contract P { function delegatecallInfo() external {} bool delegatecalled;
            function f(address t) external { t.call(\"\"); } }";
        assert!(run(src).is_empty());
    }
}
