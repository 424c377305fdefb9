use std::collections::BTreeSet;

use crate::frontend::visit::walk_block_exprs;
use crate::frontend::{ContractKind, Expr, ExprKind, SourceUnit};

use super::{bodies, hierarchy, Finding, FindingBuilder, PatternKind};

const LOW_LEVEL: [&str; 5] = ["call", "send", "transfer", "delegatecall", "staticcall"];
const NON_EXTERNAL_BASES: [&str; 8] = ["this", "super", "abi", "bytes", "string", "msg", "block", "tx"];
const ARRAY_MEMBERS: [&str; 2] = ["push", "pop"];

/// Member calls that leave the contract, when reached from a loop body.
///
/// Internal calls, calls on in-file libraries (directly or through
/// `using ... for`), and array `push`/`pop` are excluded.
pub fn detect_external_call_in_loop(unit: &SourceUnit) -> Vec<Finding> {
    let libraries: BTreeSet<&str> = unit
        .contracts
        .iter()
        .filter(|c| c.kind == ContractKind::Library)
        .map(|c| c.name.as_str())
        .collect();
    let mut out = Vec::new();
    for body in bodies(unit) {
        let b = FindingBuilder { unit, contract: &body.contract.name, function: body.name };
        let lineage = hierarchy(unit, body.contract);
        let ancestors: BTreeSet<&str> = lineage.iter().map(|c| c.name.as_str()).collect();
        let attached: BTreeSet<&str> = lineage
            .iter()
            .flat_map(|c| c.using_for.iter())
            .filter_map(|lib| unit.contract(lib))
            .flat_map(|lib| lib.functions.iter().map(|f| f.name.as_str()))
            .collect();
        walk_block_exprs(body.block, &mut |expr, _, ctx| {
            if !ctx.in_loop() {
                return;
            }
            let Some((target, _)) = expr.call_target() else { return };
            let ExprKind::Member { base, member } = &target.kind else { return };
            let external = if LOW_LEVEL.contains(&member.as_str()) {
                true
            } else {
                !(ARRAY_MEMBERS.contains(&member.as_str())
                    || attached.contains(member.as_str())
                    || is_local_base(base, &libraries, &ancestors))
            };
            if external {
                out.push(b.at(
                    PatternKind::ExternalCallInLoop,
                    None,
                    expr.span,
                    format!("external call `.{member}` inside a loop in {}", body.name),
                ));
            }
        });
    }
    out
}

fn is_local_base(base: &Expr, libraries: &BTreeSet<&str>, ancestors: &BTreeSet<&str>) -> bool {
    match &base.kind {
        ExprKind::Identifier(name) => {
            NON_EXTERNAL_BASES.contains(&name.as_str())
                || libraries.contains(name.as_str())
                || ancestors.contains(name.as_str())
        }
        ExprKind::Global(_) | ExprKind::ElementaryType(_) => true,
        // `type(C).interfaceId`, `abi.encode(...).length` and similar
        ExprKind::Call { callee, .. } => callee.as_identifier() == Some("type"),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn run(src: &str) -> Vec<Finding> {
        detect_external_call_in_loop(&parse(src, "t.sol").unwrap())
    }

    #[test]
    fn transfer_in_for_loop() {
        let f = run("contract D { function airdrop(address[] calldata to) external {
            for (uint i = 0; i < to.length; i++) { payable(to[i]).transfer(1 ether); } } }");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].function_name, "airdrop");
        assert_eq!(f[0].evidence, "payable(to[i]).transfer(1 ether)");
    }

    #[test]
    fn interface_calls_in_nested_loops_each_reported() {
        let f = run("interface IERC721 { function transferFrom(address a, address b, uint256 c) external; }
            contract D { IERC721 nft; function f(address[] memory a) public {
              uint i; while (i < a.length) { for (uint j; j < 2; j++) { nft.transferFrom(address(this), a[i], j); } i++; }
              do { nft.transferFrom(address(this), a[0], 0); } while (false);
            } }");
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn internal_and_library_calls_ignored() {
        let src = "library SafeMath { function add(uint a, uint b) internal pure returns (uint) { return a + b; } }
            library Util { function twice(uint a) internal pure returns (uint) { return a * 2; } }
            contract B { function hook(uint) internal virtual {} }
            contract D is B { using SafeMath for uint256; uint[] xs;
              function f() public { for (uint i; i < 3; i++) {
                  uint t = i.add(1); t = Util.twice(t); xs.push(t); hook(t); B.hook(t); this.g();
                  bytes memory e = abi.encodePacked(t); e; super.hook(t);
              } }
              function g() public {} }";
        assert!(run(src).is_empty(), "{:?}", run(src));
    }

    #[test]
    fn calls_outside_loops_ignored() {
        let src = "contract D { function f(address payable a) public {
            a.transfer(1); for (uint i = a.balance; i < 1; i++) {} } }";
        assert!(run(src).is_empty());
    }

    #[test]
    fn low_level_call_with_options() {
        let f = run("contract D { function f(address[] memory a) public {
            for (uint i; i < a.length; i++) { (bool ok, ) = a[i].call{value: 1}(\"\"); require(ok); } } }");
        assert_eq!(f.len(), 1);
    }
}
