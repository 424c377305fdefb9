use std::collections::BTreeSet;

use crate::frontend::visit::{walk_block, StmtContext};
use crate::frontend::{BinaryOp, Block, ContractDef, Expr, ExprKind, FunctionDef, FunctionRole, Global, LiteralKind, Mutability, SourceUnit, StmtKind};

use super::{excerpt, hierarchy, Finding, PatternKind, SubKind};

/// Externally callable `mint`/`withdraw` functions guarded by a single
/// privileged account, or by nothing at all.
///
/// Functions behind a whitelist, a merkle or signature proof, or more than
/// one role are treated as multi-party and not reported.
pub fn detect_privileged_mint_withdraw(unit: &SourceUnit, owner_modifiers: &[String]) -> Vec<Finding> {
    let mut out = Vec::new();
    for contract in &unit.contracts {
        let lineage = hierarchy(unit, contract);
        for f in &contract.functions {
            if !is_candidate(f) {
                continue;
            }
            let guards = collect_guards(f, &lineage, owner_modifiers);
            if guards.multi_party() {
                continue;
            }
            let (sub_kind, description) = if guards.owner {
                (SubKind::OwnerOnly, format!("{} is callable only by a single privileged account", f.name))
            } else {
                (SubKind::Unrestricted, format!("{} is externally callable without any access control", f.name))
            };
            let body_start = f.body.as_ref().map_or(f.span.end, |b| b.span.start);
            let header = crate::frontend::Span::new(f.span.start, body_start);
            out.push(Finding {
                pattern: PatternKind::PrivilegedMintWithdraw,
                sub_kind: Some(sub_kind),
                contract_name: contract.name.clone(),
                function_name: f.name.clone(),
                span: f.lines,
                description,
                evidence: excerpt(unit, header),
                location: f.span,
            });
        }
    }
    out
}

fn is_candidate(f: &FunctionDef) -> bool {
    if f.role != FunctionRole::Function || f.body.is_none() || !f.visibility.is_externally_callable() {
        return false;
    }
    // read-only functions cannot move tokens or funds
    if matches!(f.mutability, Mutability::View | Mutability::Pure) {
        return false;
    }
    let lower = f.name.to_ascii_lowercase();
    lower.contains("mint") || lower.contains("withdraw")
}

#[derive(Default)]
struct Guards {
    owner: bool,
    membership: bool,
    proof: bool,
    roles: BTreeSet<String>,
}

impl Guards {
    fn multi_party(&self) -> bool {
        self.membership || self.proof || self.roles.len() >= 2
    }

    fn absorb(&mut self, other: Guards) {
        self.owner |= other.owner;
        self.membership |= other.membership;
        self.proof |= other.proof;
        self.roles.extend(other.roles);
    }
}

fn collect_guards(f: &FunctionDef, lineage: &[&ContractDef], owner_modifiers: &[String]) -> Guards {
    let mut g = Guards::default();
    for inv in &f.modifiers_invoked {
        if owner_modifiers.iter().any(|m| m == &inv.name) {
            g.owner = true;
            if inv.name == "onlyRole" {
                g.roles.extend(inv.args.iter().map(role_key));
            }
            continue;
        }
        if let Some(body) = lineage.iter().find_map(|c| c.modifier(&inv.name)).and_then(|m| m.body.as_ref()) {
            g.absorb(block_guards(body, lineage));
        }
    }
    if let Some(body) = &f.body {
        g.absorb(block_guards(body, lineage));
    }
    if g.roles.len() == 1 {
        g.owner = true;
    }
    g
}

fn block_guards(block: &Block, lineage: &[&ContractDef]) -> Guards {
    let mut g = Guards::default();
    walk_block(block, StmtContext::default(), &mut |stmt, _| {
        let condition = match &stmt.kind {
            StmtKind::Guard { args, .. } => args.first(),
            StmtKind::If { condition, .. } => Some(condition),
            _ => None,
        };
        if let Some(cond) = condition {
            inspect_condition(cond, lineage, &mut g);
        }
    });
    g
}

fn inspect_condition(cond: &Expr, lineage: &[&ContractDef], g: &mut Guards) {
    if is_membership_check(cond) {
        g.membership = true;
    }
    cond.walk(&mut |e| match &e.kind {
        ExprKind::Binary { op, lhs, rhs } if op.is_equality() => {
            if (is_sender(lhs) && is_owner_ref(rhs, lineage)) || (is_sender(rhs) && is_owner_ref(lhs, lineage)) {
                g.owner = true;
            }
        }
        ExprKind::Call { callee, args } => {
            let name = callee_name(callee).unwrap_or_default();
            let lower = name.to_ascii_lowercase();
            if lower.contains("verify") || lower == "ecrecover" || lower == "isvalidsignaturenow" {
                g.proof = true;
            } else if name == "hasRole" && args.len() == 2 {
                g.roles.insert(role_key(&args[0]));
            }
        }
        _ => {}
    });
}

/// `list[msg.sender]` used as a boolean, possibly combined with `&&`/`||`.
fn is_membership_check(cond: &Expr) -> bool {
    match &cond.kind {
        ExprKind::Index { index: Some(idx), .. } => is_sender(idx),
        ExprKind::Binary { op: BinaryOp::And | BinaryOp::Or, lhs, rhs } => {
            is_membership_check(lhs) || is_membership_check(rhs)
        }
        ExprKind::Binary { op: BinaryOp::Eq, lhs, rhs } => {
            let is_true = |e: &Expr| matches!(&e.kind, ExprKind::Literal { kind: LiteralKind::Bool, text } if text == "true");
            (is_true(rhs) && is_membership_check(lhs)) || (is_true(lhs) && is_membership_check(rhs))
        }
        _ => false,
    }
}

fn is_sender(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Global(Global::MsgSender) => true,
        ExprKind::Call { callee, args } => args.is_empty() && callee.as_identifier() == Some("_msgSender"),
        ExprKind::TypeCast { arg, .. } => is_sender(arg),
        _ => false,
    }
}

/// A stored account: a state variable or a zero-argument getter such as `owner()`.
fn is_owner_ref(e: &Expr, lineage: &[&ContractDef]) -> bool {
    match &e.kind {
        ExprKind::Identifier(name) => lineage.iter().any(|c| c.state_variable(name).is_some()),
        ExprKind::Call { callee, args } => args.is_empty() && callee.as_identifier().is_some(),
        ExprKind::TypeCast { arg, .. } => is_owner_ref(arg, lineage),
        _ => false,
    }
}

fn callee_name(callee: &Expr) -> Option<&str> {
    match &callee.kind {
        ExprKind::Identifier(n) => Some(n),
        ExprKind::Member { member, .. } => Some(member),
        _ => None,
    }
}

fn role_key(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Identifier(n) => n.clone(),
        ExprKind::Member { member, .. } => member.clone(),
        _ => format!("{:?}", e.kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn run(src: &str) -> Vec<Finding> {
        let owners = vec!["onlyOwner".to_string(), "onlyRole".to_string(), "onlyAdmin".to_string()];
        detect_privileged_mint_withdraw(&parse(src, "t.sol").unwrap(), &owners)
    }

    #[test]
    fn unrestricted_mint() {
        let f = run("contract D { uint256 n; function mint(address to) external { n++; } }");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].sub_kind, Some(SubKind::Unrestricted));
        assert_eq!(f[0].evidence, "function mint(address to) external");
    }

    #[test]
    fn owner_modifier_and_custom_modifier() {
        let f = run("contract D { function withdraw() external onlyOwner { payable(msg.sender).transfer(address(this).balance); } }");
        assert_eq!(f[0].sub_kind, Some(SubKind::OwnerOnly));
        let custom = run("contract D { address dev;
            modifier onlyDev() { require(msg.sender == dev, \"no\"); _; }
            function withdrawAll() public onlyDev {} }");
        assert_eq!(custom[0].sub_kind, Some(SubKind::OwnerOnly));
        let inline = run("contract D { function ownerMint() public { require(owner() == _msgSender()); } function owner() public view returns (address) {} }");
        assert_eq!(inline[0].sub_kind, Some(SubKind::OwnerOnly));
    }

    #[test]
    fn multi_party_guards_suppress() {
        let whitelist = "contract D { mapping(address => bool) whitelist; uint total;
            function mint() external { require(whitelist[msg.sender], \"not listed\"); require(total < 100); total++; } }";
        assert!(run(whitelist).is_empty());
        let merkle = "contract D { bytes32 root; function presaleMint(bytes32[] calldata p) external {
            require(MerkleProof.verify(p, root, keccak256(abi.encodePacked(msg.sender)))); } }";
        assert!(run(merkle).is_empty());
        let roles = "contract D { function mint() external {
            require(hasRole(MINTER, msg.sender) || hasRole(ADMIN, msg.sender)); } }";
        assert!(run(roles).is_empty());
        let single_role = "contract D { function mint() external onlyRole(MINTER_ROLE) {} }";
        assert_eq!(run(single_role)[0].sub_kind, Some(SubKind::OwnerOnly));
    }

    #[test]
    fn per_wallet_cap_is_not_a_whitelist() {
        let f = run("contract D { mapping(address => uint) minted;
            function publicMint() external { require(minted[msg.sender] < 3); minted[msg.sender]++; } }");
        assert_eq!(f[0].sub_kind, Some(SubKind::Unrestricted));
    }

    #[test]
    fn internal_and_unrelated_functions_ignored() {
        let src = "contract D { function _mint(address a) internal {} function transfer() external {}
            function mintPrice() external view returns (uint) { return 1; } }";
        assert!(run(src).is_empty());
    }
}
