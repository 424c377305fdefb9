use crate::frontend::visit::{walk_block, walk_block_exprs, StmtContext};
use crate::frontend::{ExprKind, SourceUnit, StmtKind};

use super::{bodies, line_excerpt, Finding, FindingBuilder, PatternKind, SubKind};

const BUILTINS: [&str; 2] = ["selfdestruct", "suicide"];

/// Calls to `selfdestruct`/`suicide` and the opcode inside inline assembly.
pub fn detect_selfdestruct(unit: &SourceUnit) -> Vec<Finding> {
    let mut out = Vec::new();
    for body in bodies(unit) {
        let b = FindingBuilder { unit, contract: &body.contract.name, function: body.name };
        walk_block_exprs(body.block, &mut |expr, _, _| {
            let ExprKind::Call { callee, .. } = &expr.kind else { return };
            if let Some(name) = callee.as_identifier().filter(|n| BUILTINS.contains(n)) {
                out.push(b.at(
                    PatternKind::SelfDestruct,
                    Some(SubKind::Direct),
                    expr.span,
                    format!("`{name}` in {} can destroy the contract and sweep its balance", body.name),
                ));
            }
        });
        walk_block(body.block, StmtContext::default(), &mut |stmt, _| {
            let StmtKind::Assembly(asm) = &stmt.kind else { return };
            if let Some(first) = asm.selfdestruct_at.first() {
                let mut f = b.at(
                    PatternKind::SelfDestruct,
                    Some(SubKind::Assembly),
                    stmt.span,
                    format!("inline assembly in {} executes selfdestruct", body.name),
                );
                f.evidence = line_excerpt(unit, first.start);
                out.push(f);
            }
        });
    }
    out
}
