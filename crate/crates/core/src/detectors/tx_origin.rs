use std::collections::BTreeSet;

use crate::frontend::visit::{walk_block, StmtContext};
use crate::frontend::{Expr, ExprKind, GuardKind, Global, SourceUnit, Span, StmtKind};

use super::{bodies, Finding, FindingBuilder, PatternKind};

/// `tx.origin` used for authorization: inside a `require`/`assert` or `if`
/// condition, compared with `==`/`!=`, or anywhere in a modifier body other
/// than an event argument.
pub fn detect_tx_origin_auth(unit: &SourceUnit) -> Vec<Finding> {
    let mut out = Vec::new();
    for body in bodies(unit) {
        let b = FindingBuilder { unit, contract: &body.contract.name, function: body.name };
        let mut hits: BTreeSet<Span> = BTreeSet::new();
        walk_block(body.block, StmtContext::default(), &mut |stmt, _| {
            match &stmt.kind {
                StmtKind::Emit(_) => return,
                StmtKind::Guard { kind: GuardKind::Require | GuardKind::Assert, args } => {
                    if let Some(cond) = args.first() {
                        origins(cond, &mut hits);
                    }
                }
                StmtKind::If { condition, .. } => origins(condition, &mut hits),
                _ => {}
            }
            for root in stmt.own_expressions() {
                if body.is_modifier {
                    origins(root, &mut hits);
                    continue;
                }
                root.walk(&mut |e| {
                    if matches!(&e.kind, ExprKind::Binary { op, .. } if op.is_equality()) {
                        origins(e, &mut hits);
                    }
                });
            }
        });
        for span in hits {
            out.push(b.at(
                PatternKind::TxOriginAuth,
                None,
                span,
                format!("{} authorizes with tx.origin, which a malicious intermediary contract can satisfy", body.name),
            ));
        }
    }
    out
}

fn origins(e: &Expr, hits: &mut BTreeSet<Span>) {
    e.walk(&mut |x| {
        if x.is_global(&Global::TxOrigin) {
            hits.insert(x.span);
        }
    });
}
