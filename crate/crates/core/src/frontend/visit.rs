//! Statement traversal with loop context.

use super::ast::{Block, Expr, Stmt, StmtKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StmtContext {
    /// Number of enclosing loop bodies.
    pub loop_depth: usize,
}

impl StmtContext {
    pub fn in_loop(&self) -> bool {
        self.loop_depth > 0
    }

    fn enter_loop(self) -> Self {
        Self { loop_depth: self.loop_depth + 1 }
    }
}

impl Stmt {
    /// Expressions owned directly by this statement, excluding those of
    /// nested statements.
    pub fn own_expressions(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Expression(e) | StmtKind::Emit(e) => vec![e],
            StmtKind::VariableDecl { value, .. } => value.iter().collect(),
            StmtKind::If { condition, .. } => vec![condition],
            StmtKind::For { condition, update, .. } => condition.iter().chain(update.iter()).collect(),
            StmtKind::While { condition, .. } | StmtKind::DoWhile { condition, .. } => vec![condition],
            StmtKind::Return(value) => value.iter().collect(),
            StmtKind::Guard { args, .. } => args.iter().collect(),
            StmtKind::Unchecked(_)
            | StmtKind::Block(_)
            | StmtKind::Placeholder
            | StmtKind::Break
            | StmtKind::Continue
            | StmtKind::Assembly(_)
            | StmtKind::Opaque => Vec::new(),
        }
    }
}

/// Visits every statement of `block` in pre-order. Statements inside a loop
/// body are reported with `loop_depth` incremented; `for` initialisers,
/// conditions and updates keep the enclosing context.
pub fn walk_block<'a>(block: &'a Block, ctx: StmtContext, f: &mut impl FnMut(&'a Stmt, StmtContext)) {
    for stmt in &block.statements {
        walk_stmt(stmt, ctx, f);
    }
}

pub fn walk_stmt<'a>(stmt: &'a Stmt, ctx: StmtContext, f: &mut impl FnMut(&'a Stmt, StmtContext)) {
    f(stmt, ctx);
    match &stmt.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            walk_stmt(then_branch, ctx, f);
            if let Some(e) = else_branch {
                walk_stmt(e, ctx, f);
            }
        }
        StmtKind::For { init, body, .. } => {
            if let Some(init) = init {
                walk_stmt(init, ctx, f);
            }
            walk_block(body, ctx.enter_loop(), f);
        }
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => walk_block(body, ctx.enter_loop(), f),
        StmtKind::Unchecked(b) | StmtKind::Block(b) => walk_block(b, ctx, f),
        _ => {}
    }
}

/// Every expression in `block` (including sub-expressions) with the context
/// of the statement that owns it.
pub fn walk_block_exprs<'a>(block: &'a Block, f: &mut impl FnMut(&'a Expr, &'a Stmt, StmtContext)) {
    walk_block(block, StmtContext::default(), &mut |stmt, ctx| {
        for root in stmt.own_expressions() {
            root.walk(&mut |e| f(e, stmt, ctx));
        }
    });
}
