//! Syntax tree for the Solidity subset the analyses need.

use serde::Serialize;

use super::version::VersionRange;

/// Byte range into the source file, `start..end`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Inclusive 1-based line range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn contains(&self, other: LineSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// One parsed `.sol` file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceUnit {
    pub file_path: String,
    pub source: String,
    pub pragmas: Vec<PragmaDirective>,
    pub imports: Vec<ImportDirective>,
    pub contracts: Vec<ContractDef>,
    /// Contents of every string literal outside pragma and import directives.
    pub string_literals: Vec<String>,
    /// Statements inside function bodies that degraded to [`StmtKind::Opaque`]
    /// or [`StmtKind::Assembly`].
    pub opaque_statements: usize,
    pub(crate) line_starts: Vec<usize>,
}

impl SourceUnit {
    /// 1-based line containing byte `offset`.
    pub fn line_of(&self, offset: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= offset)
    }

    pub fn lines(&self, span: Span) -> LineSpan {
        let end = if span.end > span.start { span.end - 1 } else { span.start };
        LineSpan { start: self.line_of(span.start), end: self.line_of(end) }
    }

    pub fn text(&self, span: Span) -> &str {
        &self.source[span.start..span.end]
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// Byte range of the given inclusive line range.
    pub fn line_range_text(&self, lines: LineSpan) -> &str {
        let start = self.line_starts[lines.start.saturating_sub(1).min(self.line_starts.len() - 1)];
        let end = self.line_starts.get(lines.end).copied().unwrap_or(self.source.len());
        &self.source[start..end]
    }

    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn solidity_pragmas(&self) -> impl Iterator<Item = &PragmaDirective> {
        self.pragmas.iter().filter(|p| p.kind == PragmaKind::Solidity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PragmaKind {
    Solidity,
    Experimental,
    Abicoder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PragmaDirective {
    pub kind: PragmaKind,
    pub constraint_text: String,
    /// Present only for `pragma solidity`.
    pub version_range: Option<VersionRange>,
    pub is_exact_pin: bool,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImportDirective {
    pub path: String,
    pub is_relative: bool,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    Contract,
    AbstractContract,
    Interface,
    Library,
}

impl ContractKind {
    /// Deployable unit: a contract that is neither abstract nor an interface.
    pub fn is_concrete(self) -> bool {
        matches!(self, ContractKind::Contract | ContractKind::Library)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractDef {
    pub name: String,
    pub kind: ContractKind,
    /// Inherited base names in declaration order.
    pub bases: Vec<String>,
    pub functions: Vec<FunctionDef>,
    pub modifiers: Vec<ModifierDef>,
    pub state_variables: Vec<StateVariable>,
    /// Library names attached with `using L for T`.
    pub using_for: Vec<String>,
    pub span: Span,
    pub lines: LineSpan,
}

impl ContractDef {
    pub fn state_variable(&self, name: &str) -> Option<&StateVariable> {
        self.state_variables.iter().find(|v| v.name == name)
    }

    pub fn modifier(&self, name: &str) -> Option<&ModifierDef> {
        self.modifiers.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
    /// No visibility keyword. Resolved to `Public` for pre-0.5 files.
    Default,
}

impl Visibility {
    pub fn is_externally_callable(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External | Visibility::Default)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutability {
    Payable,
    View,
    Pure,
    Nonpayable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableMutability {
    Mutable,
    Constant,
    Immutable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVariable {
    pub name: String,
    pub type_text: String,
    pub visibility: Visibility,
    pub mutability: VariableMutability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionRole {
    Function,
    Constructor,
    Fallback,
    Receive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModifierInvocation {
    pub name: String,
    /// Raw argument text between the parentheses, if any.
    pub arguments: Option<String>,
    pub args: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    /// Empty for constructors, fallback and receive functions.
    pub name: String,
    pub role: FunctionRole,
    /// Declared parameter types, without data location or names.
    pub parameters: Vec<String>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub modifiers_invoked: Vec<ModifierInvocation>,
    pub body: Option<Block>,
    pub span: Span,
    pub lines: LineSpan,
    pub canonical_signature: String,
}

impl FunctionDef {
    /// Name for reports: the identifier, or the role keyword when unnamed.
    pub fn display_name(&self) -> &str {
        match self.role {
            FunctionRole::Function => &self.name,
            FunctionRole::Constructor if !self.name.is_empty() => &self.name,
            FunctionRole::Constructor => "constructor",
            FunctionRole::Fallback => "fallback",
            FunctionRole::Receive => "receive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModifierDef {
    pub name: String,
    pub parameters: Vec<String>,
    pub body: Option<Block>,
    pub span: Span,
    pub lines: LineSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub statements: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardKind {
    Require,
    Assert,
    /// `revert(...)`, `revert Err(...)`, or legacy `throw`.
    Revert,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Expression(Expr),
    VariableDecl { names: Vec<Option<String>>, value: Option<Expr> },
    If { condition: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    For { init: Option<Box<Stmt>>, condition: Option<Expr>, update: Option<Expr>, body: Block },
    While { condition: Expr, body: Block },
    DoWhile { body: Block, condition: Expr },
    Return(Option<Expr>),
    Emit(Expr),
    Guard { kind: GuardKind, args: Vec<Expr> },
    Unchecked(Block),
    Block(Block),
    /// `_;` inside a modifier.
    Placeholder,
    Break,
    Continue,
    Assembly(AssemblyBlock),
    /// Construct the parser does not model (try/catch, unparseable text).
    Opaque,
}

/// Inline assembly, kept as text plus the positions of dangerous opcodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssemblyBlock {
    pub selfdestruct_at: Vec<Span>,
    pub delegatecall_at: Vec<Span>,
}

impl AssemblyBlock {
    pub fn contains_selfdestruct(&self) -> bool {
        !self.selfdestruct_at.is_empty()
    }

    pub fn contains_delegatecall(&self) -> bool {
        !self.delegatecall_at.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    BitOr,
    BitXor,
    BitAnd,
    Shl,
    Shr,
    Sar,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

impl BinaryOp {
    pub fn is_equality(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    BitNot,
    Neg,
    Plus,
    Inc,
    Dec,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralKind {
    Number,
    String,
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Global {
    MsgSender,
    MsgValue,
    MsgData,
    MsgSig,
    TxOrigin,
    TxGasPrice,
    Block(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Identifier(String),
    Member { base: Box<Expr>, member: String },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    /// `target.call{value: v}` before the argument list.
    CallOptions { base: Box<Expr>, options: Vec<(String, Expr)> },
    Index { base: Box<Expr>, index: Option<Box<Expr>> },
    Slice { base: Box<Expr>, start: Option<Box<Expr>>, end: Option<Box<Expr>> },
    Literal { kind: LiteralKind, text: String },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr>, prefix: bool },
    Ternary { condition: Box<Expr>, then_expr: Box<Expr>, else_expr: Box<Expr> },
    Tuple(Vec<Option<Expr>>),
    InlineArray(Vec<Expr>),
    Assign { op: Option<BinaryOp>, target: Box<Expr>, value: Box<Expr> },
    /// `msg.sender`, `tx.origin`, `block.timestamp`, ...
    Global(Global),
    /// Conversion through an elementary type or `payable`: `address(x)`.
    TypeCast { ty: String, arg: Box<Expr> },
    /// Elementary type name used as an expression (`type(uint256)`).
    ElementaryType(String),
    New(String),
}

impl Expr {
    /// Direct child expressions, in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Identifier(_)
            | ExprKind::Literal { .. }
            | ExprKind::Global(_)
            | ExprKind::ElementaryType(_)
            | ExprKind::New(_) => Vec::new(),
            ExprKind::Member { base, .. } => vec![base],
            ExprKind::Call { callee, args } => {
                let mut v: Vec<&Expr> = vec![callee];
                v.extend(args.iter());
                v
            }
            ExprKind::CallOptions { base, options } => {
                let mut v: Vec<&Expr> = vec![base];
                v.extend(options.iter().map(|(_, e)| e));
                v
            }
            ExprKind::Index { base, index } => {
                let mut v: Vec<&Expr> = vec![base];
                v.extend(index.as_deref());
                v
            }
            ExprKind::Slice { base, start, end } => {
                let mut v: Vec<&Expr> = vec![base];
                v.extend(start.as_deref());
                v.extend(end.as_deref());
                v
            }
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Ternary { condition, then_expr, else_expr } => vec![condition, then_expr, else_expr],
            ExprKind::Tuple(items) => items.iter().flatten().collect(),
            ExprKind::InlineArray(items) => items.iter().collect(),
            ExprKind::Assign { target, value, .. } => vec![target, value],
            ExprKind::TypeCast { arg, .. } => vec![arg],
        }
    }

    /// Pre-order traversal of this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn as_identifier(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Identifier(name) => Some(name),
            _ => None,
        }
    }

    pub fn is_global(&self, g: &Global) -> bool {
        matches!(&self.kind, ExprKind::Global(x) if x == g)
    }

    /// For a call expression, the callee with any `{...}` call options removed.
    pub fn call_target(&self) -> Option<(&Expr, &[Expr])> {
        match &self.kind {
            ExprKind::Call { callee, args } => {
                let mut target: &Expr = callee;
                while let ExprKind::CallOptions { base, .. } = &target.kind {
                    target = base;
                }
                Some((target, args))
            }
            _ => None,
        }
    }
}
