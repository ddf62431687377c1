use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense per-function statement index in source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StmtId(pub usize);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseType {
    Int,
    Char,
    Void,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeSpec {
    pub base: BaseType,
    pub pointer_depth: u8,
}

impl TypeSpec {
    pub fn is_pointer(&self) -> bool {
        self.pointer_depth > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declarator {
    pub ty: TypeSpec,
    pub name: String,
    /// `Some` for array declarations; the inner option is the (optional) length.
    pub array: Option<Option<Expr>>,
}

impl Declarator {
    pub fn is_array(&self) -> bool {
        self.array.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
    Deref,
    AddrOf,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn from_symbol(sym: &str) -> Option<Self> {
        Some(match sym {
            "||" => BinaryOp::Or,
            "&&" => BinaryOp::And,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            ">" => BinaryOp::Gt,
            "<=" => BinaryOp::Le,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Number(String),
    Str(String),
    Char(String),
    Null,
    Ident(String),
    Unary { op: UnaryOp, expr: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { callee: String, args: Vec<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
}

impl Expr {
    /// Variables read when the expression is evaluated, in first-occurrence order.
    pub fn visit_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Ident(name) => out.push(name),
            Expr::Unary { expr, .. } => expr.visit_idents(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit_idents(out);
                rhs.visit_idents(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.visit_idents(out)),
            Expr::Index { base, index } => {
                base.visit_idents(out);
                index.visit_idents(out);
            }
            Expr::Number(_) | Expr::Str(_) | Expr::Char(_) | Expr::Null => {}
        }
    }

    /// Call sites in pre-order.
    pub fn visit_calls<'a>(&'a self, out: &mut Vec<(&'a str, &'a [Expr])>) {
        match self {
            Expr::Call { callee, args } => {
                out.push((callee, args));
                args.iter().for_each(|a| a.visit_calls(out));
            }
            Expr::Unary { expr, .. } => expr.visit_calls(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit_calls(out);
                rhs.visit_calls(out);
            }
            Expr::Index { base, index } => {
                base.visit_calls(out);
                index.visit_calls(out);
            }
            _ => {}
        }
    }

    /// The named variable an lvalue-ish expression ultimately refers to.
    pub fn base_var(&self) -> Option<&str> {
        match self {
            Expr::Ident(name) => Some(name),
            Expr::Unary { op: UnaryOp::AddrOf | UnaryOp::Deref, expr } => expr.base_var(),
            Expr::Index { base, .. } => base.base_var(),
            Expr::Binary { op: BinaryOp::Add | BinaryOp::Sub, lhs, .. } => lhs.base_var(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignOp {
    Set,
    AddSet,
    SubSet,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::AddSet => "+=",
            AssignOp::SubSet => "-=",
        }
    }
}

/// Statements allowed in expression position and in `for` headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimpleStmt {
    Assign { target: Expr, op: AssignOp, value: Expr },
    Step { target: Expr, increment: bool },
    Call(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtNode {
    pub id: StmtId,
    pub tree: StmtTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtTree {
    Decl { decl: Declarator, init: Option<Expr> },
    Simple(SimpleStmt),
    If { cond: Expr, then_branch: Vec<StmtNode>, else_branch: Option<Vec<StmtNode>> },
    While { cond: Expr, body: Vec<StmtNode> },
    For { init: Option<SimpleStmt>, cond: Option<Expr>, step: Option<SimpleStmt>, body: Vec<StmtNode> },
    Return(Option<Expr>),
    Block(Vec<StmtNode>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmtKind {
    Decl,
    Assign,
    Call,
    IfCond,
    WhileCond,
    ForHeader,
    Return,
    BlockEnter,
}

impl StmtKind {
    pub fn is_branch(self) -> bool {
        matches!(self, StmtKind::IfCond | StmtKind::WhileCond | StmtKind::ForHeader)
    }
}

/// Flat, analysis-facing view of one statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: StmtId,
    pub line: u32,
    pub kind: StmtKind,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    pub callees: Vec<String>,
    /// Pointer variables dereferenced by this statement.
    pub derefs: BTreeSet<String>,
    /// Canonical one-line rendering (headers only for compound statements).
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: TypeSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionAst {
    pub name: String,
    pub ret: TypeSpec,
    pub params: Vec<Param>,
    pub body: Vec<StmtNode>,
    pub stmts: Vec<Stmt>,
    pub line: u32,
}

impl FunctionAst {
    pub fn stmt(&self, id: StmtId) -> &Stmt {
        &self.stmts[id.0]
    }

    /// Looks up the tree node carrying `id`.
    pub fn node(&self, id: StmtId) -> Option<&StmtNode> {
        fn find(nodes: &[StmtNode], id: StmtId) -> Option<&StmtNode> {
            for n in nodes {
                if n.id == id {
                    return Some(n);
                }
                let hit = match &n.tree {
                    StmtTree::If { then_branch, else_branch, .. } => find(then_branch, id)
                        .or_else(|| else_branch.as_deref().and_then(|e| find(e, id))),
                    StmtTree::While { body, .. }
                    | StmtTree::For { body, .. }
                    | StmtTree::Block(body) => find(body, id),
                    _ => None,
                };
                if hit.is_some() {
                    return hit;
                }
            }
            None
        }
        find(&self.body, id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalDecl {
    pub decl: Declarator,
    pub init: Option<Expr>,
    pub line: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationUnit {
    pub source_id: String,
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionAst>,
}

impl TranslationUnit {
    pub fn function(&self, name: &str) -> Option<&FunctionAst> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Equality of declarations and statement trees, ignoring source positions.
    pub fn structurally_eq(&self, other: &TranslationUnit) -> bool {
        let globals = |u: &TranslationUnit| {
            u.globals.iter().map(|g| (g.decl.clone(), g.init.clone())).collect::<Vec<_>>()
        };
        let funcs = |u: &TranslationUnit| {
            u.functions
                .iter()
                .map(|f| (f.name.clone(), f.ret, f.params.clone(), f.body.clone()))
                .collect::<Vec<_>>()
        };
        globals(self) == globals(other) && funcs(self) == funcs(other)
    }
}
