use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use super::ast::*;
use super::cfg::{build_cfg, CfgError};
use super::effects::library_effect;
use super::lexer::{LexToken, TokenKind};
use super::pretty::{decl_to_string, stmt_header};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("expected {expected}, found {found} at {line}:{col}")]
    Unexpected { expected: String, found: String, line: u32, col: u32 },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEof { expected: String },
    #[error("use of undeclared identifier `{name}` at {line}:{col}")]
    Undeclared { name: String, line: u32, col: u32 },
    #[error("`{name}` is already declared (line {line})")]
    Redeclared { name: String, line: u32 },
    #[error("function `{name}` is defined twice")]
    DuplicateFunction { name: String },
    #[error(transparent)]
    Cfg(#[from] CfgError),
}

#[derive(Debug, Clone, Copy)]
struct VarInfo {
    ty: TypeSpec,
    is_array: bool,
}

struct Parser<'t> {
    toks: &'t [LexToken],
    pos: usize,
    globals: HashMap<String, VarInfo>,
    // Names declared anywhere in the current function (params included).
    func_vars: HashMap<String, VarInfo>,
    scopes: Vec<HashSet<String>>,
    next_id: usize,
    lines: Vec<u32>,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t LexToken> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t LexToken> {
        self.toks.get(self.pos + n)
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn at_punct(&self, text: &str) -> bool {
        self.at(TokenKind::Punctuation, text)
    }

    fn at_op(&self, text: &str) -> bool {
        self.at(TokenKind::Operator, text)
    }

    fn at_kw(&self, text: &str) -> bool {
        self.at(TokenKind::Keyword, text)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        match self.peek() {
            Some(t) => Err(ParseError::Unexpected {
                expected: expected.to_string(),
                found: format!("`{}`", t.text),
                line: t.line,
                col: t.col,
            }),
            None => Err(ParseError::UnexpectedEof { expected: expected.to_string() }),
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<&'t LexToken> {
        if self.at(kind, text) {
            self.pos += 1;
            Ok(&self.toks[self.pos - 1])
        } else {
            self.error(&format!("`{text}`"))
        }
    }

    fn expect_ident(&mut self) -> PResult<&'t LexToken> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t)
            }
            _ => self.error("identifier"),
        }
    }

    fn current_line(&self) -> u32 {
        self.peek().or(self.toks.last()).map_or(1, |t| t.line)
    }

    fn at_type(&self) -> bool {
        self.at_kw("int") || self.at_kw("char") || self.at_kw("void")
    }

    fn parse_type(&mut self) -> PResult<TypeSpec> {
        let base = if self.at_kw("int") {
            BaseType::Int
        } else if self.at_kw("char") {
            BaseType::Char
        } else if self.at_kw("void") {
            BaseType::Void
        } else {
            return self.error("type");
        };
        self.pos += 1;
        let mut pointer_depth = 0;
        while self.at_op("*") {
            self.pos += 1;
            pointer_depth += 1;
        }
        Ok(TypeSpec { base, pointer_depth })
    }

    fn lookup(&self, name: &str) -> Option<VarInfo> {
        if self.scopes.iter().any(|s| s.contains(name)) {
            return self.func_vars.get(name).copied();
        }
        self.globals.get(name).copied()
    }

    fn declare_local(&mut self, name: &str, info: VarInfo, line: u32) -> PResult<()> {
        if self.func_vars.contains_key(name) || self.globals.contains_key(name) {
            return Err(ParseError::Redeclared { name: name.to_string(), line });
        }
        self.func_vars.insert(name.to_string(), info);
        self.scopes.last_mut().expect("scope").insert(name.to_string());
        Ok(())
    }

    // ---- expressions ----

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_binary(1)
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Operator => match BinaryOp::from_symbol(&t.text) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_binary(op.precedence() + 1)?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.text.as_str() {
                "-" => Some(UnaryOp::Neg),
                "!" => Some(UnaryOp::Not),
                "*" => Some(UnaryOp::Deref),
                "&" => Some(UnaryOp::AddrOf),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let expr = self.parse_unary()?;
            return Ok(Expr::Unary { op, expr: Box::new(expr) });
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        while self.at_punct("[") {
            self.pos += 1;
            let index = self.parse_expr()?;
            self.expect(TokenKind::Punctuation, "]")?;
            e = Expr::Index { base: Box::new(e), index: Box::new(index) };
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else {
            return self.error("expression");
        };
        match t.kind {
            TokenKind::NumberLiteral => {
                self.pos += 1;
                Ok(Expr::Number(t.text.clone()))
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                Ok(Expr::Str(t.text.clone()))
            }
            TokenKind::CharLiteral => {
                self.pos += 1;
                Ok(Expr::Char(t.text.clone()))
            }
            TokenKind::Keyword if t.text == "NULL" => {
                self.pos += 1;
                Ok(Expr::Null)
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.at_punct("(") {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.at_punct(")") {
                        loop {
                            args.push(self.parse_expr()?);
                            if self.at_punct(",") {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(TokenKind::Punctuation, ")")?;
                    return Ok(Expr::Call { callee: t.text.clone(), args });
                }
                if self.lookup(&t.text).is_none() {
                    return Err(ParseError::Undeclared {
                        name: t.text.clone(),
                        line: t.line,
                        col: t.col,
                    });
                }
                Ok(Expr::Ident(t.text.clone()))
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(TokenKind::Punctuation, ")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }

    // ---- statements ----

    fn parse_simple(&mut self) -> PResult<SimpleStmt> {
        let lhs = self.parse_unary()?;
        let assign = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.text.as_str() {
                "=" => Some(AssignOp::Set),
                "+=" => Some(AssignOp::AddSet),
                "-=" => Some(AssignOp::SubSet),
                "++" | "--" => {
                    self.pos += 1;
                    return Ok(SimpleStmt::Step { target: lhs, increment: t.text == "++" });
                }
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = assign {
            self.pos += 1;
            let value = self.parse_expr()?;
            return Ok(SimpleStmt::Assign { target: lhs, op, value });
        }
        if matches!(lhs, Expr::Call { .. }) {
            return Ok(SimpleStmt::Call(lhs));
        }
        self.error("assignment or call")
    }

    fn alloc_id(&mut self, line: u32) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        self.lines.push(line);
        id
    }

    fn parse_body(&mut self) -> PResult<Vec<StmtNode>> {
        self.scopes.push(HashSet::new());
        let out = if self.at_punct("{") {
            self.pos += 1;
            let mut nodes = Vec::new();
            while !self.at_punct("}") {
                if self.peek().is_none() {
                    return self.error("`}`");
                }
                nodes.push(self.parse_stmt()?);
            }
            self.pos += 1;
            nodes
        } else {
            vec![self.parse_stmt()?]
        };
        self.scopes.pop();
        Ok(out)
    }

    fn parse_declarator(&mut self, ty: TypeSpec) -> PResult<(Declarator, u32)> {
        let name_tok = self.expect_ident()?;
        let array = if self.at_punct("[") {
            self.pos += 1;
            let len = if self.at_punct("]") { None } else { Some(self.parse_expr()?) };
            self.expect(TokenKind::Punctuation, "]")?;
            Some(len)
        } else {
            None
        };
        Ok((Declarator { ty, name: name_tok.text.clone(), array }, name_tok.line))
    }

    fn parse_stmt(&mut self) -> PResult<StmtNode> {
        let line = self.current_line();
        if self.at_punct("{") {
            let id = self.alloc_id(line);
            let body = self.parse_body()?;
            return Ok(StmtNode { id, tree: StmtTree::Block(body) });
        }
        if self.at_kw("if") {
            let id = self.alloc_id(line);
            self.pos += 1;
            self.expect(TokenKind::Punctuation, "(")?;
            let cond = self.parse_expr()?;
            self.expect(TokenKind::Punctuation, ")")?;
            let then_branch = self.parse_body()?;
            let else_branch = if self.at_kw("else") {
                self.pos += 1;
                Some(self.parse_body()?)
            } else {
                None
            };
            return Ok(StmtNode { id, tree: StmtTree::If { cond, then_branch, else_branch } });
        }
        if self.at_kw("while") {
            let id = self.alloc_id(line);
            self.pos += 1;
            self.expect(TokenKind::Punctuation, "(")?;
            let cond = self.parse_expr()?;
            self.expect(TokenKind::Punctuation, ")")?;
            let body = self.parse_body()?;
            return Ok(StmtNode { id, tree: StmtTree::While { cond, body } });
        }
        if self.at_kw("for") {
            let id = self.alloc_id(line);
            self.pos += 1;
            self.expect(TokenKind::Punctuation, "(")?;
            let init = if self.at_punct(";") { None } else { Some(self.parse_simple()?) };
            self.expect(TokenKind::Punctuation, ";")?;
            let cond = if self.at_punct(";") { None } else { Some(self.parse_expr()?) };
            self.expect(TokenKind::Punctuation, ";")?;
            let step = if self.at_punct(")") { None } else { Some(self.parse_simple()?) };
            self.expect(TokenKind::Punctuation, ")")?;
            let body = self.parse_body()?;
            return Ok(StmtNode { id, tree: StmtTree::For { init, cond, step, body } });
        }
        if self.at_kw("return") {
            let id = self.alloc_id(line);
            self.pos += 1;
            let value = if self.at_punct(";") { None } else { Some(self.parse_expr()?) };
            self.expect(TokenKind::Punctuation, ";")?;
            return Ok(StmtNode { id, tree: StmtTree::Return(value) });
        }
        if self.at_type() {
            let id = self.alloc_id(line);
            let ty = self.parse_type()?;
            let (decl, name_line) = self.parse_declarator(ty)?;
            let init = if self.at_op("=") {
                self.pos += 1;
                Some(self.parse_expr()?)
            } else {
                None
            };
            self.expect(TokenKind::Punctuation, ";")?;
            let info = VarInfo { ty: decl.ty, is_array: decl.is_array() };
            self.declare_local(&decl.name, info, name_line)?;
            return Ok(StmtNode { id, tree: StmtTree::Decl { decl, init } });
        }
        let id = self.alloc_id(line);
        let simple = self.parse_simple()?;
        self.expect(TokenKind::Punctuation, ";")?;
        Ok(StmtNode { id, tree: StmtTree::Simple(simple) })
    }

    fn parse_function(&mut self, ret: TypeSpec, name: &LexToken) -> PResult<FunctionAst> {
        self.func_vars.clear();
        self.scopes = vec![HashSet::new()];
        self.next_id = 0;
        self.lines.clear();

        self.expect(TokenKind::Punctuation, "(")?;
        let mut params = Vec::new();
        if self.at_kw("void") && self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punctuation, ")")) {
            self.pos += 1;
        } else if !self.at_punct(")") {
            loop {
                let ty = self.parse_type()?;
                let p = self.expect_ident()?;
                self.declare_local(&p.text, VarInfo { ty, is_array: false }, p.line)?;
                params.push(Param { name: p.text.clone(), ty });
                if self.at_punct(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::Punctuation, ")")?;
        if !self.at_punct("{") {
            return self.error("`{`");
        }
        let body = self.parse_body()?;
        let vars = std::mem::take(&mut self.func_vars);
        let stmts = flatten(&body, &self.lines, &vars, &self.globals);
        Ok(FunctionAst { name: name.text.clone(), ret, params, body, stmts, line: name.line })
    }
}

/// Definition/use computation over a parsed body.
struct Effects<'a> {
    vars: &'a HashMap<String, VarInfo>,
    globals: &'a HashMap<String, VarInfo>,
    // pointer -> buffer it was last assigned from (`p = buf` / `p = &x`)
    points_to: HashMap<String, String>,
}

#[derive(Default)]
struct DefUse {
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
    derefs: BTreeSet<String>,
    callees: Vec<String>,
}

impl<'a> Effects<'a> {
    fn info(&self, name: &str) -> Option<VarInfo> {
        self.vars.get(name).or_else(|| self.globals.get(name)).copied()
    }

    fn is_pointer(&self, name: &str) -> bool {
        self.info(name).is_some_and(|i| i.ty.is_pointer() && !i.is_array)
    }

    fn resolve(&self, ptr: &str) -> String {
        self.points_to.get(ptr).cloned().unwrap_or_else(|| ptr.to_string())
    }

    fn read(&self, e: &Expr, du: &mut DefUse) {
        let mut ids = Vec::new();
        e.visit_idents(&mut ids);
        du.uses.extend(ids.into_iter().map(str::to_string));
        self.collect_derefs(e, du);
        let mut calls = Vec::new();
        e.visit_calls(&mut calls);
        for (callee, args) in calls {
            du.callees.push(callee.to_string());
            if let Some(effect) = library_effect(callee) {
                for &i in effect.writes {
                    if let Some(var) = args.get(i).and_then(Expr::base_var) {
                        self.write_through(var, du);
                    }
                }
            }
        }
    }

    fn collect_derefs(&self, e: &Expr, du: &mut DefUse) {
        match e {
            Expr::Unary { op: UnaryOp::Deref, expr } => {
                if let Some(v) = expr.base_var().filter(|v| self.is_pointer(v)) {
                    du.derefs.insert(v.to_string());
                }
                self.collect_derefs(expr, du);
            }
            Expr::Index { base, index } => {
                if let Some(v) = base.base_var().filter(|v| self.is_pointer(v)) {
                    du.derefs.insert(v.to_string());
                }
                self.collect_derefs(base, du);
                self.collect_derefs(index, du);
            }
            Expr::Unary { expr, .. } => self.collect_derefs(expr, du),
            Expr::Binary { lhs, rhs, .. } => {
                self.collect_derefs(lhs, du);
                self.collect_derefs(rhs, du);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| self.collect_derefs(a, du)),
            _ => {}
        }
    }

    /// A write into the storage named by `var` (buffer element or pointee).
    fn write_through(&self, var: &str, du: &mut DefUse) {
        if self.is_pointer(var) {
            let target = self.resolve(var);
            du.derefs.insert(var.to_string());
            du.uses.insert(var.to_string());
            du.uses.insert(target.clone());
            du.defs.insert(target);
        } else {
            du.uses.insert(var.to_string());
            du.defs.insert(var.to_string());
        }
    }

    fn write_target(&self, target: &Expr, du: &mut DefUse) {
        match target {
            Expr::Ident(name) => {
                du.defs.insert(name.clone());
            }
            Expr::Index { base, index } => {
                self.read(index, du);
                if let Some(v) = base.base_var() {
                    self.write_through(v, du);
                }
            }
            Expr::Unary { op: UnaryOp::Deref, expr } => {
                self.read(expr, du);
                if let Some(v) = expr.base_var() {
                    self.write_through(v, du);
                }
            }
            other => self.read(other, du),
        }
    }

    fn track_pointer(&mut self, name: &str, value: Option<&Expr>) {
        if !self.is_pointer(name) {
            return;
        }
        let source = match value {
            Some(Expr::Ident(buf)) if self.info(buf).is_some_and(|i| i.is_array) => Some(buf.clone()),
            Some(Expr::Unary { op: UnaryOp::AddrOf, expr }) => match expr.as_ref() {
                Expr::Ident(x) => Some(x.clone()),
                _ => None,
            },
            _ => None,
        };
        match source {
            Some(buf) => {
                self.points_to.insert(name.to_string(), buf);
            }
            None => {
                self.points_to.remove(name);
            }
        }
    }

    fn simple(&mut self, s: &SimpleStmt, du: &mut DefUse) {
        match s {
            SimpleStmt::Assign { target, op, value } => {
                self.read(value, du);
                if *op != AssignOp::Set {
                    self.read(target, du);
                }
                self.write_target(target, du);
                if let Expr::Ident(name) = target {
                    let v = if *op == AssignOp::Set { Some(value) } else { None };
                    self.track_pointer(name, v);
                }
            }
            SimpleStmt::Step { target, .. } => {
                self.read(target, du);
                self.write_target(target, du);
            }
            SimpleStmt::Call(e) => self.read(e, du),
        }
    }

    fn stmt(&mut self, tree: &StmtTree) -> (StmtKind, DefUse) {
        let mut du = DefUse::default();
        let kind = match tree {
            StmtTree::Decl { decl, init } => {
                if let Some(Some(len)) = &decl.array {
                    self.read(len, &mut du);
                }
                if let Some(init) = init {
                    self.read(init, &mut du);
                }
                du.defs.insert(decl.name.clone());
                self.track_pointer(&decl.name, init.as_ref());
                StmtKind::Decl
            }
            StmtTree::Simple(s) => {
                self.simple(s, &mut du);
                match s {
                    SimpleStmt::Call(_) => StmtKind::Call,
                    _ => StmtKind::Assign,
                }
            }
            StmtTree::If { cond, .. } => {
                self.read(cond, &mut du);
                StmtKind::IfCond
            }
            StmtTree::While { cond, .. } => {
                self.read(cond, &mut du);
                StmtKind::WhileCond
            }
            StmtTree::For { init, cond, step, .. } => {
                if let Some(init) = init {
                    self.simple(init, &mut du);
                }
                if let Some(cond) = cond {
                    self.read(cond, &mut du);
                }
                if let Some(step) = step {
                    self.simple(step, &mut du);
                }
                StmtKind::ForHeader
            }
            StmtTree::Return(value) => {
                if let Some(v) = value {
                    self.read(v, &mut du);
                }
                StmtKind::Return
            }
            StmtTree::Block(_) => StmtKind::BlockEnter,
        };
        (kind, du)
    }
}

fn flatten(
    body: &[StmtNode],
    lines: &[u32],
    vars: &HashMap<String, VarInfo>,
    globals: &HashMap<String, VarInfo>,
) -> Vec<Stmt> {
    fn walk(nodes: &[StmtNode], fx: &mut Effects<'_>, lines: &[u32], out: &mut Vec<Stmt>) {
        for n in nodes {
            let (kind, du) = fx.stmt(&n.tree);
            out.push(Stmt {
                id: n.id,
                line: lines[n.id.0],
                kind,
                defs: du.defs,
                uses: du.uses,
                callees: du.callees,
                derefs: du.derefs,
                text: stmt_header(&n.tree),
            });
            match &n.tree {
                StmtTree::If { then_branch, else_branch, .. } => {
                    walk(then_branch, fx, lines, out);
                    if let Some(e) = else_branch {
                        walk(e, fx, lines, out);
                    }
                }
                StmtTree::While { body, .. } | StmtTree::For { body, .. } | StmtTree::Block(body) => {
                    walk(body, fx, lines, out)
                }
                _ => {}
            }
        }
    }
    let mut fx = Effects { vars, globals, points_to: HashMap::new() };
    let mut out = Vec::new();
    walk(body, &mut fx, lines, &mut out);
    debug_assert!(out.iter().enumerate().all(|(i, s)| s.id.0 == i));
    out
}

/// Parses a token stream into a translation unit, validating scopes and
/// rejecting unreachable statements.
pub fn parse(tokens: &[LexToken], source_id: &str) -> Result<TranslationUnit, ParseError> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        globals: HashMap::new(),
        func_vars: HashMap::new(),
        scopes: Vec::new(),
        next_id: 0,
        lines: Vec::new(),
    };
    let mut unit = TranslationUnit { source_id: source_id.to_string(), globals: Vec::new(), functions: Vec::new() };
    let mut function_names = HashSet::new();

    while p.peek().is_some() {
        let ty = p.parse_type()?;
        let name = p.expect_ident()?;
        if p.at_punct("(") {
            if !function_names.insert(name.text.clone()) {
                return Err(ParseError::DuplicateFunction { name: name.text.clone() });
            }
            let f = p.parse_function(ty, name)?;
            build_cfg(&f)?;
            unit.functions.push(f);
        } else {
            p.pos -= 1;
            let (decl, line) = p.parse_declarator(ty)?;
            let init = if p.at_op("=") {
                p.pos += 1;
                Some(p.parse_expr()?)
            } else {
                None
            };
            p.expect(TokenKind::Punctuation, ";")?;
            if p.globals.contains_key(&decl.name) {
                return Err(ParseError::Redeclared { name: decl.name.clone(), line });
            }
            p.globals.insert(decl.name.clone(), VarInfo { ty: decl.ty, is_array: decl.is_array() });
            let text = decl_to_string(&decl, init.as_ref());
            unit.globals.push(GlobalDecl { decl, init, line, text });
        }
    }
    Ok(unit)
}
