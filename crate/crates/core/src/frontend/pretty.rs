//! Canonical source rendering. Statement headers produced here are the text
//! that slicing output and tokenization operate on.

use std::fmt::Write;

use super::ast::*;

const UNARY_PREC: u8 = 7;

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Number(s) | Expr::Str(s) | Expr::Char(s) | Expr::Ident(s) => out.push_str(s),
        Expr::Null => out.push_str("NULL"),
        Expr::Unary { op, expr } => {
            let paren = min_prec > UNARY_PREC;
            if paren {
                out.push('(');
            }
            out.push_str(op.symbol());
            // Nested prefix operators would otherwise fuse (`--x`, `&*p`).
            if matches!(**expr, Expr::Unary { .. }) {
                out.push('(');
                write_expr(out, expr, 0);
                out.push(')');
            } else {
                write_expr(out, expr, UNARY_PREC);
            }
            if paren {
                out.push(')');
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, lhs, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, p + 1);
            if paren {
                out.push(')');
            }
        }
        Expr::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::Index { base, index } => {
            write_expr(out, base, UNARY_PREC + 1);
            out.push('[');
            write_expr(out, index, 0);
            out.push(']');
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

pub fn type_to_string(ty: &TypeSpec) -> String {
    let base = match ty.base {
        BaseType::Int => "int",
        BaseType::Char => "char",
        BaseType::Void => "void",
    };
    let mut s = base.to_string();
    if ty.pointer_depth > 0 {
        s.push(' ');
        s.push_str(&"*".repeat(ty.pointer_depth as usize));
    }
    s
}

fn typed_name(ty: &TypeSpec, name: &str) -> String {
    if ty.is_pointer() {
        format!("{}{}", type_to_string(ty), name)
    } else {
        format!("{} {}", type_to_string(ty), name)
    }
}

pub fn decl_to_string(decl: &Declarator, init: Option<&Expr>) -> String {
    let mut s = typed_name(&decl.ty, &decl.name);
    if let Some(len) = &decl.array {
        s.push('[');
        if let Some(len) = len {
            s.push_str(&expr_to_string(len));
        }
        s.push(']');
    }
    if let Some(init) = init {
        s.push_str(" = ");
        s.push_str(&expr_to_string(init));
    }
    s.push(';');
    s
}

/// Simple statement without the trailing semicolon.
pub fn simple_to_string(s: &SimpleStmt) -> String {
    match s {
        SimpleStmt::Assign { target, op, value } => {
            format!("{} {} {}", expr_to_string(target), op.symbol(), expr_to_string(value))
        }
        SimpleStmt::Step { target, increment } => {
            format!("{}{}", expr_to_string(target), if *increment { "++" } else { "--" })
        }
        SimpleStmt::Call(e) => expr_to_string(e),
    }
}

/// One-line header text for a statement node.
pub fn stmt_header(tree: &StmtTree) -> String {
    match tree {
        StmtTree::Decl { decl, init } => decl_to_string(decl, init.as_ref()),
        StmtTree::Simple(s) => format!("{};", simple_to_string(s)),
        StmtTree::If { cond, .. } => format!("if ({})", expr_to_string(cond)),
        StmtTree::While { cond, .. } => format!("while ({})", expr_to_string(cond)),
        StmtTree::For { init, cond, step, .. } => {
            let part = |s: &Option<SimpleStmt>| s.as_ref().map(simple_to_string).unwrap_or_default();
            let cond = cond.as_ref().map(expr_to_string).unwrap_or_default();
            let mut s = format!("for ({}; {}; {})", part(init), cond, part(step));
            // Keep empty clauses tidy: `for (; ; )` -> `for (;;)`.
            s = s.replace("( ;", "(;").replace("; ;", ";;").replace("; )", ";)");
            s
        }
        StmtTree::Return(Some(e)) => format!("return {};", expr_to_string(e)),
        StmtTree::Return(None) => "return;".to_string(),
        StmtTree::Block(_) => "{".to_string(),
    }
}

fn write_block(out: &mut String, nodes: &[StmtNode], depth: usize) {
    for n in nodes {
        write_node(out, n, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_node(out: &mut String, node: &StmtNode, depth: usize) {
    indent(out, depth);
    out.push_str(&stmt_header(&node.tree));
    match &node.tree {
        StmtTree::If { then_branch, else_branch, .. } => {
            out.push_str(" {\n");
            write_block(out, then_branch, depth + 1);
            indent(out, depth);
            out.push('}');
            if let Some(e) = else_branch {
                out.push_str(" else {\n");
                write_block(out, e, depth + 1);
                indent(out, depth);
                out.push('}');
            }
            out.push('\n');
        }
        StmtTree::While { body, .. } | StmtTree::For { body, .. } => {
            out.push_str(" {\n");
            write_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtTree::Block(body) => {
            out.push('\n');
            write_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        _ => out.push('\n'),
    }
}

pub fn pretty_print(unit: &TranslationUnit) -> String {
    let mut out = String::new();
    for g in &unit.globals {
        out.push_str(&decl_to_string(&g.decl, g.init.as_ref()));
        out.push('\n');
    }
    for f in &unit.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        let params = if f.params.is_empty() {
            "void".to_string()
        } else {
            f.params.iter().map(|p| typed_name(&p.ty, &p.name)).collect::<Vec<_>>().join(", ")
        };
        let _ = writeln!(out, "{}({}) {{", typed_name(&f.ret, &f.name), params);
        write_block(&mut out, &f.body, 1);
        out.push_str("}\n");
    }
    out
}
