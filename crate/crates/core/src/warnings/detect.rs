//! Two deliberately naive checkers that produce warnings to rank.

use std::collections::{BTreeSet, HashMap};

use super::{VulnKind, Warning};
use crate::dependence::{control_dependence, function_defs, reaching_definitions};
use crate::frontend::ast::{Expr, SimpleStmt, StmtTree};
use crate::frontend::{build_cfg, FunctionAst, StmtId, TranslationUnit};

pub const BO_DETECTOR: &str = "bo-risky-call";
pub const NPD_DETECTOR: &str = "npd-unchecked-deref";
pub const RISKY_BUFFER_CALLS: [&str; 4] = ["strcat", "strcpy", "sprintf", "memcpy"];

fn make_warning(unit: &TranslationUnit, f: &FunctionAst, line: u32, kind: VulnKind, detector: &str) -> Warning {
    Warning {
        id: format!("{}:{}:{}", unit.source_id, line, kind.code()),
        file: unit.source_id.clone(),
        function: f.name.clone(),
        line,
        kind,
        detector: detector.to_string(),
        label: None,
    }
}

/// One BO warning per source line holding a call to a risky buffer function.
pub fn detect_bo(unit: &TranslationUnit) -> Vec<Warning> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for f in &unit.functions {
        for s in &f.stmts {
            let risky = s.callees.iter().any(|c| RISKY_BUFFER_CALLS.contains(&c.as_str()));
            if risky && seen.insert(s.line) {
                out.push(make_warning(unit, f, s.line, VulnKind::BufferOverflow, BO_DETECTOR));
            }
        }
    }
    out
}

/// Whether statement `id` sets `var` to `NULL` or to a fresh `malloc` result.
fn is_null_source(f: &FunctionAst, id: StmtId, var: &str) -> bool {
    let nullable = |e: &Expr| matches!(e, Expr::Null) || matches!(e, Expr::Call { callee, .. } if callee == "malloc");
    match f.node(id).map(|n| &n.tree) {
        Some(StmtTree::Decl { decl, init: Some(e) }) => decl.name == var && nullable(e),
        Some(StmtTree::Simple(SimpleStmt::Assign { target: Expr::Ident(t), value, .. })) => t == var && nullable(value),
        _ => false,
    }
}

/// NPD warnings: a dereference of `p` reached by a `NULL`/`malloc` definition
/// of `p`, where no enclosing branch condition mentions `p`.
pub fn detect_npd(unit: &TranslationUnit) -> Vec<Warning> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for f in &unit.functions {
        if f.stmts.iter().all(|s| s.derefs.is_empty()) {
            continue;
        }
        let cfg = build_cfg(f).expect("parsed functions have valid CFGs");
        let (defs, entry) = function_defs(f, unit);
        let rd = reaching_definitions(&cfg, &defs, &entry);
        let mut controllers: HashMap<usize, Vec<usize>> = HashMap::new();
        for (m, n) in control_dependence(&cfg) {
            controllers.entry(n).or_default().push(m);
        }
        let guarded_by = |start: usize, var: &str| -> bool {
            let mut seen = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                for &m in controllers.get(&n).into_iter().flatten() {
                    if seen.insert(m) {
                        if f.stmts[m].uses.contains(var) {
                            return true;
                        }
                        stack.push(m);
                    }
                }
            }
            false
        };
        for s in &f.stmts {
            for p in &s.derefs {
                let nullable = rd.input[s.id.0]
                    .iter()
                    .any(|d| d.var == *p && cfg.is_stmt(d.site) && is_null_source(f, StmtId(d.site), p));
                if nullable && !guarded_by(s.id.0, p) && seen.insert(s.line) {
                    out.push(make_warning(unit, f, s.line, VulnKind::NullPointerDeref, NPD_DETECTOR));
                }
            }
        }
    }
    out
}

/// Both detectors, BO first, each in statement order.
pub fn detect_all(unit: &TranslationUnit) -> Vec<Warning> {
    let mut w = detect_bo(unit);
    w.extend(detect_npd(unit));
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn unit(src: &str) -> TranslationUnit {
        parse_source(src, "t.mc").unwrap()
    }

    #[test]
    fn one_strcat_one_warning() {
        let u = unit("void f(char *s) {\n  char b[8];\n  strcat(b, s);\n}\n");
        let w = detect_bo(&u);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].line, w[0].kind), (3, VulnKind::BufferOverflow));
        assert_eq!(w[0].function, "f");
    }

    #[test]
    fn snprintf_is_not_flagged() {
        let u = unit("void f(char *s) { char b[8]; snprintf(b, 8, s); }");
        assert!(detect_bo(&u).is_empty());
    }

    #[test]
    fn unchecked_malloc_deref() {
        let u = unit("void f(int n) {\n  char *p;\n  p = malloc(n);\n  *p = 0;\n}\n");
        let w = detect_npd(&u);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].line, 4);
    }

    #[test]
    fn checked_malloc_deref_is_silent() {
        let u = unit("void f(int n) { char *p; p = malloc(n); if (p) { *p = 0; } }");
        assert!(detect_npd(&u).is_empty());
    }

    #[test]
    fn early_return_check_is_silent() {
        let u = unit("void f(int n) { char *p; p = malloc(n); if (p == NULL) { return; } p[0] = 1; }");
        assert!(detect_npd(&u).is_empty());
    }

    #[test]
    fn address_of_is_silent() {
        let u = unit("void f() { int x; int *p; p = &x; *p = 0; }");
        assert!(detect_npd(&u).is_empty());
    }

    #[test]
    fn null_on_one_path_is_flagged() {
        let u = unit("void f(int c) { char b[4]; char *p = NULL; if (c) { p = b; } p[0] = 1; }");
        assert_eq!(detect_npd(&u).len(), 1);
    }

    #[test]
    fn indirect_flag_guard_still_flagged() {
        // the guard tests `ok`, not `p`, so the naive rule fires
        let src = "void f(int n) { char *p; int ok; ok = 0; p = malloc(n); if (p != NULL) { ok = 1; } if (ok) { *p = 0; } }";
        assert_eq!(detect_npd(&unit(src)).len(), 1);
    }

    #[test]
    fn detectors_are_deterministic() {
        let src = "void f(char *s, int n) { char b[8]; char *p; strcpy(b, s); p = malloc(n); *p = 0; }";
        assert_eq!(detect_all(&unit(src)), detect_all(&unit(src)));
    }
}
