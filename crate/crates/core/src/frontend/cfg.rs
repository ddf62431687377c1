use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{FunctionAst, StmtId, StmtNode, StmtTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("unreachable statement {stmt} at line {line} in `{function}`")]
    Unreachable { function: String, stmt: StmtId, line: u32 },
}

/// Control-flow graph of one function. Node `i < n_stmts` is statement `i`;
/// the two synthetic nodes follow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub function: String,
    pub n_stmts: usize,
    pub edges: Vec<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Cfg {
    /// Builds a graph directly from an edge list; used by analyses and tests
    /// that work on synthetic shapes.
    pub fn from_edges(function: &str, n_stmts: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        let n = n_stmts + 2;
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(a, b) in &edges {
            succ[a].push(b);
            pred[b].push(a);
        }
        Cfg { function: function.to_string(), n_stmts, edges: edges.into_iter().collect(), succ, pred }
    }

    pub fn entry(&self) -> usize {
        self.n_stmts
    }

    pub fn exit(&self) -> usize {
        self.n_stmts + 1
    }

    pub fn len(&self) -> usize {
        self.n_stmts + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn succs(&self, n: usize) -> &[usize] {
        &self.succ[n]
    }

    pub fn preds(&self, n: usize) -> &[usize] {
        &self.pred[n]
    }

    pub fn is_stmt(&self, n: usize) -> bool {
        n < self.n_stmts
    }

    pub fn label(&self, n: usize) -> String {
        if n == self.entry() {
            "ENTRY".into()
        } else if n == self.exit() {
            "EXIT".into()
        } else {
            format!("s{n}")
        }
    }
}

struct Builder<'f> {
    func: &'f FunctionAst,
    edges: Vec<(usize, usize)>,
    exit: usize,
}

impl Builder<'_> {
    fn seq(&mut self, nodes: &[StmtNode], mut preds: Vec<usize>) -> Result<Vec<usize>, CfgError> {
        for n in nodes {
            preds = self.node(n, preds)?;
        }
        Ok(preds)
    }

    fn node(&mut self, n: &StmtNode, preds: Vec<usize>) -> Result<Vec<usize>, CfgError> {
        let id = n.id.0;
        if preds.is_empty() {
            return Err(CfgError::Unreachable {
                function: self.func.name.clone(),
                stmt: n.id,
                line: self.func.stmts[id].line,
            });
        }
        self.edges.extend(preds.iter().map(|&p| (p, id)));
        Ok(match &n.tree {
            StmtTree::Decl { .. } | StmtTree::Simple(_) => vec![id],
            StmtTree::Block(body) => self.seq(body, vec![id])?,
            StmtTree::Return(_) => {
                self.edges.push((id, self.exit));
                Vec::new()
            }
            StmtTree::If { then_branch, else_branch, .. } => {
                let mut exits = self.seq(then_branch, vec![id])?;
                match else_branch {
                    Some(e) => exits.extend(self.seq(e, vec![id])?),
                    None => exits.push(id),
                }
                exits
            }
            StmtTree::While { body, .. } | StmtTree::For { body, .. } => {
                let tails = self.seq(body, vec![id])?;
                self.edges.extend(tails.into_iter().map(|t| (t, id)));
                vec![id]
            }
        })
    }
}

/// Builds the statement-level CFG. Fails if any statement has no path from entry.
pub fn build_cfg(function: &FunctionAst) -> Result<Cfg, CfgError> {
    let n = function.stmts.len();
    let mut b = Builder { func: function, edges: Vec::new(), exit: n + 1 };
    let tails = b.seq(&function.body, vec![n])?;
    let mut edges = b.edges;
    edges.extend(tails.into_iter().map(|t| (t, n + 1)));
    Ok(Cfg::from_edges(&function.name, n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn cfg_of(src: &str) -> Cfg {
        let u = parse_source(src, "t.mc").unwrap();
        build_cfg(&u.functions[0]).unwrap()
    }

    #[test]
    fn straight_line_is_a_path() {
        let g = cfg_of("int f(){ int a; a = 1; return a; }");
        assert_eq!(g.edges, vec![(0, 1), (1, 2), (2, 4), (3, 0)]);
        assert!(g.preds(g.entry()).is_empty());
        assert!(g.succs(g.exit()).is_empty());
    }

    #[test]
    fn if_else_is_a_diamond() {
        let g = cfg_of("int f(int c){ int x; if (c) { x = 1; } else { x = 2; } return x; }");
        // s1 = cond, s2/s3 branches, s4 = join
        assert_eq!(g.succs(1), &[2, 3]);
        assert_eq!(g.preds(4), &[2, 3]);
    }

    #[test]
    fn while_loop_has_back_edge() {
        let g = cfg_of("int f(int c){ while (c) { c = c - 1; c = c - 1; } return c; }");
        assert!(g.edges.contains(&(2, 0)));
        assert_eq!(g.succs(0), &[1, 3]);
    }

    #[test]
    fn empty_body_goes_entry_to_exit() {
        let g = cfg_of("void f(){ }");
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn code_after_exhaustive_returns_is_unreachable() {
        let err = parse_source("int f(int c){ if (c) { return 1; } else { return 2; } c = 3; }", "t");
        assert!(err.is_err());
    }

    #[test]
    fn every_node_on_entry_exit_path() {
        let g = cfg_of(
            "int f(int n){ int i; int s; s = 0; for (i = 0; i < n; i++) { if (i > 2) { s = s + i; } } { s = 1; } while (s) { s = s - 1; } return s; }",
        );
        let reach = |start: usize, forward: bool| {
            let mut seen = vec![false; g.len()];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if std::mem::replace(&mut seen[n], true) {
                    continue;
                }
                let next = if forward { g.succs(n) } else { g.preds(n) };
                stack.extend_from_slice(next);
            }
            seen
        };
        let from_entry = reach(g.entry(), true);
        let to_exit = reach(g.exit(), false);
        assert!((0..g.len()).all(|n| from_entry[n] && to_exit[n]));
    }
}
