//! Backward + forward inter-procedural slicing and warning-context extraction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::{DependenceEdge, EdgeKind, SdgNode, SystemDependenceGraph};
use crate::warnings::Warning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    RawFunction,
    ControlOnly,
    DataOnly,
    ControlAndData,
}

impl ContextMode {
    pub const ALL: [ContextMode; 4] =
        [ContextMode::RawFunction, ContextMode::ControlOnly, ContextMode::DataOnly, ContextMode::ControlAndData];

    pub fn name(self) -> &'static str {
        match self {
            ContextMode::RawFunction => "raw_function",
            ContextMode::ControlOnly => "control_only",
            ContextMode::DataOnly => "data_only",
            ContextMode::ControlAndData => "control_and_data",
        }
    }

    /// Whether slicing in this mode may follow an edge of `kind`.
    /// Call and parameter edges are followed in every slicing mode.
    pub fn allows(self, kind: EdgeKind) -> bool {
        match (self, kind) {
            (ContextMode::RawFunction, _) => false,
            (_, k) if k.is_interprocedural() => true,
            (ContextMode::ControlOnly, EdgeKind::Control) => true,
            (ContextMode::DataOnly, EdgeKind::Data) => true,
            (ContextMode::ControlAndData, _) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContextMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        ContextMode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| format!("unknown context mode `{s}` (expected raw_function, control_only, data_only or control_and_data)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("node {0} is not in the dependence graph")]
    UnknownNode(usize),
    #[error("raw_function is not a slicing mode")]
    NotASlicingMode,
    #[error("warning {id}: no statement at {file}:{line}")]
    UnresolvedWarning { id: String, file: String, line: u32 },
}

/// Ordered context for one warning. `statements` holds SDG node indices of
/// statements and global declarations, sorted by (file, line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarningContext {
    pub warning: Warning,
    pub mode: ContextMode,
    pub statements: Vec<usize>,
    pub reported: usize,
}

impl WarningContext {
    pub fn reported_index(&self) -> usize {
        self.statements.iter().position(|&s| s == self.reported).expect("reported statement is in its context")
    }

    pub fn texts<'a>(&self, sdg: &'a SystemDependenceGraph) -> Vec<&'a str> {
        self.statements.iter().map(|&ix| sdg.text(ix).expect("context nodes carry text")).collect()
    }
}

fn closure(
    n: usize,
    criterion: usize,
    forward: impl Fn(usize, &mut dyn FnMut(usize)),
    backward: impl Fn(usize, &mut dyn FnMut(usize)),
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    out.insert(criterion);
    for step in [&forward as &dyn Fn(usize, &mut dyn FnMut(usize)), &backward] {
        let mut seen = vec![false; n];
        seen[criterion] = true;
        let mut queue = VecDeque::from([criterion]);
        while let Some(x) = queue.pop_front() {
            step(x, &mut |y| {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            });
        }
        out.extend((0..n).filter(|&i| seen[i]));
    }
    out
}

/// Slice over a bare edge list with nodes `0..n`.
pub fn slice_edges(n: usize, edges: &[DependenceEdge], criterion: usize, mode: ContextMode) -> Result<BTreeSet<usize>, SliceError> {
    if criterion >= n {
        return Err(SliceError::UnknownNode(criterion));
    }
    if mode == ContextMode::RawFunction {
        return Err(SliceError::NotASlicingMode);
    }
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for e in edges.iter().filter(|e| mode.allows(e.kind)) {
        succ[e.src].push(e.dst);
        pred[e.dst].push(e.src);
    }
    Ok(closure(
        n,
        criterion,
        |x, visit| succ[x].iter().for_each(|&y| visit(y)),
        |x, visit| pred[x].iter().for_each(|&y| visit(y)),
    ))
}

/// Nodes reaching `criterion` or reachable from it over the edges `mode` enables.
pub fn slice(sdg: &SystemDependenceGraph, criterion: usize, mode: ContextMode) -> Result<BTreeSet<usize>, SliceError> {
    if criterion >= sdg.nodes.len() {
        return Err(SliceError::UnknownNode(criterion));
    }
    if mode == ContextMode::RawFunction {
        return Err(SliceError::NotASlicingMode);
    }
    Ok(closure(
        sdg.nodes.len(),
        criterion,
        |x, visit| sdg.out_edges(x).filter(|e| mode.allows(e.kind)).for_each(|e| visit(e.dst)),
        |x, visit| sdg.in_edges(x).filter(|e| mode.allows(e.kind)).for_each(|e| visit(e.src)),
    ))
}

/// The statement node a warning points at: the first statement on its line.
pub fn resolve_warning(sdg: &SystemDependenceGraph, warning: &Warning) -> Result<usize, SliceError> {
    let candidates = sdg.stmts_at(&warning.file, warning.line);
    let Some(&first) = candidates.first() else {
        return Err(SliceError::UnresolvedWarning {
            id: warning.id.clone(),
            file: warning.file.clone(),
            line: warning.line,
        });
    };
    if candidates.len() > 1 {
        log::warn!(
            "warning {}: {} statements on {}:{}, using the first",
            warning.id,
            candidates.len(),
            warning.file,
            warning.line
        );
    }
    Ok(first)
}

fn source_order(sdg: &SystemDependenceGraph, nodes: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = nodes.into_iter().filter(|&ix| sdg.is_code(ix)).collect();
    v.sort_by_key(|&ix| {
        let (file, line) = sdg.location(ix).expect("code nodes have locations");
        (file.to_string(), line, ix)
    });
    v
}

pub fn extract_context(sdg: &SystemDependenceGraph, warning: &Warning, mode: ContextMode) -> Result<WarningContext, SliceError> {
    let reported = resolve_warning(sdg, warning)?;
    let statements = match mode {
        ContextMode::RawFunction => {
            let SdgNode::Stmt { func, .. } = sdg.node(reported) else { unreachable!("resolved to a statement") };
            (0..sdg.function(func).stmts.len())
                .map(|i| sdg.index_of(&SdgNode::Stmt { func, stmt: crate::frontend::StmtId(i) }).expect("statement node"))
                .collect()
        }
        _ => source_order(sdg, slice(sdg, reported, mode)?),
    };
    Ok(WarningContext { warning: warning.clone(), mode, statements, reported })
}

/// Human-readable context listing: one `file:line  text` row per statement,
/// the reported statement marked with `>`.
pub fn render_context(sdg: &SystemDependenceGraph, ctx: &WarningContext) -> String {
    let mut s = String::new();
    for &ix in &ctx.statements {
        let (file, line) = sdg.location(ix).expect("code nodes have locations");
        let mark = if ix == ctx.reported { '>' } else { ' ' };
        s.push_str(&format!("{mark} {file}:{line:<5} {}\n", sdg.text(ix).unwrap_or("")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::build_sdg;
    use crate::frontend::parse_source;
    use crate::warnings::VulnKind;

    fn edge(src: usize, dst: usize, kind: EdgeKind) -> DependenceEdge {
        DependenceEdge { src, dst, kind, var: None }
    }

    fn warning(file: &str, line: u32) -> Warning {
        Warning {
            id: "w".into(),
            file: file.into(),
            function: "f".into(),
            line,
            kind: VulnKind::BufferOverflow,
            detector: "t".into(),
            label: None,
        }
    }

    #[test]
    fn isolated_node_slices_to_itself() {
        let s = slice_edges(3, &[], 1, ContextMode::ControlAndData).unwrap();
        assert_eq!(s, BTreeSet::from([1]));
    }

    #[test]
    fn chain_through_middle() {
        let edges = [edge(0, 1, EdgeKind::Data), edge(1, 2, EdgeKind::Data)];
        let s = slice_edges(3, &edges, 1, ContextMode::DataOnly).unwrap();
        assert_eq!(s, BTreeSet::from([0, 1, 2]));
        assert_eq!(slice_edges(3, &edges, 1, ContextMode::ControlOnly).unwrap(), BTreeSet::from([1]));
    }

    #[test]
    fn slice_is_not_transitive_across_directions() {
        // 0 -> 1 <- 2: slicing from 0 reaches 1 forward but never 2.
        let edges = [edge(0, 1, EdgeKind::Data), edge(2, 1, EdgeKind::Data)];
        assert_eq!(slice_edges(3, &edges, 0, ContextMode::DataOnly).unwrap(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn call_edges_survive_every_slicing_mode() {
        let edges = [edge(0, 1, EdgeKind::Call), edge(1, 2, EdgeKind::ParamOut)];
        for mode in [ContextMode::ControlOnly, ContextMode::DataOnly] {
            assert_eq!(slice_edges(3, &edges, 0, mode).unwrap(), BTreeSet::from([0, 1, 2]));
        }
    }

    #[test]
    fn errors() {
        assert_eq!(slice_edges(2, &[], 5, ContextMode::DataOnly), Err(SliceError::UnknownNode(5)));
        assert_eq!(slice_edges(2, &[], 0, ContextMode::RawFunction), Err(SliceError::NotASlicingMode));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ContextMode::ALL {
            assert_eq!(m.name().parse::<ContextMode>().unwrap(), m);
        }
        assert_eq!("control-and-data".parse::<ContextMode>().unwrap(), ContextMode::ControlAndData);
    }

    const SRC: &str = "int f(int n) {\n  int a = 1;\n  int b = 2;\n  int c = a + n;\n  int d = b;\n  return c;\n}\n";

    #[test]
    fn raw_function_lists_every_statement() {
        let u = parse_source(SRC, "t.mc").unwrap();
        let sdg = build_sdg(&[u]).unwrap();
        let ctx = extract_context(&sdg, &warning("t.mc", 6), ContextMode::RawFunction).unwrap();
        assert_eq!(ctx.statements.len(), 5);
        let lines: Vec<u32> = ctx.statements.iter().map(|&i| sdg.location(i).unwrap().1).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn control_only_on_straight_line_is_reported_only() {
        let u = parse_source(SRC, "t.mc").unwrap();
        let sdg = build_sdg(&[u]).unwrap();
        let ctx = extract_context(&sdg, &warning("t.mc", 5), ContextMode::ControlOnly).unwrap();
        assert_eq!(ctx.statements, vec![ctx.reported]);
    }

    #[test]
    fn data_slice_follows_def_chain_only() {
        let u = parse_source(SRC, "t.mc").unwrap();
        let sdg = build_sdg(&[u]).unwrap();
        let ctx = extract_context(&sdg, &warning("t.mc", 6), ContextMode::DataOnly).unwrap();
        let lines: Vec<u32> = ctx.statements.iter().map(|&i| sdg.location(i).unwrap().1).collect();
        assert_eq!(lines, vec![2, 4, 6]);
        assert_eq!(ctx.texts(&sdg)[2], "return c;");
    }

    #[test]
    fn unknown_line_is_unresolved() {
        let u = parse_source(SRC, "t.mc").unwrap();
        let sdg = build_sdg(&[u]).unwrap();
        let err = extract_context(&sdg, &warning("t.mc", 1), ContextMode::DataOnly).unwrap_err();
        assert!(matches!(err, SliceError::UnresolvedWarning { line: 1, .. }));
    }

    #[test]
    fn first_statement_on_shared_line_is_chosen() {
        let u = parse_source("void f() { int a = 1; int b = a; }", "t.mc").unwrap();
        let sdg = build_sdg(&[u]).unwrap();
        let ix = resolve_warning(&sdg, &warning("t.mc", 1)).unwrap();
        assert_eq!(sdg.stmt(ix).unwrap().text, "int a = 1;");
    }
}
