use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::control::control_dependence;
use super::data::data_dependence;
use super::function_defs;
use crate::frontend::{build_cfg, Stmt, StmtId, StmtKind, TranslationUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuncId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SdgNode {
    Stmt { func: FuncId, stmt: StmtId },
    Entry(FuncId),
    FormalIn { func: FuncId, param: usize },
    /// A global read inside `func`, fed from the global's declaration.
    GlobalIn { func: FuncId, global: GlobalId },
    /// The declaration (and initializer) of a global variable.
    Global(GlobalId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Control,
    Data,
    Call,
    ParamIn,
    ParamOut,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Control => "control",
            EdgeKind::Data => "data",
            EdgeKind::Call => "call",
            EdgeKind::ParamIn => "param-in",
            EdgeKind::ParamOut => "param-out",
        }
    }

    pub fn is_interprocedural(self) -> bool {
        matches!(self, EdgeKind::Call | EdgeKind::ParamIn | EdgeKind::ParamOut)
    }
}

/// Edge between two SDG node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependenceEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    pub var: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdgError {
    #[error("function `{name}` defined in both {first} and {second}")]
    DuplicateFunction { name: String, first: String, second: String },
}

#[derive(Debug, Clone)]
pub struct FuncInfo {
    pub name: String,
    pub unit: usize,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct GlobalInfo {
    pub name: String,
    pub unit: usize,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct SystemDependenceGraph {
    pub units: Vec<TranslationUnit>,
    pub functions: Vec<FuncInfo>,
    pub globals: Vec<GlobalInfo>,
    pub nodes: Vec<SdgNode>,
    pub edges: Vec<DependenceEdge>,
    pub call_graph: BTreeMap<String, BTreeSet<String>>,
    index: HashMap<SdgNode, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    by_line: HashMap<(String, u32), Vec<usize>>,
}

impl SystemDependenceGraph {
    pub fn node(&self, ix: usize) -> SdgNode {
        self.nodes[ix]
    }

    pub fn index_of(&self, node: &SdgNode) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.functions.iter().position(|f| f.name == name).map(FuncId)
    }

    pub fn function(&self, id: FuncId) -> &crate::frontend::FunctionAst {
        let f = &self.functions[id.0];
        &self.units[f.unit].functions[f.index]
    }

    pub fn unit_of(&self, id: FuncId) -> &TranslationUnit {
        &self.units[self.functions[id.0].unit]
    }

    pub fn stmt_node(&self, func: &str, stmt: StmtId) -> Option<usize> {
        let func = self.func_id(func)?;
        self.index_of(&SdgNode::Stmt { func, stmt })
    }

    pub fn stmt(&self, ix: usize) -> Option<&Stmt> {
        match self.nodes[ix] {
            SdgNode::Stmt { func, stmt } => Some(self.function(func).stmt(stmt)),
            _ => None,
        }
    }

    pub fn out_edges(&self, ix: usize) -> impl Iterator<Item = &DependenceEdge> {
        self.out_edges[ix].iter().map(move |&e| &self.edges[e])
    }

    pub fn in_edges(&self, ix: usize) -> impl Iterator<Item = &DependenceEdge> {
        self.in_edges[ix].iter().map(move |&e| &self.edges[e])
    }

    /// `(file, line)` for statement and global nodes.
    pub fn location(&self, ix: usize) -> Option<(&str, u32)> {
        match self.nodes[ix] {
            SdgNode::Stmt { func, stmt } => {
                Some((self.unit_of(func).source_id.as_str(), self.function(func).stmt(stmt).line))
            }
            SdgNode::Global(g) => {
                let info = &self.globals[g.0];
                let unit = &self.units[info.unit];
                Some((unit.source_id.as_str(), unit.globals[info.index].line))
            }
            _ => None,
        }
    }

    /// Statement nodes on a source line, in node order.
    pub fn stmts_at(&self, file: &str, line: u32) -> &[usize] {
        self.by_line.get(&(file.to_string(), line)).map_or(&[], Vec::as_slice)
    }

    /// Source text for statement and global nodes.
    pub fn text(&self, ix: usize) -> Option<&str> {
        match self.nodes[ix] {
            SdgNode::Stmt { .. } => self.stmt(ix).map(|s| s.text.as_str()),
            SdgNode::Global(g) => {
                let info = &self.globals[g.0];
                Some(self.units[info.unit].globals[info.index].text.as_str())
            }
            _ => None,
        }
    }

    /// Context-bearing nodes: statements and global declarations.
    pub fn is_code(&self, ix: usize) -> bool {
        matches!(self.nodes[ix], SdgNode::Stmt { .. } | SdgNode::Global(_))
    }

    pub fn label(&self, ix: usize) -> String {
        match self.nodes[ix] {
            SdgNode::Stmt { func, stmt } => format!("{}:{}", self.functions[func.0].name, stmt),
            SdgNode::Entry(func) => format!("{}:entry", self.functions[func.0].name),
            SdgNode::FormalIn { func, param } => {
                format!("{}:in:{}", self.functions[func.0].name, self.function(func).params[param].name)
            }
            SdgNode::GlobalIn { func, global } => {
                format!("{}:global-in:{}", self.functions[func.0].name, self.globals[global.0].name)
            }
            SdgNode::Global(g) => {
                let info = &self.globals[g.0];
                format!("{}:{}", self.units[info.unit].source_id, info.name)
            }
        }
    }

    /// Debug export: one `src dst kind var` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                self.label(e.src),
                self.label(e.dst),
                e.kind.name(),
                e.var.as_deref().unwrap_or("-")
            );
        }
        s
    }

    /// Builds a graph from raw parts; adjacency is derived here.
    fn assemble(
        units: Vec<TranslationUnit>,
        functions: Vec<FuncInfo>,
        globals: Vec<GlobalInfo>,
        nodes: Vec<SdgNode>,
        edges: BTreeSet<DependenceEdge>,
        call_graph: BTreeMap<String, BTreeSet<String>>,
    ) -> Self {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.src].push(i);
            in_edges[e.dst].push(i);
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut g = SystemDependenceGraph {
            units,
            functions,
            globals,
            nodes,
            edges,
            call_graph,
            index,
            out_edges,
            in_edges,
            by_line: HashMap::new(),
        };
        for ix in 0..g.nodes.len() {
            if let SdgNode::Stmt { .. } = g.nodes[ix] {
                let (file, line) = g.location(ix).expect("statement nodes have locations");
                g.by_line.entry((file.to_string(), line)).or_default().push(ix);
            }
        }
        g
    }
}

/// Joins per-function PDGs into one inter-procedural graph.
pub fn build_sdg(units: &[TranslationUnit]) -> Result<SystemDependenceGraph, SdgError> {
    let mut functions = Vec::new();
    let mut by_name: HashMap<&str, FuncId> = HashMap::new();
    for (ui, u) in units.iter().enumerate() {
        for (fi, f) in u.functions.iter().enumerate() {
            if let Some(prev) = by_name.get(f.name.as_str()) {
                let first: &FuncInfo = &functions[prev.0];
                return Err(SdgError::DuplicateFunction {
                    name: f.name.clone(),
                    first: units[first.unit].source_id.clone(),
                    second: u.source_id.clone(),
                });
            }
            by_name.insert(&f.name, FuncId(functions.len()));
            functions.push(FuncInfo { name: f.name.clone(), unit: ui, index: fi });
        }
    }
    let mut globals = Vec::new();
    let mut global_ids: HashMap<(usize, &str), GlobalId> = HashMap::new();
    for (ui, u) in units.iter().enumerate() {
        for (gi, g) in u.globals.iter().enumerate() {
            global_ids.insert((ui, g.decl.name.as_str()), GlobalId(globals.len()));
            globals.push(GlobalInfo { name: g.decl.name.clone(), unit: ui, index: gi });
        }
    }

    // Nodes: per function ENTRY, formals, globals it touches, statements; then globals.
    let mut nodes = Vec::new();
    for (fid, info) in functions.iter().enumerate() {
        let func = FuncId(fid);
        let f = &units[info.unit].functions[info.index];
        nodes.push(SdgNode::Entry(func));
        nodes.extend((0..f.params.len()).map(|param| SdgNode::FormalIn { func, param }));
        let touched: BTreeSet<GlobalId> = f
            .stmts
            .iter()
            .flat_map(|s| s.defs.iter().chain(&s.uses))
            .filter_map(|v| global_ids.get(&(info.unit, v.as_str())).copied())
            .collect();
        nodes.extend(touched.into_iter().map(|global| SdgNode::GlobalIn { func, global }));
        nodes.extend((0..f.stmts.len()).map(|s| SdgNode::Stmt { func, stmt: StmtId(s) }));
    }
    nodes.extend((0..globals.len()).map(|g| SdgNode::Global(GlobalId(g))));
    let index: HashMap<SdgNode, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    let mut edges = BTreeSet::new();
    let mut call_graph: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    // Per-function PDGs.
    for (fid, info) in functions.iter().enumerate() {
        let func = FuncId(fid);
        let unit = &units[info.unit];
        let f = &unit.functions[info.index];
        let stmt_ix: Vec<usize> = (0..f.stmts.len()).map(|s| index[&SdgNode::Stmt { func, stmt: StmtId(s) }]).collect();
        let global_nodes = |name: &str| -> Option<(usize, usize)> {
            let g = *global_ids.get(&(info.unit, name))?;
            Some((index[&SdgNode::Global(g)], index[&SdgNode::GlobalIn { func, global: g }]))
        };

        let cfg = build_cfg(f).expect("units are validated at parse time");
        for (m, n) in control_dependence(&cfg) {
            edges.insert(DependenceEdge { src: stmt_ix[m], dst: stmt_ix[n], kind: EdgeKind::Control, var: None });
        }

        let (defs, entry_defs) = function_defs(f, unit);
        let uses: Vec<_> = f.stmts.iter().map(|s| s.uses.clone()).collect();
        for dep in data_dependence(&cfg, &defs, &uses, &entry_defs) {
            let src = if cfg.is_stmt(dep.src) {
                stmt_ix[dep.src]
            } else if let Some(p) = f.params.iter().position(|p| p.name == dep.var) {
                index[&SdgNode::FormalIn { func, param: p }]
            } else {
                let (global, global_in) = global_nodes(&dep.var).expect("entry defs are params or globals");
                edges.insert(DependenceEdge {
                    src: global,
                    dst: global_in,
                    kind: EdgeKind::ParamIn,
                    var: Some(dep.var.clone()),
                });
                global_in
            };
            edges.insert(DependenceEdge { src, dst: stmt_ix[dep.dst], kind: EdgeKind::Data, var: Some(dep.var) });
        }

        // Global writes that survive to function exit flow back to the declaration.
        let rd = super::reaching::reaching_definitions(&cfg, &defs, &entry_defs);
        for d in &rd.input[cfg.exit()] {
            if cfg.is_stmt(d.site) && !f.params.iter().any(|p| p.name == d.var) {
                if let Some((global, _)) = global_nodes(&d.var) {
                    edges.insert(DependenceEdge {
                        src: stmt_ix[d.site],
                        dst: global,
                        kind: EdgeKind::ParamOut,
                        var: Some(d.var.clone()),
                    });
                }
            }
        }
        call_graph.entry(f.name.clone()).or_default();
    }

    // Inter-procedural edges.
    for (fid, info) in functions.iter().enumerate() {
        let f = &units[info.unit].functions[info.index];
        for s in &f.stmts {
            let site = index[&SdgNode::Stmt { func: FuncId(fid), stmt: s.id }];
            for callee_name in &s.callees {
                let Some(&callee) = by_name.get(callee_name.as_str()) else {
                    continue;
                };
                call_graph.entry(f.name.clone()).or_default().insert(callee_name.clone());
                let cinfo = &functions[callee.0];
                let cf = &units[cinfo.unit].functions[cinfo.index];
                edges.insert(DependenceEdge {
                    src: site,
                    dst: index[&SdgNode::Entry(callee)],
                    kind: EdgeKind::Call,
                    var: None,
                });
                let n_args = call_arg_count(f, s.id, callee_name);
                for (p, param) in cf.params.iter().enumerate().take(n_args) {
                    edges.insert(DependenceEdge {
                        src: site,
                        dst: index[&SdgNode::FormalIn { func: callee, param: p }],
                        kind: EdgeKind::ParamIn,
                        var: Some(param.name.clone()),
                    });
                }
                for r in cf.stmts.iter().filter(|r| r.kind == StmtKind::Return && r.text != "return;") {
                    edges.insert(DependenceEdge {
                        src: index[&SdgNode::Stmt { func: callee, stmt: r.id }],
                        dst: site,
                        kind: EdgeKind::ParamOut,
                        var: None,
                    });
                }
            }
        }
    }

    Ok(SystemDependenceGraph::assemble(units.to_vec(), functions, globals, nodes, edges, call_graph))
}

fn call_arg_count(f: &crate::frontend::FunctionAst, stmt: StmtId, callee: &str) -> usize {
    use crate::frontend::ast::{SimpleStmt, StmtTree};
    let Some(node) = f.node(stmt) else { return 0 };
    let mut exprs = Vec::new();
    match &node.tree {
        StmtTree::Decl { init: Some(e), .. } | StmtTree::Return(Some(e)) => exprs.push(e),
        StmtTree::If { cond, .. } | StmtTree::While { cond, .. } => exprs.push(cond),
        StmtTree::Simple(s) => push_simple(s, &mut exprs),
        StmtTree::For { init, cond, step, .. } => {
            if let Some(s) = init {
                push_simple(s, &mut exprs);
            }
            if let Some(c) = cond {
                exprs.push(c);
            }
            if let Some(s) = step {
                push_simple(s, &mut exprs);
            }
        }
        _ => {}
    }
    fn push_simple<'a>(s: &'a SimpleStmt, out: &mut Vec<&'a crate::frontend::ast::Expr>) {
        match s {
            SimpleStmt::Assign { target, value, .. } => {
                out.push(target);
                out.push(value);
            }
            SimpleStmt::Step { target, .. } => out.push(target),
            SimpleStmt::Call(e) => out.push(e),
        }
    }
    let mut calls = Vec::new();
    for e in exprs {
        e.visit_calls(&mut calls);
    }
    calls.iter().filter(|(c, _)| *c == callee).map(|(_, a)| a.len()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn sdg(srcs: &[&str]) -> SystemDependenceGraph {
        let units: Vec<_> =
            srcs.iter().enumerate().map(|(i, s)| parse_source(s, &format!("u{i}.mc")).unwrap()).collect();
        build_sdg(&units).unwrap()
    }

    fn has(g: &SystemDependenceGraph, src: &str, dst: &str, kind: EdgeKind) -> bool {
        g.edges.iter().any(|e| g.label(e.src) == src && g.label(e.dst) == dst && e.kind == kind)
    }

    #[test]
    fn call_param_return_path() {
        let g = sdg(&["int id(int v){ return v; }\nint main(){ int r; r = id(7); return r; }"]);
        // main: s0 int r; s1 r = id(7); s2 return r;
        assert!(has(&g, "main:s1", "id:entry", EdgeKind::Call));
        assert!(has(&g, "main:s1", "id:in:v", EdgeKind::ParamIn));
        assert!(has(&g, "id:in:v", "id:s0", EdgeKind::Data));
        assert!(has(&g, "id:s0", "main:s1", EdgeKind::ParamOut));
        assert!(has(&g, "main:s1", "main:s2", EdgeKind::Data));
        assert_eq!(g.call_graph["main"], BTreeSet::from(["id".to_string()]));
    }

    #[test]
    fn independent_functions_are_disjoint() {
        let g = sdg(&["int a(){ int x = 1; return x; }\nint b(){ int y = 2; return y; }"]);
        for e in &g.edges {
            assert!(!e.kind.is_interprocedural());
            let fa = |ix: usize| g.label(ix).split(':').next().unwrap().to_string();
            assert_eq!(fa(e.src), fa(e.dst));
        }
    }

    #[test]
    fn duplicate_function_across_units() {
        let units = vec![
            parse_source("int f(){ return 0; }", "a.mc").unwrap(),
            parse_source("int f(){ return 1; }", "b.mc").unwrap(),
        ];
        assert!(matches!(build_sdg(&units), Err(SdgError::DuplicateFunction { .. })));
    }

    #[test]
    fn globals_flow_through_declaration() {
        let g = sdg(&["int g = 1;\nvoid set(){ g = 5; }\nint get(){ return g; }"]);
        assert!(has(&g, "set:s0", "u0.mc:g", EdgeKind::ParamOut));
        assert!(has(&g, "u0.mc:g", "get:global-in:g", EdgeKind::ParamIn));
        assert!(has(&g, "get:global-in:g", "get:s0", EdgeKind::Data));
    }

    #[test]
    fn edge_kinds_partition_and_locality() {
        let g = sdg(&[
            "int h(int a){ if (a > 0) { a = a - 1; } return a; }\nint m(int n){ int k; k = h(n); while (k > 0) { k = h(k); } return k; }",
        ]);
        let func_of = |ix: usize| match g.node(ix) {
            SdgNode::Stmt { func, .. } | SdgNode::Entry(func) | SdgNode::FormalIn { func, .. } | SdgNode::GlobalIn { func, .. } => Some(func),
            SdgNode::Global(_) => None,
        };
        for e in &g.edges {
            if matches!(e.kind, EdgeKind::Control | EdgeKind::Data) {
                assert_eq!(func_of(e.src), func_of(e.dst), "{}", g.to_edge_list());
            }
            if e.kind == EdgeKind::Data {
                assert!(e.var.is_some());
            }
        }
        let mut sorted = g.edges.clone();
        sorted.sort();
        assert_eq!(sorted, g.edges);
    }

    #[test]
    fn build_is_deterministic() {
        let src = "int h(int a){ return a + 1; }\nint m(){ int x; x = h(1); x = h(x); return x; }";
        assert_eq!(sdg(&[src]).to_edge_list(), sdg(&[src]).to_edge_list());
    }
}
