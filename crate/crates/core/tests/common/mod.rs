//! Brute-force reference implementations and random generators shared by the
//! integration tests. Nothing here reuses the library's own algorithms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use warnrank::dependence::{DependenceEdge, EdgeKind};
use warnrank::eval::{RankedEntry, RankedList};
use warnrank::frontend::Cfg;
use warnrank::slicer::ContextMode;
use warnrank::warnings::Label;

pub const EDGE_KINDS: [EdgeKind; 5] = [EdgeKind::Control, EdgeKind::Data, EdgeKind::Call, EdgeKind::ParamIn, EdgeKind::ParamOut];

pub fn random_edge_list(rng: &mut impl Rng, n: usize) -> Vec<DependenceEdge> {
    let m = rng.gen_range(0..=n * 2);
    (0..m)
        .map(|_| DependenceEdge {
            src: rng.gen_range(0..n),
            dst: rng.gen_range(0..n),
            kind: *EDGE_KINDS.choose(rng).unwrap(),
            var: None,
        })
        .collect()
}

fn edge_followed(mode: ContextMode, kind: EdgeKind) -> bool {
    match kind {
        EdgeKind::Call | EdgeKind::ParamIn | EdgeKind::ParamOut => true,
        EdgeKind::Control => matches!(mode, ContextMode::ControlOnly | ContextMode::ControlAndData),
        EdgeKind::Data => matches!(mode, ContextMode::DataOnly | ContextMode::ControlAndData),
    }
}

/// Warshall closure: the criterion, everything that reaches it and everything it reaches.
pub fn slice_oracle(n: usize, edges: &[DependenceEdge], criterion: usize, mode: ContextMode) -> BTreeSet<usize> {
    let mut reach = vec![vec![false; n]; n];
    for e in edges.iter().filter(|e| edge_followed(mode, e.kind)) {
        reach[e.src][e.dst] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).filter(|&v| v == criterion || reach[v][criterion] || reach[criterion][v]).collect()
}

/// A CFG over `n_stmts` statements (ENTRY = n_stmts, EXIT = n_stmts + 1) in
/// which every statement is reachable from ENTRY and reaches EXIT.
pub fn random_cfg(rng: &mut impl Rng, n_stmts: usize, acyclic: bool) -> Cfg {
    let (entry, exit) = (n_stmts, n_stmts + 1);
    loop {
        let mut edges = vec![(entry, 0)];
        if rng.gen_bool(0.3) {
            edges.push((entry, exit));
        }
        for s in 0..n_stmts {
            let targets: Vec<usize> =
                if acyclic { (s + 1..n_stmts).chain([exit]).collect() } else { (0..n_stmts).chain([exit]).collect() };
            for _ in 0..rng.gen_range(1..=2) {
                edges.push((s, *targets.choose(rng).unwrap()));
            }
        }
        let cfg = Cfg::from_edges("g", n_stmts, edges);
        let fwd = reachable(&cfg, entry, None);
        if (0..n_stmts).all(|s| fwd.contains(&s) && reachable(&cfg, s, None).contains(&exit)) {
            return cfg;
        }
    }
}

/// Nodes reachable from `from` (inclusive) without stepping on `avoid`.
pub fn reachable(cfg: &Cfg, from: usize, avoid: Option<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    if Some(from) == avoid {
        return seen;
    }
    let mut stack = vec![from];
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            stack.extend(cfg.succs(x).iter().copied().filter(|&y| Some(y) != avoid));
        }
    }
    seen
}

/// `y` post-dominates `x`: every path from `x` to EXIT passes through `y`.
pub fn post_dominates(cfg: &Cfg, y: usize, x: usize) -> bool {
    x == y || !reachable(cfg, x, Some(y)).contains(&cfg.exit())
}

/// Control dependence by definition: `s` depends on branch `m` iff `s`
/// post-dominates some successor of `m` but does not strictly post-dominate `m`.
pub fn control_dependence_oracle(cfg: &Cfg) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for m in 0..cfg.n_stmts {
        for s in 0..cfg.n_stmts {
            let strictly = s != m && post_dominates(cfg, s, m);
            if !strictly && cfg.succs(m).iter().any(|&z| post_dominates(cfg, s, z)) {
                out.push((m, s));
            }
        }
    }
    out
}

pub const VARS: [&str; 3] = ["a", "b", "c"];

pub fn random_defs(rng: &mut impl Rng, n_stmts: usize) -> Vec<BTreeSet<String>> {
    (0..n_stmts)
        .map(|_| VARS.iter().filter(|_| rng.gen_bool(0.35)).map(|v| v.to_string()).collect())
        .collect()
}

/// Every ENTRY-to-`target` path of an acyclic CFG.
pub fn enumerate_paths(cfg: &Cfg, target: usize) -> Vec<Vec<usize>> {
    fn go(cfg: &Cfg, at: usize, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        path.push(at);
        if at == target {
            out.push(path.clone());
        } else {
            for &s in cfg.succs(at) {
                go(cfg, s, target, path, out);
            }
        }
        path.pop();
    }
    let mut out = Vec::new();
    go(cfg, cfg.entry(), target, &mut Vec::new(), &mut out);
    out
}

/// `(site, var)` pairs reaching the start of `target`, by walking every path
/// and keeping the last definition of each variable before `target`.
pub fn reaching_oracle_acyclic(cfg: &Cfg, defs: &[BTreeSet<String>], target: usize) -> BTreeSet<(usize, String)> {
    let mut out = BTreeSet::new();
    for path in enumerate_paths(cfg, target) {
        let mut last: BTreeMap<&str, usize> = BTreeMap::new();
        for &node in &path[..path.len() - 1] {
            let here: Vec<&str> = if node == cfg.entry() {
                VARS.to_vec()
            } else if cfg.is_stmt(node) {
                defs[node].iter().map(String::as_str).collect()
            } else {
                Vec::new()
            };
            for v in here {
                last.insert(v, node);
            }
        }
        out.extend(last.into_iter().map(|(v, site)| (site, v.to_string())));
    }
    out
}

/// Same question for graphs with cycles: a definition reaches `target` if
/// `target` can be entered from the defining node along nodes that do not
/// redefine the variable.
pub fn reaching_oracle_search(cfg: &Cfg, defs: &[BTreeSet<String>], target: usize) -> BTreeSet<(usize, String)> {
    let defines = |node: usize, v: &str| -> bool {
        node == cfg.entry() || (cfg.is_stmt(node) && defs[node].contains(v))
    };
    let mut out = BTreeSet::new();
    for site in 0..cfg.len() {
        for v in VARS {
            if !defines(site, v) || !reachable(cfg, cfg.entry(), None).contains(&site) {
                continue;
            }
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = cfg.succs(site).to_vec();
            let mut hit = false;
            while let Some(x) = stack.pop() {
                if x == target {
                    hit = true;
                    break;
                }
                if !seen.insert(x) || defines(x, v) {
                    continue;
                }
                stack.extend(cfg.succs(x).iter().copied());
            }
            if hit {
                out.insert((site, v.to_string()));
            }
        }
    }
    out
}

/// Ranked list with ids `w{i}` from scores; ties broken by id.
pub fn ranked_from(scores: &[f64]) -> RankedList {
    let mut entries: Vec<RankedEntry> =
        scores.iter().enumerate().map(|(i, &s)| RankedEntry { id: format!("w{i:03}"), score: s }).collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    RankedList { entries }
}

pub fn labels_from(tp: &[bool]) -> BTreeMap<String, Label> {
    tp.iter()
        .enumerate()
        .map(|(i, &t)| (format!("w{i:03}"), if t { Label::TruePositive } else { Label::FalsePositive }))
        .collect()
}

/// Smallest head length `h` with `h / n >= k / 100`.
pub fn head_len_oracle(n: usize, k: u32) -> usize {
    (0..=n).find(|&h| 100 * h >= k as usize * n).unwrap()
}

/// `(tp_in_head, head_len, total_tp)` for a ranked list of labels.
pub fn topk_counts(ranked_tp: &[bool], k: u32) -> (usize, usize, usize) {
    let h = head_len_oracle(ranked_tp.len(), k);
    (ranked_tp[..h].iter().filter(|&&t| t).count(), h, ranked_tp.iter().filter(|&&t| t).count())
}
