use std::collections::{BTreeSet, VecDeque};

use crate::frontend::Cfg;

/// A definition of `var` at CFG node `site` (ENTRY stands for parameters and globals).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Definition {
    pub site: usize,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachingDefs {
    pub input: Vec<BTreeSet<Definition>>,
    pub output: Vec<BTreeSet<Definition>>,
}

/// Forward may-analysis: `out(n) = gen(n) ∪ (in(n) \ kill(n))`, `in(n)` the
/// union over predecessors. `defs[i]` is the def set of statement `i`;
/// `entry_defs` are the variables defined on function entry.
pub fn reaching_definitions(cfg: &Cfg, defs: &[BTreeSet<String>], entry_defs: &BTreeSet<String>) -> ReachingDefs {
    let n = cfg.len();
    let defined_at = |node: usize| -> Option<&BTreeSet<String>> {
        if cfg.is_stmt(node) {
            Some(&defs[node])
        } else if node == cfg.entry() {
            Some(entry_defs)
        } else {
            None
        }
    };

    let mut input = vec![BTreeSet::new(); n];
    let mut output: Vec<BTreeSet<Definition>> = vec![BTreeSet::new(); n];
    let mut queued = vec![true; n];
    let mut work: VecDeque<usize> = (0..n).collect();

    while let Some(node) = work.pop_front() {
        queued[node] = false;
        let mut inn = BTreeSet::new();
        for &p in cfg.preds(node) {
            inn.extend(output[p].iter().cloned());
        }
        let out = match defined_at(node) {
            Some(d) if !d.is_empty() => {
                let mut out: BTreeSet<Definition> =
                    inn.iter().filter(|def| !d.contains(&def.var)).cloned().collect();
                out.extend(d.iter().map(|v| Definition { site: node, var: v.clone() }));
                out
            }
            _ => inn.clone(),
        };
        input[node] = inn;
        if out != output[node] {
            output[node] = out;
            for &s in cfg.succs(node) {
                if !queued[s] {
                    queued[s] = true;
                    work.push_back(s);
                }
            }
        }
    }
    ReachingDefs { input, output }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::function_defs;
    use crate::frontend::{build_cfg, parse_source};

    fn rd(src: &str) -> (Cfg, ReachingDefs) {
        let u = parse_source(src, "t").unwrap();
        let f = &u.functions[0];
        let cfg = build_cfg(f).unwrap();
        let (defs, entry) = function_defs(f, &u);
        let r = reaching_definitions(&cfg, &defs, &entry);
        (cfg, r)
    }

    fn def(site: usize, var: &str) -> Definition {
        Definition { site, var: var.into() }
    }

    #[test]
    fn definition_reaches_next_use() {
        // s0 int a; s1 int b; s2 a = 1; s3 b = a;
        let (_, r) = rd("void f(){ int a; int b; a = 1; b = a; }");
        assert!(r.input[3].contains(&def(2, "a")));
        assert!(!r.input[3].contains(&def(0, "a")));
    }

    #[test]
    fn later_definition_kills_earlier() {
        let (_, r) = rd("void f(){ int a; int b; a = 1; a = 2; b = a; }");
        let a_defs: Vec<_> = r.input[4].iter().filter(|d| d.var == "a").collect();
        assert_eq!(a_defs, vec![&def(3, "a")]);
    }

    #[test]
    fn loop_carried_definition_reaches_condition() {
        // s0 while (c), s1 c = c - 1
        let (_, r) = rd("int f(int c){ while (c) { c = c - 1; } return c; }");
        assert!(r.input[0].contains(&def(1, "c")));
        // parameter definition arrives from ENTRY (node 3)
        assert!(r.input[0].contains(&def(3, "c")));
    }
}
