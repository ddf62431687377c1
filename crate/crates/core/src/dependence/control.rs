use std::collections::BTreeSet;

use super::postdom::{immediate_post_dominators, post_dominators};
use crate::frontend::Cfg;

/// Control-dependence pairs `(branch, dependent)` over statement nodes.
///
/// For every CFG edge `m -> s` where `s` does not post-dominate `m`, walks the
/// post-dominator tree from `s` up to (excluding) `ipdom(m)`; every node on
/// that walk is control dependent on `m`. Loop headers become dependent on
/// themselves, including through a self edge `m -> m`.
pub fn control_dependence(cfg: &Cfg) -> Vec<(usize, usize)> {
    let pdom = post_dominators(cfg);
    let ipdom = immediate_post_dominators(&pdom);
    let mut out = BTreeSet::new();
    for &(m, s) in &cfg.edges {
        if !cfg.is_stmt(m) || (s != m && pdom[m].contains(&s)) {
            continue;
        }
        let stop = ipdom[m];
        let mut runner = Some(s);
        while let Some(r) = runner {
            if Some(r) == stop {
                break;
            }
            if cfg.is_stmt(r) {
                out.insert((m, r));
            }
            runner = ipdom[r];
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfg, parse_source};

    fn cd(src: &str) -> Vec<(usize, usize)> {
        let u = parse_source(src, "t").unwrap();
        control_dependence(&build_cfg(&u.functions[0]).unwrap())
    }

    #[test]
    fn straight_line_has_none() {
        assert!(cd("int f(){ int a; a = 1; return a; }").is_empty());
    }

    #[test]
    fn if_then() {
        // s0 = if, s1 = then
        assert_eq!(cd("int f(int c){ if (c) { c = 1; } return c; }"), vec![(0, 1)]);
    }

    #[test]
    fn if_else_both_branches() {
        assert_eq!(
            cd("int f(int c){ if (c) { c = 1; } else { c = 2; } return c; }"),
            vec![(0, 1), (0, 2)]
        );
    }

    #[test]
    fn while_loop_self_dependence() {
        let edges = cd("int f(int c){ while (c) { c = c - 1; c = c + 0; } return c; }");
        assert_eq!(edges, vec![(0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn empty_loop_body_depends_on_itself() {
        assert_eq!(cd("int f(int c){ while (c) { } return c; }"), vec![(0, 0)]);
    }

    #[test]
    fn nested_branch_in_loop() {
        // s0 for, s1 if, s2 then
        let edges = cd("int f(int n){ for (n = n; n > 0; n--) { if (n > 3) { n = 1; } } return n; }");
        assert!(edges.contains(&(0, 0)));
        assert!(edges.contains(&(0, 1)));
        assert!(edges.contains(&(1, 2)));
        assert!(!edges.contains(&(0, 2)));
    }
}
