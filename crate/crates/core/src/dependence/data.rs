use std::collections::BTreeSet;

use super::reaching::reaching_definitions;
use crate::frontend::Cfg;

/// `src` defines `var`, `dst` uses it, and the definition reaches `dst`.
/// `src` may be the ENTRY node (parameter or global definition).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataDep {
    pub src: usize,
    pub dst: usize,
    pub var: String,
}

pub fn data_dependence(
    cfg: &Cfg,
    defs: &[BTreeSet<String>],
    uses: &[BTreeSet<String>],
    entry_defs: &BTreeSet<String>,
) -> Vec<DataDep> {
    let rd = reaching_definitions(cfg, defs, entry_defs);
    let mut out = BTreeSet::new();
    for (node, used) in uses.iter().enumerate() {
        for d in &rd.input[node] {
            if used.contains(&d.var) {
                out.insert(DataDep { src: d.site, dst: node, var: d.var.clone() });
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::function_defs;
    use crate::frontend::{build_cfg, parse_source};

    fn dd(src: &str) -> Vec<DataDep> {
        let u = parse_source(src, "t").unwrap();
        let f = &u.functions[0];
        let cfg = build_cfg(f).unwrap();
        let (defs, entry) = function_defs(f, &u);
        let uses: Vec<_> = f.stmts.iter().map(|s| s.uses.clone()).collect();
        data_dependence(&cfg, &defs, &uses, &entry)
    }

    #[test]
    fn single_flow() {
        // s0 int a = 1; s1 int b = a;
        let deps = dd("void f(){ int a = 1; int b = a; }");
        assert_eq!(deps, vec![DataDep { src: 0, dst: 1, var: "a".into() }]);
    }

    #[test]
    fn disjoint_variables_have_no_edge() {
        assert!(dd("void f(){ int a = 1; int b = 2; }").is_empty());
    }

    #[test]
    fn strcat_argument_flow() {
        // s0 char buf[8]; s1 char *r; s2 r = "x"; s3 strcpy(buf, r); s4 strcat(buf, r);
        let deps = dd("void f(){ char buf[8]; char *r; r = \"x\"; strcpy(buf, r); strcat(buf, r); }");
        assert!(deps.contains(&DataDep { src: 2, dst: 4, var: "r".into() }));
        assert!(deps.contains(&DataDep { src: 3, dst: 4, var: "buf".into() }));
        assert!(!deps.contains(&DataDep { src: 0, dst: 4, var: "buf".into() }));
    }
}
