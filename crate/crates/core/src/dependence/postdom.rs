use std::collections::BTreeSet;

use crate::frontend::Cfg;

/// Post-dominator sets by iterative fixpoint. `result[n]` holds every node
/// that lies on all paths from `n` to EXIT, including `n` itself.
pub fn post_dominators(cfg: &Cfg) -> Vec<BTreeSet<usize>> {
    let n = cfg.len();
    let exit = cfg.exit();
    let all: BTreeSet<usize> = (0..n).collect();
    let mut pdom: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| if i == exit { BTreeSet::from([exit]) } else { all.clone() })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for node in (0..n).rev() {
            if node == exit {
                continue;
            }
            let mut next: Option<BTreeSet<usize>> = None;
            for &s in cfg.succs(node) {
                next = Some(match next {
                    None => pdom[s].clone(),
                    Some(acc) => acc.intersection(&pdom[s]).copied().collect(),
                });
            }
            let mut next = next.unwrap_or_default();
            next.insert(node);
            if next != pdom[node] {
                pdom[node] = next;
                changed = true;
            }
        }
    }
    pdom
}

/// Immediate post-dominator of every node (`None` for EXIT).
pub fn immediate_post_dominators(pdom: &[BTreeSet<usize>]) -> Vec<Option<usize>> {
    pdom.iter()
        .enumerate()
        .map(|(n, set)| {
            // Strict post-dominators form a chain; the nearest has the largest set.
            set.iter()
                .copied()
                .filter(|&p| p != n)
                .max_by_key(|&p| (pdom[p].len(), std::cmp::Reverse(p)))
        })
        .collect()
}
