//! Post-dominance, control and data dependence, and the inter-procedural
//! system dependence graph.

pub mod control;
pub mod data;
pub mod postdom;
pub mod reaching;
pub mod sdg;

use std::collections::BTreeSet;

pub use control::control_dependence;
pub use data::{data_dependence, DataDep};
pub use postdom::{immediate_post_dominators, post_dominators};
pub use reaching::{reaching_definitions, Definition, ReachingDefs};
pub use sdg::{build_sdg, DependenceEdge, EdgeKind, FuncId, GlobalId, SdgError, SdgNode, SystemDependenceGraph};

use crate::frontend::{FunctionAst, TranslationUnit};

/// Per-statement def sets plus the variables defined on entry (parameters
/// and the unit's globals).
pub fn function_defs(f: &FunctionAst, unit: &TranslationUnit) -> (Vec<BTreeSet<String>>, BTreeSet<String>) {
    let defs = f.stmts.iter().map(|s| s.defs.clone()).collect();
    let entry = f
        .params
        .iter()
        .map(|p| p.name.clone())
        .chain(unit.globals.iter().map(|g| g.decl.name.clone()))
        .collect();
    (defs, entry)
}
