//! Stratified k-fold plans.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seeds::substream;
use crate::warnings::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// All projects pooled, stratified by label.
    Combined,
    /// Folds drawn inside each project; every project is trained and tested on its own.
    PerProject,
    /// Whole projects assigned to folds, so test projects are never seen in training.
    CrossProject,
}

impl Grouping {
    pub fn name(self) -> &'static str {
        match self {
            Grouping::Combined => "combined",
            Grouping::PerProject => "per_project",
            Grouping::CrossProject => "cross_project",
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "combined" => Ok(Grouping::Combined),
            "per_project" => Ok(Grouping::PerProject),
            "cross_project" => Ok(Grouping::CrossProject),
            _ => Err(format!("unknown grouping {s:?} (combined | per_project | cross_project)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub grouping: Grouping,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

/// One train/test pair as indices into the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deals `members` round-robin into folds, continuing from `*next` so that
/// fold sizes stay balanced across strata.
fn deal(members: &mut Vec<&str>, k: usize, next: &mut usize, out: &mut BTreeMap<String, usize>) {
    for id in members.drain(..) {
        out.insert(id.to_string(), *next % k);
        *next += 1;
    }
}

pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64, grouping: Grouping) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(k));
    }
    if let Some(w) = dataset.warnings.iter().find(|w| w.label.is_none()) {
        return Err(EvalError::MissingLabel(w.id.clone()));
    }
    let mut rng = substream(seed, "split");
    let mut assignments = BTreeMap::new();
    if grouping == Grouping::CrossProject {
        let mut projects: Vec<&str> = dataset.warnings.iter().map(|w| dataset.project(w)).collect();
        projects.sort_unstable();
        projects.dedup();
        if projects.len() < k {
            return Err(EvalError::TooFewSamples { stratum: "projects".into(), count: projects.len(), k });
        }
        projects.shuffle(&mut rng);
        let fold_of: BTreeMap<&str, usize> = projects.iter().enumerate().map(|(i, p)| (*p, i % k)).collect();
        for w in &dataset.warnings {
            assignments.insert(w.id.clone(), fold_of[dataset.project(w)]);
        }
        return Ok(FoldPlan { k, grouping, seed, assignments });
    }

    let mut strata: BTreeMap<(String, bool), Vec<&str>> = BTreeMap::new();
    for w in &dataset.warnings {
        let project = if grouping == Grouping::PerProject { dataset.project(w).to_string() } else { String::new() };
        strata.entry((project, w.label.is_some_and(|l| l.is_tp()))).or_default().push(&w.id);
    }
    let mut next: BTreeMap<String, usize> = BTreeMap::new();
    for ((project, tp), mut members) in strata {
        if members.len() < k {
            let label = if tp { "TP" } else { "FP" };
            let stratum = if project.is_empty() { label.to_string() } else { format!("{project}/{label}") };
            return Err(EvalError::TooFewSamples { stratum, count: members.len(), k });
        }
        members.sort_unstable();
        members.shuffle(&mut rng);
        deal(&mut members, k, next.entry(project).or_default(), &mut assignments);
    }
    Ok(FoldPlan { k, grouping, seed, assignments })
}

impl FoldPlan {
    /// Train/test index pairs. Per-project plans yield one pair per project and fold.
    pub fn splits(&self, dataset: &Dataset) -> Vec<Split> {
        let fold = |i: usize| self.assignments[&dataset.warnings[i].id];
        let groups: Vec<(String, Vec<usize>)> = if self.grouping == Grouping::PerProject {
            let mut by: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, w) in dataset.warnings.iter().enumerate() {
                by.entry(dataset.project(w)).or_default().push(i);
            }
            by.into_iter().map(|(p, v)| (format!("{p}/"), v)).collect()
        } else {
            vec![(String::new(), (0..dataset.len()).collect())]
        };
        let mut out = Vec::new();
        for (prefix, members) in groups {
            for f in 0..self.k {
                let (test, train): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| fold(i) == f);
                out.push(Split { name: format!("{prefix}fold{f}"), train, test });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warnings::{Label, VulnKind, Warning};

    fn dataset(tp: usize, fp: usize, projects: usize) -> Dataset {
        let mut d = Dataset::default();
        for i in 0..tp + fp {
            let file = format!("p{}/f{i}.mc", i % projects);
            d.project_of.insert(file.clone(), format!("p{}", i % projects));
            d.warnings.push(Warning {
                id: format!("w{i:03}"),
                file,
                function: "f".into(),
                line: 1,
                kind: VulnKind::BufferOverflow,
                detector: "t".into(),
                label: Some(if i < tp { Label::TruePositive } else { Label::FalsePositive }),
            });
        }
        d
    }

    fn tp_per_fold(d: &Dataset, plan: &FoldPlan) -> Vec<usize> {
        let mut c = vec![0; plan.k];
        for w in &d.warnings {
            if w.label.unwrap().is_tp() {
                c[plan.assignments[&w.id]] += 1;
            }
        }
        c
    }

    #[test]
    fn exact_division() {
        let d = dataset(10, 10, 1);
        let plan = stratified_kfold(&d, 5, 1, Grouping::Combined).unwrap();
        assert_eq!(tp_per_fold(&d, &plan), vec![2; 5]);
        let mut sizes = vec![0; 5];
        plan.assignments.values().for_each(|&f| sizes[f] += 1);
        assert_eq!(sizes, vec![4; 5]);
    }

    #[test]
    fn pigeonhole() {
        let d = dataset(11, 9, 1);
        let plan = stratified_kfold(&d, 5, 3, Grouping::Combined).unwrap();
        assert!(tp_per_fold(&d, &plan).iter().all(|&c| c == 2 || c == 3));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let d = dataset(20, 30, 1);
        let a = stratified_kfold(&d, 5, 1, Grouping::Combined).unwrap();
        assert_eq!(a, stratified_kfold(&d, 5, 1, Grouping::Combined).unwrap());
        assert_ne!(a.assignments, stratified_kfold(&d, 5, 2, Grouping::Combined).unwrap().assignments);
    }

    #[test]
    fn too_few() {
        let d = dataset(3, 10, 1);
        assert!(matches!(stratified_kfold(&d, 5, 1, Grouping::Combined), Err(EvalError::TooFewSamples { count: 3, .. })));
        assert!(matches!(stratified_kfold(&dataset(10, 10, 3), 5, 1, Grouping::CrossProject), Err(EvalError::TooFewSamples { .. })));
    }

    #[test]
    fn test_folds_partition_the_dataset() {
        let d = dataset(15, 25, 4);
        for g in [Grouping::Combined, Grouping::CrossProject] {
            let k = if g == Grouping::CrossProject { 4 } else { 5 };
            let splits = stratified_kfold(&d, k, 9, g).unwrap().splits(&d);
            let mut seen: Vec<usize> = splits.iter().flat_map(|s| s.test.clone()).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..d.len()).collect::<Vec<_>>());
            for s in &splits {
                assert_eq!(s.train.len() + s.test.len(), d.len());
            }
        }
    }

    #[test]
    fn cross_project_keeps_projects_apart() {
        let d = dataset(15, 25, 4);
        for s in stratified_kfold(&d, 4, 2, Grouping::CrossProject).unwrap().splits(&d) {
            let test: Vec<&str> = s.test.iter().map(|&i| d.project(&d.warnings[i])).collect();
            assert!(s.train.iter().all(|&i| !test.contains(&d.project(&d.warnings[i]))));
        }
    }

    #[test]
    fn per_project_splits_stay_inside_a_project() {
        let d = dataset(20, 30, 2);
        let splits = stratified_kfold(&d, 5, 2, Grouping::PerProject).unwrap().splits(&d);
        assert_eq!(splits.len(), 10);
        for s in &splits {
            let p = d.project(&d.warnings[s.test[0]]);
            assert!(s.train.iter().chain(&s.test).all(|&i| d.project(&d.warnings[i]) == p));
        }
    }
}
