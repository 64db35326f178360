//! Core/outer graph shapes required by the constructive G-EFX results.
//!
//! A shape splits the agents into core groups (each group sharing one
//! valuation) and an independent set of outer agents. The three kinds differ
//! in how many groups are allowed and where an outer agent may attach.

use serde::Serialize;

use crate::envy::first_inconsistency;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::model::{AgentId, Instance};
use crate::search::type_labels;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShapeKind {
    /// One core group with identical valuations.
    IdenticalCore,
    /// Groups of identical valuations, consistent across groups; each outer
    /// agent attaches to a single group.
    ConsistentCore,
    /// At most two valuation types; each outer agent attaches to one type.
    TwoTypeCore,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoreStructure {
    pub core_groups: Vec<VertexSet>,
    pub outer: VertexSet,
}

impl CoreStructure {
    pub fn new(core_groups: Vec<VertexSet>, outer: VertexSet) -> Self {
        CoreStructure { core_groups, outer }
    }

    pub fn core(&self) -> VertexSet {
        self.core_groups.iter().flatten().copied().collect()
    }

    pub fn group_of_core(&self, agent: AgentId) -> Option<usize> {
        self.core_groups.iter().position(|g| g.contains(&agent))
    }

    /// The group an outer agent's neighbours lie in; isolated outer agents
    /// attach to group 0.
    pub fn group_of_outer(&self, g: &Graph, agent: AgentId) -> Option<usize> {
        match g.neighbors(agent).iter().next() {
            Some(&nb) => self.group_of_core(nb),
            None => Some(0),
        }
    }
}

fn mismatch(reason: String) -> Error {
    Error::ShapeMismatch(reason)
}

/// Checks a proposed structure against the requirements of `kind`.
pub fn check_shape(inst: &Instance, g: &Graph, structure: &CoreStructure, kind: ShapeKind) -> Result<()> {
    let n = inst.n();
    if g.n() != n {
        return Err(Error::InvalidGraph(format!("graph has {} vertices, instance has {n} agents", g.n())));
    }
    if structure.core_groups.is_empty() || structure.core_groups.iter().any(VertexSet::is_empty) {
        return Err(mismatch("core groups must be non-empty".into()));
    }
    let mut seen = vec![false; n];
    for &a in structure.core_groups.iter().flatten().chain(&structure.outer) {
        if a >= n || std::mem::replace(&mut seen[a], true) {
            return Err(mismatch(format!("agent {a} is out of range or listed twice")));
        }
    }
    if let Some(a) = seen.iter().position(|s| !s) {
        return Err(mismatch(format!("agent {a} is neither core nor outer")));
    }
    for group in &structure.core_groups {
        let first = *group.iter().next().expect("non-empty");
        if let Some(&a) = group.iter().find(|&&a| inst.valuation(a) != inst.valuation(first)) {
            return Err(mismatch(format!("core agents {first} and {a} share a group but not a valuation")));
        }
    }
    let groups = structure.core_groups.len();
    match kind {
        ShapeKind::IdenticalCore if groups != 1 => {
            return Err(mismatch(format!("identical core needs one group, got {groups}")));
        }
        ShapeKind::TwoTypeCore if groups > 2 => {
            return Err(mismatch(format!("two-type core allows at most two groups, got {groups}")));
        }
        _ => {}
    }
    let reps: Vec<AgentId> = structure.core_groups.iter().map(|gr| *gr.iter().next().expect("non-empty")).collect();
    if kind == ShapeKind::TwoTypeCore && groups == 2 && inst.valuation(reps[0]) == inst.valuation(reps[1]) {
        return Err(mismatch("the two core groups share a valuation; merge them".into()));
    }
    if kind == ShapeKind::ConsistentCore {
        let core: Vec<AgentId> = structure.core().into_iter().collect();
        if let Some((a, b)) = first_inconsistency(inst, &core)? {
            return Err(mismatch(format!("core agents {a} and {b} have inconsistent valuations")));
        }
    }
    if !g.is_independent(&structure.outer) {
        let (u, v) = g
            .edges()
            .find(|(u, v)| structure.outer.contains(u) && structure.outer.contains(v))
            .expect("dependent set has an inner edge");
        return Err(mismatch(format!("outer agents {u} and {v} are adjacent")));
    }
    if kind != ShapeKind::IdenticalCore {
        for &o in &structure.outer {
            let touched: VertexSet = g.neighbors(o).iter().filter_map(|&nb| structure.group_of_core(nb)).collect();
            if touched.len() > 1 {
                let listed: Vec<String> = touched.iter().map(|t| format!("{:?}", structure.core_groups[*t])).collect();
                return Err(mismatch(format!(
                    "outer agent {o} is adjacent to different valuation groups {}",
                    listed.join(" and ")
                )));
            }
        }
    }
    Ok(())
}

/// Searches for the structure of `kind` with the largest core, ties broken
/// by the lexicographically smallest core.
pub fn find_shape(inst: &Instance, g: &Graph, kind: ShapeKind) -> Result<CoreStructure> {
    let n = inst.n();
    let agents: Vec<AgentId> = (0..n).collect();
    let labels = type_labels(inst, &agents);
    let classes = labels.iter().max().map_or(0, |t| t + 1);
    if classes > 20 {
        return Err(Error::TooLarge { what: "valuation classes for shape search", size: classes, bound: 20 });
    }
    let members: Vec<VertexSet> = (0..classes)
        .map(|c| agents.iter().copied().filter(|&a| labels[a] == c).collect())
        .collect();
    let mut best: Option<(usize, Vec<AgentId>, CoreStructure)> = None;
    let mut last_reason = String::from("no candidate core");
    for subset in 1u32..(1 << classes) {
        let count = subset.count_ones();
        let allowed = match kind {
            ShapeKind::IdenticalCore => count == 1,
            ShapeKind::TwoTypeCore => count <= 2,
            ShapeKind::ConsistentCore => true,
        };
        if !allowed {
            continue;
        }
        let groups: Vec<VertexSet> = (0..classes).filter(|c| subset >> c & 1 == 1).map(|c| members[c].clone()).collect();
        let core: VertexSet = groups.iter().flatten().copied().collect();
        let outer: VertexSet = agents.iter().copied().filter(|a| !core.contains(a)).collect();
        let candidate = CoreStructure::new(groups, outer);
        match check_shape(inst, g, &candidate, kind) {
            Ok(()) => {
                let key: Vec<AgentId> = core.iter().copied().collect();
                let better = match &best {
                    None => true,
                    Some((size, k, _)) => core.len() > *size || (core.len() == *size && key < *k),
                };
                if better {
                    best = Some((core.len(), key, candidate));
                }
            }
            Err(Error::ShapeMismatch(reason)) => last_reason = reason,
            Err(Error::NotAdditive(who)) => last_reason = format!("{who} is not additive"),
            Err(e) => return Err(e),
        }
    }
    best.map(|(_, _, s)| s)
        .ok_or_else(|| mismatch(format!("no {kind:?} structure fits this graph (last failure: {last_reason})")))
}

pub fn validate_thm1_shape(inst: &Instance, g: &Graph) -> Result<CoreStructure> {
    find_shape(inst, g, ShapeKind::IdenticalCore)
}

pub fn validate_thm2_shape(inst: &Instance, g: &Graph) -> Result<CoreStructure> {
    find_shape(inst, g, ShapeKind::ConsistentCore)
}

pub fn validate_thm3_shape(inst: &Instance, g: &Graph) -> Result<CoreStructure> {
    find_shape(inst, g, ShapeKind::TwoTypeCore)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_path, make_star};

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    fn example_one() -> Instance {
        Instance::goods_additive([[9, 1, 0, 0, 0, 0], [8, 0, 0, 0, 0, 2], [2, 2, 2, 1, 2, 1]]).unwrap()
    }

    #[test]
    fn star_has_identical_core_at_centre() {
        let inst = Instance::goods_additive([[1, 2], [3, 1], [2, 2], [0, 5]]).unwrap();
        let s = validate_thm1_shape(&inst, &make_star(4).unwrap()).unwrap();
        assert_eq!(s.core_groups, vec![set(&[0])]);
        assert_eq!(s.outer, set(&[1, 2, 3]));
    }

    #[test]
    fn example_one_rejects_consistent_core_of_ends() {
        let inst = example_one();
        let p3 = make_path(3).unwrap();
        let proposed = CoreStructure::new(vec![set(&[0]), set(&[2])], set(&[1]));
        let err = check_shape(&inst, &p3, &proposed, ShapeKind::ConsistentCore).unwrap_err();
        assert!(err.to_string().contains("outer agent 1"), "{err}");
        // the middle agent alone is a valid (star) core
        let found = validate_thm2_shape(&inst, &p3).unwrap();
        assert_eq!(found.core_groups, vec![set(&[1])]);
    }

    #[test]
    fn edgeless_outer_with_identical_core() {
        let inst = Instance::goods_additive([[1, 1], [1, 1], [4, 0], [0, 4]]).unwrap();
        let g = Graph::new(4, [(0, 1), (0, 2), (1, 3)]).unwrap();
        let s = validate_thm1_shape(&inst, &g).unwrap();
        assert_eq!(s.core_groups, vec![set(&[0, 1])]);
    }

    #[test]
    fn path_four_has_two_type_core_in_the_middle() {
        let inst = Instance::goods_additive([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]).unwrap();
        let s = validate_thm3_shape(&inst, &make_path(4).unwrap()).unwrap();
        assert_eq!(s.core(), set(&[1, 2]));
        assert!(validate_thm1_shape(&inst, &make_path(4).unwrap()).is_err());
    }

    #[test]
    fn check_rejects_malformed_structures() {
        let inst = example_one();
        let p3 = make_path(3).unwrap();
        let missing = CoreStructure::new(vec![set(&[1])], set(&[0]));
        assert!(check_shape(&inst, &p3, &missing, ShapeKind::IdenticalCore).is_err());
        let adjacent_outer = CoreStructure::new(vec![set(&[0])], set(&[1, 2]));
        assert!(check_shape(&inst, &p3, &adjacent_outer, ShapeKind::IdenticalCore).is_err());
        let mixed_group = CoreStructure::new(vec![set(&[0, 2])], set(&[1]));
        assert!(check_shape(&inst, &p3, &mixed_group, ShapeKind::IdenticalCore).is_err());
    }
}
