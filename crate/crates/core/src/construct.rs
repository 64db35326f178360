//! Constructive G-EFX allocations.
//!
//! The core constructions share one pipeline: outer agents borrow the
//! valuation of the core group they attach to, a complete-graph EFX
//! allocation `Y` is computed for these proxy valuations, and the bundles of
//! `Y` are handed back group by group (outer agents pick first, core agents
//! take the leftovers). Every result is checked with `is_g_efx` before it is
//! returned.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envy::first_strong_envy;
use crate::error::{Error, Result};
use crate::graph::{make_path, Graph, VertexSet};
use crate::model::{AgentId, Allocation, Bundle, Instance, ItemKind, Valuation};
use crate::shape::{check_shape, CoreStructure, ShapeKind};
use crate::solvers::{efx_consistent_additive, efx_consistent_chores, efx_identical, efx_two_types};

/// Knobs for the core pipeline. The defaults give the checked construction.
#[derive(Clone, Debug, Default)]
pub struct CoreOptions {
    /// Skip the shape check and the final verification, returning whatever
    /// the pipeline produces. Used to reproduce failures on invalid shapes.
    pub bypass_checks: bool,
    /// Group each outer agent impersonates; defaults to the group of its
    /// neighbours.
    pub outer_groups: Option<BTreeMap<AgentId, usize>>,
    /// Use these bundles (aligned with agents) instead of solving for `Y`.
    pub base_bundles: Option<Vec<Bundle>>,
    /// Hand leftover bundles to core agents in a seeded random order instead
    /// of ascending id.
    pub shuffle_seed: Option<u64>,
}

fn verified(inst: &Instance, g: &Graph, bundles: Vec<Bundle>) -> Result<Allocation> {
    let x = Allocation::for_instance(inst, bundles)?;
    match first_strong_envy(inst, &x, g) {
        None => Ok(x),
        Some((i, j)) => Err(Error::Unverified(format!("agent {i} strongly envies neighbour {j}"))),
    }
}

/// Hands out the bundles of `y` (bundle `b` belongs to pool `pool_of[b]`,
/// and agent `a` draws from pool `pool_of[a]`). Agents in `outer` pick their
/// favourite remaining bundle of their pool in ascending id order, lowest
/// index on ties; the other agents then take what is left.
fn redistribute(
    inst: &Instance,
    y: Vec<Bundle>,
    pool_of: &[usize],
    outer: &VertexSet,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Bundle>> {
    let n = inst.n();
    let kinds = inst.kinds();
    let mut taken = vec![false; n];
    let mut owner_of_bundle = vec![None; n];
    let mut turn_of = vec![usize::MAX; n];
    let mut turn = 0;
    for &o in outer {
        let valuation = inst.valuation(o);
        let mut best: Option<usize> = None;
        for b in (0..n).filter(|&b| !taken[b] && pool_of[b] == pool_of[o]) {
            if best.map_or(true, |cur| valuation.prefers(kinds, &y[b], &y[cur])) {
                best = Some(b);
            }
        }
        let b = best.ok_or_else(|| Error::Unverified(format!("pool of outer agent {o} ran dry")))?;
        taken[b] = true;
        owner_of_bundle[b] = Some(o);
        turn_of[o] = turn;
        turn += 1;
    }
    let mut rest: Vec<AgentId> = (0..n).filter(|a| !outer.contains(a)).collect();
    if let Some(seed) = shuffle_seed {
        rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    for a in rest {
        let b = (0..n)
            .find(|&b| !taken[b] && pool_of[b] == pool_of[a])
            .ok_or_else(|| Error::Unverified(format!("pool of core agent {a} ran dry")))?;
        taken[b] = true;
        owner_of_bundle[b] = Some(a);
        turn_of[a] = turn;
        turn += 1;
    }
    let mut bundles = vec![Bundle::new(); n];
    for (b, owner) in owner_of_bundle.iter().enumerate() {
        let a = owner.expect("every bundle handed out");
        // every agent holds a bundle of its own pool
        debug_assert_eq!(pool_of[b], pool_of[a]);
        bundles[a] = y[b].clone();
    }
    // outer agents weakly prefer their bundle to anything handed out later in their pool
    for &o in outer {
        let later = (0..n).filter(|&a| pool_of[a] == pool_of[o] && turn_of[a] > turn_of[o]);
        for a in later {
            if inst.valuation(o).prefers(kinds, &bundles[a], &bundles[o]) {
                return Err(Error::Unverified(format!("outer agent {o} prefers the later bundle of agent {a}")));
            }
        }
    }
    Ok(bundles)
}

/// Shared pipeline: proxy valuations, complete-graph EFX via `solve`, pool
/// redistribution, verification.
fn core_pipeline(
    inst: &Instance,
    g: &Graph,
    structure: &CoreStructure,
    kind: ShapeKind,
    opts: &CoreOptions,
    solve: impl FnOnce(&Instance) -> Result<Vec<Bundle>>,
) -> Result<Allocation> {
    if !opts.bypass_checks {
        check_shape(inst, g, structure, kind)?;
    }
    let n = inst.n();
    let mut pool_of = vec![0usize; n];
    let mut proxy: Vec<AgentId> = (0..n).collect();
    let reps: Vec<AgentId> = structure
        .core_groups
        .iter()
        .map(|gr| gr.iter().next().copied().ok_or_else(|| Error::ShapeMismatch("empty core group".into())))
        .collect::<Result<_>>()?;
    for (k, group) in structure.core_groups.iter().enumerate() {
        for &a in group {
            pool_of[a] = k;
        }
    }
    for &o in &structure.outer {
        let group = match opts.outer_groups.as_ref().and_then(|m| m.get(&o)) {
            Some(&k) => k,
            None => structure.group_of_outer(g, o).unwrap_or(0),
        };
        let rep = *reps
            .get(group)
            .ok_or_else(|| Error::ShapeMismatch(format!("outer agent {o} mapped to missing group {group}")))?;
        pool_of[o] = group;
        proxy[o] = rep;
    }
    let proxied = inst.with_proxies(&proxy);
    let y = match &opts.base_bundles {
        Some(base) => {
            Allocation::for_instance(inst, base.clone())?;
            base.clone()
        }
        None => solve(&proxied)?,
    };
    let bundles = redistribute(inst, y, &pool_of, &structure.outer, opts.shuffle_seed)?;
    if opts.bypass_checks {
        Allocation::for_instance(inst, bundles)
    } else {
        verified(inst, g, bundles)
    }
}

fn all_agents(inst: &Instance) -> Vec<AgentId> {
    (0..inst.n()).collect()
}

/// The star centred at `center` over `n` vertices.
pub fn star_around(n: usize, center: AgentId) -> Result<Graph> {
    if center >= n {
        return Err(Error::InvalidArgument(format!("centre {center} out of range (n = {n})")));
    }
    Graph::new(n, (0..n).filter(|&v| v != center).map(|v| (center, v)))
}

/// G-EFX on the star centred at `center`: bundles EFX for the centre's
/// valuation, leaves pick in ascending id, the centre keeps the last one.
pub fn star_efx(inst: &Instance, center: AgentId) -> Result<Allocation> {
    let g = star_around(inst.n(), center)?;
    let structure = CoreStructure::new(
        vec![[center].into_iter().collect()],
        (0..inst.n()).filter(|&v| v != center).collect(),
    );
    core_identical_efx(inst, &g, &structure)
}

/// Identical-valuation core with an independent outer set.
pub fn core_identical_efx(inst: &Instance, g: &Graph, structure: &CoreStructure) -> Result<Allocation> {
    core_identical_efx_with(inst, g, structure, &CoreOptions::default())
}

pub fn core_identical_efx_with(inst: &Instance, g: &Graph, structure: &CoreStructure, opts: &CoreOptions) -> Result<Allocation> {
    core_pipeline(inst, g, structure, ShapeKind::IdenticalCore, opts, |proxied| {
        efx_identical(proxied, proxied.valuation(0), proxied.n())
    })
}

/// Consistent additive core groups; each outer agent attaches to one group.
pub fn consistent_core_efx(inst: &Instance, g: &Graph, structure: &CoreStructure) -> Result<Allocation> {
    consistent_core_efx_with(inst, g, structure, &CoreOptions::default())
}

pub fn consistent_core_efx_with(inst: &Instance, g: &Graph, structure: &CoreStructure, opts: &CoreOptions) -> Result<Allocation> {
    core_pipeline(inst, g, structure, ShapeKind::ConsistentCore, opts, |proxied| {
        efx_consistent_additive(proxied, &all_agents(proxied))
    })
}

/// At most two valuation types in the core; each outer agent attaches to one.
pub fn two_type_core_efx(inst: &Instance, g: &Graph, structure: &CoreStructure) -> Result<Allocation> {
    two_type_core_efx_with(inst, g, structure, &CoreOptions::default())
}

pub fn two_type_core_efx_with(inst: &Instance, g: &Graph, structure: &CoreStructure, opts: &CoreOptions) -> Result<Allocation> {
    core_pipeline(inst, g, structure, ShapeKind::TwoTypeCore, opts, |proxied| {
        efx_two_types(proxied, &all_agents(proxied))
    })
}

/// G-EFX on the path 0-1-2-3: agents 0 and 1 share the bundles built for
/// valuation 1, agents 2 and 3 those built for valuation 2; the ends pick
/// first.
pub fn three_edge_path_efx(inst: &Instance) -> Result<Allocation> {
    if inst.n() != 4 {
        return Err(Error::BadSize(format!("three-edge path needs 4 agents, got {}", inst.n())));
    }
    let proxied = inst.with_proxies(&[1, 1, 2, 2]);
    let y = efx_two_types(&proxied, &all_agents(&proxied))?;
    let outer: VertexSet = [0, 3].into_iter().collect();
    let bundles = redistribute(inst, y, &[0, 0, 1, 1], &outer, None)?;
    verified(inst, &make_path(4)?, bundles)
}

fn require_chores(inst: &Instance) -> Result<()> {
    if inst.is_chores_only() {
        Ok(())
    } else {
        Err(Error::InvalidInstance("chores construction needs a chores-only instance".into()))
    }
}

/// Chores analogue of `core_identical_efx`; outer agents take their least
/// burdensome bundle.
pub fn core_identical_efx_chores(inst: &Instance, g: &Graph, structure: &CoreStructure) -> Result<Allocation> {
    require_chores(inst)?;
    core_pipeline(inst, g, structure, ShapeKind::IdenticalCore, &CoreOptions::default(), |proxied| {
        efx_consistent_chores(proxied, &all_agents(proxied))
    })
}

/// Chores analogue of `consistent_core_efx`.
pub fn consistent_core_efx_chores(inst: &Instance, g: &Graph, structure: &CoreStructure) -> Result<Allocation> {
    require_chores(inst)?;
    core_pipeline(inst, g, structure, ShapeKind::ConsistentCore, &CoreOptions::default(), |proxied| {
        efx_consistent_chores(proxied, &all_agents(proxied))
    })
}

/// The lexicographically smallest pair at distance at least 4.
pub fn far_pair(g: &Graph) -> Option<(AgentId, AgentId)> {
    let dist = g.all_pairs_distance();
    (0..g.n())
        .flat_map(|u| (u + 1..g.n()).map(move |v| (u, v)))
        .find(|&(u, v)| dist[u][v].is_some_and(|d| d >= 4))
}

/// G-EFX for lexicographic valuations over goods and chores when the graph
/// has diameter at least 4.
///
/// For the first pair `(u, v)` at distance at least 4: neighbours of `u`
/// each take their top remaining good, neighbours of `v` each receive one of
/// `v`'s top chores, `u` gets the remaining goods and `v` the remaining
/// chores.
pub fn lex_mixed_diameter4(inst: &Instance, g: &Graph) -> Result<Allocation> {
    let n = inst.n();
    if g.n() != n {
        return Err(Error::InvalidGraph(format!("graph has {} vertices, instance has {n} agents", g.n())));
    }
    let priorities: Vec<&[usize]> = (0..n)
        .map(|a| match inst.valuation(a) {
            Valuation::Lexicographic(p) => Ok(p.as_slice()),
            _ => Err(Error::NotLexicographic(a)),
        })
        .collect::<Result<_>>()?;
    let (u, v) = far_pair(g).ok_or(Error::DiameterTooSmall(g.diameter()))?;
    assert!(g.neighbors(u).is_disjoint(g.neighbors(v)), "vertices at distance 4 share no neighbour");

    let kinds = inst.kinds();
    let mut bundles = vec![Bundle::new(); n];
    let mut goods: Bundle = inst.all_items().into_iter().filter(|&o| kinds[o] == ItemKind::Good).collect();
    let mut chores: Bundle = inst.all_items().into_iter().filter(|&o| kinds[o] == ItemKind::Chore).collect();
    for &w in g.neighbors(u) {
        if let Some(&top) = priorities[w].iter().find(|o| goods.contains(o)) {
            goods.remove(&top);
            bundles[w].insert(top);
        }
    }
    let v_top: Vec<usize> = priorities[v].iter().copied().filter(|o| chores.contains(o)).collect();
    for (&w, &chore) in g.neighbors(v).iter().zip(&v_top) {
        chores.remove(&chore);
        bundles[w].insert(chore);
    }
    bundles[u].extend(goods);
    bundles[v].extend(chores);
    verified(inst, g, bundles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envy::{is_g_efx, strong_envy_amount};
    use crate::graph::make_star;
    use crate::model::Item;
    use crate::rational::Rational;

    fn set(v: &[usize]) -> Bundle {
        v.iter().copied().collect()
    }

    fn example_one() -> Instance {
        Instance::goods_additive([[9, 1, 0, 0, 0, 0], [8, 0, 0, 0, 0, 2], [2, 2, 2, 1, 2, 1]]).unwrap()
    }

    #[test]
    fn star_on_example_one() {
        let inst = example_one();
        let x = star_efx(&inst, 1).unwrap();
        assert_eq!(x.bundles(), &[set(&[0]), set(&[5]), set(&[1, 2, 3, 4])]);
        assert!(is_g_efx(&inst, &x, &make_path(3).unwrap()));
    }

    #[test]
    fn star_trivial_cases() {
        let single = Instance::goods_additive([[1, 2, 3]]).unwrap();
        assert_eq!(star_efx(&single, 0).unwrap().bundle(0), &set(&[0, 1, 2]));
        let indifferent = Instance::goods_additive([[3, 1, 2], [0, 0, 0], [0, 0, 0]]).unwrap();
        assert!(star_efx(&indifferent, 0).is_ok());
    }

    #[test]
    fn bypassed_consistent_core_reproduces_failure() {
        let inst = example_one();
        let p3 = make_path(3).unwrap();
        let structure = CoreStructure::new(vec![set(&[0]), set(&[2])], set(&[1]));
        assert!(matches!(consistent_core_efx(&inst, &p3, &structure), Err(Error::ShapeMismatch(_))));
        let opts = CoreOptions {
            bypass_checks: true,
            outer_groups: Some([(1, 1)].into_iter().collect()),
            base_bundles: Some(vec![set(&[0, 1]), set(&[2, 3]), set(&[4, 5])]),
            shuffle_seed: None,
        };
        let x = consistent_core_efx_with(&inst, &p3, &structure, &opts).unwrap();
        assert_eq!(x.bundles(), &[set(&[0, 1]), set(&[4, 5]), set(&[2, 3])]);
        assert!(!is_g_efx(&inst, &x, &p3));
        assert_eq!(strong_envy_amount(&inst, &x, 1, 0).unwrap(), Rational::from_integer(6));
    }

    #[test]
    fn identical_core_with_two_outer_agents() {
        // core {0,1} identical, outer {2,3} adjacent to both
        let inst = Instance::goods_additive([[4, 3, 2, 1, 1], [4, 3, 2, 1, 1], [0, 5, 0, 5, 1], [1, 1, 9, 0, 0]]).unwrap();
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let s = CoreStructure::new(vec![set(&[0, 1])], set(&[2, 3]));
        let x = core_identical_efx(&inst, &g, &s).unwrap();
        assert!(is_g_efx(&inst, &x, &g));
    }

    #[test]
    fn consistent_core_shuffled_assignment_still_verifies() {
        let inst = Instance::goods_additive([
            [6, 5, 4, 3, 2, 1],
            [12, 10, 8, 6, 4, 2],
            [7, 6, 5, 4, 3, 3],
            [1, 9, 1, 9, 1, 9],
            [9, 1, 9, 1, 9, 1],
            [5, 5, 5, 5, 5, 5],
        ])
        .unwrap();
        // triangle core with one leaf each
        let g = Graph::new(6, [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5)]).unwrap();
        let s = CoreStructure::new(vec![set(&[0]), set(&[1]), set(&[2])], set(&[3, 4, 5]));
        for seed in 0..5 {
            let opts = CoreOptions { shuffle_seed: Some(seed), ..CoreOptions::default() };
            let x = consistent_core_efx_with(&inst, &g, &s, &opts).unwrap();
            assert!(is_g_efx(&inst, &x, &g));
        }
    }

    #[test]
    fn two_type_core_on_joined_stars() {
        let inst = Instance::goods_additive([
            [5, 1, 1, 3, 2, 2],
            [1, 5, 2, 2, 3, 1],
            [0, 0, 9, 1, 1, 1],
            [1, 1, 1, 1, 9, 9],
            [3, 3, 3, 3, 3, 3],
        ])
        .unwrap();
        let g = Graph::new(5, [(0, 1), (0, 2), (0, 3), (1, 4)]).unwrap();
        let s = CoreStructure::new(vec![set(&[0]), set(&[1])], set(&[2, 3, 4]));
        let x = two_type_core_efx(&inst, &g, &s).unwrap();
        assert!(is_g_efx(&inst, &x, &g));
    }

    #[test]
    fn three_edge_path_cases() {
        let inst = Instance::goods_additive([[1, 2, 3, 4, 5], [5, 1, 1, 1, 1], [1, 1, 1, 1, 5], [4, 4, 1, 1, 4]]).unwrap();
        assert!(is_g_efx(&inst, &three_edge_path_efx(&inst).unwrap(), &make_path(4).unwrap()));
        let empty = Instance::goods_additive(vec![Vec::<i64>::new(); 4]).unwrap();
        assert!(three_edge_path_efx(&empty).unwrap().bundles().iter().all(Bundle::is_empty));
        assert!(matches!(three_edge_path_efx(&example_one()), Err(Error::BadSize(_))));
    }

    #[test]
    fn chores_constructions() {
        let inst = Instance::chores_additive([[-3, -2, -1], [-1, -1, -5], [-2, -2, -2]]).unwrap();
        let star = make_star(3).unwrap();
        let s = CoreStructure::new(vec![set(&[0])], set(&[1, 2]));
        let x = core_identical_efx_chores(&inst, &star, &s).unwrap();
        assert!(is_g_efx(&inst, &x, &star));
        let x = consistent_core_efx_chores(&inst, &star, &s).unwrap();
        assert!(is_g_efx(&inst, &x, &star));
        let single = Instance::chores_additive([[-4], [-1], [-2]]).unwrap();
        let x = core_identical_efx_chores(&single, &star, &s).unwrap();
        assert_eq!(x.bundles().iter().filter(|b| !b.is_empty()).count(), 1);
    }

    #[test]
    fn lex_on_five_path() {
        // goods o0, o1 and chore o2
        let items = vec![Item::good(0), Item::good(1), Item::chore(2)];
        let lex = |p: [usize; 3]| Valuation::Lexicographic(p.to_vec());
        let inst = Instance::new(items, vec![lex([0, 1, 2]), lex([1, 0, 2]), lex([2, 0, 1]), lex([0, 2, 1]), lex([2, 1, 0])]).unwrap();
        let p5 = make_path(5).unwrap();
        let x = lex_mixed_diameter4(&inst, &p5).unwrap();
        assert_eq!(x.bundles(), &[set(&[0]), set(&[1]), set(&[]), set(&[2]), set(&[])]);
        assert!(matches!(lex_mixed_diameter4(&inst.with_proxies(&[0, 1, 2, 3]), &make_path(4).unwrap()), Err(Error::DiameterTooSmall(Some(3)))));
        let additive = Instance::goods_additive([[1], [1], [1], [1], [1]]).unwrap();
        assert!(matches!(lex_mixed_diameter4(&additive, &p5), Err(Error::NotLexicographic(0))));
    }

    #[test]
    fn lex_surplus_goes_to_u() {
        let items = (0..6).map(|o| if o < 4 { Item::good(o) } else { Item::chore(o) }).collect();
        let pr = |p: [usize; 6]| Valuation::Lexicographic(p.to_vec());
        let inst = Instance::new(
            items,
            vec![pr([0, 1, 2, 3, 4, 5]), pr([3, 2, 1, 0, 5, 4]), pr([4, 5, 0, 1, 2, 3]), pr([5, 4, 3, 2, 1, 0]), pr([1, 0, 3, 2, 4, 5])],
        )
        .unwrap();
        let p5 = make_path(5).unwrap();
        let x = lex_mixed_diameter4(&inst, &p5).unwrap();
        assert_eq!(x.bundle(1), &set(&[3]));
        assert_eq!(x.bundle(0), &set(&[0, 1, 2]));
        assert_eq!(x.bundle(3), &set(&[4]));
        assert_eq!(x.bundle(4), &set(&[5]));
    }
}
