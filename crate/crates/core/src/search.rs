//! Exhaustive allocation search over bitmask bundles.
//!
//! The searches here back the existence results the constructions rely on
//! (EFX for identical, consistent and two-type valuations, chores) and the
//! brute-force oracle used in tests. Values are scaled to integers per agent
//! when they fit, which keeps comparisons exact and cheap.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{mask_bundle, AgentId, Allocation, Bundle, Instance, ItemKind, Valuation};
use crate::rational::Rational;

/// Default cap on visited states for exhaustive searches.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Searches address bundles as `u64` masks.
pub const MAX_SEARCH_ITEMS: usize = 64;

enum Scorer {
    Additive(Vec<i128>),
    Table(Vec<i128>),
    AdditiveExact(Vec<Rational>),
    TableExact(Vec<Rational>),
    Lex(Vec<usize>),
}

fn scale_to_integers(values: &[Rational]) -> Option<Vec<i128>> {
    let lcm = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    values
        .iter()
        .map(|v| {
            let scaled = v.numer() * (&lcm / v.denom());
            scaled.to_i64().map(i128::from)
        })
        .collect()
}

impl Scorer {
    fn new(valuation: &Valuation) -> Self {
        match valuation {
            Valuation::Additive(values) => match scale_to_integers(values) {
                Some(ints) => Scorer::Additive(ints),
                None => Scorer::AdditiveExact(values.clone()),
            },
            Valuation::Table(values) => match scale_to_integers(values) {
                Some(ints) => Scorer::Table(ints),
                None => Scorer::TableExact(values.clone()),
            },
            Valuation::Lexicographic(p) => Scorer::Lex(p.clone()),
        }
    }
}

/// Preference oracle over bitmask bundles for a fixed set of valuations.
pub(crate) struct Judge {
    scorers: Vec<Scorer>,
    goods: u64,
    chores: u64,
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(b)
        }
    })
}

impl Judge {
    pub(crate) fn new(inst: &Instance, agents: &[AgentId]) -> Result<Self> {
        if inst.m() > MAX_SEARCH_ITEMS {
            return Err(Error::TooLarge { what: "item count for exhaustive search", size: inst.m(), bound: MAX_SEARCH_ITEMS });
        }
        let mut goods = 0u64;
        let mut chores = 0u64;
        for (g, kind) in inst.kinds().iter().enumerate() {
            match kind {
                ItemKind::Good => goods |= 1 << g,
                ItemKind::Chore => chores |= 1 << g,
            }
        }
        let scorers = agents.iter().map(|&a| Scorer::new(inst.valuation(a))).collect();
        Ok(Judge { scorers, goods, chores })
    }

    fn lex_prefers(&self, priority: &[usize], a: u64, b: u64) -> bool {
        for &o in priority {
            let in_a = a >> o & 1 == 1;
            let in_b = b >> o & 1 == 1;
            if in_a != in_b {
                return if self.goods >> o & 1 == 1 { in_a } else { in_b };
            }
        }
        false
    }

    /// Strict preference of local agent `k` for `a` over `b`.
    pub(crate) fn prefers(&self, k: usize, a: u64, b: u64) -> bool {
        match &self.scorers[k] {
            Scorer::Additive(v) => bits(a).map(|g| v[g]).sum::<i128>() > bits(b).map(|g| v[g]).sum::<i128>(),
            Scorer::Table(v) => v[a as usize] > v[b as usize],
            Scorer::AdditiveExact(v) => {
                bits(a).map(|g| &v[g]).sum::<Rational>() > bits(b).map(|g| &v[g]).sum::<Rational>()
            }
            Scorer::TableExact(v) => v[a as usize] > v[b as usize],
            Scorer::Lex(p) => self.lex_prefers(p, a, b),
        }
    }

    /// Whether local agent `k` holding `own` strongly envies `other`.
    pub(crate) fn strongly_envies(&self, k: usize, own: u64, other: u64) -> bool {
        if let Scorer::Additive(v) = &self.scorers[k] {
            let own_value: i128 = bits(own).map(|g| v[g]).sum();
            let other_value: i128 = bits(other).map(|g| v[g]).sum();
            return bits(other & self.goods).any(|g| other_value - v[g] > own_value)
                || bits(own & self.chores).any(|c| other_value > own_value - v[c]);
        }
        bits(other & self.goods).any(|g| self.prefers(k, other & !(1 << g), own))
            || bits(own & self.chores).any(|c| self.prefers(k, other, own & !(1 << c)))
    }
}

fn masks_to_bundles(masks: &[u64]) -> Vec<Bundle> {
    masks.iter().map(|&m| mask_bundle(m)).collect()
}

fn state_count(n: usize, m: usize) -> u128 {
    (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX)
}

/// Calls `visit` with the bundle masks of every complete allocation of `m`
/// items to `n` agents, in odometer order, until it returns `true`.
fn for_each_assignment(n: usize, m: usize, mut visit: impl FnMut(&[u64]) -> bool) -> bool {
    let mut owner = vec![0usize; m];
    let mut masks = vec![0u64; n];
    masks[0] = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    loop {
        if visit(&masks) {
            return true;
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return false;
            }
            masks[owner[pos]] &= !(1 << pos);
            owner[pos] += 1;
            if owner[pos] == n {
                owner[pos] = 0;
                masks[0] |= 1 << pos;
                pos += 1;
            } else {
                masks[owner[pos]] |= 1 << pos;
                break;
            }
        }
    }
}

fn graph_efx(judge: &Judge, g: &Graph, masks: &[u64]) -> bool {
    g.edges().all(|(u, v)| {
        !judge.strongly_envies(u, masks[u], masks[v]) && !judge.strongly_envies(v, masks[v], masks[u])
    })
}

fn check_budget(inst: &Instance, budget: u128) -> Result<()> {
    let states = state_count(inst.n(), inst.m());
    if states > budget {
        return Err(Error::BudgetExceeded { states, budget });
    }
    Ok(())
}

/// Some complete allocation that is G-EFX, or `None` when none exists.
pub fn brute_force_efx_search(inst: &Instance, g: &Graph, budget: u128) -> Result<Option<Allocation>> {
    check_graph(inst, g)?;
    check_budget(inst, budget)?;
    let agents: Vec<AgentId> = (0..inst.n()).collect();
    let judge = Judge::new(inst, &agents)?;
    let mut found = None;
    for_each_assignment(inst.n(), inst.m(), |masks| {
        if graph_efx(&judge, g, masks) {
            found = Some(masks.to_vec());
            true
        } else {
            false
        }
    });
    Ok(found.map(|masks| Allocation::from_parts_unchecked(masks_to_bundles(&masks))))
}

/// Every complete allocation that is G-EFX.
pub fn all_g_efx_allocations(inst: &Instance, g: &Graph, budget: u128) -> Result<Vec<Allocation>> {
    check_graph(inst, g)?;
    check_budget(inst, budget)?;
    let agents: Vec<AgentId> = (0..inst.n()).collect();
    let judge = Judge::new(inst, &agents)?;
    let mut all = Vec::new();
    for_each_assignment(inst.n(), inst.m(), |masks| {
        if graph_efx(&judge, g, masks) {
            all.push(Allocation::from_parts_unchecked(masks_to_bundles(masks)));
        }
        false
    });
    Ok(all)
}

/// Every complete allocation of the instance, as owned bundles.
pub fn all_allocations(inst: &Instance, budget: u128) -> Result<Vec<Allocation>> {
    check_budget(inst, budget)?;
    let mut all = Vec::new();
    for_each_assignment(inst.n(), inst.m(), |masks| {
        all.push(Allocation::from_parts_unchecked(masks_to_bundles(masks)));
        false
    });
    Ok(all)
}

fn check_graph(inst: &Instance, g: &Graph) -> Result<()> {
    if g.n() != inst.n() {
        return Err(Error::InvalidGraph(format!("graph has {} vertices but the instance has {} agents", g.n(), inst.n())));
    }
    Ok(())
}

/// Groups agents by identical valuation; returns `type[k]` per listed agent.
pub(crate) fn type_labels(inst: &Instance, agents: &[AgentId]) -> Vec<usize> {
    let mut reps: Vec<AgentId> = Vec::new();
    agents
        .iter()
        .map(|&a| match reps.iter().position(|&r| inst.valuation(r) == inst.valuation(a)) {
            Some(t) => t,
            None => {
                reps.push(a);
                reps.len() - 1
            }
        })
        .collect()
}

/// Complete-graph EFX among `agents` (each with its own valuation), found by
/// enumerating set partitions and assigning blocks to valuation types.
///
/// Agents sharing a valuation are interchangeable, so only distinct type
/// patterns are tried. `seeds` are tried first, as bundle lists aligned with
/// `agents`. Returns bundles aligned with `agents`.
pub(crate) fn complete_efx_search(
    inst: &Instance,
    agents: &[AgentId],
    seeds: &[Vec<Bundle>],
    budget: u128,
) -> Result<Vec<Bundle>> {
    let k = agents.len();
    if k == 0 {
        return if inst.m() == 0 { Ok(Vec::new()) } else { Err(Error::SearchExhausted) };
    }
    let judge = Judge::new(inst, agents)?;
    let efx = |masks: &[u64]| {
        (0..k).all(|a| (0..k).all(|b| a == b || !judge.strongly_envies(a, masks[a], masks[b])))
    };
    for seed in seeds {
        let masks: Vec<u64> = seed.iter().map(crate::model::bundle_mask).collect();
        if efx(&masks) {
            return Ok(seed.clone());
        }
    }
    let types = type_labels(inst, agents);
    let type_count = types.iter().max().map_or(0, |t| t + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); type_count];
    for (local, &t) in types.iter().enumerate() {
        members[t].push(local);
    }
    let capacity: Vec<usize> = members.iter().map(Vec::len).collect();

    let m = inst.m();
    let mut visited: u128 = 0;
    let mut result: Option<Vec<u64>> = None;
    let mut blocks = vec![0u64; k];
    let mut exhausted_budget = false;
    partitions(m, k, 0, 0, &mut blocks, &mut |blocks: &[u64]| {
        let mut remaining = capacity.clone();
        let mut chosen = vec![0usize; k];
        let found = assign_types(blocks, 0, &mut remaining, &mut chosen, &mut |chosen: &[usize]| {
            visited += 1;
            if visited > budget {
                exhausted_budget = true;
                return true;
            }
            let mut masks = vec![0u64; k];
            let mut next = vec![0usize; type_count];
            for (block, &t) in blocks.iter().zip(chosen) {
                let local = members[t][next[t]];
                next[t] += 1;
                masks[local] = *block;
            }
            if efx(&masks) {
                result = Some(masks);
                true
            } else {
                false
            }
        });
        found
    });
    match result {
        Some(masks) => Ok(masks_to_bundles(&masks)),
        None if exhausted_budget => Err(Error::BudgetExceeded { states: visited, budget }),
        None => Err(Error::SearchExhausted),
    }
}

/// Restricted-growth enumeration of partitions of `m` items into at most
/// `k` blocks; unused blocks stay empty.
fn partitions(m: usize, k: usize, item: usize, used: usize, blocks: &mut [u64], visit: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    if item == m {
        return visit(blocks);
    }
    let limit = (used + 1).min(k);
    for b in 0..limit {
        blocks[b] |= 1 << item;
        let stop = partitions(m, k, item + 1, used.max(b + 1), blocks, visit);
        blocks[b] &= !(1 << item);
        if stop {
            return true;
        }
    }
    false
}

/// Distinct ways to label blocks with types under per-type capacities.
/// Identical blocks (only empties can repeat) are labelled in non-decreasing
/// type order to avoid duplicates.
fn assign_types(
    blocks: &[u64],
    idx: usize,
    remaining: &mut [usize],
    chosen: &mut [usize],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if idx == blocks.len() {
        return visit(chosen);
    }
    let min_type = if idx > 0 && blocks[idx] == blocks[idx - 1] { chosen[idx - 1] } else { 0 };
    for t in min_type..remaining.len() {
        if remaining[t] == 0 {
            continue;
        }
        remaining[t] -= 1;
        chosen[idx] = t;
        let stop = assign_types(blocks, idx + 1, remaining, chosen, visit);
        remaining[t] += 1;
        if stop {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envy::is_g_efx;
    use crate::graph::make_path;

    fn set(items: &[usize]) -> Bundle {
        items.iter().copied().collect()
    }

    #[test]
    fn odometer_visits_every_assignment_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_assignment(3, 4, |masks| {
            assert_eq!(masks.iter().fold(0, |a, b| a | b), 0b1111);
            assert!(seen.insert(masks.to_vec()));
            false
        });
        assert_eq!(seen.len(), 81);
    }

    #[test]
    fn partition_count_matches_bell_numbers() {
        let mut count = 0;
        let mut blocks = vec![0u64; 5];
        partitions(5, 5, 0, 0, &mut blocks, &mut |_| {
            count += 1;
            false
        });
        assert_eq!(count, 52);
        let mut count = 0;
        let mut blocks = vec![0u64; 2];
        partitions(4, 2, 0, 0, &mut blocks, &mut |_| {
            count += 1;
            false
        });
        // S(4,1) + S(4,2)
        assert_eq!(count, 8);
    }

    #[test]
    fn brute_force_example_one_on_path() {
        let inst = Instance::goods_additive([[9, 1, 0, 0, 0, 0], [8, 0, 0, 0, 0, 2], [2, 2, 2, 1, 2, 1]]).unwrap();
        let g = make_path(3).unwrap();
        let x = brute_force_efx_search(&inst, &g, DEFAULT_BUDGET).unwrap().unwrap();
        assert!(is_g_efx(&inst, &x, &g));
    }

    #[test]
    fn brute_force_rejects_appendix_allocation() {
        let inst = Instance::goods_additive([[10, 2, 1], [10, 2, 1]]).unwrap();
        let k2 = Graph::complete(2);
        assert!(brute_force_efx_search(&inst, &k2, DEFAULT_BUDGET).unwrap().is_some());
        let all = all_g_efx_allocations(&inst, &k2, DEFAULT_BUDGET).unwrap();
        let bad = Allocation::new(vec![set(&[0, 2]), set(&[1])], 3).unwrap();
        assert!(!all.contains(&bad));
        assert!(all.iter().all(|x| is_g_efx(&inst, x, &k2)));
    }

    #[test]
    fn single_agent_gets_everything() {
        let inst = Instance::goods_additive([[1, 2, 3]]).unwrap();
        let x = brute_force_efx_search(&inst, &Graph::empty(1), DEFAULT_BUDGET).unwrap().unwrap();
        assert_eq!(x.bundle(0), &set(&[0, 1, 2]));
    }

    #[test]
    fn budget_is_enforced() {
        let inst = Instance::goods_additive([[1; 10], [1; 10], [1; 10]]).unwrap();
        assert!(matches!(
            brute_force_efx_search(&inst, &Graph::complete(3), 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn exact_fallback_for_huge_denominators() {
        let v: Vec<Rational> = (1..=3).map(|j| Rational::one() + Rational::pow2_neg(70 * j)).collect();
        let inst = Instance::goods_additive([v.clone(), v]).unwrap();
        let judge = Judge::new(&inst, &[0, 1]).unwrap();
        assert!(matches!(judge.scorers[0], Scorer::AdditiveExact(_)));
        assert!(judge.prefers(0, 0b001, 0b010));
        let bundles = complete_efx_search(&inst, &[0, 1], &[], DEFAULT_BUDGET).unwrap();
        let x = Allocation::new(bundles, 3).unwrap();
        assert!(is_g_efx(&inst, &x, &Graph::complete(2)));
    }
}
