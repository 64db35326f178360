//! Complete-graph EFX subroutines.
//!
//! `local_efx` and `efx_identical_additive` are constructive (greedy bag
//! filling). The consistent, two-type and chores solvers try cheap
//! constructions first and fall back to exhaustive search; every result is
//! re-checked before it is returned.

use crate::envy::{first_inconsistency, strongly_envies_with};
use crate::error::{Error, Result};
use crate::model::{AgentId, Bundle, Instance, ItemId, ItemKind, Valuation};
use crate::rational::Rational;
use crate::search::{complete_efx_search, type_labels, DEFAULT_BUDGET};

/// Items sorted by descending value, ties by ascending id.
fn descending(values: &[Rational], items: impl IntoIterator<Item = ItemId>) -> Vec<ItemId> {
    let mut order: Vec<ItemId> = items.into_iter().collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Greedy bag filling: each item, in the given order, goes to the
/// lowest-valued bag (lowest index on ties).
fn bag_fill(values: &[Rational], order: &[ItemId], bags: usize) -> Vec<Bundle> {
    let mut bundles = vec![Bundle::new(); bags];
    let mut totals = vec![Rational::zero(); bags];
    for &g in order {
        let target = (0..bags).min_by(|&a, &b| totals[a].cmp(&totals[b]).then(a.cmp(&b))).expect("at least one bag");
        totals[target] += &values[g];
        bundles[target].insert(g);
    }
    bundles
}

fn additive_values<'a>(valuation: &'a Valuation, role: &str) -> Result<&'a [Rational]> {
    match valuation {
        Valuation::Additive(values) => Ok(values),
        _ => Err(Error::NotAdditive(role.to_string())),
    }
}

/// Two-agent cut and choose on the union of two bundles.
///
/// The cutter splits the pooled items into two bags by greedy filling in
/// descending order of its own values; the chooser takes the bag it values
/// more (the first bag on ties) and the cutter keeps the other. Returns
/// `(cutter_bundle, chooser_bundle)`.
pub fn local_efx(
    cutter_bundle: &Bundle,
    chooser_bundle: &Bundle,
    v_cutter: &Valuation,
    v_chooser: &Valuation,
) -> Result<(Bundle, Bundle)> {
    let cutter_values = additive_values(v_cutter, "cutter")?;
    let chooser_values = additive_values(v_chooser, "chooser")?;
    if !cutter_bundle.is_disjoint(chooser_bundle) {
        return Err(Error::InvalidArgument("local_efx bundles overlap".into()));
    }
    let pooled = cutter_bundle.union(chooser_bundle).copied();
    let order = descending(cutter_values, pooled);
    let mut bags = bag_fill(cutter_values, &order, 2);
    let value = |b: &Bundle| b.iter().map(|&g| &chooser_values[g]).sum::<Rational>();
    let pick = if value(&bags[1]) > value(&bags[0]) { 1 } else { 0 };
    let chosen = std::mem::take(&mut bags[pick]);
    let kept = std::mem::take(&mut bags[1 - pick]);

    let kinds = vec![ItemKind::Good; order.iter().max().map_or(0, |&g| g + 1)];
    if strongly_envies_with(v_cutter, &kinds, &kept, &chosen) || strongly_envies_with(v_chooser, &kinds, &chosen, &kept) {
        return Err(Error::Unverified("local_efx split is not EFX".into()));
    }
    Ok((kept, chosen))
}

/// EFX bundles for `n` agents sharing one additive goods valuation.
pub fn efx_identical_additive(values: &[Rational], n: usize) -> Result<Vec<Bundle>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one bag".into()));
    }
    if values.iter().any(Rational::is_negative) {
        return Err(Error::InvalidArgument("bag filling expects goods (nonnegative values)".into()));
    }
    let order = descending(values, 0..values.len());
    let bundles = bag_fill(values, &order, n);
    let valuation = Valuation::Additive(values.to_vec());
    let kinds = vec![ItemKind::Good; values.len()];
    for a in &bundles {
        for b in &bundles {
            if strongly_envies_with(&valuation, &kinds, a, b) {
                return Err(Error::Unverified("identical-valuation bag filling is not EFX".into()));
            }
        }
    }
    Ok(bundles)
}

/// EFX bundles for `n` copies of an arbitrary valuation of `inst`'s items.
pub fn efx_identical(inst: &Instance, valuation: &Valuation, n: usize) -> Result<Vec<Bundle>> {
    if let Valuation::Additive(values) = valuation {
        if inst.is_goods_only() {
            return efx_identical_additive(values, n);
        }
    }
    let copies = inst.replicated(valuation, n);
    let agents: Vec<AgentId> = (0..n).collect();
    complete_efx_search(&copies, &agents, &[], DEFAULT_BUDGET)
}

fn check_all_additive(inst: &Instance, agents: &[AgentId]) -> Result<()> {
    for &a in agents {
        inst.check_agent(a)?;
        if !inst.valuation(a).is_additive() {
            return Err(Error::NotAdditive(format!("agent {a}")));
        }
    }
    Ok(())
}

fn check_consistent(inst: &Instance, agents: &[AgentId]) -> Result<()> {
    match first_inconsistency(inst, agents)? {
        Some((a, b)) => Err(Error::NotConsistent(a, b)),
        None => Ok(()),
    }
}

/// Item order compatible with every listed agent's weak ranking: sort by the
/// first agent's values, then the second's, and so on.
fn common_order(inst: &Instance, agents: &[AgentId]) -> Vec<ItemId> {
    let rows: Vec<&[Rational]> = agents
        .iter()
        .filter_map(|&a| match inst.valuation(a) {
            Valuation::Additive(v) => Some(v.as_slice()),
            _ => None,
        })
        .collect();
    let mut order: Vec<ItemId> = (0..inst.m()).collect();
    order.sort_by(|&x, &y| {
        rows.iter()
            .map(|r| r[y].cmp(&r[x]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    order
}

/// Envy-cycle elimination: each item (in `order`) goes to an agent nobody
/// envies; envy cycles are rotated away first. Bundles aligned with `agents`.
pub(crate) fn envy_cycle_elimination(inst: &Instance, agents: &[AgentId], order: &[ItemId]) -> Vec<Bundle> {
    let k = agents.len();
    let mut bundles = vec![Bundle::new(); k];
    let kinds = inst.kinds();
    let envies = |bundles: &[Bundle], a: usize, b: usize| inst.valuation(agents[a]).prefers(kinds, &bundles[b], &bundles[a]);
    for &g in order {
        let receiver = loop {
            let unenvied = (0..k).find(|&b| (0..k).all(|a| a == b || !envies(&bundles, a, b)));
            if let Some(b) = unenvied {
                break b;
            }
            // every agent is envied: walk envy edges backwards until a repeat
            let mut path = vec![0usize];
            let mut pos = vec![None; k];
            pos[0] = Some(0);
            let cycle_start = loop {
                let current = *path.last().expect("non-empty path");
                let envier = (0..k).find(|&a| a != current && envies(&bundles, a, current)).expect("agent is envied");
                if let Some(p) = pos[envier] {
                    break p;
                }
                pos[envier] = Some(path.len());
                path.push(envier);
            };
            // path[t+1] envies path[t]; each envier takes the envied bundle
            let cycle = &path[cycle_start..];
            let old: Vec<Bundle> = cycle.iter().map(|&a| bundles[a].clone()).collect();
            for t in 0..cycle.len() {
                let envier = cycle[(t + 1) % cycle.len()];
                bundles[envier] = old[t].clone();
            }
        };
        bundles[receiver].insert(g);
    }
    bundles
}

/// Complete EFX allocation among `agents`, whose additive goods valuations
/// must be pairwise consistent. Bundles aligned with `agents`.
pub fn efx_consistent_additive(inst: &Instance, agents: &[AgentId]) -> Result<Vec<Bundle>> {
    check_all_additive(inst, agents)?;
    check_consistent(inst, agents)?;
    if !inst.is_goods_only() {
        return Err(Error::InvalidArgument("consistent goods solver given chores".into()));
    }
    if agents.is_empty() {
        return complete_efx_search(inst, agents, &[], DEFAULT_BUDGET);
    }
    let order = common_order(inst, agents);
    let seed = envy_cycle_elimination(inst, agents, &order);
    complete_efx_search(inst, agents, &[seed], DEFAULT_BUDGET)
}

/// Complete EFX allocation among `agents` when at most two distinct
/// valuations occur among them. Types are read off valuation equality.
pub fn efx_two_types(inst: &Instance, agents: &[AgentId]) -> Result<Vec<Bundle>> {
    for &a in agents {
        inst.check_agent(a)?;
    }
    let types = type_labels(inst, agents);
    if types.iter().any(|&t| t > 1) {
        return Err(Error::InvalidArgument("more than two valuation types".into()));
    }
    let mut seeds = Vec::new();
    if inst.is_goods_only() {
        for t in 0..=1 {
            let Some(rep) = types.iter().position(|&x| x == t) else { continue };
            let Valuation::Additive(values) = inst.valuation(agents[rep]) else { continue };
            let order = descending(values, 0..inst.m());
            let bags = bag_fill(values, &order, agents.len());
            seeds.push(others_pick_first(inst, agents, &types, t, bags));
        }
        if agents.iter().all(|&a| inst.valuation(a).is_additive()) {
            seeds.push(envy_cycle_elimination(inst, agents, &(0..inst.m()).collect::<Vec<_>>()));
        }
    }
    complete_efx_search(inst, agents, &seeds, DEFAULT_BUDGET)
}

/// Agents not of type `cutter_type` pick their favourite bag in turn; the
/// cutter type takes the remaining bags in order.
fn others_pick_first(inst: &Instance, agents: &[AgentId], types: &[usize], cutter_type: usize, bags: Vec<Bundle>) -> Vec<Bundle> {
    let mut pool: Vec<Option<Bundle>> = bags.into_iter().map(Some).collect();
    let mut out = vec![Bundle::new(); agents.len()];
    let choosers = (0..agents.len()).filter(|&l| types[l] != cutter_type);
    let cutters = (0..agents.len()).filter(|&l| types[l] == cutter_type);
    for local in choosers.chain(cutters) {
        let valuation = inst.valuation(agents[local]);
        let mut best: Option<usize> = None;
        for (idx, bag) in pool.iter().enumerate() {
            let Some(bag) = bag else { continue };
            let better = match best {
                None => true,
                Some(b) => valuation.prefers(inst.kinds(), bag, pool[b].as_ref().expect("present")),
            };
            if better {
                best = Some(idx);
            }
        }
        out[local] = pool[best.expect("one bag per agent")].take().expect("present");
    }
    out
}

/// Complete EFX-for-chores allocation among `agents` with consistent
/// additive chore valuations.
pub fn efx_consistent_chores(inst: &Instance, agents: &[AgentId]) -> Result<Vec<Bundle>> {
    if !inst.is_chores_only() {
        return Err(Error::InvalidArgument("chores solver given goods".into()));
    }
    check_all_additive(inst, agents)?;
    check_consistent(inst, agents)?;
    let mut seeds = Vec::new();
    if let Some(&first) = agents.first() {
        let values = additive_values(inst.valuation(first), "agent")?;
        // heaviest chores first, each to the least burdened bag
        let mut order: Vec<ItemId> = (0..inst.m()).collect();
        order.sort_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b)));
        let mut bags = vec![Bundle::new(); agents.len()];
        let mut totals = vec![Rational::zero(); agents.len()];
        for g in order {
            let target = (0..bags.len()).max_by(|&a, &b| totals[a].cmp(&totals[b]).then(b.cmp(&a))).expect("bags");
            totals[target] += &values[g];
            bags[target].insert(g);
        }
        seeds.push(bags);
    }
    complete_efx_search(inst, agents, &seeds, DEFAULT_BUDGET)
}
