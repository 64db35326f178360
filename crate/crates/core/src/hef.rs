//! Hidden-envy allocations: vertex cover round robin, picking sequences, the
//! hidden-envy example protocol, exact minimum hidden sets and the tightness
//! instance.

use serde::Serialize;

use crate::envy::is_g_hef;
use crate::error::{Error, Result};
use crate::graph::{hiddennottight_parts, make_hiddennottight_graph, Graph, VertexSet};
use crate::model::{AgentId, Allocation, Bundle, HiddenSet, Instance, Item, ItemId, Valuation};
use crate::rational::Rational;

/// Default bound on candidate items for `min_hidden_set`.
pub const HIDDEN_SEARCH_BOUND: usize = 18;

/// One pick of a picking protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Pick {
    pub round: usize,
    pub agent: AgentId,
    pub good: ItemId,
}

fn require_goods(inst: &Instance) -> Result<()> {
    if inst.is_goods_only() {
        Ok(())
    } else {
        Err(Error::ChoresUnsupported)
    }
}

fn require_additive(inst: &Instance, agents: impl IntoIterator<Item = AgentId>) -> Result<()> {
    for a in agents {
        if !inst.valuation(a).is_additive() {
            return Err(Error::NotAdditive(format!("agent {a}")));
        }
    }
    Ok(())
}

/// The agent's most valuable remaining good, lowest id on ties.
fn favourite(inst: &Instance, agent: AgentId, remaining: &Bundle) -> Result<Option<ItemId>> {
    let v = inst.valuation(agent);
    let mut best: Option<(ItemId, Rational)> = None;
    for &g in remaining {
        let value = v.item_value(g).ok_or(Error::LexicographicNotNumeric)?;
        if best.as_ref().map_or(true, |(_, b)| value > *b) {
            best = Some((g, value));
        }
    }
    Ok(best.map(|(g, _)| g))
}

/// Vertex cover round robin on one component of `g`.
///
/// In every round the cover members pick (ascending id), then the rest of
/// the component (ascending id), each taking its favourite remaining good.
/// Agents outside the component get nothing. The hidden set holds the first
/// good picked by each cover member.
pub fn vertex_cover_round_robin(
    inst: &Instance,
    g: &Graph,
    component: &VertexSet,
    cover: &VertexSet,
) -> Result<(Allocation, HiddenSet)> {
    vertex_cover_round_robin_logged(inst, g, component, cover).map(|(x, s, _)| (x, s))
}

/// `vertex_cover_round_robin` that also returns the pick log.
pub fn vertex_cover_round_robin_logged(
    inst: &Instance,
    g: &Graph,
    component: &VertexSet,
    cover: &VertexSet,
) -> Result<(Allocation, HiddenSet, Vec<Pick>)> {
    require_goods(inst)?;
    let n = inst.n();
    if g.n() != n {
        return Err(Error::InvalidGraph(format!("graph has {} vertices, instance has {n} agents", g.n())));
    }
    if let Some(&v) = component.iter().chain(cover).find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!("vertex {v} is out of range")));
    }
    if let Some(&v) = cover.iter().find(|v| !component.contains(v)) {
        return Err(Error::InvalidArgument(format!("cover vertex {v} is outside the component")));
    }
    if let Some(&v) = component.iter().find(|&&v| g.neighbors(v).iter().any(|u| !component.contains(u))) {
        return Err(Error::InvalidArgument(format!("vertex set is not a union of components (vertex {v} has an outside neighbour)")));
    }
    if let Some((u, v)) = g.edges().find(|(u, v)| component.contains(u) && !cover.contains(u) && !cover.contains(v)) {
        return Err(Error::NotACover(u, v));
    }
    require_additive(inst, component.iter().copied())?;

    let order: Vec<AgentId> =
        cover.iter().copied().chain(component.iter().copied().filter(|v| !cover.contains(v))).collect();
    let mut bundles = vec![Bundle::new(); n];
    let mut remaining = inst.all_items();
    let mut hidden = Bundle::new();
    let mut log = Vec::new();
    let mut round = 0;
    while !remaining.is_empty() && !order.is_empty() {
        round += 1;
        for &agent in &order {
            let Some(good) = favourite(inst, agent, &remaining)? else { break };
            remaining.remove(&good);
            bundles[agent].insert(good);
            if round == 1 && cover.contains(&agent) {
                hidden.insert(good);
            }
            log.push(Pick { round, agent, good });
        }
    }
    Ok((Allocation::from_parts_unchecked(bundles), HiddenSet::new(hidden), log))
}

/// Each agent in `order` takes its favourite remaining good.
pub fn picking_sequence(inst: &Instance, order: &[AgentId]) -> Result<Allocation> {
    require_goods(inst)?;
    if order.len() < inst.m() {
        return Err(Error::OrderTooShort { order: order.len(), items: inst.m() });
    }
    for &a in order {
        inst.check_agent(a)?;
    }
    let mut bundles = vec![Bundle::new(); inst.n()];
    let mut remaining = inst.all_items();
    for &agent in order {
        let Some(good) = favourite(inst, agent, &remaining)? else { break };
        remaining.remove(&good);
        bundles[agent].insert(good);
    }
    Ok(Allocation::from_parts_unchecked(bundles))
}

/// The picking order of the hidden-envy example: `0..a`, the bridge `a`,
/// then `0..b`, with `a = ceil((n-1)/2)` and `b = floor((n-1)/2)`.
pub fn hiddennottight_order(n: usize) -> Vec<AgentId> {
    let (a, b) = hiddennottight_parts(n);
    (0..a).chain([a]).chain(0..b).collect()
}

/// Runs the example picking order on the hidden-envy example graph and hides
/// the centre's first good and the bridge's only good.
pub fn hiddennottight_protocol(inst: &Instance, n: usize) -> Result<(Graph, Allocation, HiddenSet)> {
    if inst.n() != n || inst.m() != n {
        return Err(Error::BadSize(format!(
            "protocol needs n agents and n goods (n = {n}), got {} agents and {} items",
            inst.n(),
            inst.m()
        )));
    }
    let g = make_hiddennottight_graph(n)?;
    require_additive(inst, 0..n)?;
    let order = hiddennottight_order(n);
    let x = picking_sequence(inst, &order)?;
    let (a, _) = hiddennottight_parts(n);
    let mut remaining = inst.all_items();
    let mut hidden = Bundle::new();
    for (turn, &agent) in order.iter().enumerate() {
        let good = favourite(inst, agent, &remaining)?.expect("m = n goods cover every turn");
        remaining.remove(&good);
        if turn == 0 || agent == a {
            hidden.insert(good);
        }
    }
    Ok((g, x, HiddenSet::new(hidden)))
}

/// Items held by some agent that a graph neighbour envies.
fn hiding_candidates(inst: &Instance, x: &Allocation, g: &Graph) -> Result<Vec<ItemId>> {
    let mut candidates = Bundle::new();
    for (u, v) in g.edges() {
        for (i, j) in [(u, v), (v, u)] {
            let v_i = inst.valuation(i);
            let own = v_i.value(x.bundle(i)).ok_or(Error::LexicographicNotNumeric)?;
            let other = v_i.value(x.bundle(j)).ok_or(Error::LexicographicNotNumeric)?;
            if other > own {
                candidates.extend(x.bundle(j).iter().copied());
            }
        }
    }
    Ok(candidates.into_iter().collect())
}

/// A minimum hidden set certifying G-HEF (or G-uHEF when `uniform`).
pub fn min_hidden_set(inst: &Instance, x: &Allocation, g: &Graph, uniform: bool) -> Result<HiddenSet> {
    min_hidden_set_bounded(inst, x, g, uniform, HIDDEN_SEARCH_BOUND)
}

/// `min_hidden_set` with an explicit bound on candidate items. Among sets of
/// minimum size the lexicographically first is returned.
pub fn min_hidden_set_bounded(
    inst: &Instance,
    x: &Allocation,
    g: &Graph,
    uniform: bool,
    bound: usize,
) -> Result<HiddenSet> {
    require_goods(inst)?;
    if x.n() != inst.n() || g.n() != inst.n() {
        return Err(Error::InvalidArgument("allocation, graph and instance disagree on n".into()));
    }
    let candidates = hiding_candidates(inst, x, g)?;
    if candidates.len() > bound {
        return Err(Error::TooLarge { what: "hidden-set candidates", size: candidates.len(), bound });
    }
    let c = candidates.len();
    for k in 0..=c {
        // combinations of k indices in lexicographic order
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let set: Bundle = idx.iter().map(|&t| candidates[t]).collect();
            let uniform_ok = !uniform || {
                let mut owners: Vec<AgentId> = set.iter().filter_map(|&o| x.owner_of(o)).collect();
                owners.sort_unstable();
                owners.windows(2).all(|w| w[0] != w[1])
            };
            if uniform_ok {
                let hs = HiddenSet::new(set);
                if is_g_hef(inst, x, g, &hs, uniform)? {
                    return Ok(hs);
                }
            }
            // advance to the next combination
            let Some(pos) = (0..k).rev().find(|&p| idx[p] < c - k + p) else { break };
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    Err(Error::SearchExhausted)
}

/// Identical additive instance with `v(g_j) = 1 + 2^-j` (`j` counted from 1)
/// over `scale` goods, or `n^3` goods by default.
pub fn gen_lower_bound_instance(g: &Graph, scale: Option<usize>) -> Instance {
    let n = g.n();
    let m = scale.unwrap_or(n * n * n);
    let values: Vec<Rational> = (1..=m).map(|j| Rational::one() + Rational::pow2_neg(j as u32)).collect();
    let items = (0..m).map(Item::good).collect();
    Instance::new(items, vec![Valuation::Additive(values); n]).expect("positive additive goods are valid")
}

/// `|S| < v(S) < |S| + 1` for a nonempty `S`.
pub fn lower_bound_bracket_holds(valuation: &Valuation, s: &Bundle) -> bool {
    let Some(value) = valuation.value(s) else { return false };
    let size = Rational::from_integer(s.len() as i64);
    if s.is_empty() {
        return value.is_zero();
    }
    size < value && value < size + Rational::one()
}

/// Distinct bundles have distinct values.
pub fn lower_bound_distinct_holds(valuation: &Valuation, s: &Bundle, t: &Bundle) -> bool {
    s == t || valuation.value(s) != valuation.value(t)
}
