//! Envy measures and the G-EFX / G-HEF predicates.
//!
//! Every constructor in the crate is checked against these functions before
//! its output is returned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{AgentId, Allocation, Bundle, Instance, ItemKind, Valuation};
use crate::rational::Rational;

pub fn bundle_value(inst: &Instance, agent: AgentId, bundle: &Bundle) -> Result<Rational> {
    inst.check_agent(agent)?;
    inst.valuation(agent).value(bundle).ok_or(Error::LexicographicNotNumeric)
}

/// Strict preference of `agent` for bundle `a` over bundle `b`.
pub fn prefers(inst: &Instance, agent: AgentId, a: &Bundle, b: &Bundle) -> bool {
    inst.valuation(agent).prefers(inst.kinds(), a, b)
}

/// `max(v_i(X_j) - v_i(X_i), 0)`.
pub fn envy_amount(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId) -> Result<Rational> {
    let own = bundle_value(inst, i, x.bundle(i))?;
    let other = bundle_value(inst, i, x.bundle(j))?;
    Ok((other - own).clamp_nonneg())
}

fn without(bundle: &Bundle, item: usize) -> Bundle {
    let mut b = bundle.clone();
    b.remove(&item);
    b
}

/// Clamped strong envy of `i` towards `j`.
///
/// The goods branch removes a good from `X_j`, the chores branch removes a
/// chore from `X_i`; each branch is clamped at zero before taking the max.
pub fn strong_envy_amount(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId) -> Result<Rational> {
    strong_envy_between(inst.valuation(i), inst.kinds(), x.bundle(i), x.bundle(j))
}

pub(crate) fn strong_envy_between(
    valuation: &Valuation,
    kinds: &[ItemKind],
    own: &Bundle,
    other: &Bundle,
) -> Result<Rational> {
    let value = |b: &Bundle| valuation.value(b).ok_or(Error::LexicographicNotNumeric);
    let own_value = value(own)?;
    let other_value = value(other)?;
    let mut best = Rational::zero();
    for &g in other.iter().filter(|&&g| kinds[g] == ItemKind::Good) {
        let gap = value(&without(other, g))? - &own_value;
        if gap > best {
            best = gap;
        }
    }
    for &c in own.iter().filter(|&&c| kinds[c] == ItemKind::Chore) {
        let gap = &other_value - &value(&without(own, c))?;
        if gap > best {
            best = gap;
        }
    }
    Ok(best)
}

/// Existential strong envy, usable with every valuation kind.
pub fn strongly_envies_lex(inst: &Instance, x: &Allocation, i: AgentId, j: AgentId) -> bool {
    strongly_envies_with(inst.valuation(i), inst.kinds(), x.bundle(i), x.bundle(j))
}

pub(crate) fn strongly_envies_with(valuation: &Valuation, kinds: &[ItemKind], own: &Bundle, other: &Bundle) -> bool {
    let goods_branch = other
        .iter()
        .filter(|&&g| kinds[g] == ItemKind::Good)
        .any(|&g| valuation.prefers(kinds, &without(other, g), own));
    goods_branch
        || own
            .iter()
            .filter(|&&c| kinds[c] == ItemKind::Chore)
            .any(|&c| valuation.prefers(kinds, other, &without(own, c)))
}

/// No edge of `g` carries strong envy in either direction.
pub fn is_g_efx(inst: &Instance, x: &Allocation, g: &Graph) -> bool {
    g.edges()
        .all(|(u, v)| !strongly_envies_lex(inst, x, u, v) && !strongly_envies_lex(inst, x, v, u))
}

/// First edge direction `(i, j)` on which `i` strongly envies `j`.
pub fn first_strong_envy(inst: &Instance, x: &Allocation, g: &Graph) -> Option<(AgentId, AgentId)> {
    g.edges().find_map(|(u, v)| {
        if strongly_envies_lex(inst, x, u, v) {
            Some((u, v))
        } else if strongly_envies_lex(inst, x, v, u) {
            Some((v, u))
        } else {
            None
        }
    })
}

/// Every edge is envy-free once `hidden` is removed from the envied bundle
/// (weak comparison). With `uniform`, each bundle may hide at most one item.
pub fn is_g_hef(inst: &Instance, x: &Allocation, g: &Graph, hidden: &crate::model::HiddenSet, uniform: bool) -> Result<bool> {
    if !inst.is_goods_only() {
        return Err(Error::ChoresUnsupported);
    }
    if uniform && x.bundles().iter().any(|b| b.intersection(&hidden.hidden).nth(1).is_some()) {
        return Ok(false);
    }
    let visible: Vec<Bundle> = x.bundles().iter().map(|b| b.difference(&hidden.hidden).copied().collect()).collect();
    let envy_free = |i: AgentId, j: AgentId| !prefers(inst, i, &visible[j], x.bundle(i));
    Ok(g.edges().all(|(u, v)| envy_free(u, v) && envy_free(v, u)))
}

/// Pairwise weak consistency: no two named agents rank any pair of items in
/// strictly opposite directions.
pub fn are_consistent(inst: &Instance, agents: &[AgentId]) -> Result<bool> {
    Ok(first_inconsistency(inst, agents)?.is_none())
}

pub(crate) fn first_inconsistency(inst: &Instance, agents: &[AgentId]) -> Result<Option<(AgentId, AgentId)>> {
    let mut rows = Vec::with_capacity(agents.len());
    for &a in agents {
        inst.check_agent(a)?;
        match inst.valuation(a) {
            Valuation::Additive(values) => rows.push((a, values)),
            _ => return Err(Error::NotAdditive(format!("agent {a}"))),
        }
    }
    let m = inst.m();
    for (x, (a, va)) in rows.iter().enumerate() {
        for (b, vb) in &rows[x + 1..] {
            for k in 0..m {
                for l in 0..m {
                    if va[k] > va[l] && vb[l] > vb[k] {
                        return Ok(Some((*a, *b)));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairEnvy {
    pub from: AgentId,
    pub to: AgentId,
    pub envy: Rational,
    pub strong_envy: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyReport {
    pub pairs: Vec<PairEnvy>,
}

impl EnvyReport {
    pub fn get(&self, from: AgentId, to: AgentId) -> Option<&PairEnvy> {
        self.pairs.iter().find(|p| p.from == from && p.to == to)
    }

    pub fn total_envy(&self) -> Rational {
        self.pairs.iter().map(|p| &p.envy).sum()
    }

    pub fn total_strong_envy(&self) -> Rational {
        self.pairs.iter().map(|p| &p.strong_envy).sum()
    }
}

/// Envy and strong envy for every ordered pair, or only for both directions
/// of each edge when a graph is given.
pub fn envy_report(inst: &Instance, x: &Allocation, graph: Option<&Graph>) -> Result<EnvyReport> {
    let pairs: Vec<(AgentId, AgentId)> = match graph {
        Some(g) => g.edges().flat_map(|(u, v)| [(u, v), (v, u)]).collect(),
        None => (0..inst.n())
            .flat_map(|i| (0..inst.n()).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect(),
    };
    let pairs = pairs
        .into_iter()
        .map(|(i, j)| {
            Ok(PairEnvy {
                from: i,
                to: j,
                envy: envy_amount(inst, x, i, j)?,
                strong_envy: strong_envy_amount(inst, x, i, j)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvyReport { pairs })
}
