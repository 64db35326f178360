//! Seeded random instances, graphs and shape-conforming test families.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::model::{AgentId, Instance, Item, Valuation};
use crate::rational::Rational;
use crate::shape::CoreStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindMix {
    Goods,
    Chores,
    /// Each item is a good or a chore with equal probability.
    Mixed,
}

impl FromStr for KindMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "goods" => Ok(KindMix::Goods),
            "chores" => Ok(KindMix::Chores),
            "mixed" => Ok(KindMix::Mixed),
            _ => Err(Error::InvalidArgument(format!("unknown kind mix {s:?} (goods, chores, mixed)"))),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_items(rng: &mut impl Rng, m: usize, mix: KindMix) -> Vec<Item> {
    (0..m)
        .map(|id| match mix {
            KindMix::Goods => Item::good(id),
            KindMix::Chores => Item::chore(id),
            KindMix::Mixed if rng.gen_bool(0.5) => Item::chore(id),
            KindMix::Mixed => Item::good(id),
        })
        .collect()
}

fn random_additive(rng: &mut impl Rng, items: &[Item], max_value: u64) -> Valuation {
    Valuation::additive(items.iter().map(|it| {
        let v = Rational::from_integer(rng.gen_range(0..=max_value) as i64);
        if it.kind == crate::model::ItemKind::Chore {
            -v
        } else {
            v
        }
    }))
}

/// Additive integer values in `[0, max_value]` (negated for chores).
pub fn gen_random(n: usize, m: usize, max_value: u64, mix: KindMix, seed: u64) -> Instance {
    gen_random_with(&mut rng(seed), n, m, max_value, mix)
}

pub fn gen_random_with(rng: &mut impl Rng, n: usize, m: usize, max_value: u64, mix: KindMix) -> Instance {
    let items = random_items(rng, m, mix);
    let valuations = (0..n).map(|_| random_additive(rng, &items, max_value)).collect();
    Instance::new(items, valuations).expect("sign-correct additive values are valid")
}

/// Additive goods whose values per agent sum to at most `budget`.
pub fn gen_budgeted_goods(rng: &mut impl Rng, n: usize, m: usize, budget: u64) -> Instance {
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            let mut cuts: Vec<u64> = (0..m).map(|_| rng.gen_range(0..=budget)).collect();
            cuts.sort_unstable();
            let mut prev = 0;
            cuts.iter()
                .map(|&c| {
                    let v = c - prev;
                    prev = c;
                    v as i64
                })
                .collect()
        })
        .collect();
    Instance::goods_additive(rows).expect("nonnegative goods")
}

/// `count` path instances with 3 to 6 agents and 3 to 10 goods, each
/// agent spending at most 1000 points.
pub fn gen_sweep_batch(count: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.gen_range(3..=6);
            let m = r.gen_range(3..=10);
            gen_budgeted_goods(&mut r, n, m, 1000)
        })
        .collect()
}

/// Random lexicographic priorities over a random kind mix.
pub fn gen_random_lex(rng: &mut impl Rng, n: usize, m: usize, mix: KindMix) -> Instance {
    let items = random_items(rng, m, mix);
    let valuations = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..m).collect();
            p.shuffle(rng);
            Valuation::Lexicographic(p)
        })
        .collect();
    Instance::new(items, valuations).expect("permutations are valid priorities")
}

/// A random spanning tree plus each remaining pair with probability `p`.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (labels[rng.gen_range(0..i)], labels[i])).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges.iter_mut().for_each(|e| *e = (e.0.min(e.1), e.0.max(e.1)));
    edges.sort_unstable();
    edges.dedup();
    Graph::new(n, edges).expect("tree plus extra edges is simple")
}

/// A random connected graph of diameter at least 4 on `n >= 5` vertices:
/// a random tree grown from a 5-vertex path, plus sparse extra edges kept
/// only while the diameter stays at least 4.
pub fn random_graph_diameter4(rng: &mut impl Rng, n: usize) -> Result<Graph> {
    if n < 5 {
        return Err(Error::BadSize(format!("diameter 4 needs at least 5 vertices, got {n}")));
    }
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..4).map(|i| (labels[i], labels[i + 1])).collect();
    for i in 5..n {
        edges.push((labels[rng.gen_range(0..i)], labels[i]));
    }
    let mut g = Graph::new(n, edges.clone())?;
    for _ in 0..n {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let mut more = edges.clone();
        more.push((u, v));
        let candidate = Graph::new(n, more.clone())?;
        if candidate.diameter().is_some_and(|d| d >= 4) {
            edges = more;
            g = candidate;
        }
    }
    Ok(g)
}

/// An instance together with a graph and the core structure it was built
/// around.
#[derive(Clone, Debug)]
pub struct Shaped {
    pub instance: Instance,
    pub graph: Graph,
    pub structure: CoreStructure,
}

fn nonempty_subset(rng: &mut impl Rng, pool: &[AgentId]) -> Vec<AgentId> {
    loop {
        let pick: Vec<AgentId> = pool.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !pick.is_empty() || pool.is_empty() {
            return pick;
        }
    }
}

/// Builds the graph for a grouped core: random edges inside the core, each
/// outer agent joined to a nonempty subset of one group (any core vertex
/// when `attach_anywhere`).
fn shaped_graph(rng: &mut impl Rng, n: usize, groups: &[Vec<AgentId>], outer: &[AgentId], attach_anywhere: bool) -> Graph {
    let core: Vec<AgentId> = groups.iter().flatten().copied().collect();
    let mut edges = Vec::new();
    for (i, &u) in core.iter().enumerate() {
        for &v in &core[i + 1..] {
            if rng.gen_bool(0.5) {
                edges.push((u, v));
            }
        }
    }
    for &o in outer {
        let k = rng.gen_range(0..groups.len());
        let pool = if attach_anywhere { &core } else { &groups[k] };
        for v in nonempty_subset(rng, pool) {
            edges.push((o, v));
        }
    }
    Graph::new(n, edges).expect("core and outer edges are simple")
}

/// Splits shuffled agents into `groups` core groups (nonempty) and outer agents.
fn split_agents(rng: &mut impl Rng, n: usize, groups: usize) -> (Vec<Vec<AgentId>>, Vec<AgentId>) {
    let mut agents: Vec<AgentId> = (0..n).collect();
    agents.shuffle(rng);
    let core_size = rng.gen_range(groups..=n);
    let (core, outer) = agents.split_at(core_size);
    let mut out: Vec<Vec<AgentId>> = (0..groups).map(|k| vec![core[k]]).collect();
    for &a in &core[groups..] {
        out[rng.gen_range(0..groups)].push(a);
    }
    for g in &mut out {
        g.sort_unstable();
    }
    out.sort();
    (out, outer.to_vec())
}

fn to_structure(groups: &[Vec<AgentId>], outer: &[AgentId]) -> CoreStructure {
    CoreStructure::new(
        groups.iter().map(|g| g.iter().copied().collect::<VertexSet>()).collect(),
        outer.iter().copied().collect(),
    )
}

/// Consistent additive values: one shared ranking of the items, each row
/// non-increasing along it.
fn consistent_rows(rng: &mut impl Rng, rows: usize, m: usize, max_value: u64) -> Vec<Vec<i64>> {
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.shuffle(rng);
    (0..rows)
        .map(|_| {
            let mut draws: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=max_value) as i64).collect();
            draws.sort_unstable_by(|a, b| b.cmp(a));
            let mut row = vec![0; m];
            for (rank, &item) in ranking.iter().enumerate() {
                row[item] = draws[rank];
            }
            row
        })
        .collect()
}

fn negate(rows: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    rows.into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect()
}

fn assemble(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    max_value: u64,
    groups: &[Vec<AgentId>],
    outer: &[AgentId],
    group_rows: Vec<Vec<i64>>,
    chores: bool,
) -> Vec<Vec<i64>> {
    let mut rows = vec![Vec::new(); n];
    for (k, g) in groups.iter().enumerate() {
        for &a in g {
            rows[a] = group_rows[k].clone();
        }
    }
    for &o in outer {
        let row: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=max_value) as i64).collect();
        rows[o] = if chores { row.into_iter().map(|v| -v).collect() } else { row };
    }
    rows
}

/// Identical-valuation core, independent outer set attached anywhere.
pub fn gen_identical_core(rng: &mut impl Rng, n: usize, m: usize, max_value: u64, chores: bool) -> Shaped {
    let (groups, outer) = split_agents(rng, n, 1);
    let graph = shaped_graph(rng, n, &groups, &outer, true);
    let mut base = vec![(0..m).map(|_| rng.gen_range(0..=max_value) as i64).collect::<Vec<_>>()];
    if chores {
        base = negate(base);
    }
    let rows = assemble(rng, n, m, max_value, &groups, &outer, base, chores);
    let instance = if chores { Instance::chores_additive(rows) } else { Instance::goods_additive(rows) }.expect("valid rows");
    Shaped { instance, graph, structure: to_structure(&groups, &outer) }
}

/// Consistent core groups; each outer agent attaches to a single group.
pub fn gen_consistent_core(rng: &mut impl Rng, n: usize, m: usize, max_value: u64, chores: bool) -> Shaped {
    let k = rng.gen_range(1..=n.clamp(1, 3));
    let (groups, outer) = split_agents(rng, n, k);
    let graph = shaped_graph(rng, n, &groups, &outer, false);
    let mut base = consistent_rows(rng, k, m, max_value);
    if chores {
        base = negate(base);
    }
    let rows = assemble(rng, n, m, max_value, &groups, &outer, base, chores);
    let instance = if chores { Instance::chores_additive(rows) } else { Instance::goods_additive(rows) }.expect("valid rows");
    Shaped { instance, graph, structure: to_structure(&groups, &outer) }
}

/// At most two core types (arbitrary additive valuations); each outer agent
/// attaches to one type.
pub fn gen_two_type_core(rng: &mut impl Rng, n: usize, m: usize, max_value: u64) -> Shaped {
    let k = rng.gen_range(1..=n.clamp(1, 2));
    let (mut groups, outer) = split_agents(rng, n, k);
    let mut base: Vec<Vec<i64>> = (0..k).map(|_| (0..m).map(|_| rng.gen_range(0..=max_value) as i64).collect()).collect();
    if k == 2 && base[0] == base[1] {
        // equal draws make a single type
        let second = groups.pop().expect("two groups");
        groups[0].extend(second);
        groups[0].sort_unstable();
        base.pop();
    }
    let graph = shaped_graph(rng, n, &groups, &outer, false);
    let rows = assemble(rng, n, m, max_value, &groups, &outer, base, false);
    let instance = Instance::goods_additive(rows).expect("valid rows");
    Shaped { instance, graph, structure: to_structure(&groups, &outer) }
}
