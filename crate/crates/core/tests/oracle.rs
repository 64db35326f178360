//! Cross-checks against small, independent reference implementations that
//! work on plain `i64` values and bitmasks.

use std::collections::BTreeSet;

use graphfair::envy::{is_g_efx, is_g_hef};
use graphfair::gen::{gen_random_with, random_connected_graph, rng, KindMix};
use graphfair::graph::{make_path, make_star};
use graphfair::hef::{min_hidden_set, vertex_cover_round_robin_logged};
use graphfair::search::{all_g_efx_allocations, brute_force_efx_search, DEFAULT_BUDGET};
use graphfair::{Allocation, Bundle, Graph, Instance, ItemKind, Rational, VertexSet};
use rand::Rng;

mod reference {
    /// Additive instance over integers: `values[agent][item]`, chores negative.
    pub struct Plain {
        pub values: Vec<Vec<i64>>,
        pub chores: Vec<bool>,
    }

    pub fn value(p: &Plain, agent: usize, mask: u32) -> i64 {
        (0..p.chores.len()).filter(|&o| mask >> o & 1 == 1).map(|o| p.values[agent][o]).sum()
    }

    /// Goods: some good of `other` can go and `i` still prefers `other`.
    /// Chores: some chore of `own` can go and `i` still prefers `other`.
    pub fn strongly_envies(p: &Plain, i: usize, own: u32, other: u32) -> bool {
        let m = p.chores.len();
        let mine = value(p, i, own);
        let theirs = value(p, i, other);
        let goods_side = (0..m).any(|o| !p.chores[o] && other >> o & 1 == 1 && theirs - p.values[i][o] > mine);
        let chores_side = (0..m).any(|o| p.chores[o] && own >> o & 1 == 1 && theirs > mine - p.values[i][o]);
        goods_side || chores_side
    }

    pub fn graph_efx(p: &Plain, edges: &[(usize, usize)], masks: &[u32]) -> bool {
        edges.iter().all(|&(u, v)| !strongly_envies(p, u, masks[u], masks[v]) && !strongly_envies(p, v, masks[v], masks[u]))
    }

    /// Every owner vector, as bundle masks.
    pub fn all_assignments(n: usize, m: usize) -> Vec<Vec<u32>> {
        let total = n.pow(m as u32);
        (0..total)
            .map(|mut code| {
                let mut masks = vec![0u32; n];
                for o in 0..m {
                    masks[code % n] |= 1 << o;
                    code /= n;
                }
                masks
            })
            .collect()
    }

    pub fn min_cover_size(n: usize, edges: &[(usize, usize)]) -> usize {
        (0u32..1 << n)
            .filter(|s| edges.iter().all(|&(u, v)| s >> u & 1 == 1 || s >> v & 1 == 1))
            .map(u32::count_ones)
            .min()
            .unwrap() as usize
    }

    /// Smallest hidden set over all subsets of items, goods only.
    pub fn min_hidden_size(p: &Plain, edges: &[(usize, usize)], masks: &[u32], uniform: bool) -> usize {
        let m = p.chores.len();
        (0u32..1 << m)
            .filter(|&s| !uniform || masks.iter().all(|&b| (b & s).count_ones() <= 1))
            .filter(|&s| {
                edges.iter().all(|&(u, v)| {
                    value(p, u, masks[u]) >= value(p, u, masks[v] & !s) && value(p, v, masks[v]) >= value(p, v, masks[u] & !s)
                })
            })
            .map(u32::count_ones)
            .min()
            .unwrap() as usize
    }
}

use reference::Plain;

fn plain(inst: &Instance) -> Plain {
    let m = inst.m();
    let values = inst
        .valuations()
        .iter()
        .map(|v| {
            (0..m)
                .map(|o| {
                    let r = v.item_value(o).unwrap();
                    assert!(r.is_integer());
                    r.numer().try_into().unwrap()
                })
                .collect()
        })
        .collect();
    Plain { values, chores: inst.kinds().iter().map(|k| *k == ItemKind::Chore).collect() }
}

fn masks(x: &Allocation) -> Vec<u32> {
    x.bundles().iter().map(|b| b.iter().map(|&o| 1u32 << o).sum()).collect()
}

fn random_small_graph(r: &mut impl Rng, n: usize) -> Graph {
    match r.gen_range(0..4) {
        0 => make_path(n).unwrap(),
        1 => make_star(n).unwrap(),
        2 => Graph::complete(n),
        _ => random_connected_graph(r, n, 0.3),
    }
}

#[test]
fn g_efx_predicate_and_enumeration_agree_with_reference() {
    let mut r = rng(101);
    for case in 0..120 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(0..=5);
        let mix = [KindMix::Goods, KindMix::Chores, KindMix::Mixed][case % 3];
        let inst = gen_random_with(&mut r, n, m, 6, mix);
        let g = random_small_graph(&mut r, n);
        let p = plain(&inst);
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let expected: BTreeSet<Vec<u32>> = reference::all_assignments(n, m)
            .into_iter()
            .filter(|ms| reference::graph_efx(&p, &edges, ms))
            .collect();
        let got: BTreeSet<Vec<u32>> =
            all_g_efx_allocations(&inst, &g, DEFAULT_BUDGET).unwrap().iter().map(masks).collect();
        assert_eq!(got, expected, "case {case}");
        let found = brute_force_efx_search(&inst, &g, DEFAULT_BUDGET).unwrap();
        assert_eq!(found.is_some(), !expected.is_empty());
        if let Some(x) = found {
            assert!(expected.contains(&masks(&x)));
            assert!(is_g_efx(&inst, &x, &g));
        }
    }
}

#[test]
fn exact_vertex_cover_matches_subset_enumeration() {
    let mut r = rng(7);
    for _ in 0..200 {
        let n = r.gen_range(1..=10);
        let density = r.gen_range(0.0..0.8);
        let g = if r.gen_bool(0.5) { random_connected_graph(&mut r, n, density) } else { Graph::empty(n) };
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let exact = g.min_vertex_cover_exact().unwrap();
        assert!(g.is_vertex_cover(&exact));
        assert_eq!(exact.len(), reference::min_cover_size(n, &edges));
        let approx = g.vertex_cover_2approx();
        assert!(g.is_vertex_cover(&approx) && approx.len() <= 2 * exact.len());
    }
}

#[test]
fn min_hidden_set_matches_reference_and_vcrr_bound() {
    let mut r = rng(55);
    for _ in 0..80 {
        let n = r.gen_range(2..=4);
        let m = r.gen_range(0..=7);
        let inst = gen_random_with(&mut r, n, m, 9, KindMix::Goods);
        let g = random_connected_graph(&mut r, n, 0.4);
        let all: VertexSet = (0..n).collect();
        let cover = g.min_vertex_cover_exact().unwrap();
        let (x, s, log) = vertex_cover_round_robin_logged(&inst, &g, &all, &cover).unwrap();
        assert!(is_g_hef(&inst, &x, &g, &s, true).unwrap());
        assert!(s.len() <= cover.len());
        // one hidden good per cover member that picked, none elsewhere
        let first_picks: Bundle = cover
            .iter()
            .filter_map(|&c| log.iter().find(|pk| pk.agent == c).map(|pk| pk.good))
            .collect();
        assert_eq!(s.hidden, first_picks);
        // each agent's picks get weakly worse over the rounds
        for a in 0..n {
            let vals: Vec<Rational> =
                log.iter().filter(|pk| pk.agent == a).map(|pk| inst.valuation(a).item_value(pk.good).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
        let p = plain(&inst);
        let edges: Vec<(usize, usize)> = g.edges().collect();
        for uniform in [false, true] {
            let best = min_hidden_set(&inst, &x, &g, uniform).unwrap();
            assert!(is_g_hef(&inst, &x, &g, &best, uniform).unwrap());
            assert_eq!(best.len(), reference::min_hidden_size(&p, &edges, &masks(&x), uniform));
            assert!(best.len() <= s.len());
        }
    }
}
