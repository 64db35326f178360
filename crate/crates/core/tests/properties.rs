//! Property tests for invariants that hold across all inputs.

use graphfair::construct::{consistent_core_efx, core_identical_efx, two_type_core_efx};
use graphfair::envy::{is_g_efx, strong_envy_amount};
use graphfair::gen::{gen_random_with, random_connected_graph, rng};
use graphfair::graph::make_path;
use graphfair::hef::{gen_lower_bound_instance, lower_bound_bracket_holds, lower_bound_distinct_holds};
use graphfair::io::{instance_from_json, instance_to_json};
use graphfair::shape::{validate_thm1_shape, validate_thm2_shape, validate_thm3_shape};
use graphfair::solvers::{efx_identical_additive, local_efx};
use graphfair::sweep::{sweep, Outcome, SweepConfig};
use graphfair::{Allocation, Bundle, Graph, Instance, Rational, Valuation};
use proptest::prelude::*;

fn values(m: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..50, m)
}

fn instance(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Instance> {
    (n, m).prop_flat_map(|(n, m)| prop::collection::vec(values(m), n)).prop_map(|rows| Instance::goods_additive(rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn rational_text_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = Rational::new(p, q);
        prop_assert_eq!(r.to_string().parse::<Rational>().unwrap(), r.clone());
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), r);
    }

    #[test]
    fn local_efx_is_efx_and_conserves_items(a in values(7), b in values(7), split in 0u32..128) {
        let own: Bundle = (0..7).filter(|g| split >> g & 1 == 1).collect();
        let other: Bundle = (0..7).filter(|g| split >> g & 1 == 0).collect();
        let (va, vb) = (Valuation::additive(a.clone()), Valuation::additive(b.clone()));
        let (kept, chosen) = local_efx(&own, &other, &va, &vb).unwrap();
        let inst = Instance::goods_additive([a, b]).unwrap();
        let x = Allocation::new(vec![kept.clone(), chosen.clone()], 7).unwrap();
        prop_assert!(strong_envy_amount(&inst, &x, 0, 1).unwrap().is_zero());
        prop_assert!(strong_envy_amount(&inst, &x, 1, 0).unwrap().is_zero());
        // a second cut of the result is EFX again
        let (k2, c2) = local_efx(&kept, &chosen, &va, &vb).unwrap();
        let y = Allocation::new(vec![k2, c2], 7).unwrap();
        prop_assert!(is_g_efx(&inst, &y, &make_path(2).unwrap()));
    }

    #[test]
    fn identical_bags_are_close_and_efx(v in prop::collection::vec(0i64..100, 0..10), n in 1usize..5) {
        let vals: Vec<Rational> = v.iter().map(|&x| Rational::from_integer(x)).collect();
        let bags = efx_identical_additive(&vals, n).unwrap();
        let total = |b: &Bundle| b.iter().map(|&g| v[g]).sum::<i64>();
        let max_item = v.iter().copied().max().unwrap_or(0);
        let totals: Vec<i64> = bags.iter().map(total).collect();
        prop_assert!(totals.iter().max().unwrap() - totals.iter().min().unwrap() <= max_item);
        let inst = Instance::goods_additive(vec![v.clone(); n]).unwrap();
        let x = Allocation::new(bags, v.len()).unwrap();
        prop_assert!(is_g_efx(&inst, &x, &Graph::complete(n)));
    }

    #[test]
    fn instance_json_round_trip(inst in instance(1..=4, 0..=6), seed in 0u64..1000) {
        let g = random_connected_graph(&mut rng(seed), inst.n(), 0.3);
        let back = instance_from_json(&instance_to_json(&inst, &g)).unwrap();
        prop_assert_eq!(back, (inst, g));
    }

    #[test]
    fn sweep_conserves_items_and_success_means_efx(inst in instance(2..=5, 0..=8)) {
        let (x, trace) = sweep(&inst, inst.n(), &SweepConfig::default()).unwrap();
        let all: Bundle = x.bundles().iter().flatten().copied().collect();
        prop_assert_eq!(all, inst.all_items());
        prop_assert_eq!(trace.potentials.len(), trace.rounds);
        if trace.outcome == Outcome::Success {
            prop_assert!(is_g_efx(&inst, &x, &make_path(inst.n()).unwrap()));
        }
    }

    #[test]
    fn lower_bound_observations_on_random_subsets(m in 1usize..40, picks in prop::collection::vec(any::<u64>(), 2)) {
        let inst = gen_lower_bound_instance(&Graph::complete(2), Some(m));
        let v = inst.valuation(0);
        let subset = |bits: u64| -> Bundle { (0..m).filter(|&g| bits >> (g % 64) & 1 == 1).collect() };
        let (s, t) = (subset(picks[0]), subset(picks[1]));
        prop_assert!(lower_bound_bracket_holds(v, &s));
        prop_assert!(lower_bound_distinct_holds(v, &s, &t));
    }
}

#[test]
fn accepted_shapes_always_construct() {
    let mut r = rng(2024);
    let mut accepted = [0usize; 3];
    for _ in 0..150 {
        use rand::Rng;
        let n = r.gen_range(2..=5);
        let m = r.gen_range(0..=6);
        // few distinct rows so that identical and two-type cores appear
        let pool = gen_random_with(&mut r, 2, m, 5, graphfair::gen::KindMix::Goods);
        let rows: Vec<Valuation> = (0..n).map(|_| pool.valuation(r.gen_range(0..2)).clone()).collect();
        let inst = Instance::new(pool.items().to_vec(), rows).unwrap();
        let g = random_connected_graph(&mut r, n, 0.3);
        if let Ok(s) = validate_thm1_shape(&inst, &g) {
            accepted[0] += 1;
            assert!(is_g_efx(&inst, &core_identical_efx(&inst, &g, &s).unwrap(), &g));
        }
        if let Ok(s) = validate_thm2_shape(&inst, &g) {
            accepted[1] += 1;
            assert!(is_g_efx(&inst, &consistent_core_efx(&inst, &g, &s).unwrap(), &g));
        }
        if let Ok(s) = validate_thm3_shape(&inst, &g) {
            accepted[2] += 1;
            assert!(is_g_efx(&inst, &two_type_core_efx(&inst, &g, &s).unwrap(), &g));
        }
    }
    assert!(accepted.iter().all(|&c| c > 20), "{accepted:?}");
}
