mod common;

use common::random_snapshot;
use dodagsim_core::cost::CostModel;
use dodagsim_core::optimizer::{
    brute_force_optimal, check_acyclic, generate_neighbours, initial_solution, min_hop_assignment,
    select_best_non_tabu, shortest_path_tree, tabu_search, tabu_search_from, Move, TabuList,
};
use dodagsim_core::{NodeId, TabuParams, WeightVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weights() -> impl Strategy<Value = WeightVector> {
    prop::array::uniform6(0.0f64..1.0)
        .prop_filter("non-zero", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| WeightVector::normalized(w).unwrap())
}

fn params(seed: u64) -> TabuParams {
    TabuParams { seed, ..TabuParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_neighbour_is_feasible(n in 2usize..16, extra in 0.0f64..0.9, seed in any::<u64>(), cap in 1usize..200) {
        let snap = random_snapshot(n, extra, seed);
        let costs = snap.edge_costs(&CostModel::normalized(WeightVector::default())).unwrap();
        let s = initial_solution(&snap, &costs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let moves = generate_neighbours(&s, &snap, &costs, cap, &mut rng);
        prop_assert!(moves.len() <= cap);
        for m in moves {
            prop_assert_eq!(s.parent(m.node), Some(m.from));
            prop_assert!(snap.edge_index(m.node, m.to).is_some());
            let next = m.apply(&s);
            prop_assert!(check_acyclic(&next, snap.sink()));
            prop_assert!(snap.validate_assignment(&next).is_ok());
        }
    }

    #[test]
    fn neighbourhood_is_complete_below_cap(n in 2usize..9, extra in 0.0f64..0.9, seed in any::<u64>()) {
        let snap = random_snapshot(n, extra, seed);
        let costs = snap.edge_costs(&CostModel::normalized(WeightVector::default())).unwrap();
        let s = initial_solution(&snap, &costs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let moves = generate_neighbours(&s, &snap, &costs, usize::MAX, &mut rng);
        // Oracle: try every candidate parent and keep the acyclic ones.
        let mut expect = 0;
        for v in snap.members() {
            for &(q, _) in snap.candidates(v) {
                if Some(q) != s.parent(v) {
                    let m = Move { node: v, from: s.parent(v).unwrap(), to: q };
                    if check_acyclic(&m.apply(&s), snap.sink()) {
                        expect += 1;
                    }
                }
            }
        }
        prop_assert_eq!(moves.len(), expect);
    }

    #[test]
    fn tabu_tenure_is_exact(tenure in 1usize..100, at in 0usize..1000, node in 0u32..50, to in 0u32..50) {
        let mut list = TabuList::new(tenure);
        let key = (NodeId(node), NodeId(to));
        list.insert(key, at);
        for it in (at + 1)..=(at + tenure) {
            prop_assert!(list.is_tabu(key, it));
            list.expire(it);
            prop_assert_eq!(list.len(), 1);
        }
        prop_assert!(!list.is_tabu(key, at + tenure + 1));
        list.expire(at + tenure + 1);
        prop_assert!(list.is_empty());
    }

    #[test]
    fn selection_respects_tabu_and_aspiration(
        costs in prop::collection::vec(0.0f64..100.0, 1..30),
        tabu_mask in prop::collection::vec(any::<bool>(), 30),
        best in 0.1f64..100.0,
        asp in 0.5f64..=1.0,
    ) {
        let iter = 5;
        let mut list = TabuList::new(10);
        let cands: Vec<(Move, f64)> = costs
            .iter()
            .enumerate()
            .map(|(i, c)| (Move { node: NodeId(i as u32 + 1), from: NodeId(0), to: NodeId(100 + i as u32) }, *c))
            .collect();
        for (i, (m, _)) in cands.iter().enumerate() {
            if tabu_mask[i] {
                list.insert(m.key(), iter - 1);
            }
        }
        let pick = select_best_non_tabu(&cands, &list, iter, best, asp).unwrap();
        let admissible: Vec<usize> =
            (0..cands.len()).filter(|&i| !tabu_mask[i] || cands[i].1 < asp * best).collect();
        if admissible.is_empty() {
            prop_assert!(cands.iter().all(|c| c.1 >= cands[pick].1));
        } else {
            prop_assert!(admissible.contains(&pick));
            prop_assert!(admissible.iter().all(|&i| cands[i].1 >= cands[pick].1));
        }
    }

    #[test]
    fn tabu_search_is_deterministic_and_never_worse(
        n in 2usize..25,
        extra in 0.0f64..0.6,
        seed in any::<u64>(),
        w in weights(),
        cap in 1usize..50,
    ) {
        let snap = random_snapshot(n, extra, seed);
        let model = CostModel::normalized(w);
        let p = TabuParams { neighbourhood_cap: cap, ..params(seed) };
        let a = tabu_search(&snap, &model, &p).unwrap();
        let b = tabu_search(&snap, &model, &p).unwrap();
        prop_assert_eq!(&a.assignment, &b.assignment);
        prop_assert_eq!(a.cost, b.cost);
        prop_assert!(a.cost <= a.trace.initial_cost);
        prop_assert!(a.trace.best.windows(2).all(|x| x[1] <= x[0]));
        prop_assert!(check_acyclic(&a.assignment, snap.sink()));
        prop_assert!(snap.validate_assignment(&a.assignment).is_ok());
        let costs = snap.edge_costs(&model).unwrap();
        prop_assert!((snap.assignment_cost(&a.assignment, &costs).unwrap() - a.cost).abs() <= 1e-9 * a.cost.max(1.0));
    }

    #[test]
    fn oracle_lower_bounds_tabu_and_matches_dijkstra(n in 2usize..8, extra in 0.0f64..0.9, seed in any::<u64>(), w in weights()) {
        let snap = random_snapshot(n, extra, seed);
        let model = CostModel::normalized(w);
        let costs = snap.edge_costs(&model).unwrap();
        let (_, opt) = brute_force_optimal(&snap, &costs).unwrap();
        let ts = tabu_search_from(&snap, &costs, initial_solution(&snap, &costs), &params(seed)).unwrap();
        let tol = 1e-9 * opt.max(1.0);
        prop_assert!(opt <= ts.cost + tol);
        let spt = snap.assignment_cost(&shortest_path_tree(&snap, &costs), &costs).unwrap();
        prop_assert!((spt - opt).abs() <= tol);
    }

    #[test]
    fn min_hop_paths_have_bfs_length(n in 2usize..30, extra in 0.0f64..0.5, seed in any::<u64>()) {
        let snap = random_snapshot(n, extra, seed);
        let a = min_hop_assignment(&snap);
        let depth = a.depths(snap.sink());
        for v in snap.members() {
            prop_assert_eq!(depth[v.index()], snap.hop(v));
        }
    }
}
