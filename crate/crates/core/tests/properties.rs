// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{check_against_addition, eval_graph, random_tree, Tree};
use prefixsyn::dataio::{emit_verilog, Netlist, Style};
use prefixsyn::esat::{BackboneExpr, RegroupTrace};
use prefixsyn::graph::{critical_path, parse_epr, render_epr};
use prefixsyn::refine::{RefineAction, RefineKind};
use prefixsyn::timing::{backbone_cost, graph_arrivals};
use prefixsyn::{ArrivalProfile, DelayModel, NodeId, PrefixGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tree(width: usize, seed: u64) -> Tree {
    random_tree(0, width - 1, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn arrivals(width: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.5f64, width)
}

fn width_and_arrivals(lo: usize, hi: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (lo..=hi).prop_flat_map(|n| (Just(n), arrivals(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn regroup_keeps_a_backbone(width in 3usize..=24, seed: u64, pick: usize) {
        let b = tree(width, seed).to_backbone();
        let cands = b.find_candidates();
        prop_assume!(!cands.is_empty());
        let c = cands[pick % cands.len()];
        let r = b.regroup(c.a, c.b).unwrap();
        prop_assert_eq!(r.size(), width - 1);
        prop_assert!(r.validate().is_ok());
        prop_assert!(r.contains(&c.created()) && !r.contains(&c.removed()));
        // Same leaves, same order.
        let t = Tree::from_backbone(&r);
        prop_assert_eq!((t.msb(), t.lsb()), (width - 1, 0));
    }

    #[test]
    fn backbone_cost_is_monotone((width, t) in width_and_arrivals(2, 20), seed: u64, bit: usize, bump in 0.0..0.3f64) {
        let b = tree(width, seed).to_backbone();
        let m = DelayModel::default();
        let before = backbone_cost(&b, &ArrivalProfile::new(t.clone()).unwrap(), &m).unwrap();
        let mut later = t.clone();
        later[bit % width] += bump;
        let after = backbone_cost(&b, &ArrivalProfile::new(later).unwrap(), &m).unwrap();
        prop_assert!(after >= before);
        prop_assert_eq!(before, Tree::from_backbone(&b).cost(&t, m.step()));
    }

    #[test]
    fn sta_without_fanout_penalty_matches_backbone_cost((width, t) in width_and_arrivals(2, 20), seed: u64) {
        let b = tree(width, seed).to_backbone();
        let m = DelayModel { beta: 0.0, ..DelayModel::default() };
        let p = ArrivalProfile::new(t).unwrap();
        let g = b.complete().graph;
        let r = graph_arrivals(&g, &p, &m).unwrap();
        prop_assert_eq!(r.arrival(&NodeId::new(width - 1, 0)), backbone_cost(&b, &p, &m).unwrap());
    }

    #[test]
    fn slack_plus_delay_is_target((width, t) in width_and_arrivals(2, 16), seed: u64, target in 0.0..2.0f64) {
        let g = tree(width, seed).to_backbone().complete().graph;
        let r = graph_arrivals(&g, &ArrivalProfile::new(t).unwrap(), &DelayModel::default()).unwrap();
        prop_assert!((r.slack(target) + r.delay - target).abs() < 1e-12);
        prop_assert!(r.delay >= r.worst_arrival);
    }

    #[test]
    fn refinement_preserves_addition(width in 3usize..=8, seed: u64, steps in 1usize..6) {
        let mut g = tree(width, seed).to_backbone().complete().graph;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let pairs = common::vectors(width, seed);
        for _ in 0..steps * 8 {
            let nodes: Vec<NodeId> = g.nodes().copied().collect();
            let target = nodes[rng.random_range(0..nodes.len())];
            let kind = [RefineKind::LevelOpt, RefineKind::FanoutOpt, RefineKind::NodeClone][rng.random_range(0..3)];
            let consumer = g.consumers(&target).first().copied();
            let action = RefineAction { kind, target, consumer };
            if let Ok(out) = action.apply(&g, None) {
                prop_assert!(out.graph.is_valid(), "{} left an invalid graph", action);
                g = out.graph;
            }
        }
        let res = check_against_addition(width, &pairs, |a, b| eval_graph(&g, a, b));
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn netlist_agrees_with_graph(width in 2usize..=12, seed: u64, inverting: bool, a: Vec<u64>) {
        let g = tree(width, seed).to_backbone().complete().graph;
        let style = if inverting { Style::Inverting } else { Style::Plain };
        let net = Netlist::parse(&emit_verilog(&g, style).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u64> = (0..width).map(|i| a.get(i).copied().unwrap_or_else(|| rng.random())).collect();
        let y: Vec<u64> = (0..width).map(|_| rng.random()).collect();
        prop_assert_eq!(net.simulate_lanes(&x, &y).unwrap(), eval_graph(&g, &x, &y));
        prop_assert_eq!(g.simulate_lanes(&x, &y).unwrap(), eval_graph(&g, &x, &y));
    }

    #[test]
    fn text_forms_round_trip((width, t) in width_and_arrivals(2, 16), seed: u64) {
        let b = tree(width, seed).to_backbone();
        let e = BackboneExpr::from_backbone(&b);
        prop_assert_eq!(e.to_string().parse::<BackboneExpr>().unwrap(), e.clone());
        prop_assert_eq!(e.to_backbone().unwrap(), b.clone());

        let g = b.complete().graph;
        prop_assert_eq!(parse_epr(&render_epr(&g)).unwrap(), g.clone());

        let p = ArrivalProfile::new(t).unwrap();
        prop_assert_eq!(ArrivalProfile::parse(&p.to_text()).unwrap(), p.clone());

        let trace = prefixsyn::esat::derive_trace(&b).unwrap();
        prop_assert_eq!(RegroupTrace::parse(width, &trace.to_text()).unwrap(), trace);

        let r = graph_arrivals(&g, &p, &DelayModel::default()).unwrap();
        let path = critical_path(&g, &r, r.critical_start, r.critical_end).unwrap();
        prop_assert_eq!(path.start(), r.critical_start);
        prop_assert_eq!(path.end(), r.critical_end);
    }
}

#[test]
fn serial_graph_is_its_own_backbone() {
    for n in 2..=9 {
        let g = PrefixGraph::serial(n).unwrap();
        let b = prefixsyn::Backbone::from_graph(&g).unwrap();
        assert_eq!(b.complete().graph, g);
    }
}
