mod common;

use std::collections::BTreeSet;

use perctri_core::arms::{arm_event, ArmSpec};
use perctri_core::boxgraph::{choose_c, separating_rectangle, separation_violations, ChainGraph, SeparationInput, VertexTuple};
use perctri_core::features::{below_gamma_has_no_crossing, has_open_crossing};
use perctri_core::geometry::LatticeBox;
use perctri_core::io::{read_config, write_config};
use perctri_core::percolation::two_disjoint_arms;
use perctri_core::*;
use proptest::prelude::*;

fn config(max_n: u32) -> impl Strategy<Value = Configuration> {
    (1..=max_n, any::<u64>(), any::<u64>()).prop_map(|(n, s, t)| Configuration::sample(n, s, t))
}

fn half_turn(set: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
    set.iter().map(|v| Vertex::new(-v.x, -v.y)).collect()
}

fn tuple(n: u32, tau: usize) -> impl Strategy<Value = VertexTuple> {
    let r = n as i32;
    proptest::collection::btree_set((-r..=r, -r..=r), 1..=tau).prop_map(move |s| VertexTuple {
        n,
        vertices: s.into_iter().map(|(x, y)| Vertex::new(x, y)).collect(),
    })
}

/// Random tuples with clustered points, so near-to chains actually form.
fn clustered_tuple(n: u32, tau: usize) -> impl Strategy<Value = VertexTuple> {
    let r = n as i64;
    (
        proptest::collection::vec((-r..=r, -r..=r), 1..=3),
        proptest::collection::vec((0usize..3, 0u32..20, -1000i64..=1000, -1000i64..=1000), 0..tau),
    )
        .prop_map(move |(centres, offs)| {
            let mut set = BTreeSet::new();
            for &(x, y) in &centres {
                set.insert(Vertex::new(x as i32, y as i32));
            }
            for (k, scale, dx, dy) in offs {
                let (cx, cy) = centres[k % centres.len()];
                let s = (r >> scale.min(40)).max(1);
                let x = (cx + dx * s / 1000).clamp(-r, r);
                let y = (cy + dy * s / 1000).clamp(-r, r);
                set.insert(Vertex::new(x as i32, y as i32));
            }
            let mut vertices: Vec<Vertex> = set.into_iter().collect();
            vertices.truncate(tau);
            VertexTuple { n, vertices }
        })
}

fn check_graph(t: &VertexTuple) -> std::result::Result<(), TestCaseError> {
    let g = ChainGraph::build(t, choose_c(t.vertices.len() as u32)).unwrap();
    prop_assert!(g.index_violations().is_empty(), "{:?}", g.index_violations());
    prop_assert!(g.chain_proximity_violations().is_empty(), "{:?}", g.chain_proximity_violations());
    prop_assert!(g.disjoint_box_family().is_ok());
    let mut seen: Vec<usize> = g.components.iter().flat_map(|c| std::iter::once(c.root).chain(c.members.clone())).collect();
    seen.sort_unstable();
    prop_assert_eq!(seen, (0..t.vertices.len()).collect::<Vec<_>>());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_round_trip(c in config(12)) {
        prop_assert_eq!(read_config(&write_config(&c)).unwrap(), c);
    }

    #[test]
    fn half_turn_is_index_reversal(c in config(6)) {
        let r = c.rotated_half_turn();
        for i in 0..c.len() {
            prop_assert_eq!(r.is_open_idx(c.len() - 1 - i), c.is_open_idx(i));
            let v = c.vertex(i);
            prop_assert_eq!(r.is_open(Vertex::new(-v.x, -v.y)), c.is_open(v));
        }
        prop_assert_eq!(r.rotated_half_turn(), c);
    }

    #[test]
    fn duality(c in config(10)) {
        prop_assert!(common::open_lr(&c) != common::closed_tb(&c));
        prop_assert_eq!(has_open_crossing(&c), common::open_lr(&c));
    }

    #[test]
    fn crossing_union_matches_enumeration(c in config(2)) {
        prop_assert_eq!(on_some_crossing_set(&c).unwrap(), common::crossing_union(&c));
    }

    #[test]
    fn lowest_crossing_matches_enumeration(c in config(2)) {
        let l = feature_sets(&c).unwrap().l;
        let lows = common::lowest_crossing_sets(&c);
        if l.is_empty() {
            prop_assert!(lows.is_empty());
        } else {
            prop_assert_eq!(lows, vec![l]);
        }
    }

    #[test]
    fn features_match_oracles(c in config(4)) {
        let s = feature_sets(&c).unwrap();
        prop_assert_eq!(&s.f, &common::pioneering(&c));
        prop_assert_eq!(&s.q, &common::pivotal_by_flip(&c));
        prop_assert_eq!(&s.q, &pivotal_set_direct(&c).unwrap());
        let on_bottom: BTreeSet<Vertex> =
            on_some_crossing_set(&c).unwrap().into_iter().filter(|v| common::closed_arm_bottom(&c, *v)).collect();
        prop_assert_eq!(&s.l, &on_bottom);
    }

    #[test]
    fn feature_invariants(c in config(24)) {
        let s = feature_sets(&c).unwrap();
        prop_assert!(s.q.is_subset(&s.l) && s.l.is_subset(&s.f));
        let path: BTreeSet<Vertex> = s.gamma.iter().copied().collect();
        prop_assert_eq!(&path, &s.l);
        prop_assert_eq!(path.len(), s.gamma.len());
        prop_assert_eq!(s.l.is_empty(), !has_open_crossing(&c));
        if let (Some(a), Some(b)) = (s.gamma.first(), s.gamma.last()) {
            let n = c.n() as i32;
            prop_assert!(a.x == -n && b.x == n);
            prop_assert!(s.gamma.windows(2).all(|w| w[0].is_adjacent(w[1])));
            prop_assert!(s.gamma.iter().all(|v| c.is_open(*v)));
        }
        prop_assert!(below_gamma_has_no_crossing(&c, &s.gamma));
        let counts = feature_counts(&c).unwrap();
        prop_assert_eq!(counts, (s.l.len(), s.f.len(), s.q.len()));
    }

    #[test]
    fn half_turn_equivariance(c in config(10)) {
        let s = feature_sets(&c).unwrap();
        let r = feature_sets(&c.rotated_half_turn()).unwrap();
        prop_assert_eq!(half_turn(&r.l), s.h_top);
        prop_assert_eq!(half_turn(&r.q), s.q);
    }

    #[test]
    fn exploration_terminal_matches_crossing(c in config(10)) {
        let t = explore_interface(&c).unwrap();
        prop_assert_eq!(t.terminal == Terminal::Right, has_open_crossing(&c));
        prop_assert!(t.discovered_open.iter().all(|v| c.is_open(*v)));
        prop_assert!(t.steps.iter().all(|s| c.is_open(s.site) == s.open));
    }

    #[test]
    fn two_arm_flow_matches_brute_force(c in config(2), xi in any::<prop::sample::Index>(), open in any::<bool>(), vertical in any::<bool>()) {
        let x = c.vertex(xi.index(c.len()));
        let (a, b) = if vertical { ("bottom", "top") } else { ("left", "right") };
        let (sa, sb) = (common::side_set(&c, a), common::side_set(&c, b));
        let region = common::all_vertices(&c);
        prop_assume!(!(sa.contains(&x) && sb.contains(&x)));
        let state = if open { State::Open } else { State::Closed };
        let flow = two_disjoint_arms(&c, x, state, &sa, &sb, None).unwrap();
        prop_assert_eq!(flow, common::two_arms_brute(&c, x, open, &sa, &sb, &region));
    }

    #[test]
    fn pivotal_sites_have_four_arms(c in config(8)) {
        let all = common::all_vertices(&c);
        let s = |name: &str| common::side_set(&c, name);
        for &x in &feature_sets(&c).unwrap().q {
            prop_assert!(two_disjoint_arms(&c, x, State::Open, &s("left"), &s("right"), Some(&all)).unwrap());
            prop_assert!(two_disjoint_arms(&c, x, State::Closed, &s("bottom"), &s("top"), Some(&all)).unwrap());
        }
    }

    #[test]
    fn arm_nesting_and_monotonicity(c in config(12), m in 0u32..3) {
        let n = c.n();
        prop_assume!(n >= m + 2);
        let u4 = arm_event(&c, &ArmSpec::annulus(4, Vertex::ORIGIN, m, n)).unwrap();
        let u3 = arm_event(&c, &ArmSpec::annulus(3, Vertex::ORIGIN, m, n)).unwrap();
        let u2 = arm_event(&c, &ArmSpec::annulus(2, Vertex::ORIGIN, m, n)).unwrap();
        prop_assert!(!u4 || (u3 && u2));
        prop_assert!(!u3 || u2);
        for k in [2u8, 3, 4] {
            let outer = arm_event(&c, &ArmSpec::annulus(k, Vertex::ORIGIN, m, n)).unwrap();
            for inner_n in m + 1..n {
                if outer {
                    prop_assert!(arm_event(&c, &ArmSpec::annulus(k, Vertex::ORIGIN, m, inner_n)).unwrap());
                }
            }
        }
    }

    #[test]
    fn restricted_implies_annulus(seed in any::<u64>(), k in 2u8..=4, n in 8u32..=16, xi in any::<prop::sample::Index>()) {
        let c = Configuration::sample(n, seed, 0);
        let q = (n / 4) as i32;
        let cells: Vec<Vertex> = (-q..=q).flat_map(|y| (-q..=q).map(move |x| Vertex::new(x, y))).collect();
        let x = cells[xi.index(cells.len())];
        let t = ArmSpec::restricted(k, x, n);
        if arm_event(&c, &t).unwrap() {
            let mut u = ArmSpec::annulus(k, x, 0, n);
            u.pattern = t.pattern.clone();
            prop_assert!(arm_event(&c, &u).unwrap());
        }
    }

    #[test]
    fn box_graph_uniform(t in (prop_oneof![Just(64u32), Just(256u32)], 1usize..=6).prop_flat_map(|(n, tau)| tuple(n, tau))) {
        check_graph(&t)?;
    }

    #[test]
    fn box_graph_clustered(t in (prop_oneof![Just(64u32), Just(256u32), Just(1u32 << 20)], 1usize..=6).prop_flat_map(|(n, tau)| clustered_tuple(n, tau))) {
        check_graph(&t)?;
    }

    #[test]
    fn separation_postconditions(
        ax in -1000i32..1000,
        ay in -1000i32..1000,
        boxes in proptest::collection::vec((-4000i32..4000, -4000i32..4000, 0u32..200), 1..6),
    ) {
        let anchor = Vertex::new(ax, ay);
        let boxes: Vec<LatticeBox> = boxes
            .into_iter()
            .map(|(dx, dy, r)| LatticeBox::new(Vertex::new(ax + dx, ay + dy), r))
            .filter(|b| !b.contains(anchor))
            .collect();
        prop_assume!(!boxes.is_empty());
        let input = SeparationInput { anchor, boxes, shrink: 0, scale: None };
        prop_assume!(input.scale() >= 16);
        let Some(input) = input.with_minimal_shrink() else { return Ok(()); };
        let out = separating_rectangle(&input).unwrap().expect("diameter condition holds");
        let v = separation_violations(&input, &out);
        prop_assert!(v.is_empty(), "{:?}", v);
    }
}
