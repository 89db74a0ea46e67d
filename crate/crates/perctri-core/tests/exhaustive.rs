mod common;

use num_rational::Ratio;
use perctri_core::arms::{arm_event, ArmSpec};
use perctri_core::estimator::exact_enumeration;
use perctri_core::percolation::two_disjoint_arms;
use perctri_core::*;

fn all_n1() -> impl Iterator<Item = Configuration> {
    (0u64..1 << 9).map(|b| Configuration::from_index_bits(1, b))
}

#[test]
fn n1_features_match_oracles() {
    for c in all_n1() {
        let s = feature_sets(&c).unwrap();
        assert_eq!(s.f, common::pioneering(&c), "{c:?}");
        assert_eq!(s.q, common::pivotal_by_flip(&c), "{c:?}");
        assert_eq!(on_some_crossing_set(&c).unwrap(), common::crossing_union(&c));
        let lows = common::lowest_crossing_sets(&c);
        assert_eq!(lows.len(), usize::from(!s.l.is_empty()), "{c:?}");
        if let Some(low) = lows.first() {
            assert_eq!(low, &s.l);
        }
        assert!(s.q.is_subset(&s.l) && s.l.is_subset(&s.f));
        assert_ne!(common::open_lr(&c), common::closed_tb(&c));
    }
}

#[test]
fn n1_two_arms_match_brute_force() {
    for c in all_n1() {
        let all = common::all_vertices(&c);
        for (a, b) in [("left", "right"), ("bottom", "top"), ("left", "top")] {
            let (sa, sb) = (common::side_set(&c, a), common::side_set(&c, b));
            for &x in &all {
                if sa.contains(&x) && sb.contains(&x) {
                    continue;
                }
                for (state, open) in [(State::Open, true), (State::Closed, false)] {
                    let got = two_disjoint_arms(&c, x, state, &sa, &sb, None).unwrap();
                    assert_eq!(got, common::two_arms_brute(&c, x, open, &sa, &sb, &all), "{c:?} {x} {a}/{b}");
                }
            }
        }
    }
}

/// Exact moments recomputed here from the brute-force oracles.
#[test]
fn n1_exact_enumeration_matches_oracles() {
    let exact = exact_enumeration(1, 3).unwrap();
    assert_eq!(exact.configurations, 512);
    let mut sums = [[0u128; 3]; 3];
    let mut arms = [0u128; 3];
    for c in all_n1() {
        let l = common::lowest_crossing_sets(&c).first().map_or(0, |s| s.len()) as u128;
        let f = common::pioneering(&c).len() as u128;
        let q = common::pivotal_by_flip(&c).len() as u128;
        for (k, v) in [l, f, q].into_iter().enumerate() {
            for t in 0..3 {
                sums[k][t] += v.pow(t as u32 + 1);
            }
        }
        for (i, k) in [2u8, 3, 4].into_iter().enumerate() {
            arms[i] += arm_event(&c, &ArmSpec::annulus(k, Vertex::ORIGIN, 0, 1)).unwrap() as u128;
        }
    }
    for (k, name) in ["L", "F", "Q"].into_iter().enumerate() {
        for t in 0..3 {
            assert_eq!(exact.get(name, t as u32 + 1).unwrap(), Ratio::new(sums[k][t], 512), "{name} {t}");
        }
    }
    assert_eq!(exact.get("L", 1).unwrap(), Ratio::new(819, 512));
    for (i, k) in [2u8, 3, 4].into_iter().enumerate() {
        let row = exact.arms.iter().find(|m| m.quantity.starts_with(&format!("U{k}"))).unwrap();
        assert_eq!(exact.get(&row.quantity, 1).unwrap(), Ratio::new(arms[i], 512));
    }
}
