use hexevo_core::evolution::nsga2::{crowding_distance, dominates, fast_nondominated_sort, select};
use hexevo_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

/// Peels fronts by repeatedly taking every remaining point that no other
/// remaining point dominates.
fn brute_force_fronts(objs: &[[f64; 3]]) -> Vec<Vec<usize>> {
    let better = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| x >= y) && a != b;
    let mut remaining: Vec<usize> = (0..objs.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| better(&objs[j], &objs[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn random_population(seed: u64) -> Vec<[f64; 3]> {
    let mut rng = stream(seed, "nsga-oracle", 0);
    let n = rng.random_range(1..=32);
    // a coarse grid makes ties and duplicates common
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(0..6) as f64))
        .collect()
}

#[test]
fn fronts_match_the_brute_force_oracle() {
    for seed in 0..200 {
        let objs = random_population(seed);
        assert_eq!(fast_nondominated_sort(&objs), brute_force_fronts(&objs), "population {seed}");
    }
}

#[test]
fn equally_spaced_line_has_interior_distance_two() {
    let objs = [[0.0, 2.0, 5.0], [1.0, 1.0, 5.0], [2.0, 0.0, 5.0]];
    let d = crowding_distance(&[0, 1, 2], &objs);
    assert!(d[0].is_infinite() && d[2].is_infinite());
    assert_eq!(d[1], 2.0);
}

#[test]
fn crowding_ignores_input_order() {
    let mut rng = stream(1, "crowding-order", 0);
    for _ in 0..50 {
        let objs: Vec<[f64; 3]> = (0..9).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect();
        let front: Vec<usize> = (0..9).collect();
        let d = crowding_distance(&front, &objs);
        let mut perm = front.clone();
        perm.reverse();
        perm.rotate_left(rng.random_range(0..9));
        let dp = crowding_distance(&perm, &objs);
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(dp[k], d[i]);
        }
    }
}

proptest! {
    #[test]
    fn later_fronts_never_dominate_earlier_ones(seed in any::<u64>()) {
        let objs = random_population(seed);
        let fronts = fast_nondominated_sort(&objs);
        prop_assert_eq!(fronts.iter().map(Vec::len).sum::<usize>(), objs.len());
        for (k, front) in fronts.iter().enumerate() {
            for later in &fronts[k..] {
                for &i in front {
                    for &j in later {
                        prop_assert!(!dominates(&objs[j], &objs[i]));
                    }
                }
            }
        }
    }

    #[test]
    fn selection_keeps_the_requested_count(seed in any::<u64>(), keep in 1usize..32) {
        let objs = random_population(seed);
        let kept = select(&objs, keep);
        prop_assert_eq!(kept.len(), keep.min(objs.len()));
        let mut ids: Vec<usize> = kept.iter().map(|k| k.0).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), kept.len());
        // ranks are non-decreasing in survivor order
        prop_assert!(kept.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
