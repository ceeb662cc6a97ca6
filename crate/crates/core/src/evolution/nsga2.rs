//! Non-dominated sorting and crowding distance, maximizing every objective.

use alloc::vec;
use alloc::vec::Vec;

/// `a` dominates `b`: no worse in every objective, strictly better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut better = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            better = true;
        }
    }
    better
}

/// Partitions indices into Pareto fronts. Front 0 is the non-dominated set;
/// indices within a front are ascending.
pub fn fast_nondominated_sort<O: AsRef<[f64]>>(objectives: &[O]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (objectives[i].as_ref(), objectives[j].as_ref());
            if dominates(a, b) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates(b, a) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, aligned with `front`.
///
/// Fronts of at most two members are all infinite. Otherwise, per objective,
/// the two extremes get infinity and interior members accumulate the
/// normalized gap between their neighbours; an objective whose values are
/// all equal contributes nothing. Equal values are ordered by index.
pub fn crowding_distance<O: AsRef<[f64]>>(front: &[usize], objectives: &[O]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dims = objectives[front[0]].as_ref().len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..dims {
        let value = |k: usize| objectives[front[k]].as_ref()[m];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(front[a].cmp(&front[b])));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for w in order.windows(3) {
            distance[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    distance
}

/// Tournament preference: lower rank, then larger crowding distance.
pub fn crowded_better(rank_a: usize, crowd_a: f64, rank_b: usize, crowd_b: f64) -> bool {
    rank_a < rank_b || (rank_a == rank_b && crowd_a > crowd_b)
}

/// Indices of the `keep` survivors: whole fronts in order, the last partial
/// front filled by descending crowding distance (ties by index). Returns the
/// survivors with their rank and crowding distance.
pub fn select<O: AsRef<[f64]>>(objectives: &[O], keep: usize) -> Vec<(usize, usize, f64)> {
    let mut survivors = Vec::with_capacity(keep);
    for (rank, front) in fast_nondominated_sort(objectives).into_iter().enumerate() {
        if survivors.len() >= keep {
            break;
        }
        let crowd = crowding_distance(&front, objectives);
        let mut members: Vec<(usize, usize, f64)> = front
            .iter()
            .zip(&crowd)
            .map(|(&i, &c)| (i, rank, c))
            .collect();
        if survivors.len() + members.len() > keep {
            members.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
            members.truncate(keep - survivors.len());
        }
        survivors.extend(members);
    }
    survivors
}
