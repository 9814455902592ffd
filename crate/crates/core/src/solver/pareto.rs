//! Dominance and non-dominated sorting.

use crate::model::ObjectiveVector;

/// Pareto dominance for minimization vectors of equal length.
pub fn dominates_min(u: &[f64], v: &[f64]) -> bool {
    debug_assert_eq!(u.len(), v.len());
    let mut strictly = false;
    for (a, b) in u.iter().zip(v) {
        if a > b {
            return false;
        }
        if a < b {
            strictly = true;
        }
    }
    strictly
}

/// `u` dominates `v` on (travel, tardiness, overtime, -served).
pub fn dominates(u: &ObjectiveVector, v: &ObjectiveVector) -> bool {
    dominates_min(&u.to_minimization(), &v.to_minimization())
}

/// Fast non-dominated sort. Fronts list indices in ascending order.
pub fn nondominated_sort<V: AsRef<[f64]>>(points: &[V]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_min(a, b) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates_min(b, a) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Fronts under constrained domination: every zero-penalty point precedes
/// every penalized one; penalized points are ranked by penalty alone.
pub fn constrained_fronts<V: AsRef<[f64]>>(points: &[V], penalties: &[f64]) -> Vec<Vec<usize>> {
    let feasible: Vec<usize> = (0..points.len()).filter(|&i| penalties[i] <= 0.0).collect();
    let sub: Vec<&[f64]> = feasible.iter().map(|&i| points[i].as_ref()).collect();
    let mut fronts: Vec<Vec<usize>> = nondominated_sort(&sub)
        .into_iter()
        .map(|f| f.into_iter().map(|k| feasible[k]).collect())
        .collect();
    let mut infeasible: Vec<usize> = (0..points.len()).filter(|&i| penalties[i] > 0.0).collect();
    infeasible.sort_by(|&a, &b| penalties[a].total_cmp(&penalties[b]).then(a.cmp(&b)));
    for chunk in infeasible.chunk_by(|&a, &b| penalties[a] == penalties[b]) {
        fronts.push(chunk.to_vec());
    }
    fronts
}
