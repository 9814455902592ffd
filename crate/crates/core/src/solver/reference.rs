//! Structured reference directions and NSGA-III niching.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Das–Dennis points on the unit simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePointSet {
    pub points: Vec<Vec<f64>>,
    pub divisions: usize,
}

impl ReferencePointSet {
    pub fn das_dennis(dim: usize, divisions: usize) -> Result<Self> {
        if dim == 0 || divisions == 0 {
            return Err(Error::invalid_config(
                "reference points need dim >= 1 and divisions >= 1",
            ));
        }
        let mut points = Vec::new();
        let mut current = vec![0usize; dim];
        fill(&mut points, &mut current, 0, divisions, divisions);
        Ok(Self { points, divisions })
    }

    /// Smallest layer with at least `target` points.
    pub fn at_least(dim: usize, target: usize) -> Result<Self> {
        let mut p = 1;
        while binomial(p + dim - 1, dim - 1) < target {
            p += 1;
        }
        Self::das_dennis(dim, p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the direction nearest to `f` by perpendicular distance, with
    /// that distance. Ties go to the lowest index.
    pub fn associate(&self, f: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, w) in self.points.iter().enumerate() {
            let d = perpendicular_distance(f, w);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn fill(out: &mut Vec<Vec<f64>>, current: &mut [usize], idx: usize, left: usize, total: usize) {
    if idx == current.len() - 1 {
        current[idx] = left;
        out.push(current.iter().map(|&c| c as f64 / total as f64).collect());
        return;
    }
    for c in (0..=left).rev() {
        current[idx] = c;
        fill(out, current, idx + 1, left - c, total);
    }
}

pub fn perpendicular_distance(f: &[f64], w: &[f64]) -> f64 {
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let fw: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
    let t = fw / ww;
    f.iter().zip(w).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt()
}

/// Maps each point into the ideal/nadir box of `pool`; flat axes map to 0.
pub fn normalize<V: AsRef<[f64]>>(points: &[V], pool: &[usize]) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    let mut ideal = vec![f64::INFINITY; dim];
    let mut nadir = vec![f64::NEG_INFINITY; dim];
    for &i in pool {
        for (m, &v) in points[i].as_ref().iter().enumerate() {
            ideal[m] = ideal[m].min(v);
            nadir[m] = nadir[m].max(v);
        }
    }
    points
        .iter()
        .map(|p| {
            p.as_ref()
                .iter()
                .enumerate()
                .map(|(m, &v)| {
                    let span = nadir[m] - ideal[m];
                    if span > 1e-12 {
                        (v - ideal[m]) / span
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Survivors of a niching step, in admission order.
#[derive(Clone, Debug, PartialEq)]
pub struct NicheSelection {
    pub survivors: Vec<usize>,
    /// Reference direction of each survivor.
    pub niche: Vec<usize>,
    /// Survivors per reference direction.
    pub counts: Vec<usize>,
}

impl NicheSelection {
    pub fn niche_count(&self, k: usize) -> usize {
        self.counts[self.niche[k]]
    }
}

/// NSGA-III environmental selection of `mu` points from ordered fronts.
pub fn niche_select<V: AsRef<[f64]>>(
    points: &[V],
    fronts: &[Vec<usize>],
    refs: &ReferencePointSet,
    mu: usize,
    rng: &mut Rng,
) -> Result<NicheSelection> {
    let total: usize = fronts.iter().map(Vec::len).sum();
    if total < mu {
        return Err(Error::invalid_input(format!(
            "{total} candidates cannot fill {mu} survivor slots"
        )));
    }
    if refs.is_empty() {
        return Err(Error::invalid_input("no reference points"));
    }
    let mut pool = Vec::new();
    let mut last = fronts.len();
    for (l, f) in fronts.iter().enumerate() {
        pool.extend_from_slice(f);
        if pool.len() >= mu {
            last = l;
            break;
        }
    }
    let normed = normalize(points, &pool);
    let mut assoc = vec![(0usize, 0.0f64); points.len()];
    for &i in &pool {
        assoc[i] = refs.associate(&normed[i]);
    }
    let mut counts = vec![0usize; refs.len()];
    let mut survivors: Vec<usize> = fronts[..last].iter().flatten().copied().collect();
    for &i in &survivors {
        counts[assoc[i].0] += 1;
    }
    let mut candidates: Vec<usize> = fronts[last].clone();
    while survivors.len() < mu {
        let mut open: Vec<usize> = candidates.iter().map(|&i| assoc[i].0).collect();
        open.sort_unstable();
        open.dedup();
        let least = open.iter().map(|&j| counts[j]).min().expect("candidates remain");
        let crowded: Vec<usize> = open.into_iter().filter(|&j| counts[j] == least).collect();
        let j = crowded[rng.random_range(0..crowded.len())];
        let members: Vec<usize> = candidates.iter().copied().filter(|&i| assoc[i].0 == j).collect();
        let pick = if counts[j] == 0 {
            *members
                .iter()
                .min_by(|&&a, &&b| assoc[a].1.total_cmp(&assoc[b].1).then(a.cmp(&b)))
                .expect("nonempty niche")
        } else {
            members[rng.random_range(0..members.len())]
        };
        survivors.push(pick);
        counts[j] += 1;
        candidates.retain(|&i| i != pick);
    }
    let niche = survivors.iter().map(|&i| assoc[i].0).collect();
    Ok(NicheSelection {
        survivors,
        niche,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn das_dennis_counts() {
        let r = ReferencePointSet::das_dennis(4, 6).unwrap();
        assert_eq!(r.len(), 84);
        for p in &r.points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
        let r = ReferencePointSet::at_least(4, 100).unwrap();
        assert_eq!((r.divisions, r.len()), (7, 120));
        assert_eq!(ReferencePointSet::das_dennis(2, 3).unwrap().len(), 4);
        assert!(ReferencePointSet::das_dennis(4, 0).is_err());
    }

    #[test]
    fn distances() {
        assert!((perpendicular_distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!(perpendicular_distance(&[2.0, 2.0], &[0.5, 0.5]).abs() < 1e-12);
    }

    #[test]
    fn whole_front_passes_through() {
        let pts = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let refs = ReferencePointSet::das_dennis(2, 4).unwrap();
        let sel = niche_select(&pts, &[vec![0, 1], vec![2]], &refs, 2, &mut seed::rng(1)).unwrap();
        assert_eq!(sel.survivors, vec![0, 1]);
        let one = niche_select(&pts, &[vec![0, 1], vec![2]], &refs, 1, &mut seed::rng(1)).unwrap();
        assert!(one.survivors[0] <= 1);
        assert!(niche_select(&pts, &[vec![0]], &refs, 2, &mut seed::rng(1)).is_err());
    }

    #[test]
    fn empty_niche_wins() {
        // Two admitted points sit on the (1,0) axis; the boundary front holds
        // one more point there and one on the empty (0,1) axis.
        let pts = vec![vec![1.0, 0.0], vec![0.9, 0.0], vec![0.95, 0.0], vec![0.0, 1.0]];
        let refs = ReferencePointSet::das_dennis(2, 1).unwrap();
        for s in 0..20 {
            let sel = niche_select(&pts, &[vec![0, 1], vec![2, 3]], &refs, 3, &mut seed::rng(s)).unwrap();
            assert_eq!(sel.survivors, vec![0, 1, 3]);
        }
    }
}
