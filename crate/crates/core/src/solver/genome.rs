//! Giant-tour genome and its variation operators.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

/// A permutation of every activity position, cut into one segment per
/// vehicle followed by a final segment of unserved activities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    pub tour: Vec<usize>,
    /// `vehicles + 1` segment lengths summing to `tour.len()`.
    pub lens: Vec<usize>,
}

impl Genome {
    pub fn from_routes(routes: &[Vec<usize>], unserved: &[usize]) -> Self {
        let mut tour: Vec<usize> = routes.iter().flatten().copied().collect();
        tour.extend_from_slice(unserved);
        let mut lens: Vec<usize> = routes.iter().map(Vec::len).collect();
        lens.push(unserved.len());
        Self { tour, lens }
    }

    pub fn vehicles(&self) -> usize {
        self.lens.len() - 1
    }

    pub fn served(&self) -> usize {
        self.tour.len() - self.lens[self.vehicles()]
    }

    pub fn route(&self, k: usize) -> &[usize] {
        let start: usize = self.lens[..k].iter().sum();
        &self.tour[start..start + self.lens[k]]
    }

    pub fn unserved(&self) -> &[usize] {
        &self.tour[self.served()..]
    }

    /// Per-vehicle stop lists and the unserved list.
    pub fn split(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let routes = (0..self.vehicles()).map(|k| self.route(k).to_vec()).collect();
        (routes, self.unserved().to_vec())
    }

    /// Same routes; unserved order ignored. Used to drop duplicate plans.
    pub fn canonical(&self) -> Genome {
        let (routes, mut unserved) = self.split();
        unserved.sort_unstable();
        Genome::from_routes(&routes, &unserved)
    }
}

/// Order crossover on permutations: `child[lo..=hi]` comes from `a`, the
/// remaining slots are filled left to right with `b`'s order.
pub fn ox_permutation(a: &[usize], b: &[usize], lo: usize, hi: usize) -> Vec<usize> {
    let n = a.len();
    let max = a.iter().copied().max().map_or(0, |m| m + 1);
    let mut kept = vec![false; max];
    for &g in &a[lo..=hi] {
        kept[g] = true;
    }
    let mut donor = b.iter().copied().filter(|&g| !kept[g]);
    (0..n)
        .map(|i| {
            if (lo..=hi).contains(&i) {
                a[i]
            } else {
                donor.next().expect("parents are permutations of the same set")
            }
        })
        .collect()
}

/// OX on the giant tours; each child keeps the segment lengths of the parent
/// that supplied its preserved slice.
pub fn order_crossover(a: &Genome, b: &Genome, rng: &mut Rng) -> (Genome, Genome) {
    let n = a.tour.len();
    if n < 2 {
        return (a.clone(), b.clone());
    }
    let i = rng.random_range(0..n);
    let j = rng.random_range(0..n);
    let (lo, hi) = (i.min(j), i.max(j));
    (
        Genome {
            tour: ox_permutation(&a.tour, &b.tour, lo, hi),
            lens: a.lens.clone(),
        },
        Genome {
            tour: ox_permutation(&b.tour, &a.tour, lo, hi),
            lens: b.lens.clone(),
        },
    )
}

/// With probability `rate`, swaps two served stops (same or different routes).
pub fn mutate(genome: &mut Genome, rate: f64, rng: &mut Rng) {
    let served = genome.served();
    if served < 2 || rate <= 0.0 || rng.random::<f64>() >= rate {
        return;
    }
    let i = rng.random_range(0..served);
    let mut j = rng.random_range(0..served - 1);
    if j >= i {
        j += 1;
    }
    genome.tour.swap(i, j);
}
