use rand_distr::{Distribution, StandardNormal};

use crate::par;
use crate::seed::{self, Rng};

/// Deterministic part of a route for overrun simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteRisk {
    /// Planned service durations per stop.
    pub mu: Vec<f64>,
    /// Total travel time of the route.
    pub travel: f64,
    /// Shift length H.
    pub horizon: f64,
}

/// Independent zero-mean Gaussian residuals with the given variances.
#[derive(Clone, Debug)]
pub struct GaussianResiduals {
    pub sigmas: Vec<f64>,
}

impl GaussianResiduals {
    pub fn from_variances(variances: &[f64]) -> Self {
        Self {
            sigmas: variances.iter().map(|v| v.max(0.0).sqrt()).collect(),
        }
    }

    pub fn sample(&self, stop: usize, rng: &mut Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.sigmas[stop] * z
    }
}

const BLOCK: usize = 4096;

/// Fraction of `trials` in which the realized route duration
/// `sum(mu_i + eps_i) + travel` exceeds the horizon.
///
/// Trials are processed in fixed-size blocks, each with its own stream
/// derived from `seed`, so the result does not depend on scheduling.
pub fn monte_carlo_violation_rate<S>(route: &RouteRisk, sampler: S, trials: usize, seed: u64) -> f64
where
    S: Fn(usize, &mut Rng) -> f64 + Sync,
{
    if trials == 0 {
        return 0.0;
    }
    let base: f64 = route.mu.iter().sum::<f64>() + route.travel;
    let blocks = trials.div_ceil(BLOCK);
    let counts = par::map_range(blocks, |b| {
        let mut rng = seed::rng(seed::derive(seed, b as u64));
        let n = BLOCK.min(trials - b * BLOCK);
        let mut hits = 0usize;
        for _ in 0..n {
            let noise: f64 = (0..route.mu.len()).map(|i| sampler(i, &mut rng)).sum();
            if base + noise > route.horizon {
                hits += 1;
            }
        }
        hits
    });
    counts.iter().sum::<usize>() as f64 / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::route_buffer;

    #[test]
    fn zero_noise_feasible_route() {
        let r = RouteRisk {
            mu: vec![10.0, 20.0],
            travel: 5.0,
            horizon: 60.0,
        };
        assert_eq!(monte_carlo_violation_rate(&r, |_, _| 0.0, 1000, 1), 0.0);
    }

    #[test]
    fn negative_horizon_always_violates() {
        let r = RouteRisk {
            mu: vec![],
            travel: 0.0,
            horizon: -1.0,
        };
        assert_eq!(monte_carlo_violation_rate(&r, |_, _| 0.0, 500, 1), 1.0);
    }

    #[test]
    fn gaussian_route_at_buffer_slack() {
        let vars = vec![16.0, 25.0, 9.0, 36.0];
        let mu = vec![20.0, 30.0, 15.0, 40.0];
        let travel = 35.0;
        let horizon = mu.iter().sum::<f64>() + travel + route_buffer(&vars, 0.05).unwrap();
        let r = RouteRisk { mu, travel, horizon };
        let g = GaussianResiduals::from_variances(&vars);
        let trials = 100_000;
        let rate = monte_carlo_violation_rate(&r, |i, rng| g.sample(i, rng), trials, 11);
        let se = (0.05 * 0.95 / trials as f64).sqrt();
        assert!(rate <= 0.05 + 3.0 * se, "{rate}");
        // Gaussian tail at sqrt(2 ln 20) sigma is about 0.0065
        assert!(rate < 0.02);
        // reproducible
        assert_eq!(
            rate,
            monte_carlo_violation_rate(&r, |i, rng| g.sample(i, rng), trials, 11)
        );
    }
}
