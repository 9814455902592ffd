//! Forecast-aware NSGA-III for the stochastic CVRPTW.
//!
//! Individuals are giant-tour genomes. Offspring come from tournament
//! selection, order crossover and swap mutation, then pass through greedy
//! insertion of unserved work and a budgeted local search. Survival uses
//! constrained domination on the buffered shift overrun, non-dominated
//! sorting and reference-direction niching, with a reserved elite.

mod evaluator;
mod genome;
mod output;
mod pareto;
mod reference;
mod search;

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use evaluator::{apply_risk_penalty, BufferRule, DurationEstimate, Evaluator, RouteEval};
pub use genome::{mutate, order_crossover, ox_permutation, Genome};
pub use output::{read_pareto_index, write_convergence_csv, write_pareto_set, ParetoIndexEntry};
pub use pareto::{constrained_fronts, dominates, dominates_min, nondominated_sort};
pub use reference::{niche_select, normalize, perpendicular_distance, NicheSelection, ReferencePointSet};
pub use search::{insert_greedy, repair_local_search, Routing};

use crate::error::{Error, Result};
use crate::model::{Instance, ObjectiveVector, Plan};
use crate::{par, seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub population: usize,
    pub generations: usize,
    /// Wall-clock budget in seconds.
    pub time_budget_secs: f64,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub mutation_initial: f64,
    pub mutation_growth: f64,
    pub mutation_cap: f64,
    /// Generations without improvement before the mutation rate grows.
    pub stagnation_window: usize,
    pub elite_fraction: f64,
    /// Overrides every vehicle's risk level when set.
    pub alpha: Option<f64>,
    /// Route evaluations allowed per local-search call.
    pub local_search_budget: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 100,
            time_budget_secs: 1200.0,
            tournament_size: 5,
            crossover_prob: 0.8,
            mutation_initial: 0.2,
            mutation_growth: 1.5,
            mutation_cap: 0.5,
            stagnation_window: 10,
            elite_fraction: 0.10,
            alpha: Some(0.05),
            local_search_budget: 2000,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population < 4 {
            return Err(Error::invalid_config("population must be at least 4"));
        }
        if self.tournament_size == 0 {
            return Err(Error::invalid_config("tournament size must be positive"));
        }
        if !(prob(self.crossover_prob)
            && prob(self.mutation_initial)
            && prob(self.mutation_cap)
            && prob(self.elite_fraction))
        {
            return Err(Error::invalid_config(
                "probabilities and the elite fraction must lie in [0,1]",
            ));
        }
        if !(self.mutation_growth >= 1.0) || self.stagnation_window == 0 {
            return Err(Error::invalid_config(
                "mutation growth must be >= 1 and the stagnation window positive",
            ));
        }
        if !(self.time_budget_secs > 0.0) {
            return Err(Error::invalid_config("time budget must be positive"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid_config(format!("alpha must be in (0,1), got {a}")));
            }
        }
        Ok(())
    }

    fn elites(&self) -> usize {
        ((self.elite_fraction * self.population as f64).ceil() as usize).min(self.population)
    }
}

/// One member of the population.
#[derive(Clone, Debug)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    /// Buffered shift overrun in minutes, summed over routes.
    pub penalty: f64,
    pub rank: usize,
    pub niche_count: usize,
}

impl Individual {
    pub fn from_routing(ev: &Evaluator<'_>, routing: &Routing) -> Self {
        let (objectives, penalty) = ev.objectives(&routing.routes, &routing.evals);
        Self {
            genome: routing.genome(),
            objectives,
            penalty,
            rank: 0,
            niche_count: 0,
        }
    }

    fn point(&self) -> [f64; 4] {
        self.objectives.to_minimization()
    }

    /// (penalty, -served, travel + lambda * tardiness + overtime).
    fn elite_key(&self, lambda: f64) -> (f64, f64, f64) {
        let o = &self.objectives;
        (self.penalty, -(o.served as f64), o.weighted_cost(lambda) + o.overtime)
    }

    pub fn plan(&self, ev: &Evaluator<'_>) -> Result<Plan> {
        let inst = ev.instance;
        let assignment: Vec<_> = (0..self.genome.vehicles())
            .map(|k| {
                let ids = self.genome.route(k).iter().map(|&p| inst.activities[p].id).collect();
                (inst.vehicles[k].id, ids)
            })
            .collect();
        Plan::build(inst, &assignment, &ev.mu)
    }
}

fn lex(a: (f64, f64, f64), b: (f64, f64, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
}

/// Builds `config.population` individuals by cheapest insertion in random
/// activity orders.
pub fn initialize_population(ev: &Evaluator<'_>, config: &SolverConfig) -> Vec<Individual> {
    let n = ev.instance.activities.len();
    let base = seed::stream(config.seed, "init");
    par::map_range(config.population, |i| {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed::derive(base, i as u64)));
        let mut routing = Routing::empty(ev, order.clone());
        insert_greedy(ev, &mut routing, &order);
        Individual::from_routing(ev, &routing)
    })
}

/// Per-generation progress record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub generation: usize,
    pub best_travel: f64,
    pub best_tardiness: f64,
    pub best_overtime: f64,
    pub max_served: usize,
    pub penalty_zero_count: usize,
    /// Mean normalized box volume dominated by the zero-penalty front.
    pub hypervolume_proxy: f64,
    pub mutation_rate: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Non-dominated plans, most served first, then by travel.
    pub pareto: Vec<Plan>,
    pub penalties: Vec<f64>,
    pub log: Vec<ConvergenceRow>,
    pub generations_run: usize,
    /// Whether the wall-clock budget ended the run.
    pub timed_out: bool,
}

/// Fixed normalisation box for the hypervolume proxy, taken from the first
/// population so values are comparable across generations.
struct HvBox {
    ideal: [f64; 4],
    reference: [f64; 4],
}

impl HvBox {
    fn new(pop: &[Individual]) -> Self {
        let mut ideal = [f64::INFINITY; 4];
        let mut nadir = [f64::NEG_INFINITY; 4];
        for ind in pop {
            for (m, v) in ind.point().into_iter().enumerate() {
                ideal[m] = ideal[m].min(v);
                nadir[m] = nadir[m].max(v);
            }
        }
        let reference = std::array::from_fn(|m| nadir[m] + 0.1 * (nadir[m] - ideal[m]) + 1.0);
        Self { ideal, reference }
    }

    fn proxy(&self, pop: &[Individual]) -> f64 {
        let feasible: Vec<[f64; 4]> = pop.iter().filter(|i| i.penalty <= 0.0).map(|i| i.point()).collect();
        let fronts = nondominated_sort(&feasible);
        let Some(front) = fronts.first() else { return 0.0 };
        let total: f64 = front
            .iter()
            .map(|&i| {
                (0..4)
                    .map(|m| {
                        ((self.reference[m] - feasible[i][m]) / (self.reference[m] - self.ideal[m])).clamp(0.0, 1.0)
                    })
                    .product::<f64>()
            })
            .sum();
        total / front.len() as f64
    }
}

fn log_row(generation: usize, pop: &[Individual], hv: &HvBox, rate: f64) -> ConvergenceRow {
    let feasible: Vec<&Individual> = pop.iter().filter(|i| i.penalty <= 0.0).collect();
    let pool: Vec<&Individual> = if feasible.is_empty() {
        pop.iter().collect()
    } else {
        feasible.clone()
    };
    let min = |f: fn(&ObjectiveVector) -> f64| pool.iter().map(|i| f(&i.objectives)).fold(f64::INFINITY, f64::min);
    ConvergenceRow {
        generation,
        best_travel: min(|o| o.travel_cost),
        best_tardiness: min(|o| o.tardiness),
        best_overtime: min(|o| o.overtime),
        max_served: pool.iter().map(|i| i.objectives.served).max().unwrap_or(0),
        penalty_zero_count: feasible.len(),
        hypervolume_proxy: hv.proxy(pop),
        mutation_rate: rate,
    }
}

/// Environmental selection: NSGA-III on constrained fronts, then the elite
/// reserve replaces the latest-admitted non-elite survivors if needed.
fn survive(
    mut pool: Vec<Individual>,
    refs: &ReferencePointSet,
    config: &SolverConfig,
    lambda: f64,
    rng: &mut seed::Rng,
) -> Result<Vec<Individual>> {
    let mu = config.population;
    let points: Vec<[f64; 4]> = pool.iter().map(Individual::point).collect();
    let penalties: Vec<f64> = pool.iter().map(|i| i.penalty).collect();
    let fronts = constrained_fronts(&points, &penalties);
    let mut rank = vec![0; pool.len()];
    for (r, f) in fronts.iter().enumerate() {
        for &i in f {
            rank[i] = r;
        }
    }
    let sel = niche_select(&points, &fronts, refs, mu, rng)?;
    let mut survivors = sel.survivors.clone();
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| lex(pool[a].elite_key(lambda), pool[b].elite_key(lambda)).then(a.cmp(&b)));
    let elites = &order[..config.elites().min(order.len())];
    let mut slot = survivors.len();
    for &e in elites {
        if survivors.contains(&e) {
            continue;
        }
        while slot > 0 && elites.contains(&survivors[slot - 1]) {
            slot -= 1;
        }
        if slot == 0 {
            break;
        }
        slot -= 1;
        survivors[slot] = e;
    }
    // Niche counts for tournament tie-breaks, over the final survivor set.
    let normed = normalize(&points, &survivors);
    let niches: Vec<usize> = survivors.iter().map(|&i| refs.associate(&normed[i]).0).collect();
    let mut counts = vec![0usize; refs.len()];
    for &j in &niches {
        counts[j] += 1;
    }
    let mut taken: Vec<Option<Individual>> = pool.drain(..).map(Some).collect();
    Ok(survivors
        .iter()
        .zip(&niches)
        .map(|(&i, &j)| {
            let mut ind = taken[i].take().expect("survivors are distinct");
            ind.rank = rank[i];
            ind.niche_count = counts[j];
            ind
        })
        .collect())
}

fn tournament<'p>(pop: &'p [Individual], size: usize, rng: &mut seed::Rng) -> &'p Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        let key = |i: &Individual| (i.penalty, i.rank, i.niche_count);
        let (a, b) = (key(c), key(best));
        if a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)) {
            best = c;
        }
    }
    best
}

fn improve(ev: &Evaluator<'_>, genome: &Genome, budget: usize) -> Individual {
    let mut routing = Routing::decode(ev, genome);
    let order = routing.unserved.clone();
    insert_greedy(ev, &mut routing, &order);
    repair_local_search(ev, &mut routing, budget);
    let order = routing.unserved.clone();
    insert_greedy(ev, &mut routing, &order);
    Individual::from_routing(ev, &routing)
}

/// Runs the evolutionary search and returns the final Pareto set.
pub fn solve(
    instance: &Instance,
    estimates: &[DurationEstimate],
    rule: &BufferRule,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    config.validate()?;
    let ev = Evaluator::new(instance, estimates, rule, config.alpha)?;
    let refs = ReferencePointSet::at_least(ObjectiveVector::DIM, config.population)?;
    let started = Instant::now();
    let budget = Duration::from_secs_f64(config.time_budget_secs);
    let lambda = instance.lambda;
    let mut rng = seed::rng(seed::stream(config.seed, "evolve"));

    let init = initialize_population(&ev, config);
    let hv = HvBox::new(&init);
    let mut pop = survive(init.clone(), &refs, config, lambda, &mut rng)?;
    let mut rate = config.mutation_initial;
    let mut log = vec![log_row(0, &pop, &hv, rate)];
    let best_of = |pop: &[Individual]| {
        pop.iter()
            .map(|i| i.elite_key(lambda))
            .min_by(|a, b| lex(*a, *b))
            .expect("nonempty population")
    };
    let mut best = best_of(&pop);
    let mut stagnant = 0;
    let mut generations_run = 0;
    let mut timed_out = false;

    for generation in 1..=config.generations {
        if started.elapsed() >= budget {
            timed_out = true;
            break;
        }
        let mut children = Vec::with_capacity(config.population);
        while children.len() < config.population {
            let a = tournament(&pop, config.tournament_size, &mut rng);
            let b = tournament(&pop, config.tournament_size, &mut rng);
            let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_prob {
                order_crossover(&a.genome, &b.genome, &mut rng)
            } else {
                (a.genome.clone(), b.genome.clone())
            };
            mutate(&mut c1, rate, &mut rng);
            mutate(&mut c2, rate, &mut rng);
            children.push(c1);
            if children.len() < config.population {
                children.push(c2);
            }
        }
        let offspring = par::map_slice(&children, |_, g| improve(&ev, g, config.local_search_budget));
        let mut pool = pop;
        pool.extend(offspring);
        pop = survive(pool, &refs, config, lambda, &mut rng)?;
        generations_run = generation;

        let now = best_of(&pop);
        if lex(now, best).is_lt() {
            best = now;
            stagnant = 0;
            rate = config.mutation_initial;
        } else {
            stagnant += 1;
            if stagnant >= config.stagnation_window {
                rate = (rate * config.mutation_growth).min(config.mutation_cap);
                stagnant = 0;
            }
        }
        log.push(log_row(generation, &pop, &hv, rate));
    }

    let (pareto, penalties) = extract_pareto(&ev, &pop)?;
    Ok(SolveOutcome {
        pareto,
        penalties,
        log,
        generations_run,
        timed_out,
    })
}

fn extract_pareto(ev: &Evaluator<'_>, pop: &[Individual]) -> Result<(Vec<Plan>, Vec<f64>)> {
    let least = pop.iter().map(|i| i.penalty).fold(f64::INFINITY, f64::min);
    let pool: Vec<&Individual> = pop.iter().filter(|i| i.penalty <= least.max(0.0)).collect();
    let points: Vec<[f64; 4]> = pool.iter().map(|i| i.point()).collect();
    let front = nondominated_sort(&points).into_iter().next().unwrap_or_default();
    let mut chosen: Vec<&Individual> = front.into_iter().map(|k| pool[k]).collect();
    chosen.sort_by(|a, b| {
        let (x, y) = (&a.objectives, &b.objectives);
        y.served
            .cmp(&x.served)
            .then(x.travel_cost.total_cmp(&y.travel_cost))
            .then(x.tardiness.total_cmp(&y.tardiness))
            .then(x.overtime.total_cmp(&y.overtime))
            .then_with(|| a.genome.canonical().tour.cmp(&b.genome.canonical().tour))
    });
    let mut seen = std::collections::HashSet::new();
    let mut plans = Vec::new();
    let mut penalties = Vec::new();
    for ind in chosen {
        if seen.insert(ind.genome.canonical()) {
            plans.push(ind.plan(ev)?);
            penalties.push(ind.penalty);
        }
    }
    Ok((plans, penalties))
}
