//! Constructive insertion and budgeted local search on decoded routings.

use super::evaluator::{Evaluator, RouteEval};
use super::genome::Genome;

const EPS: f64 = 1e-9;

/// Decoded genome with cached per-route evaluations.
#[derive(Clone, Debug)]
pub struct Routing {
    pub routes: Vec<Vec<usize>>,
    pub evals: Vec<RouteEval>,
    pub unserved: Vec<usize>,
}

impl Routing {
    pub fn decode(ev: &Evaluator<'_>, genome: &Genome) -> Self {
        let (routes, unserved) = genome.split();
        let evals = routes.iter().enumerate().map(|(k, r)| ev.eval_route(k, r)).collect();
        Self {
            routes,
            evals,
            unserved,
        }
    }

    pub fn empty(ev: &Evaluator<'_>, unserved: Vec<usize>) -> Self {
        let k = ev.instance.vehicles.len();
        Self {
            routes: vec![Vec::new(); k],
            evals: vec![RouteEval::default(); k],
            unserved,
        }
    }

    pub fn genome(&self) -> Genome {
        Genome::from_routes(&self.routes, &self.unserved)
    }

    /// Sum of route scores (travel + lambda * tardiness + penalty).
    pub fn score(&self, ev: &Evaluator<'_>) -> f64 {
        self.evals.iter().map(|e| ev.score(e)).sum()
    }

    pub fn penalty(&self) -> f64 {
        self.evals.iter().map(|e| e.penalty).sum()
    }
}

fn loc(ev: &Evaluator<'_>, stops: &[usize], idx: isize) -> usize {
    if idx < 0 || idx as usize >= stops.len() {
        ev.instance.depot
    } else {
        ev.instance.activities[stops[idx as usize]].location
    }
}

fn cost(ev: &Evaluator<'_>, a: usize, b: usize) -> f64 {
    ev.instance.travel_cost[a][b]
}

fn time(ev: &Evaluator<'_>, a: usize, b: usize) -> f64 {
    ev.instance.travel_time[a][b]
}

fn route_cost(ev: &Evaluator<'_>, stops: &[usize]) -> f64 {
    let mut node = ev.instance.depot;
    let mut total = 0.0;
    for &p in stops {
        let next = ev.instance.activities[p].location;
        total += cost(ev, node, next);
        node = next;
    }
    total + cost(ev, node, ev.instance.depot)
}

fn clean(e: &RouteEval) -> bool {
    e.stats.tardiness <= 0.0 && e.penalty <= 0.0
}

/// Inserts each activity of `order` (if currently unserved) at its cheapest
/// position that keeps the route within its buffered shift limit and adds no
/// tardiness or overtime. Activities with no such position stay unserved.
pub fn insert_greedy(ev: &Evaluator<'_>, routing: &mut Routing, order: &[usize]) {
    let mut is_unserved = vec![false; ev.instance.activities.len()];
    for &u in &routing.unserved {
        is_unserved[u] = true;
    }
    let mut candidate = Vec::new();
    for &u in order {
        if !is_unserved[u] {
            continue;
        }
        let a = ev.instance.activities[u].location;
        let mut best: Option<(f64, usize, usize, RouteEval)> = None;
        for (k, stops) in routing.routes.iter().enumerate() {
            let cur = &routing.evals[k];
            if cur.penalty > 0.0 {
                continue;
            }
            let h = ev.vehicle(k).shift_length;
            let var = cur.var_sum + ev.sigma2[u];
            candidate.clear();
            candidate.extend_from_slice(stops);
            candidate.push(u);
            let buffer = ev.buffer(k, &candidate, var);
            let base = cur.mu_sum + ev.mu[u] + cur.stats.travel_time + buffer;
            for j in 0..=stops.len() {
                let q = loc(ev, stops, j as isize - 1);
                let r = loc(ev, stops, j as isize);
                let dt = time(ev, q, a) + time(ev, a, r) - time(ev, q, r);
                if base + dt > h + EPS {
                    continue;
                }
                let dc = cost(ev, q, a) + cost(ev, a, r) - cost(ev, q, r);
                if best.as_ref().is_some_and(|b| dc >= b.0 + EPS) {
                    continue;
                }
                candidate.clear();
                candidate.extend_from_slice(&stops[..j]);
                candidate.push(u);
                candidate.extend_from_slice(&stops[j..]);
                let e = ev.eval_route(k, &candidate);
                if e.penalty > 0.0
                    || e.stats.tardiness > cur.stats.tardiness + EPS
                    || e.stats.overtime > cur.stats.overtime + EPS
                {
                    continue;
                }
                let delta = ev.score(&e) - ev.score(cur);
                if best.as_ref().is_none_or(|b| delta < b.0) {
                    best = Some((delta, k, j, e));
                }
            }
        }
        if let Some((_, k, j, e)) = best {
            routing.routes[k].insert(j, u);
            routing.evals[k] = e;
            is_unserved[u] = false;
        }
    }
    routing.unserved.retain(|&u| is_unserved[u]);
}

/// Budgeted first-improvement descent with relocate, swap and intra-route
/// 2-opt moves, plus dropping stops from routes that overrun their buffered
/// limit. Every accepted move strictly lowers the routing score. Returns the
/// number of full route evaluations spent.
pub fn repair_local_search(ev: &Evaluator<'_>, routing: &mut Routing, budget: usize) -> usize {
    let mut spent = 0;
    loop {
        let before = spent;
        let improved = shed_overruns(ev, routing, budget, &mut spent)
            | two_opt(ev, routing, budget, &mut spent)
            | relocate(ev, routing, budget, &mut spent)
            | swap(ev, routing, budget, &mut spent);
        if !improved || spent >= budget || spent == before {
            return spent;
        }
    }
}

fn accept(ev: &Evaluator<'_>, old: &[&RouteEval], new: &[&RouteEval]) -> bool {
    let o: f64 = old.iter().map(|e| ev.score(e)).sum();
    let n: f64 = new.iter().map(|e| ev.score(e)).sum();
    n < o - EPS
}

fn shed_overruns(ev: &Evaluator<'_>, routing: &mut Routing, budget: usize, spent: &mut usize) -> bool {
    let mut improved = false;
    for k in 0..routing.routes.len() {
        while routing.evals[k].penalty > 0.0 && *spent < budget {
            let stops = &routing.routes[k];
            let mut best: Option<(f64, usize, RouteEval)> = None;
            for i in 0..stops.len() {
                let mut cand = stops.clone();
                cand.remove(i);
                let e = ev.eval_route(k, &cand);
                *spent += 1;
                let s = ev.score(&e);
                if best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, i, e));
                }
            }
            match best {
                Some((s, i, e)) if s < ev.score(&routing.evals[k]) - EPS => {
                    let u = routing.routes[k].remove(i);
                    routing.unserved.push(u);
                    routing.evals[k] = e;
                    improved = true;
                }
                _ => break,
            }
        }
    }
    improved
}

fn two_opt(ev: &Evaluator<'_>, routing: &mut Routing, budget: usize, spent: &mut usize) -> bool {
    let mut improved = false;
    for k in 0..routing.routes.len() {
        let n = routing.routes[k].len();
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                if *spent >= budget {
                    return improved;
                }
                let mut cand = routing.routes[k].clone();
                cand[i..=j].reverse();
                let cur = routing.evals[k];
                if clean(&cur) && route_cost(ev, &cand) >= cur.stats.travel_cost - EPS {
                    continue;
                }
                let e = ev.eval_route(k, &cand);
                *spent += 1;
                if accept(ev, &[&cur], &[&e]) {
                    routing.routes[k] = cand;
                    routing.evals[k] = e;
                    improved = true;
                }
            }
        }
    }
    improved
}

fn relocate(ev: &Evaluator<'_>, routing: &mut Routing, budget: usize, spent: &mut usize) -> bool {
    let mut improved = false;
    let nv = routing.routes.len();
    for r1 in 0..nv {
        let mut i = 0;
        while i < routing.routes[r1].len() {
            let mut moved = false;
            'targets: for r2 in 0..nv {
                let len2 = routing.routes[r2].len();
                let slots = if r1 == r2 { len2 } else { len2 + 1 };
                for j in 0..slots {
                    if r1 == r2 && j == i {
                        continue;
                    }
                    if *spent >= budget {
                        return improved;
                    }
                    let (e1, e2) = (routing.evals[r1], routing.evals[r2]);
                    if r1 == r2 {
                        let mut cand = routing.routes[r1].clone();
                        let u = cand.remove(i);
                        cand.insert(j, u);
                        if clean(&e1) && route_cost(ev, &cand) >= e1.stats.travel_cost - EPS {
                            continue;
                        }
                        let e = ev.eval_route(r1, &cand);
                        *spent += 1;
                        if accept(ev, &[&e1], &[&e]) {
                            routing.routes[r1] = cand;
                            routing.evals[r1] = e;
                            moved = true;
                            break 'targets;
                        }
                    } else {
                        let s1 = &routing.routes[r1];
                        let s2 = &routing.routes[r2];
                        if clean(&e1) && clean(&e2) {
                            let a = loc(ev, s1, i as isize);
                            let p = loc(ev, s1, i as isize - 1);
                            let n = loc(ev, s1, i as isize + 1);
                            let q = loc(ev, s2, j as isize - 1);
                            let r = loc(ev, s2, j as isize);
                            let delta =
                                cost(ev, p, n) - cost(ev, p, a) - cost(ev, a, n) + cost(ev, q, a) + cost(ev, a, r)
                                    - cost(ev, q, r);
                            if delta >= -EPS {
                                continue;
                            }
                        }
                        let mut c1 = s1.clone();
                        let u = c1.remove(i);
                        let mut c2 = s2.clone();
                        c2.insert(j, u);
                        let n1 = ev.eval_route(r1, &c1);
                        let n2 = ev.eval_route(r2, &c2);
                        *spent += 2;
                        if accept(ev, &[&e1, &e2], &[&n1, &n2]) {
                            routing.routes[r1] = c1;
                            routing.routes[r2] = c2;
                            routing.evals[r1] = n1;
                            routing.evals[r2] = n2;
                            moved = true;
                            break 'targets;
                        }
                    }
                }
            }
            improved |= moved;
            if !moved {
                i += 1;
            }
        }
    }
    improved
}

fn swap(ev: &Evaluator<'_>, routing: &mut Routing, budget: usize, spent: &mut usize) -> bool {
    let mut improved = false;
    let nv = routing.routes.len();
    for r1 in 0..nv {
        for i in 0..routing.routes[r1].len() {
            for r2 in r1..nv {
                let start = if r1 == r2 { i + 1 } else { 0 };
                for j in start..routing.routes[r2].len() {
                    if *spent >= budget {
                        return improved;
                    }
                    let (e1, e2) = (routing.evals[r1], routing.evals[r2]);
                    if r1 == r2 {
                        let mut cand = routing.routes[r1].clone();
                        cand.swap(i, j);
                        if clean(&e1) && route_cost(ev, &cand) >= e1.stats.travel_cost - EPS {
                            continue;
                        }
                        let e = ev.eval_route(r1, &cand);
                        *spent += 1;
                        if accept(ev, &[&e1], &[&e]) {
                            routing.routes[r1] = cand;
                            routing.evals[r1] = e;
                            improved = true;
                        }
                    } else {
                        let s1 = &routing.routes[r1];
                        let s2 = &routing.routes[r2];
                        if clean(&e1) && clean(&e2) {
                            let (a, p1, n1) = (
                                loc(ev, s1, i as isize),
                                loc(ev, s1, i as isize - 1),
                                loc(ev, s1, i as isize + 1),
                            );
                            let (b, p2, n2) = (
                                loc(ev, s2, j as isize),
                                loc(ev, s2, j as isize - 1),
                                loc(ev, s2, j as isize + 1),
                            );
                            let delta = cost(ev, p1, b) + cost(ev, b, n1) - cost(ev, p1, a) - cost(ev, a, n1)
                                + cost(ev, p2, a)
                                + cost(ev, a, n2)
                                - cost(ev, p2, b)
                                - cost(ev, b, n2);
                            if delta >= -EPS {
                                continue;
                            }
                        }
                        let mut c1 = s1.clone();
                        let mut c2 = s2.clone();
                        std::mem::swap(&mut c1[i], &mut c2[j]);
                        let n1 = ev.eval_route(r1, &c1);
                        let n2 = ev.eval_route(r2, &c2);
                        *spent += 2;
                        if accept(ev, &[&e1, &e2], &[&n1, &n2]) {
                            routing.routes[r1] = c1;
                            routing.routes[r2] = c2;
                            routing.evals[r1] = n1;
                            routing.evals[r2] = n2;
                            improved = true;
                        }
                    }
                }
            }
        }
    }
    improved
}
