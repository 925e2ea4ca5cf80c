//! Per-truck relaxed subproblem: exact label-setting over the time-expanded
//! state graph `(trip, node, period, phase, SOC, loads)`.
//!
//! Labels are processed in period order. Every transition moves strictly
//! forward in time, so a label is final once its period is processed.
//! Dominance compares cost, SOC and per-product latest unloading among labels
//! with the same discrete key.

use std::collections::BTreeMap;

use crate::instance::{Compiled, Direction, FULL_SOC_BP};
use crate::model::Usage;
use crate::schedule::{ChargeBlock, Leg, Trip, TruckSchedule};

/// Strict-improvement margin for the surrogate acceptance test.
pub const IMPROVEMENT_EPS: f64 = 1e-9;

/// How the relaxed coupling terms enter a truck's subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMode {
    /// `Λ·H + ρ‖H‖₁` with the capacity residual in violation-only form and
    /// every other truck fixed at its latest solution.
    Surrogate,
    /// Linear slack form with `ρ = 0`: separable across trucks; tardiness is
    /// under-estimated by averaging over the eligible trucks.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TardinessTerm {
    pub weight: f64,
    pub others_latest: u32,
    pub due: u32,
    pub penalty: f64,
}

impl TardinessTerm {
    pub fn cost(&self, own_latest: u32) -> f64 {
        let latest = own_latest.max(self.others_latest);
        self.weight * self.penalty * f64::from(latest.saturating_sub(self.due))
    }
}

/// Additive price data for one truck's subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct Pricing {
    /// Surcharge per charging period on top of the electricity price,
    /// `[charger slot][period - 1]`.
    pub charge: Vec<Vec<f64>>,
    /// Per product: cost as a function of this truck's loaded-trip count.
    pub loads: Vec<Vec<f64>>,
    pub tardiness: Vec<TardinessTerm>,
    /// Everything that does not depend on this truck's decisions.
    pub constant: f64,
}

impl Pricing {
    /// Plain operating cost: labor and electricity only.
    pub fn own_cost(c: &Compiled) -> Self {
        Pricing {
            charge: vec![vec![0.0; c.horizon as usize]; c.charger_nodes.len()],
            loads: vec![vec![0.0; c.trips + 1]; c.products.len()],
            tardiness: c
                .products
                .iter()
                .map(|p| TardinessTerm {
                    weight: 0.0,
                    others_latest: 0,
                    due: p.due,
                    penalty: p.penalty,
                })
                .collect(),
            constant: 0.0,
        }
    }

    /// Pricing of truck `v` at multipliers `lambda`, penalty `rho`, with the
    /// rest of the fleet summarized by `others` (which must exclude `v`).
    pub fn for_truck(c: &Compiled, v: usize, lambda: &[f64], rho: f64, others: &Usage, mode: PricingMode) -> Self {
        let mut p = Pricing::own_cost(c);
        let own_products = truck_products(c, v);
        match mode {
            PricingMode::Surrogate => {
                for (k, &n) in c.charger_nodes.iter().enumerate() {
                    let cap = i64::from(c.capacity(n));
                    for per in 1..=c.horizon {
                        let lam = lambda[c.capacity_index(k, per)];
                        let occ = others.occupancy[k][(per - 1) as usize];
                        let base = (occ - cap).max(0) as f64;
                        p.constant += (lam + rho) * base;
                        if occ >= cap {
                            p.charge[k][(per - 1) as usize] = lam + rho;
                        }
                    }
                }
                for (pr, prod) in c.products.iter().enumerate() {
                    let lam = lambda[c.demand_index(pr)];
                    let f = |count: i64| {
                        let r = (others.loads[pr] + count - i64::from(prod.quantity)) as f64;
                        lam * r + rho * r.abs()
                    };
                    p.loads[pr] = (0..=c.trips as i64).map(f).collect();
                    p.tardiness[pr].weight = 1.0;
                    p.tardiness[pr].others_latest = others.latest_unload[pr];
                    if !own_products.contains(&pr) {
                        p.constant += p.loads[pr][0] + p.tardiness[pr].cost(0);
                    }
                }
            }
            PricingMode::Dual => {
                for k in 0..c.charger_nodes.len() {
                    for per in 1..=c.horizon {
                        p.charge[k][(per - 1) as usize] = lambda[c.capacity_index(k, per)];
                    }
                }
                for (pr, prod) in c.products.iter().enumerate() {
                    let lam = lambda[c.demand_index(pr)];
                    p.loads[pr] = (0..=c.trips).map(|n| lam * n as f64).collect();
                    if !prod.eligible.is_empty() {
                        p.tardiness[pr].weight = 1.0 / prod.eligible.len() as f64;
                    }
                }
            }
        }
        p
    }

    fn terminal(&self, products: &[Option<usize>; 2], counts: [u8; 2], latest: [u32; 2]) -> f64 {
        let mut total = self.constant;
        for i in 0..2 {
            if let Some(pr) = products[i] {
                total += self.loads[pr][counts[i] as usize] + self.tardiness[pr].cost(latest[i]);
            }
        }
        total
    }
}

/// Export product (outbound trips) and import product (inbound trips).
fn product_slots(c: &Compiled, v: usize) -> [Option<usize>; 2] {
    [c.trucks[v].export_product, c.trucks[v].import_product]
}

fn truck_products(c: &Compiled, v: usize) -> Vec<usize> {
    product_slots(c, v).into_iter().flatten().collect()
}

fn slot_of(c: &Compiled, trip: usize) -> usize {
    if c.is_outbound(trip) {
        0
    } else {
        1
    }
}

/// Priced value of an explicit schedule, as the search would report it.
pub fn price_schedule(c: &Compiled, v: usize, s: &TruckSchedule, pricing: &Pricing) -> f64 {
    let mut counts = [0u8; 2];
    let mut latest = [0u32; 2];
    for (t, trip) in s.trips.iter().enumerate() {
        if trip.loaded {
            let i = slot_of(c, t);
            counts[i] += 1;
            latest[i] = latest[i].max(TruckSchedule::trip_arrival(c, trip).unwrap_or(0));
        }
    }
    let mut surcharge = 0.0;
    for (node, p) in s.charging_slots() {
        if let Some(k) = c.charger_slot(node) {
            surcharge += pricing.charge[k][(p - 1) as usize];
        }
    }
    s.own_cost(c, v) + surcharge + pricing.terminal(&product_slots(c, v), counts, latest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Phase {
    /// Before the first departure.
    Start,
    Arrived,
    Charging,
    Charged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    trip: u8,
    node: u8,
    phase: Phase,
    loaded: bool,
    mask: u64,
    counts: [u8; 2],
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Root,
    Dwell,
    Charge { node: u8 },
    Depart { arc: u32, depart: u32, new_trip: bool, loaded: bool },
}

#[derive(Debug, Clone, Copy)]
struct Label {
    cost: f64,
    soc: u32,
    latest: [u32; 2],
    charges: u128,
    period: u32,
    parent: u32,
    action: Action,
    /// Index into the engine's poison lists.
    poison: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveFlag {
    /// A schedule strictly better than the re-priced incumbent.
    Improved,
    /// The search finished; the schedule is a global minimizer.
    ExactOptimal,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub schedule: TruckSchedule,
    pub value: f64,
    pub flag: SolveFlag,
    /// Labels created by the search.
    pub labels: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub dominance: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { dominance: true }
    }
}

/// One complete schedule of a truck with its coupling footprint.
#[derive(Debug, Clone)]
pub struct Terminal {
    pub schedule: TruckSchedule,
    /// Labor plus electricity.
    pub cost: f64,
    /// Loaded trips for the export / import product.
    pub counts: [u8; 2],
    pub latest: [u32; 2],
    /// Occupied `(charger slot, period)` pairs as a bitset: bit `k·P + p − 1`.
    pub charges: u128,
}

fn fastest_times(c: &Compiled) -> Vec<Vec<u32>> {
    let n = c.node_ids.len();
    let mut d = vec![vec![u32::MAX; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for a in &c.arcs {
        let t = a.times.iter().copied().min().unwrap_or(u32::MAX);
        d[a.from][a.to] = d[a.from][a.to].min(t);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

enum Mode<'a> {
    Optimize { pricing: &'a Pricing, threshold: f64 },
    Enumerate { budget: u64 },
}

struct Engine<'a> {
    c: &'a Compiled,
    v: usize,
    arena: Vec<Label>,
    buckets: Vec<BTreeMap<Key, Vec<u32>>>,
    /// Sorted `(node, period)` arrivals forbidden for the rest of the trip:
    /// each would coincide with another arc leaving an earlier departure,
    /// which the node-period model reads as a second traversal.
    poisons: Vec<Vec<(u8, u32)>>,
    /// Fastest travel time between node pairs, `u32::MAX` when unreachable.
    fastest: Vec<Vec<u32>>,
    dominance: bool,
    footprint: bool,
}

enum Outcome {
    Done,
    Stopped(u32, f64),
    Budget,
}

impl<'a> Engine<'a> {
    fn new(c: &'a Compiled, v: usize, dominance: bool, footprint: bool) -> Self {
        Engine {
            c,
            v,
            arena: Vec::new(),
            buckets: vec![BTreeMap::new(); c.horizon as usize + 1],
            poisons: vec![Vec::new()],
            fastest: fastest_times(c),
            dominance,
            footprint,
        }
    }

    /// Both labels sit at `node` in the same period.
    fn dominates(&self, node: usize, a: &Label, b: &Label) -> bool {
        a.cost <= b.cost
            && a.soc >= b.soc
            && a.latest[0] <= b.latest[0]
            && a.latest[1] <= b.latest[1]
            && (!self.footprint || a.charges & !b.charges == 0)
            && (a.poison == b.poison || {
                let pb = &self.poisons[b.poison as usize];
                let reach = &self.fastest[node];
                self.poisons[a.poison as usize]
                    .iter()
                    .all(|e| e.1 < a.period.saturating_add(reach[e.0 as usize]) || pb.binary_search(e).is_ok())
            })
    }

    fn insert(&mut self, key: Key, label: Label) -> Option<u32> {
        let id = self.arena.len() as u32;
        if self.dominance {
            let mut kept = std::mem::take(self.buckets[label.period as usize].entry(key).or_default());
            let node = key.node as usize;
            if kept.iter().any(|&j| self.dominates(node, &self.arena[j as usize], &label)) {
                self.buckets[label.period as usize].insert(key, kept);
                return None;
            }
            kept.retain(|&j| !self.dominates(node, &label, &self.arena[j as usize]));
            self.buckets[label.period as usize].insert(key, kept);
        }
        let bucket = self.buckets[label.period as usize].entry(key).or_default();
        bucket.push(id);
        self.arena.push(label);
        Some(id)
    }

    /// Poison list after leaving `node` at `depart` on arc `a`, arriving at
    /// `arrival`; `None` when that arrival is itself poisoned.
    #[allow(clippy::too_many_arguments)]
    fn poison_after(
        &mut self,
        l: &Label,
        new_trip: bool,
        node: usize,
        a: usize,
        depart: u32,
        arrival: u32,
        mask: u64,
    ) -> Option<u32> {
        let to = self.c.arcs[a].to as u8;
        let old: &[(u8, u32)] = if new_trip { &[] } else { &self.poisons[l.poison as usize] };
        let mut list: Vec<(u8, u32)> = old.to_vec();
        for &r in &self.c.out_arcs[node] {
            if r == a {
                continue;
            }
            let other = &self.c.arcs[r];
            if let Some(q) = other.arrival(depart, self.c.horizon) {
                list.push((other.to as u8, q));
            }
        }
        if list.contains(&(to, arrival)) {
            return None;
        }
        // only arrivals still reachable in time can collide
        let reach = &self.fastest[to as usize];
        list.retain(|&(m, q)| mask & (1 << m) == 0 && u64::from(q) >= u64::from(arrival) + u64::from(reach[m as usize]));
        if list.is_empty() {
            return Some(0);
        }
        list.sort_unstable();
        list.dedup();
        if list == self.poisons[l.poison as usize] {
            return Some(l.poison);
        }
        self.poisons.push(list);
        Some((self.poisons.len() - 1) as u32)
    }

    fn charge_bit(&self, slot: usize, period: u32) -> u128 {
        let idx = slot * self.c.horizon as usize + (period - 1) as usize;
        if idx < 128 {
            1u128 << idx
        } else {
            0
        }
    }

    /// Walk parents back to the root and rebuild the trip list.
    fn schedule(&self, mut id: u32) -> TruckSchedule {
        let mut steps = Vec::new();
        loop {
            let l = &self.arena[id as usize];
            if let Action::Root = l.action {
                break;
            }
            steps.push((l.action, l.period));
            id = l.parent;
        }
        steps.reverse();
        let mut trips: Vec<Trip> = Vec::new();
        for (action, period) in steps {
            match action {
                Action::Root | Action::Dwell => {}
                Action::Depart {
                    arc,
                    depart,
                    new_trip,
                    loaded,
                } => {
                    if new_trip {
                        trips.push(Trip {
                            loaded,
                            legs: Vec::new(),
                            charges: Vec::new(),
                        });
                    }
                    let arc = arc as usize;
                    trips.last_mut().expect("trip started").legs.push(Leg { arc, depart });
                }
                Action::Charge { node } => {
                    let trip = trips.last_mut().expect("charging after an arrival");
                    let node = node as usize;
                    match trip.charges.last_mut() {
                        Some(b) if b.node == node && b.end() + 1 == period => b.periods += 1,
                        _ => trip.charges.push(ChargeBlock {
                            node,
                            start: period,
                            periods: 1,
                        }),
                    }
                }
            }
        }
        TruckSchedule { trips }
    }

    fn run(&mut self, mode: &mut Mode, terminals: &mut Vec<(u32, [u8; 2])>, best: &mut Option<(u32, f64)>) -> Outcome {
        let c = self.c;
        let v = self.v;
        let tr = &c.trucks[v];
        let horizon = c.horizon;
        let products = product_slots(c, v);
        let rate = tr.charge_rate;
        let labor = c.labor_cost;

        let start = c.trip_start(v, 0);
        let t0 = tr.available.max(1) - 1;
        let root = Label {
            cost: 0.0,
            soc: tr.initial_soc,
            latest: [0, 0],
            charges: 0,
            period: t0,
            parent: 0,
            action: Action::Root,
            poison: 0,
        };
        let root_key = Key {
            trip: 0,
            node: start as u8,
            phase: Phase::Start,
            loaded: false,
            mask: 1 << start,
            counts: [0, 0],
        };
        let root_id = self.insert(root_key, root).expect("first label");
        // the idle schedule
        if let Some(o) = self.terminal(mode, terminals, best, root_id, [0, 0], &products) {
            return o;
        }

        for tau in t0..=horizon {
            let bucket = std::mem::take(&mut self.buckets[tau as usize]);
            for (key, ids) in bucket {
                for id in ids {
                    let l = self.arena[id as usize];
                    let started = key.phase != Phase::Start;
                    let node = key.node as usize;
                    let trip = key.trip as usize;
                    let next = tau + 1;
                    if next > horizon {
                        continue;
                    }
                    if let Mode::Enumerate { budget } = mode {
                        if self.arena.len() as u64 > *budget {
                            return Outcome::Budget;
                        }
                    }

                    // dwell
                    if key.phase != Phase::Charging {
                        let nl = Label {
                            cost: l.cost + if started { labor } else { 0.0 },
                            period: next,
                            parent: id,
                            action: Action::Dwell,
                            ..l
                        };
                        self.insert(key, nl);
                    }

                    // charge: once per node per trip, only after an arrival
                    if matches!(key.phase, Phase::Arrived | Phase::Charging) {
                        if let Some(k) = c.charger_slot(node) {
                            let surcharge = match mode {
                                Mode::Optimize { pricing, .. } => pricing.charge[k][tau as usize],
                                Mode::Enumerate { .. } => 0.0,
                            };
                            let nl = Label {
                                cost: l.cost + labor + c.charger_price(node, next) + surcharge,
                                soc: (l.soc + rate).min(FULL_SOC_BP),
                                charges: l.charges | self.charge_bit(k, next),
                                period: next,
                                parent: id,
                                action: Action::Charge { node: node as u8 },
                                ..l
                            };
                            self.insert(Key { phase: Phase::Charging, ..key }, nl);
                            self.insert(Key { phase: Phase::Charged, ..key }, nl);
                        }
                    }
                    if key.phase == Phase::Charging {
                        continue;
                    }

                    // depart
                    let trip_done = key.phase != Phase::Start && node == c.trip_end(v, trip);
                    let (new_trip, this_trip) = if key.phase == Phase::Start {
                        (true, 0)
                    } else if trip_done {
                        (true, trip + 1)
                    } else {
                        (false, trip)
                    };
                    if this_trip >= c.trips {
                        continue;
                    }
                    let load_options: &[bool] = if !new_trip {
                        if key.loaded {
                            &[true]
                        } else {
                            &[false]
                        }
                    } else if c.trip_product(v, this_trip).is_some() {
                        &[false, true]
                    } else {
                        &[false]
                    };
                    let mask = if new_trip { 1u64 << node } else { key.mask };
                    let end = c.trip_end(v, this_trip);
                    for &loaded in load_options {
                        for &a in &c.out_arcs[node] {
                            let arc = &c.arcs[a];
                            if mask & (1 << arc.to) != 0 {
                                continue;
                            }
                            let Some(q) = arc.arrival(next, horizon) else { continue };
                            let drop = tr.discharge(arc.segment, loaded) * arc.time(next);
                            if l.soc < drop {
                                continue;
                            }
                            let Some(poison) = self.poison_after(&l, new_trip, node, a, next, q, mask | (1 << arc.to)) else {
                                continue;
                            };
                            let arrives_end = arc.to == end;
                            if arrives_end && end == tr.port && this_trip + 1 >= c.trips {
                                continue;
                            }
                            let elapsed = if started { q - tau } else { q - next };
                            let mut counts = key.counts;
                            let mut latest = l.latest;
                            if arrives_end && loaded {
                                let i = slot_of(c, this_trip);
                                counts[i] += 1;
                                latest[i] = latest[i].max(q);
                            }
                            let nk = Key {
                                trip: this_trip as u8,
                                node: arc.to as u8,
                                phase: Phase::Arrived,
                                loaded,
                                mask: mask | (1 << arc.to),
                                counts,
                            };
                            let nl = Label {
                                cost: l.cost + labor * f64::from(elapsed),
                                soc: l.soc - drop,
                                latest,
                                charges: l.charges,
                                period: q,
                                parent: id,
                                action: Action::Depart {
                                    arc: a as u32,
                                    depart: next,
                                    new_trip,
                                    loaded,
                                },
                                poison,
                            };
                            if let Some(nid) = self.insert(nk, nl) {
                                if arrives_end && end == tr.depot {
                                    if let Some(o) = self.terminal(mode, terminals, best, nid, counts, &products) {
                                        return o;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Outcome::Done
    }

    fn terminal(
        &self,
        mode: &mut Mode,
        terminals: &mut Vec<(u32, [u8; 2])>,
        best: &mut Option<(u32, f64)>,
        id: u32,
        counts: [u8; 2],
        products: &[Option<usize>; 2],
    ) -> Option<Outcome> {
        let l = &self.arena[id as usize];
        match mode {
            Mode::Optimize { pricing, threshold } => {
                let value = l.cost + pricing.terminal(products, counts, l.latest);
                if best.is_none_or(|(_, b)| value < b) {
                    *best = Some((id, value));
                }
                (value < *threshold - IMPROVEMENT_EPS).then_some(Outcome::Stopped(id, value))
            }
            Mode::Enumerate { .. } => {
                terminals.push((id, counts));
                None
            }
        }
    }
}

fn optimize(c: &Compiled, v: usize, pricing: &Pricing, threshold: f64, opts: SearchOptions) -> Solution {
    let mut engine = Engine::new(c, v, opts.dominance, false);
    let mut mode = Mode::Optimize { pricing, threshold };
    let mut terminals = Vec::new();
    let mut best = None;
    let outcome = engine.run(&mut mode, &mut terminals, &mut best);
    let (id, value, flag) = match outcome {
        Outcome::Stopped(id, value) => (id, value, SolveFlag::Improved),
        _ => {
            let (id, value) = best.expect("idle schedule is always a terminal");
            (id, value, SolveFlag::ExactOptimal)
        }
    };
    Solution {
        schedule: engine.schedule(id),
        value,
        flag,
        labels: engine.arena.len() as u64,
    }
}

/// Global minimizer of the truck's priced subproblem.
pub fn solve_exact(c: &Compiled, v: usize, pricing: &Pricing) -> Solution {
    solve_exact_with(c, v, pricing, SearchOptions::default())
}

pub fn solve_exact_with(c: &Compiled, v: usize, pricing: &Pricing, opts: SearchOptions) -> Solution {
    optimize(c, v, pricing, f64::NEG_INFINITY, opts)
}

/// Stop at the first schedule strictly better than `incumbent` re-priced
/// under `pricing`; otherwise return the exact optimum.
pub fn solve_surrogate(c: &Compiled, v: usize, pricing: &Pricing, incumbent: Option<&TruckSchedule>) -> Solution {
    let threshold = incumbent.map_or(f64::INFINITY, |s| price_schedule(c, v, s, pricing));
    let mut sol = optimize(c, v, pricing, threshold, SearchOptions::default());
    if sol.flag == SolveFlag::Improved && !threshold.is_finite() {
        // no incumbent: "improved" over +inf means we merely stopped early
        sol = optimize(c, v, pricing, f64::NEG_INFINITY, SearchOptions::default());
    }
    sol
}

/// Every non-dominated complete schedule of truck `v`, where dominance keeps
/// a schedule unless another one has identical load counts, no later
/// unloading, a subset of its charger occupancy, no higher cost and no lower
/// SOC along the way. Returns `None` when more than `budget` labels would be
/// created, or when the charger/period grid exceeds 128 cells.
pub fn enumerate_schedules(c: &Compiled, v: usize, budget: u64) -> Option<Vec<Terminal>> {
    if c.charger_nodes.len() * c.horizon as usize > 128 {
        return None;
    }
    let mut engine = Engine::new(c, v, true, true);
    let mut mode = Mode::Enumerate { budget };
    let mut ends = Vec::new();
    let mut best = None;
    if let Outcome::Budget = engine.run(&mut mode, &mut ends, &mut best) {
        return None;
    }
    let mut out: Vec<Terminal> = Vec::new();
    for (id, counts) in ends {
        let l = &engine.arena[id as usize];
        let cand = Terminal {
            schedule: engine.schedule(id),
            cost: l.cost,
            counts,
            latest: l.latest,
            charges: l.charges,
        };
        let dominated = out.iter().any(|o| terminal_dominates(o, &cand));
        if !dominated {
            out.retain(|o| !terminal_dominates(&cand, o));
            out.push(cand);
        }
    }
    Some(out)
}

fn terminal_dominates(a: &Terminal, b: &Terminal) -> bool {
    a.counts == b.counts
        && a.cost <= b.cost
        && a.latest[0] <= b.latest[0]
        && a.latest[1] <= b.latest[1]
        && a.charges & !b.charges == 0
}

/// Direction of the product carried in slot `i` of [`Terminal::counts`].
pub fn slot_direction(i: usize) -> Direction {
    if i == 0 {
        Direction::Export
    } else {
        Direction::Import
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::two_node_instance;
    use crate::model::{build_model, evaluate, Assignment, VariableCatalog};

    fn zero_pricing(c: &Compiled) -> Pricing {
        Pricing::own_cost(c)
    }

    #[test]
    fn idle_when_nothing_is_priced() {
        let c = two_node_instance(1, 8).compile().unwrap();
        let sol = solve_exact(&c, 0, &zero_pricing(&c));
        assert!(sol.schedule.is_idle());
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.flag, SolveFlag::ExactOptimal);
    }

    #[test]
    fn profitable_loads_trigger_round_trip() {
        let c = two_node_instance(2, 10).compile().unwrap();
        let mut p = zero_pricing(&c);
        // each delivered unit is worth 10; a loaded round trip costs 3 periods of labor
        for pr in 0..2 {
            p.loads[pr] = (0..=c.trips).map(|n| -10.0 * n as f64).collect();
        }
        let sol = solve_exact(&c, 0, &p);
        assert_eq!(sol.schedule.trips.len(), 2);
        assert!(sol.schedule.trips.iter().all(|t| t.loaded));
        // depart 1, arrive 2; depart 3, arrive 4
        assert_eq!(sol.value, 3.0 - 20.0);
        let cat = VariableCatalog::new(&c);
        let x = Assignment::from_schedules(&c, &cat, std::slice::from_ref(&sol.schedule)).unwrap();
        assert!(evaluate(&build_model(&c, false), &x).unwrap().feasible);
        assert_eq!(price_schedule(&c, 0, &sol.schedule, &p), sol.value);
    }

    #[test]
    fn drive_drops_soc_by_rate_times_duration() {
        let c = two_node_instance(2, 10).compile().unwrap();
        let s = TruckSchedule {
            trips: vec![Trip {
                loaded: true,
                legs: vec![Leg { arc: 0, depart: 1 }],
                charges: vec![],
            }],
        };
        let trace = s.soc_trace(&c, 0).unwrap();
        assert_eq!(trace[0], vec![(0, 10_000), (1, 9_000)]);
    }

    #[test]
    fn charging_clips_at_full() {
        let mut inst = two_node_instance(1, 10);
        inst.trucks[0].initial_soc_bp = 10_000;
        inst.trucks[0].discharge_empty_bp = crate::instance::Rate::Uniform(100);
        let c = inst.compile().unwrap();
        let s = TruckSchedule {
            trips: vec![
                Trip {
                    loaded: false,
                    legs: vec![Leg { arc: 0, depart: 1 }],
                    charges: vec![ChargeBlock {
                        node: 1,
                        start: 2,
                        periods: 1,
                    }],
                },
                Trip {
                    loaded: false,
                    legs: vec![Leg { arc: 1, depart: 3 }],
                    charges: vec![],
                },
            ],
        };
        // 9900 + 1700 clips to 10000
        assert_eq!(s.soc_trace(&c, 0).unwrap()[0][1], (1, 10_000));
        let cat = VariableCatalog::new(&c);
        let x = Assignment::from_schedules(&c, &cat, &[s]).unwrap();
        assert!(evaluate(&build_model(&c, false), &x).unwrap().feasible);
    }

    #[test]
    fn no_arc_past_horizon() {
        // travel 3, horizon 6, available from period 2: the return leg would
        // arrive at period 7
        let mut inst = two_node_instance(3, 6);
        inst.trucks[0].available = 2;
        let c = inst.compile().unwrap();
        let mut p = zero_pricing(&c);
        p.loads[0] = (0..=c.trips).map(|n| -100.0 * n as f64).collect();
        let sol = solve_exact(&c, 0, &p);
        assert!(sol.schedule.is_idle());
    }

    #[test]
    fn surrogate_without_incumbent_is_exact() {
        let c = two_node_instance(2, 10).compile().unwrap();
        let mut p = zero_pricing(&c);
        p.loads[1] = (0..=c.trips).map(|n| -7.0 * n as f64).collect();
        let exact = solve_exact(&c, 0, &p);
        let sur = solve_surrogate(&c, 0, &p, None);
        assert_eq!(sur.value, exact.value);
        assert_eq!(sur.flag, SolveFlag::ExactOptimal);
    }

    #[test]
    fn surrogate_with_optimal_incumbent() {
        let c = two_node_instance(2, 10).compile().unwrap();
        let mut p = zero_pricing(&c);
        p.loads[1] = (0..=c.trips).map(|n| -7.0 * n as f64).collect();
        let exact = solve_exact(&c, 0, &p);
        let sur = solve_surrogate(&c, 0, &p, Some(&exact.schedule));
        assert_eq!(sur.flag, SolveFlag::ExactOptimal);
        assert_eq!(sur.value, exact.value);
    }

    #[test]
    fn surrogate_improves_on_idle_incumbent() {
        let c = two_node_instance(1, 12).compile().unwrap();
        let mut p = zero_pricing(&c);
        for pr in 0..2 {
            p.loads[pr] = (0..=c.trips).map(|n| -5.0 * n as f64).collect();
        }
        let idle = TruckSchedule::idle();
        let sur = solve_surrogate(&c, 0, &p, Some(&idle));
        assert_eq!(sur.flag, SolveFlag::Improved);
        assert!(sur.value < price_schedule(&c, 0, &idle, &p));
        let exact = solve_exact(&c, 0, &p);
        assert!(sur.labels <= exact.labels);
    }

    #[test]
    fn enumeration_contains_optimum() {
        let c = two_node_instance(1, 6).compile().unwrap();
        let all = enumerate_schedules(&c, 0, 1_000_000).unwrap();
        assert!(all.iter().any(|t| t.schedule.is_idle()));
        // depart 1 arrive 1, depart 2 arrive 2
        let best_loaded = all
            .iter()
            .filter(|t| t.counts == [1, 1])
            .map(|t| t.cost)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best_loaded, 1.0);
    }
}
